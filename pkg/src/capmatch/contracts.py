"""The market recast as matching with contracts.

A contract is a (doctor, hospital) pair. The whole hospital side acts as one
agent whose choice function is either

* :class:`Original` - per region, hospitals keep their best applicants up to
  target capacity, then extra seats are handed out round-robin in the region's
  order up to the regional cap (what FDA does at each step), or
* :class:`Shadow` - every hospital keeps its best ``caps[h]`` applicants and
  regional caps are ignored (what DA does under those capacities).

Both choice functions are also rationalized by explicit integer scores over
contract sets, and :func:`argmax_choice` recovers the choice by brute force.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, FrozenSet, Iterable, List, Mapping, NamedTuple, Optional, Tuple, Union

import numpy as np

from .core import NEG_INF, BoundExceeded, Instance, Matching


class Contract(NamedTuple):
    doctor: str
    hospital: str


ContractSet = FrozenSet[Contract]
Chooser = Callable[[ContractSet], ContractSet]

DEFAULT_AXIOM_BOUND = 12
DEFAULT_ARGMAX_BOUND = 14


@dataclass(frozen=True)
class Original:
    """Hospital-side choice of the market with regional caps."""


@dataclass(frozen=True)
class Shadow:
    """Hospital-side choice of the plain market with per-hospital capacities."""

    caps: Mapping[str, int] = field(default_factory=dict)


HospitalSideChoice = Union[Original, Shadow]


class RationalizationError(AssertionError):
    """The score-maximizing subset was not unique."""


def contracts_of(m: Matching) -> ContractSet:
    return frozenset(Contract(d, h) for d, h in m.assignment.items() if h is not None)


def to_matching(X: Iterable[Contract], inst: Instance) -> Matching:
    assignment: Dict[str, Optional[str]] = {d: None for d in inst.doctors}
    for x in X:
        if assignment[x.doctor] is not None:
            raise ValueError(f"doctor {x.doctor} holds more than one contract")
        assignment[x.doctor] = x.hospital
    return Matching(assignment)


def is_allocation(X: Iterable[Contract]) -> bool:
    doctors = [x.doctor for x in X]
    return len(doctors) == len(set(doctors))


def acceptable_contracts(inst: Instance) -> List[Contract]:
    """Contracts the doctor finds acceptable, in doctor order then list order."""
    return [Contract(d, h) for d in inst.doctors for h in inst.doctor_prefs[d]]


def doctor_side_choice(X: Iterable[Contract], inst: Instance) -> ContractSet:
    best: Dict[str, Contract] = {}
    for x in X:
        r = inst.doctor_rank(x.doctor, x.hospital)
        if r is None:
            continue
        cur = best.get(x.doctor)
        if cur is None or r < inst.doctor_rank(cur.doctor, cur.hospital):
            best[x.doctor] = x
    return frozenset(best.values())


def _pools(X: Iterable[Contract], inst: Instance) -> Dict[str, List[str]]:
    pools: Dict[str, List[str]] = {h: [] for h in inst.hospitals}
    for x in X:
        if inst.hospital_rank(x.hospital, x.doctor) is not None:
            pools[x.hospital].append(x.doctor)
    for h, ds in pools.items():
        ds.sort(key=lambda d: inst.hospital_rank(h, d))
    return pools


def _original_choice(X: Iterable[Contract], inst: Instance) -> ContractSet:
    pools = _pools(X, inst)
    out = []
    for region in inst.regions:
        take = {h: min(region.targets[h], len(pools[h])) for h in region.order}
        # extra seat k of the hospital at index i is handed out at position (k, i)
        seats = []
        for i, h in enumerate(region.order):
            top = min(inst.hospitals[h].capacity, len(pools[h]))
            for k in range(1, top - take[h] + 1):
                seats.append((k, i, h))
        seats.sort()
        for _, _, h in seats[: max(0, region.cap - sum(take.values()))]:
            take[h] += 1
        out.extend(Contract(d, h) for h in region.order for d in pools[h][: take[h]])
    return frozenset(out)


def _shadow_choice(X: Iterable[Contract], inst: Instance, caps: Mapping[str, int]) -> ContractSet:
    pools = _pools(X, inst)
    return frozenset(Contract(d, h) for h, ds in pools.items() for d in ds[: caps[h]])


def hospital_side_choice(c: HospitalSideChoice, X: Iterable[Contract], inst: Instance) -> ContractSet:
    """Contracts the hospital side keeps from ``X``.

    Contracts unacceptable to their hospital are dropped first. Contracts are
    judged per hospital, so the output is an allocation whenever ``X`` is.
    """
    if isinstance(c, Original):
        return _original_choice(X, inst)
    return _shadow_choice(X, inst, c.caps)


def chooser(c: HospitalSideChoice, inst: Instance) -> Chooser:
    return lambda X: hospital_side_choice(c, X, inst)


def cumulative_offer_process(inst: Instance, c: HospitalSideChoice) -> ContractSet:
    """Generalized DA in which the hospital side chooses from every offer made so far.

    At each step the lowest-id doctor who holds no contract and still has an
    unoffered acceptable contract offers her best one.
    """
    nxt = {d: 0 for d in inst.doctors}
    offers: set = set()
    held: ContractSet = frozenset()
    while True:
        holding = {x.doctor for x in held}
        free = sorted(d for d in inst.doctors if d not in holding and nxt[d] < len(inst.doctor_prefs[d]))
        if not free:
            break
        d = free[0]
        offers.add(Contract(d, inst.doctor_prefs[d][nxt[d]]))
        nxt[d] += 1
        held = hospital_side_choice(c, offers, inst)
        if not is_allocation(held):
            raise AssertionError(f"hospital side holds two contracts of one doctor: {sorted(held)}")
    return held


def is_stable_allocation(X: Iterable[Contract], inst: Instance, c: HospitalSideChoice) -> bool:
    X = frozenset(X)
    if doctor_side_choice(X, inst) != X or hospital_side_choice(c, X, inst) != X:
        return False
    for d in inst.doctors:
        for h in inst.doctor_prefs[d]:
            x = Contract(d, h)
            if x in X:
                continue
            Y = X | {x}
            if x in doctor_side_choice(Y, inst) and x in hospital_side_choice(c, Y, inst):
                return False
    return True


# ---------------------------------------------------------------------------
# Choice-function axioms, checked exhaustively over all subsets of a universe.


@dataclass(frozen=True)
class Counterexample:
    axiom: str
    X: Tuple[Contract, ...]
    x: Contract
    x_prime: Optional[Contract] = None

    def to_json(self) -> Dict[str, Any]:
        return {
            "X": [list(c) for c in self.X],
            "x": list(self.x),
            "x_prime": None if self.x_prime is None else list(self.x_prime),
            "axiom": self.axiom,
        }


class AxiomResult(NamedTuple):
    holds: bool
    counterexample: Optional[Counterexample]


def _choice_table(choose: Chooser, universe: List[Contract], bound: int) -> np.ndarray:
    n = len(universe)
    if n > bound:
        raise BoundExceeded(f"universe of {n} contracts exceeds bound {bound}")
    if len(set(universe)) != n:
        raise ValueError("universe contains duplicate contracts")
    index = {x: i for i, x in enumerate(universe)}
    table = np.zeros(1 << n, dtype=np.int64)
    for mask in range(1 << n):
        X = frozenset(universe[i] for i in range(n) if mask >> i & 1)
        chosen = choose(X)
        if not chosen <= X:
            raise AssertionError(f"choice returned contracts outside its input: {sorted(chosen - X)}")
        table[mask] = sum(1 << index[x] for x in chosen)
    return table


def _subset(universe: List[Contract], mask: int) -> Tuple[Contract, ...]:
    return tuple(sorted(universe[i] for i in range(len(universe)) if mask >> i & 1))


def check_substitutability(choose: Chooser, universe: Iterable[Contract], bound: int = DEFAULT_AXIOM_BOUND) -> AxiomResult:
    """x rejected from X + x stays rejected from X + x + x', for every X, x, x'."""
    universe = list(universe)
    table = _choice_table(choose, universe, bound)
    masks = np.arange(len(table), dtype=np.int64)
    for i in range(len(universe)):
        bi = 1 << i
        for j in range(len(universe)):
            if i == j:
                continue
            bj = 1 << j
            base = masks[(masks & (bi | bj)) == 0]
            bad = ((table[base | bi] & bi) == 0) & ((table[base | bi | bj] & bi) != 0)
            if bad.any():
                X = int(base[np.argmax(bad)])
                return AxiomResult(False, Counterexample("substitutability", _subset(universe, X), universe[i], universe[j]))
    return AxiomResult(True, None)


def check_law_of_aggregate_demand(choose: Chooser, universe: Iterable[Contract], bound: int = DEFAULT_AXIOM_BOUND) -> AxiomResult:
    """|C(X')| <= |C(X)| whenever X' is a subset of X.

    Checked on every pair X' = X - x; longer chains follow by transitivity.
    """
    universe = list(universe)
    table = _choice_table(choose, universe, bound)
    sizes = np.array([bin(int(v)).count("1") for v in table])
    masks = np.arange(len(table), dtype=np.int64)
    for i in range(len(universe)):
        bi = 1 << i
        base = masks[(masks & bi) == 0]
        bad = sizes[base] > sizes[base | bi]
        if bad.any():
            X = int(base[np.argmax(bad)])
            return AxiomResult(False, Counterexample("law_of_aggregate_demand", _subset(universe, X), universe[i]))
    return AxiomResult(True, None)


def check_irc(choose: Chooser, universe: Iterable[Contract], bound: int = DEFAULT_AXIOM_BOUND) -> AxiomResult:
    """Irrelevance of rejected contracts: x rejected from X + x implies C(X) = C(X + x)."""
    universe = list(universe)
    table = _choice_table(choose, universe, bound)
    masks = np.arange(len(table), dtype=np.int64)
    for i in range(len(universe)):
        bi = 1 << i
        base = masks[(masks & bi) == 0]
        bad = ((table[base | bi] & bi) == 0) & (table[base] != table[base | bi])
        if bad.any():
            X = int(base[np.argmax(bad)])
            return AxiomResult(False, Counterexample("irc", _subset(universe, X), universe[i]))
    return AxiomResult(True, None)


# ---------------------------------------------------------------------------
# Rationalization


class _Weights:
    """Integer weights layering the rationalizing scores.

    ``big`` exceeds both the largest hospital-preference sum and the largest
    round-robin sum, so target-filled seats dominate round-robin priority,
    which in turn dominates the hospitals' own preferences.
    """

    def __init__(self, inst: Instance):
        n = len(inst.doctors)
        self.doctor_weight = {
            (d, h): 1 << (n - 1 - k) for h, hosp in inst.hospitals.items() for k, d in enumerate(hosp.prefs)
        }
        positions = {}
        for region in inst.regions:
            for i, h in enumerate(region.order):
                for k in range(1, inst.hospitals[h].capacity - region.targets[h] + 1):
                    positions[h, k] = (k - 1) * len(region.order) + i
        top = max(positions.values(), default=0)
        self.seat_weight = {hk: 1 << (top - p) for hk, p in positions.items()}
        fh_bound = sum(self.doctor_weight.values()) + 1
        rr_bound = sum(self.seat_weight.values()) + 1
        self.big = max(fh_bound, rr_bound)


def _hospital_score(Y: Iterable[Contract], w: _Weights) -> Optional[int]:
    total = 0
    for x in Y:
        v = w.doctor_weight.get((x.doctor, x.hospital))
        if v is None:
            return None
        total += v
    return total


def _score(market: HospitalSideChoice, Y: Iterable[Contract], inst: Instance, w: _Weights) -> Union[int, float]:
    Y = list(Y)
    fh = _hospital_score(Y, w)
    if fh is None:
        return NEG_INF
    dist = {h: 0 for h in inst.hospitals}
    for x in Y:
        dist[x.hospital] += 1
    if isinstance(market, Shadow):
        if any(dist[h] > market.caps[h] for h in dist):
            return NEG_INF
        return fh
    filled = 0
    rr = 0
    for region in inst.regions:
        if sum(dist[h] for h in region.order) > region.cap:
            return NEG_INF
        for h in region.order:
            if dist[h] > inst.hospitals[h].capacity:
                return NEG_INF
            filled += min(dist[h], region.targets[h])
            for k in range(1, dist[h] - region.targets[h] + 1):
                rr += w.seat_weight[h, k]
    return w.big * w.big * filled + w.big * rr + fh


def rationalizer_value(market: HospitalSideChoice, Y: Iterable[Contract], inst: Instance) -> Union[int, float]:
    """Score of contract set ``Y`` under the market's rationalizing utility.

    Infeasible sets, and sets holding a contract its hospital finds
    unacceptable, score ``-inf``.
    """
    return _score(market, Y, inst, _Weights(inst))


def argmax_choice(
    market: HospitalSideChoice, X: Iterable[Contract], inst: Instance, bound: int = DEFAULT_ARGMAX_BOUND
) -> ContractSet:
    """The unique highest-scoring subset of ``X``, found by trying them all."""
    X = sorted(set(X))
    if len(X) > bound:
        raise BoundExceeded(f"{len(X)} contracts exceeds argmax bound {bound}")
    w = _Weights(inst)
    best: Optional[Tuple[Union[int, float], int]] = None
    tied = False
    for mask in range(1 << len(X)):
        s = _score(market, (X[i] for i in range(len(X)) if mask >> i & 1), inst, w)
        if s == NEG_INF:
            continue
        if best is None or s > best[0]:
            best, tied = (s, mask), False
        elif s == best[0]:
            tied = True
    assert best is not None  # the empty set always scores 0
    if tied:
        raise RationalizationError(f"score maximizer over {X} is not unique")
    return frozenset(X[i] for i in range(len(X)) if best[1] >> i & 1)


def argmax_choice_table(
    market: HospitalSideChoice, universe: Iterable[Contract], inst: Instance, bound: int = DEFAULT_AXIOM_BOUND
) -> Dict[ContractSet, ContractSet]:
    """:func:`argmax_choice` for every subset of ``universe`` at once.

    The best submask of each mask is the best of its own score and the best
    submasks of its one-smaller children; a tie anywhere along the way is
    reported as non-uniqueness.
    """
    universe = sorted(set(universe))
    n = len(universe)
    if n > bound:
        raise BoundExceeded(f"universe of {n} contracts exceeds bound {bound}")
    w = _Weights(inst)
    subsets = [frozenset(universe[i] for i in range(n) if mask >> i & 1) for mask in range(1 << n)]
    best_score: List[Union[int, float]] = [NEG_INF] * (1 << n)
    best_mask = [0] * (1 << n)
    out: Dict[ContractSet, ContractSet] = {}
    for mask in range(1 << n):
        cands = [(best_score[mask ^ (1 << i)], best_mask[mask ^ (1 << i)]) for i in range(n) if mask >> i & 1]
        own = _score(market, subsets[mask], inst, w)
        if own != NEG_INF:
            cands.append((own, mask))
        top = max(s for s, _ in cands)
        winners = {m for s, m in cands if s == top}
        if len(winners) > 1:
            raise RationalizationError(f"score maximizer over {sorted(subsets[mask])} is not unique")
        best_score[mask], best_mask[mask] = top, winners.pop()
        out[subsets[mask]] = subsets[best_mask[mask]]
    return out
