"""Solution-concept predicates and brute-force oracles.

Everything in here is deliberately direct: predicates follow the textbook
definitions and the efficiency/optimality checks enumerate matchings.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Tuple

from .core import BoundExceeded, CapacityProfile, Instance, Matching, set_utility

DEFAULT_MAX_DOCTORS = 7
DEFAULT_MAX_OPTIONS = 8

VACANCY = "vacancy"
REPLACEMENT = "replacement"


@dataclass(frozen=True, order=True)
class BlockingPair:
    doctor: str
    hospital: str
    kind: str


def _counts(m: Matching, inst: Instance) -> Dict[str, int]:
    counts = {h: 0 for h in inst.hospitals}
    for h in m.assignment.values():
        if h is not None:
            counts[h] += 1
    return counts


def is_feasible(m: Matching, inst: Instance) -> bool:
    counts = _counts(m, inst)
    if any(counts[h] > inst.hospitals[h].capacity for h in counts):
        return False
    return all(sum(counts[h] for h in r.order) <= r.cap for r in inst.regions)


def is_individually_rational(m: Matching, inst: Instance) -> bool:
    for d, h in m.assignment.items():
        if h is None:
            continue
        if inst.doctor_rank(d, h) is None or inst.hospital_rank(h, d) is None:
            return False
    return True


def blocking_pairs(m: Matching, inst: Instance, caps: Optional[CapacityProfile] = None) -> List[BlockingPair]:
    """All blocking pairs of ``m``, against physical capacities unless ``caps`` is given."""
    caps = inst.physical_capacities() if caps is None else caps
    rosters = m.rosters(inst)
    out = []
    for d in inst.doctors:
        for h in inst.doctor_prefs[d]:
            if not inst.doctor_prefers(d, h, m.assignment[d]):
                continue
            if inst.hospital_rank(h, d) is None:
                continue
            if len(rosters[h]) < caps[h]:
                out.append(BlockingPair(d, h, VACANCY))
            elif any(inst.hospital_prefers(h, d, x) for x in rosters[h]):
                out.append(BlockingPair(d, h, REPLACEMENT))
    return sorted(out)


def is_stable(m: Matching, inst: Instance, caps: CapacityProfile) -> bool:
    """Stability in the plain market whose capacities are ``caps`` (no regional caps)."""
    if not is_individually_rational(m, inst):
        return False
    counts = _counts(m, inst)
    if any(counts[h] > caps[h] for h in counts):
        return False
    return not blocking_pairs(m, inst, caps)


def weak_stability_violations(m: Matching, inst: Instance) -> List[BlockingPair]:
    """Blocking pairs not excused by a full region and strictly better incumbents."""
    counts = _counts(m, inst)
    rosters = m.rosters(inst)
    bad = []
    for bp in blocking_pairs(m, inst):
        region = inst.region_of(bp.hospital)
        full = sum(counts[h] for h in region.order) == region.cap
        better = all(inst.hospital_prefers(bp.hospital, x, bp.doctor) for x in rosters[bp.hospital])
        if not (full and better):
            bad.append(bp)
    return bad


def is_weakly_stable(m: Matching, inst: Instance) -> bool:
    return (
        is_feasible(m, inst)
        and is_individually_rational(m, inst)
        and not weak_stability_violations(m, inst)
    )


# ---------------------------------------------------------------------------
# Enumeration


def _check_bounds(inst: Instance, options: Dict[str, List[Optional[str]]], max_doctors: int, max_options: int) -> None:
    if len(inst.doctors) > max_doctors:
        raise BoundExceeded(f"{len(inst.doctors)} doctors exceeds enumeration bound {max_doctors}")
    for d, opts in options.items():
        n = sum(1 for h in opts if h is not None)
        if n > max_options:
            raise BoundExceeded(f"doctor {d} has {n} options, bound is {max_options}")


def _search(
    inst: Instance,
    options: Dict[str, List[Optional[str]]],
    caps: CapacityProfile,
    regional: bool,
) -> Iterator[Matching]:
    doctors = list(inst.doctors)
    load = {h: 0 for h in inst.hospitals}
    rload = {r.id: 0 for r in inst.regions}
    current: Dict[str, Optional[str]] = {}

    def rec(i: int) -> Iterator[Matching]:
        if i == len(doctors):
            yield Matching(dict(current))
            return
        d = doctors[i]
        for h in options[d]:
            if h is not None:
                r = inst.hospitals[h].region
                if load[h] >= caps[h] or (regional and rload[r] >= inst.region_by_id[r].cap):
                    continue
                load[h] += 1
                rload[r] += 1
            current[d] = h
            yield from rec(i + 1)
            if h is not None:
                load[h] -= 1
                rload[inst.hospitals[h].region] -= 1
        current.pop(d, None)

    yield from rec(0)


def enumerate_feasible_matchings(
    inst: Instance,
    max_doctors: int = DEFAULT_MAX_DOCTORS,
    max_options: int = DEFAULT_MAX_OPTIONS,
) -> Iterator[Matching]:
    """Every feasible assignment of doctors to acceptable hospitals or nothing.

    Order is deterministic: doctors in instance order, each trying "unmatched"
    first and then her list from the top.
    """
    options = {d: [None, *inst.doctor_prefs[d]] for d in inst.doctors}
    _check_bounds(inst, options, max_doctors, max_options)
    return _search(inst, options, inst.physical_capacities(), regional=True)


def stable_matchings(
    inst: Instance,
    caps: CapacityProfile,
    max_doctors: int = DEFAULT_MAX_DOCTORS,
    max_options: int = DEFAULT_MAX_OPTIONS,
) -> Iterator[Matching]:
    """All matchings stable in the plain market with capacities ``caps``."""
    options = {
        d: [None, *[h for h in inst.doctor_prefs[d] if inst.hospital_rank(h, d) is not None]]
        for d in inst.doctors
    }
    _check_bounds(inst, options, max_doctors, max_options)
    for m in _search(inst, options, caps, regional=False):
        if is_stable(m, inst, caps):
            yield m


def doctor_weakly_prefers(inst: Instance, d: str, a: Optional[str], b: Optional[str]) -> bool:
    return a == b or inst.doctor_prefers(d, a, b)


def pareto_dominates(a: Matching, b: Matching, inst: Instance) -> bool:
    """True iff ``a`` is weakly better than ``b`` for every doctor and hospital
    and strictly better for someone. Hospitals compare rosters by
    :func:`~capmatch.core.set_utility`.
    """
    strict = False
    for d in inst.doctors:
        x, y = a.assignment[d], b.assignment[d]
        if x == y:
            continue
        if not inst.doctor_prefers(d, x, y):
            return False
        strict = True
    ra, rb = a.rosters(inst), b.rosters(inst)
    for h in inst.hospital_ids:
        if ra[h] == rb[h]:
            continue
        ua, ub = set_utility(inst, h, ra[h]), set_utility(inst, h, rb[h])
        # equal utilities on distinct sets only happen at -inf, where neither is better
        if ua <= ub:
            return False
        strict = True
    return strict


def is_constrained_efficient(
    m: Matching,
    inst: Instance,
    max_doctors: int = DEFAULT_MAX_DOCTORS,
    max_options: int = DEFAULT_MAX_OPTIONS,
) -> Tuple[bool, Optional[Matching]]:
    """Search for a feasible matching that Pareto dominates ``m``.

    Only assignments leaving every doctor weakly better are explored; any
    dominating matching lies among them. Returns ``(True, None)`` or
    ``(False, witness)``.
    """
    options: Dict[str, List[Optional[str]]] = {}
    for d in inst.doctors:
        cur = m.assignment[d]
        opts = [None, *inst.doctor_prefs[d]]
        if cur not in opts:
            opts.append(cur)
        options[d] = [h for h in opts if doctor_weakly_prefers(inst, d, h, cur)]
    _check_bounds(inst, {d: [None, *inst.doctor_prefs[d]] for d in inst.doctors}, max_doctors, max_options)
    for cand in _search(inst, options, inst.physical_capacities(), regional=True):
        if pareto_dominates(cand, m, inst):
            return False, cand
    return True, None


def is_doctor_optimal_stable(
    m: Matching,
    inst: Instance,
    caps: CapacityProfile,
    max_doctors: int = DEFAULT_MAX_DOCTORS,
    max_options: int = DEFAULT_MAX_OPTIONS,
) -> bool:
    if not is_stable(m, inst, caps):
        return False
    for other in stable_matchings(inst, caps, max_doctors, max_options):
        if other == m:
            continue
        if all(doctor_weakly_prefers(inst, d, other[d], m[d]) for d in inst.doctors):
            return False
    return True


def doctors_weakly_improve(new: Matching, old: Matching, inst: Instance) -> bool:
    return all(doctor_weakly_prefers(inst, d, new[d], old[d]) for d in inst.doctors)


def welfare_comparison(new: Matching, old: Matching, inst: Instance) -> List[int]:
    """Per doctor (instance order): +1 better off under ``new``, 0 same, -1 otherwise."""
    out = []
    for d in inst.doctors:
        if new[d] == old[d]:
            out.append(0)
        elif inst.doctor_prefers(d, new[d], old[d]):
            out.append(1)
        else:
            out.append(-1)
    return out

