"""DA, JRMP and FDA, plus the adapted-capacity DA that reproduces FDA."""
from __future__ import annotations

import copy
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence

from .core import CapacityProfile, Instance, InstanceError, Matching, Region


def _check_caps(inst: Instance, caps: CapacityProfile) -> None:
    unknown = sorted(set(caps) - set(inst.hospitals))
    if unknown:
        raise InstanceError(f"caps: unknown hospital(s) {unknown}")
    missing = sorted(set(inst.hospitals) - set(caps))
    if missing:
        raise InstanceError(f"caps: missing hospital(s) {missing}")
    for h, c in caps.items():
        if c < 0:
            raise InstanceError(f"caps[{h}]: negative capacity")


def _keep_best(inst: Instance, h: str, applicants: Sequence[str], cap: int) -> List[str]:
    acceptable = [d for d in applicants if inst.hospital_rank(h, d) is not None]
    acceptable.sort(key=lambda d: inst.hospital_rank(h, d))
    return acceptable[:cap]


def run_da(
    inst: Instance,
    caps: CapacityProfile,
    proposal_order: Optional[Sequence[str]] = None,
) -> Matching:
    """Doctor-proposing deferred acceptance with effective capacities ``caps``.

    Regional caps play no role here. By default all rejected doctors propose
    simultaneously in rounds. With ``proposal_order`` the doctors propose one
    at a time instead, the first free doctor in that order going next; the
    outcome must not depend on this choice.
    """
    _check_caps(inst, caps)
    if proposal_order is not None:
        return _da_sequential(inst, caps, proposal_order)

    nxt = {d: 0 for d in inst.doctors}
    held: Dict[str, List[str]] = {h: [] for h in inst.hospitals}
    to_apply = [d for d in inst.doctors if inst.doctor_prefs[d]]
    while to_apply:
        applications = {h: list(ds) for h, ds in held.items()}
        for d in to_apply:
            applications[inst.doctor_prefs[d][nxt[d]]].append(d)
        rejected = []
        for h, pool in applications.items():
            held[h] = _keep_best(inst, h, pool, caps[h])
            kept = set(held[h])
            rejected.extend(d for d in pool if d not in kept)
        to_apply = []
        for d in rejected:
            nxt[d] += 1
            if nxt[d] < len(inst.doctor_prefs[d]):
                to_apply.append(d)
    return Matching.from_rosters(inst, held)


def _da_sequential(inst: Instance, caps: CapacityProfile, order: Sequence[str]) -> Matching:
    if sorted(order) != sorted(inst.doctors):
        raise InstanceError("proposal_order must be a permutation of the doctors")
    nxt = {d: 0 for d in inst.doctors}
    held: Dict[str, List[str]] = {h: [] for h in inst.hospitals}
    where: Dict[str, Optional[str]] = {d: None for d in inst.doctors}
    while True:
        free = [d for d in order if where[d] is None and nxt[d] < len(inst.doctor_prefs[d])]
        if not free:
            break
        d = free[0]
        h = inst.doctor_prefs[d][nxt[d]]
        pool = held[h] + [d]
        held[h] = _keep_best(inst, h, pool, caps[h])
        for x in pool:
            if x in held[h]:
                where[x] = h
            else:
                where[x] = None
                nxt[x] += 1
    return Matching.from_rosters(inst, held)


def run_jrmp(inst: Instance) -> Matching:
    """DA with every hospital's capacity replaced by its target capacity."""
    return run_da(inst, inst.target_capacities())


def region_fill(inst: Instance, region: Region, pools: Dict[str, List[str]]) -> Dict[str, List[str]]:
    """One FDA recomputation for ``region`` over the current applicant pools.

    Each hospital first keeps its best applicants up to its target capacity;
    then hospitals take turns in the region's order, each turn keeping its
    single best remaining applicant, until the regional cap is reached or no
    hospital can take anyone more.
    """
    ranked = {
        h: sorted(
            (d for d in pools.get(h, ()) if inst.hospital_rank(h, d) is not None),
            key=lambda d: inst.hospital_rank(h, d),
        )
        for h in region.order
    }
    keep = {h: ranked[h][: region.targets[h]] for h in region.order}
    used = sum(len(v) for v in keep.values())
    while used < region.cap:
        progressed = False
        for h in region.order:
            if used >= region.cap:
                break
            if len(keep[h]) < inst.hospitals[h].capacity and len(keep[h]) < len(ranked[h]):
                keep[h].append(ranked[h][len(keep[h])])
                used += 1
                progressed = True
        if not progressed:
            break
    return keep


class FdaState:
    """Mutable run state of the flexible deferred acceptance algorithm.

    Exposed so that callers can drive the doctor picks themselves, e.g. to
    check that the outcome does not depend on them.
    """

    def __init__(self, inst: Instance):
        self.inst = inst
        self.nxt = {d: 0 for d in inst.doctors}
        self.rejected_by: Dict[str, set] = {h: set() for h in inst.hospitals}
        # applicant pool per hospital; after each step every pooled doctor is kept
        self.pool: Dict[str, List[str]] = {h: [] for h in inst.hospitals}
        self.kept: Dict[str, Optional[str]] = {d: None for d in inst.doctors}

    def eligible(self) -> List[str]:
        """Doctors not tentatively kept who still have a hospital to apply to."""
        return sorted(
            d for d in self.inst.doctors
            if self.kept[d] is None and self.nxt[d] < len(self.inst.doctor_prefs[d])
        )

    def step(self, d: str) -> None:
        inst = self.inst
        prefs = inst.doctor_prefs[d]
        assert self.kept[d] is None and self.nxt[d] < len(prefs), d
        h_bar = prefs[self.nxt[d]]
        self.pool[h_bar].append(d)
        region = inst.region_of(h_bar)
        keep = region_fill(inst, region, {h: self.pool[h] for h in region.order})
        for h in region.order:
            kept = set(keep[h])
            for x in self.pool[h]:
                if x in kept:
                    self.kept[x] = h
                else:
                    self.rejected_by[h].add(x)
                    self.kept[x] = None
                    self.nxt[x] += 1
            self.pool[h] = list(keep[h])
        self._check_invariants(region)

    def _check_invariants(self, region: Region) -> None:
        total = 0
        for h in region.order:
            n = len(self.pool[h])
            assert n <= self.inst.hospitals[h].capacity
            assert not set(self.pool[h]) & self.rejected_by[h]
            total += n
        assert total <= region.cap

    def matching(self) -> Matching:
        return Matching.from_rosters(self.inst, self.pool)

    def clone(self) -> "FdaState":
        # the instance is immutable, so it is shared
        return copy.deepcopy(self, {id(self.inst): self.inst})

    def key(self) -> tuple:
        """Hashable snapshot of the run state."""
        return (
            tuple(self.nxt[d] for d in self.inst.doctors),
            tuple(tuple(sorted(self.pool[h])) for h in self.inst.hospital_ids),
        )


def run_fda(inst: Instance, pick: Optional[Callable[[List[str]], str]] = None) -> Matching:
    """Flexible deferred acceptance under each region's targets and order.

    ``pick`` chooses the next applicant among the eligible doctors (sorted by
    id); the default takes the lowest id.
    """
    state = FdaState(inst)
    while True:
        eligible = state.eligible()
        if not eligible:
            return state.matching()
        state.step(pick(eligible) if pick else eligible[0])


def adapted_capacities(m: Matching, inst: Instance) -> Dict[str, int]:
    """Per-hospital headcounts of ``m``, to be used as DA capacities."""
    from .verify import is_feasible

    if not is_feasible(m, inst):
        raise InstanceError("adapted_capacities: matching is not feasible")
    caps = {h: 0 for h in inst.hospital_ids}
    for h in m.assignment.values():
        if h is not None:
            caps[h] += 1
    return caps


class Equivalence(NamedTuple):
    fda: Matching
    da: Matching
    equal: bool


def fda_da_equivalence(inst: Instance) -> Equivalence:
    """Run FDA, then DA under the FDA headcounts, and compare the outcomes."""
    mu_f = run_fda(inst)
    mu_d = run_da(inst, adapted_capacities(mu_f, inst))
    return Equivalence(mu_f, mu_d, mu_f == mu_d)
