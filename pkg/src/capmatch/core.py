"""Domain types for matching markets with regional caps.

An :class:`Instance` bundles doctors, hospitals (with physical capacities and
rank lists), regions (with caps, target capacities and the hospital order used
by the flexible deferred acceptance algorithm) and the doctors' rank lists.
Anything missing from a rank list is unacceptable.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, Iterable, List, Mapping, Optional, Tuple

#: Capacities per hospital. Used for physical, target and adapted capacities alike.
CapacityProfile = Mapping[str, int]

NEG_INF = float("-inf")


class InstanceError(ValueError):
    """Raised when an instance or matching document fails validation."""


class BoundExceeded(RuntimeError):
    """Raised when an exhaustive oracle is asked to work past its size bound."""


@dataclass(frozen=True)
class Hospital:
    id: str
    region: str
    capacity: int
    prefs: Tuple[str, ...]


@dataclass(frozen=True)
class Region:
    id: str
    cap: int
    order: Tuple[str, ...]
    targets: Mapping[str, int]

    @property
    def hospitals(self) -> Tuple[str, ...]:
        return tuple(sorted(self.order))


@dataclass(frozen=True)
class Instance:
    doctors: Tuple[str, ...]
    hospitals: Mapping[str, Hospital]
    regions: Tuple[Region, ...]
    doctor_prefs: Mapping[str, Tuple[str, ...]]

    def __post_init__(self) -> None:
        _validate(self)

    @cached_property
    def hospital_ids(self) -> Tuple[str, ...]:
        """Hospital ids in lexicographic order; the index order of distributions."""
        return tuple(sorted(self.hospitals))

    @cached_property
    def region_by_id(self) -> Dict[str, Region]:
        return {r.id: r for r in self.regions}

    @cached_property
    def _hospital_rank(self) -> Dict[str, Dict[str, int]]:
        return {h: {d: i for i, d in enumerate(hosp.prefs)} for h, hosp in self.hospitals.items()}

    @cached_property
    def _doctor_rank(self) -> Dict[str, Dict[str, int]]:
        return {d: {h: i for i, h in enumerate(p)} for d, p in self.doctor_prefs.items()}

    def region_of(self, h: str) -> Region:
        return self.region_by_id[self.hospitals[h].region]

    def hospital_rank(self, h: str, d: str) -> Optional[int]:
        """0-based position of ``d`` in ``h``'s list, or None if unacceptable."""
        return self._hospital_rank[h].get(d)

    def doctor_rank(self, d: str, h: Optional[str]) -> Optional[int]:
        """0-based position of ``h`` in ``d``'s list; None for unmatched or unacceptable."""
        if h is None:
            return None
        return self._doctor_rank[d].get(h)

    def doctor_prefers(self, d: str, a: Optional[str], b: Optional[str]) -> bool:
        """True iff ``a`` is strictly better than ``b`` for doctor ``d`` (None = unmatched).

        Unacceptable hospitals sit below the unmatched state and are mutually
        incomparable.
        """
        return _strictly_better(self.doctor_rank(d, a), a is None, self.doctor_rank(d, b), b is None)

    def hospital_prefers(self, h: str, a: Optional[str], b: Optional[str]) -> bool:
        """True iff ``a`` is strictly better than ``b`` for hospital ``h`` (None = nobody)."""
        return _strictly_better(
            None if a is None else self.hospital_rank(h, a), a is None,
            None if b is None else self.hospital_rank(h, b), b is None,
        )

    def physical_capacities(self) -> Dict[str, int]:
        return {h: self.hospitals[h].capacity for h in self.hospital_ids}

    def target_capacities(self) -> Dict[str, int]:
        out: Dict[str, int] = {}
        for r in self.regions:
            out.update(r.targets)
        return {h: out[h] for h in self.hospital_ids}


def _strictly_better(ra: Optional[int], a_null: bool, rb: Optional[int], b_null: bool) -> bool:
    # tiers: acceptable (by rank) > null > unacceptable (incomparable among themselves)
    if ra is not None:
        return rb is None or ra < rb
    if a_null:
        return rb is None and not b_null
    return False


def _validate(inst: Instance) -> None:
    if len(set(inst.doctors)) != len(inst.doctors):
        raise InstanceError("doctors: duplicate id")
    for d in inst.doctors:
        if not isinstance(d, str) or not d:
            raise InstanceError(f"doctors: ids must be nonempty strings, got {d!r}")
    if set(inst.doctor_prefs) != set(inst.doctors):
        missing = sorted(set(inst.doctors) - set(inst.doctor_prefs))
        extra = sorted(set(inst.doctor_prefs) - set(inst.doctors))
        raise InstanceError(f"doctor_prefs: missing {missing}, unknown {extra}")
    for d, prefs in inst.doctor_prefs.items():
        if len(set(prefs)) != len(prefs):
            raise InstanceError(f"doctor_prefs[{d}]: duplicate hospital")
        for h in prefs:
            if h not in inst.hospitals:
                raise InstanceError(f"doctor_prefs[{d}]: unknown hospital {h!r}")

    region_ids = [r.id for r in inst.regions]
    if len(set(region_ids)) != len(region_ids):
        raise InstanceError("regions: duplicate id")
    for h, hosp in inst.hospitals.items():
        if not isinstance(h, str) or not h or hosp.id != h:
            raise InstanceError(f"hospitals: bad id {h!r}")
        if not isinstance(hosp.capacity, int) or hosp.capacity < 1:
            raise InstanceError(f"hospitals[{h}].capacity: must be a positive integer")
        if hosp.region not in region_ids:
            raise InstanceError(f"hospitals[{h}].region: unknown region {hosp.region!r}")
        if len(set(hosp.prefs)) != len(hosp.prefs):
            raise InstanceError(f"hospitals[{h}].prefs: duplicate doctor")
        for d in hosp.prefs:
            if d not in inst.doctor_prefs:
                raise InstanceError(f"hospitals[{h}].prefs: unknown doctor {d!r}")

    for r in inst.regions:
        members = {h for h, hosp in inst.hospitals.items() if hosp.region == r.id}
        if not isinstance(r.cap, int) or r.cap < 0:
            raise InstanceError(f"regions[{r.id}].cap: must be a nonnegative integer")
        if len(r.order) != len(set(r.order)) or set(r.order) != members:
            raise InstanceError(
                f"regions[{r.id}].order: must be a permutation of {sorted(members)}"
            )
        if set(r.targets) != members:
            raise InstanceError(f"regions[{r.id}].targets: need exactly one entry per hospital {sorted(members)}")
        for h, t in r.targets.items():
            if not isinstance(t, int) or t < 0:
                raise InstanceError(f"regions[{r.id}].targets[{h}]: must be a nonnegative integer")
        total = sum(r.targets.values())
        if total > r.cap:
            raise InstanceError(f"regions[{r.id}].targets: target sum {total} > cap {r.cap}")
        for h, t in r.targets.items():
            if t > inst.hospitals[h].capacity:
                raise InstanceError(
                    f"regions[{r.id}].targets[{h}]: {t} exceeds capacity {inst.hospitals[h].capacity}"
                )


@dataclass(frozen=True)
class Matching:
    """Doctor -> hospital assignment; ``None`` means unmatched."""

    assignment: Mapping[str, Optional[str]]

    def __hash__(self) -> int:
        return hash(frozenset(self.assignment.items()))

    @classmethod
    def empty(cls, inst: Instance) -> "Matching":
        return cls({d: None for d in inst.doctors})

    @classmethod
    def from_rosters(cls, inst: Instance, rosters: Mapping[str, Iterable[str]]) -> "Matching":
        assignment: Dict[str, Optional[str]] = {d: None for d in inst.doctors}
        for h, ds in rosters.items():
            for d in ds:
                if assignment.get(d) is not None:
                    raise InstanceError(f"doctor {d!r} appears in two rosters")
                assignment[d] = h
        return cls(assignment)

    def roster(self, h: str) -> List[str]:
        return sorted(d for d, x in self.assignment.items() if x == h)

    def rosters(self, inst: Instance) -> Dict[str, List[str]]:
        out: Dict[str, List[str]] = {h: [] for h in inst.hospital_ids}
        for d in sorted(self.assignment):
            h = self.assignment[d]
            if h is not None:
                out[h].append(d)
        return out

    def unmatched(self) -> List[str]:
        return sorted(d for d, h in self.assignment.items() if h is None)

    def __getitem__(self, d: str) -> Optional[str]:
        return self.assignment[d]


@dataclass(frozen=True)
class Distribution:
    """Per-hospital headcounts, indexed by hospital id in lexicographic order."""

    hospitals: Tuple[str, ...]
    counts: Tuple[int, ...]

    def as_dict(self) -> Dict[str, int]:
        return dict(zip(self.hospitals, self.counts))

    @property
    def total(self) -> int:
        return sum(self.counts)


def distribution_of(m: Matching, inst: Instance) -> Distribution:
    counts = {h: 0 for h in inst.hospital_ids}
    for h in m.assignment.values():
        if h is not None:
            counts[h] += 1
    return Distribution(inst.hospital_ids, tuple(counts[h] for h in inst.hospital_ids))


def doctor_weight(inst: Instance, h: str, d: str) -> int:
    """Weight of ``d`` in ``h``'s additive set utility.

    The acceptable doctor at 0-based rank ``k`` weighs ``2**(|D| - 1 - k)``.
    Unacceptable doctors get ``-2**(|D| + j)``, ``j`` being their position
    among the unacceptable ones in instance order, so any set containing one
    is worth less than the empty set.
    """
    n = len(inst.doctors)
    k = inst.hospital_rank(h, d)
    if k is not None:
        return 1 << (n - 1 - k)
    j = [x for x in inst.doctors if inst.hospital_rank(h, x) is None].index(d)
    return -(1 << (n + j))


def set_utility(inst: Instance, h: str, doctors: Iterable[str]) -> float:
    """Additive responsive completion of ``h``'s ranking over doctor sets.

    Distinct powers of two make the order strict. Sets larger than the
    physical capacity are worth ``-inf``.
    """
    ds = list(doctors)
    if len(ds) > inst.hospitals[h].capacity:
        return NEG_INF
    return sum(doctor_weight(inst, h, d) for d in ds)


# ---------------------------------------------------------------------------
# JSON (de)serialization


def _require(obj: Mapping[str, Any], key: str, kind: type, where: str) -> Any:
    if key not in obj:
        raise InstanceError(f"{where}: missing field {key!r}")
    val = obj[key]
    if kind is int:
        ok = isinstance(val, int) and not isinstance(val, bool)
    else:
        ok = isinstance(val, kind)
    if not ok:
        raise InstanceError(f"{where}.{key}: expected {kind.__name__}, got {type(val).__name__}")
    return val


def _str_list(val: Any, where: str) -> Tuple[str, ...]:
    if not isinstance(val, list) or not all(isinstance(x, str) for x in val):
        raise InstanceError(f"{where}: expected a list of strings")
    return tuple(val)


def instance_from_dict(doc: Mapping[str, Any]) -> Instance:
    if not isinstance(doc, dict):
        raise InstanceError("instance: expected a JSON object")
    doctors = _str_list(_require(doc, "doctors", list, "instance"), "doctors")
    raw_dp = _require(doc, "doctor_prefs", dict, "instance")
    doctor_prefs = {d: _str_list(p, f"doctor_prefs[{d}]") for d, p in raw_dp.items()}

    hospitals: Dict[str, Hospital] = {}
    for h, raw in _require(doc, "hospitals", dict, "instance").items():
        where = f"hospitals[{h}]"
        if not isinstance(raw, dict):
            raise InstanceError(f"{where}: expected an object")
        hospitals[h] = Hospital(
            id=h,
            region=_require(raw, "region", str, where),
            capacity=_require(raw, "capacity", int, where),
            prefs=_str_list(_require(raw, "prefs", list, where), f"{where}.prefs"),
        )

    regions: List[Region] = []
    for i, raw in enumerate(_require(doc, "regions", list, "instance")):
        if not isinstance(raw, dict):
            raise InstanceError(f"regions[{i}]: expected an object")
        rid = _require(raw, "id", str, f"regions[{i}]")
        where = f"regions[{rid}]"
        targets = _require(raw, "targets", dict, where)
        for h, t in targets.items():
            if isinstance(t, bool) or not isinstance(t, int):
                raise InstanceError(f"{where}.targets[{h}]: expected int")
            if h not in hospitals:
                raise InstanceError(f"{where}.targets: unknown hospital {h!r}")
        order = _str_list(_require(raw, "order", list, where), f"{where}.order")
        for h in order:
            if h not in hospitals:
                raise InstanceError(f"{where}.order: unknown hospital {h!r}")
        regions.append(Region(id=rid, cap=_require(raw, "cap", int, where), order=order, targets=dict(targets)))

    return Instance(doctors=doctors, hospitals=hospitals, regions=tuple(regions), doctor_prefs=doctor_prefs)


def instance_to_dict(inst: Instance) -> Dict[str, Any]:
    return {
        "doctors": list(inst.doctors),
        "doctor_prefs": {d: list(inst.doctor_prefs[d]) for d in inst.doctors},
        "hospitals": {
            h: {"region": hosp.region, "capacity": hosp.capacity, "prefs": list(hosp.prefs)}
            for h, hosp in sorted(inst.hospitals.items())
        },
        "regions": [
            {"id": r.id, "cap": r.cap, "order": list(r.order), "targets": {h: r.targets[h] for h in sorted(r.targets)}}
            for r in inst.regions
        ],
    }


def parse_instance(text: str) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"instance: invalid JSON ({exc})") from exc
    return instance_from_dict(doc)


def serialize_instance(inst: Instance) -> str:
    return json.dumps(instance_to_dict(inst), indent=2)


def matching_to_dict(m: Matching, inst: Instance) -> Dict[str, Any]:
    return {
        "matches": {d: m.assignment[d] for d in sorted(m.assignment) if m.assignment[d] is not None},
        "unmatched": m.unmatched(),
        "distribution": distribution_of(m, inst).as_dict(),
    }


def matching_from_dict(doc: Mapping[str, Any], inst: Instance) -> Matching:
    if not isinstance(doc, dict) or not isinstance(doc.get("matches", {}), dict):
        raise InstanceError("matching: expected an object with a 'matches' map")
    assignment: Dict[str, Optional[str]] = {d: None for d in inst.doctors}
    for d, h in doc.get("matches", {}).items():
        if d not in assignment:
            raise InstanceError(f"matching.matches: unknown doctor {d!r}")
        if h is not None and h not in inst.hospitals:
            raise InstanceError(f"matching.matches[{d}]: unknown hospital {h!r}")
        assignment[d] = h
    for d in doc.get("unmatched", []):
        if d not in assignment:
            raise InstanceError(f"matching.unmatched: unknown doctor {d!r}")
        if assignment[d] is not None:
            raise InstanceError(f"matching: doctor {d!r} both matched and unmatched")
    return Matching(assignment)


def parse_capacities(doc: Mapping[str, Any], inst: Instance) -> Dict[str, int]:
    if not isinstance(doc, dict):
        raise InstanceError("caps: expected an object of hospital -> int")
    for h, c in doc.items():
        if h not in inst.hospitals:
            raise InstanceError(f"caps: unknown hospital {h!r}")
        if isinstance(c, bool) or not isinstance(c, int) or c < 0:
            raise InstanceError(f"caps[{h}]: expected a nonnegative integer")
    missing = sorted(set(inst.hospitals) - set(doc))
    if missing:
        raise InstanceError(f"caps: missing hospitals {missing}")
    return dict(doc)
