"""Random instances, the strategy-proofness fuzzer and the property sweeps."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import random
from dataclasses import dataclass, field, fields, replace
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple, Union

from .core import BoundExceeded, Hospital, Instance, InstanceError, Matching, Region, instance_to_dict, matching_to_dict
from .mechanisms import adapted_capacities, run_da, run_fda, run_jrmp
from .verify import (
    DEFAULT_MAX_DOCTORS,
    is_constrained_efficient,
    is_feasible,
    is_weakly_stable,
    welfare_comparison,
)

Range = Tuple[int, int]

MECHANISMS: Dict[str, Callable[[Instance], Matching]] = {
    "da": lambda inst: run_da(inst, inst.physical_capacities()),
    "jrmp": run_jrmp,
    "fda": run_fda,
}


@dataclass(frozen=True)
class GeneratorConfig:
    doctors: Range = (0, 6)
    hospitals: Range = (1, 5)
    regions: Range = (1, 3)
    capacity: Range = (1, 3)
    regional_cap: Range = (0, 6)
    target_policy: str = "random-valid"  # or "zeroes"
    doctor_list_length: Range = (0, 5)
    hospital_list_length: Range = (2, 6)
    seed: int = 0

    def validate(self) -> None:
        for f in fields(self):
            val = getattr(self, f.name)
            if isinstance(val, tuple):
                lo, hi = val
                if lo < 0 or lo > hi:
                    raise InstanceError(f"config.{f.name}: bad range {val}")
        if self.hospitals[0] < 1 or self.regions[0] < 1 or self.capacity[0] < 1:
            raise InstanceError("config: hospitals, regions and capacity need a minimum of at least 1")
        if self.regions[0] > self.hospitals[1]:
            raise InstanceError(
                f"config: at least {self.regions[0]} regions but at most {self.hospitals[1]} hospitals"
            )
        if self.target_policy not in ("zeroes", "random-valid"):
            raise InstanceError(f"config.target_policy: unknown policy {self.target_policy!r}")


def config_from_dict(doc: Mapping[str, Any]) -> GeneratorConfig:
    known = {f.name for f in fields(GeneratorConfig)}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise InstanceError(f"config: unknown field(s) {unknown}")
    kwargs = {k: tuple(v) if isinstance(v, list) else v for k, v in doc.items()}
    cfg = GeneratorConfig(**kwargs)
    cfg.validate()
    return cfg


def _draw(rng: random.Random, r: Range, hi_clip: Optional[int] = None) -> int:
    lo, hi = r
    if hi_clip is not None:
        hi = min(hi, hi_clip)
        lo = min(lo, hi)
    return rng.randint(lo, hi)


def generate_instance(cfg: GeneratorConfig) -> Instance:
    """A random valid instance; the same config and seed always give the same instance."""
    cfg.validate()
    rng = random.Random(cfg.seed)
    nd = _draw(rng, cfg.doctors)
    nh = rng.randint(max(cfg.hospitals[0], cfg.regions[0]), cfg.hospitals[1])
    nr = _draw(rng, cfg.regions, hi_clip=nh)
    doctors = [f"d{i}" for i in range(1, nd + 1)]
    hids = [f"h{i}" for i in range(1, nh + 1)]
    rids = [f"r{i}" for i in range(1, nr + 1)]

    shuffled = hids[:]
    rng.shuffle(shuffled)
    region_of = {h: rids[i] if i < nr else rng.choice(rids) for i, h in enumerate(shuffled)}

    hospitals = {}
    for h in hids:
        k = _draw(rng, cfg.hospital_list_length, hi_clip=nd)
        hospitals[h] = Hospital(h, region_of[h], _draw(rng, cfg.capacity), tuple(rng.sample(doctors, k)))
    doctor_prefs = {d: tuple(rng.sample(hids, _draw(rng, cfg.doctor_list_length, hi_clip=nh))) for d in doctors}

    regions = []
    for r in rids:
        members = [h for h in hids if region_of[h] == r]
        cap = _draw(rng, cfg.regional_cap)
        order = members[:]
        rng.shuffle(order)
        targets = {h: 0 for h in members}
        if cfg.target_policy == "random-valid":
            left = cap
            for h in rng.sample(members, len(members)):
                targets[h] = rng.randint(0, min(hospitals[h].capacity, left))
                left -= targets[h]
        regions.append(Region(r, cap, tuple(order), targets))

    return Instance(tuple(doctors), hospitals, tuple(regions), doctor_prefs)


def with_doctor_prefs(inst: Instance, d: str, prefs: Tuple[str, ...]) -> Instance:
    return replace(inst, doctor_prefs={**inst.doctor_prefs, d: tuple(prefs)})


def instance_digest(inst: Instance) -> str:
    blob = json.dumps(instance_to_dict(inst), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Strategy-proofness fuzzing


def misreport(rng: random.Random, prefs: Tuple[str, ...]) -> Tuple[str, ...]:
    """A truncation or a transposition of ``prefs``, each with probability one half."""
    if len(prefs) >= 2 and rng.random() < 0.5:
        i, j = rng.sample(range(len(prefs)), 2)
        out = list(prefs)
        out[i], out[j] = out[j], out[i]
        return tuple(out)
    return prefs[: rng.randint(0, max(0, len(prefs) - 1))]


def fuzz_strategyproofness(
    mech: Union[str, Callable[[Instance], Matching]], cfg: GeneratorConfig, trials: int
) -> List[Dict[str, Any]]:
    """Look for a doctor who gains by misreporting. Returns every profitable misreport found.

    ``mech`` is a key of :data:`MECHANISMS` or any instance -> matching callable.
    """
    run = MECHANISMS[mech] if isinstance(mech, str) else mech
    name = mech if isinstance(mech, str) else getattr(mech, "__name__", "custom")
    violations = []
    for t in range(trials):
        inst = generate_instance(replace(cfg, seed=cfg.seed + t))
        if not inst.doctors:
            continue
        rng = random.Random(f"fuzz:{cfg.seed}:{t}")
        d = rng.choice(inst.doctors)
        truth = inst.doctor_prefs[d]
        lie = misreport(rng, truth)
        if lie == truth:
            continue
        honest = run(inst)[d]
        gamed = run(with_doctor_prefs(inst, d, lie))[d]
        if inst.doctor_prefers(d, gamed, honest):
            violations.append({
                "mechanism": name,
                "trial": t,
                "doctor": d,
                "truthful": list(truth),
                "misreport": list(lie),
                "truthful_match": honest,
                "misreport_match": gamed,
                "instance": instance_to_dict(inst),
            })
    return violations


# ---------------------------------------------------------------------------
# Property sweeps


class SuiteFailure(AssertionError):
    """A property check failed; carries the record and the replayable instance."""

    def __init__(self, message: str, record: Dict[str, Any], instance: Dict[str, Any]):
        super().__init__(message)
        self.record = record
        self.instance = instance


def _verdict(ok: Optional[bool]) -> str:
    return "skipped" if ok is None else ("true" if ok else "false")


def evaluate_instance(inst: Instance, check_efficiency: bool = True, max_doctors: int = DEFAULT_MAX_DOCTORS) -> Dict[str, Any]:
    """Run JRMP, FDA and DA under the FDA headcounts on one instance and judge them."""
    jrmp = run_jrmp(inst)
    fda = run_fda(inst)
    caps = adapted_capacities(fda, inst)
    da = run_da(inst, caps)

    fda_eff = jrmp_eff = None
    if check_efficiency:
        try:
            fda_eff = is_constrained_efficient(fda, inst, max_doctors=max_doctors)[0]
            jrmp_eff = is_constrained_efficient(jrmp, inst, max_doctors=max_doctors)[0]
        except BoundExceeded:
            fda_eff = jrmp_eff = None

    jrmp_ws = is_weakly_stable(jrmp, inst)
    welfare = welfare_comparison(da, jrmp, inst)
    return {
        "digest": instance_digest(inst),
        "jrmp": matching_to_dict(jrmp, inst),
        "fda": matching_to_dict(fda, inst),
        "da_adapted": matching_to_dict(da, inst),
        "adapted_caps": caps,
        "equal": fda == da,
        "fda_feasible": is_feasible(fda, inst),
        "fda_weakly_stable": is_weakly_stable(fda, inst),
        "fda_efficient": _verdict(fda_eff),
        "jrmp_weakly_stable": jrmp_ws,
        "jrmp_efficient": _verdict(jrmp_eff),
        "welfare_vs_jrmp": welfare,
        "doctors_weakly_better": None if not jrmp_ws else min(welfare, default=0) >= 0,
    }


def record_failures(rec: Mapping[str, Any]) -> List[str]:
    problems = []
    if not rec["equal"]:
        problems.append("FDA outcome differs from DA under adapted capacities")
    if not rec["fda_feasible"]:
        problems.append("FDA outcome infeasible")
    if not rec["fda_weakly_stable"]:
        problems.append("FDA outcome not weakly stable")
    if rec["fda_efficient"] == "false":
        problems.append("FDA outcome not constrained efficient")
    if rec["doctors_weakly_better"] is False:
        problems.append("some doctor worse off than under JRMP")
    return problems


@dataclass
class ExperimentReport:
    records: List[Dict[str, Any]] = field(default_factory=list)

    def summary(self) -> Dict[str, int]:
        recs = self.records
        return {
            "instances": len(recs),
            "equal": sum(r["equal"] for r in recs),
            "fda_weakly_stable": sum(r["fda_weakly_stable"] for r in recs),
            "fda_efficient": sum(r["fda_efficient"] == "true" for r in recs),
            "efficiency_skipped": sum(r["fda_efficient"] == "skipped" for r in recs),
            "jrmp_weakly_stable": sum(r["jrmp_weakly_stable"] for r in recs),
            "jrmp_inefficient": sum(r["jrmp_efficient"] == "false" for r in recs),
            "doctors_weakly_better": sum(r["doctors_weakly_better"] is True for r in recs),
            "failures": sum(bool(record_failures(r)) for r in recs),
        }

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.records)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        cols = ["seed", "digest", "equal", "fda_feasible", "fda_weakly_stable", "fda_efficient",
                "jrmp_weakly_stable", "jrmp_efficient", "doctors_weakly_better"]
        writer.writerow(cols)
        for r in self.records:
            writer.writerow([r.get(c) for c in cols])
        return buf.getvalue()


def run_equivalence_suite(
    cfg: GeneratorConfig,
    n: int,
    check_efficiency: bool = True,
    instances: Optional[List[Instance]] = None,
) -> ExperimentReport:
    """Check the FDA/DA equivalence and its corollaries on ``n`` generated instances.

    Instance ``i`` uses seed ``cfg.seed + i``. Passing ``instances`` evaluates
    those instead. Raises :class:`SuiteFailure` on the first failed check.
    """
    report = ExperimentReport()
    if instances is None:
        seeded = [(cfg.seed + i, generate_instance(replace(cfg, seed=cfg.seed + i))) for i in range(n)]
    else:
        seeded = [(None, inst) for inst in instances]
    for seed, inst in seeded:
        rec = {"seed": seed, **evaluate_instance(inst, check_efficiency)}
        report.records.append(rec)
        problems = record_failures(rec)
        if problems:
            raise SuiteFailure("; ".join(problems), rec, instance_to_dict(inst))
    return report
