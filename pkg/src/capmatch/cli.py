"""Command line entry point: ``capmatch {run,verify,equiv,fuzz,axioms,gen}``.

Exit codes: 0 success / property holds, 1 property violated, 2 input error,
3 enumeration bound exceeded.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, List, Optional

from . import contracts as C
from .core import (
    BoundExceeded,
    InstanceError,
    instance_to_dict,
    matching_from_dict,
    matching_to_dict,
    parse_capacities,
    parse_instance,
)
from .harness import (
    MECHANISMS,
    GeneratorConfig,
    SuiteFailure,
    config_from_dict,
    fuzz_strategyproofness,
    generate_instance,
    run_equivalence_suite,
)
from .mechanisms import adapted_capacities, run_da, run_fda
from .verify import (
    DEFAULT_MAX_DOCTORS,
    blocking_pairs,
    is_constrained_efficient,
    is_feasible,
    is_individually_rational,
    is_stable,
    is_weakly_stable,
    weak_stability_violations,
)

CHECKS = ("feasible", "ir", "stable", "weak-stable", "efficient")


def _load_json(path: str) -> Any:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise InstanceError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{path}: invalid JSON ({exc})") from exc


def _load_instance(path: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InstanceError(f"cannot read {path}: {exc}") from exc
    return parse_instance(text)


def _emit(obj: Any) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def _config(args) -> GeneratorConfig:
    cfg = config_from_dict(_load_json(args.config)) if getattr(args, "config", None) else GeneratorConfig()
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg


def cmd_run(args) -> int:
    inst = _load_instance(args.instance)
    if args.caps:
        if args.mech != "da":
            raise InstanceError("--caps only applies to --mech da")
        m = run_da(inst, parse_capacities(_load_json(args.caps), inst))
    else:
        m = MECHANISMS[args.mech](inst)
    _emit(matching_to_dict(m, inst))
    return 0


def cmd_verify(args) -> int:
    inst = _load_instance(args.instance)
    m = matching_from_dict(_load_json(args.matching), inst)
    caps = parse_capacities(_load_json(args.caps), inst) if args.caps else inst.physical_capacities()
    out: dict = {}
    for check in args.check or CHECKS:
        if check == "feasible":
            out[check] = is_feasible(m, inst)
        elif check == "ir":
            out[check] = is_individually_rational(m, inst)
        elif check == "stable":
            out[check] = is_stable(m, inst, caps)
            out["blocking_pairs"] = [vars(bp) for bp in blocking_pairs(m, inst, caps)]
        elif check == "weak-stable":
            out[check] = is_weakly_stable(m, inst)
            out["unexcused_blocking_pairs"] = [vars(bp) for bp in weak_stability_violations(m, inst)]
        elif check == "efficient":
            ok, witness = is_constrained_efficient(m, inst, max_doctors=args.max_doctors)
            out[check] = ok
            out["pareto_witness"] = None if witness is None else matching_to_dict(witness, inst)
    _emit(out)
    return 0 if all(v for k, v in out.items() if k in CHECKS) else 1


def cmd_equiv(args) -> int:
    cfg = _config(args)
    instances = [_load_instance(args.instance)] if args.instance else None
    try:
        report = run_equivalence_suite(cfg, args.random or 0, not args.no_efficiency, instances)
    except SuiteFailure as fail:
        if args.replay:
            Path(args.replay).write_text(json.dumps(fail.instance, indent=2), encoding="utf-8")
        _emit({"failure": str(fail), "record": fail.record, "instance": fail.instance})
        return 1
    sys.stdout.write(report.to_jsonl())
    if args.csv:
        Path(args.csv).write_text(report.to_csv(), encoding="utf-8")
    print(json.dumps({"summary": report.summary()}, sort_keys=True), file=sys.stderr)
    return 0


def cmd_fuzz(args) -> int:
    violations = fuzz_strategyproofness(args.mech, _config(args), args.trials)
    _emit(violations)
    return 1 if violations else 0


def cmd_axioms(args) -> int:
    inst = _load_instance(args.instance)
    universe = C.acceptable_contracts(inst)
    caps = adapted_capacities(run_fda(inst), inst)
    out: dict = {}
    ok = True
    for name, market in (("original", C.Original()), ("shadow", C.Shadow(caps))):
        choose = C.chooser(market, inst)
        verdicts = {}
        for axiom, check in (
            ("substitutability", C.check_substitutability),
            ("law_of_aggregate_demand", C.check_law_of_aggregate_demand),
            ("irc", C.check_irc),
        ):
            res = check(choose, universe, bound=args.bound)
            ok &= res.holds
            verdicts[axiom] = {
                "holds": res.holds,
                "counterexample": None if res.counterexample is None else res.counterexample.to_json(),
            }
        out[name] = verdicts
    out["shadow_caps"] = caps
    _emit(out)
    return 0 if ok else 1


def cmd_gen(args) -> int:
    _emit(instance_to_dict(generate_instance(_config(args))))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="capmatch", description="Matching with regional caps: DA, JRMP, FDA.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("run", help="run a mechanism and print the matching")
    s.add_argument("--mech", choices=sorted(MECHANISMS), required=True)
    s.add_argument("--instance", required=True)
    s.add_argument("--caps", help="JSON map hospital -> capacity (DA only; default physical)")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("verify", help="check properties of a matching")
    s.add_argument("--instance", required=True)
    s.add_argument("--matching", required=True)
    s.add_argument("--check", action="append", choices=CHECKS)
    s.add_argument("--caps", help="capacities for the stability check (default physical)")
    s.add_argument("--max-doctors", type=int, default=DEFAULT_MAX_DOCTORS)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("equiv", help="FDA vs DA under adapted capacities")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--instance")
    g.add_argument("--random", type=int, metavar="N")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--config")
    s.add_argument("--no-efficiency", action="store_true")
    s.add_argument("--csv", help="also write a CSV summary here")
    s.add_argument("--replay", help="write the failing instance here")
    s.set_defaults(func=cmd_equiv)

    s = sub.add_parser("fuzz", help="search for profitable doctor misreports")
    s.add_argument("--mech", choices=sorted(MECHANISMS), required=True)
    s.add_argument("--trials", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--config")
    s.set_defaults(func=cmd_fuzz)

    s = sub.add_parser("axioms", help="choice-function axioms for both markets")
    s.add_argument("--instance", required=True)
    s.add_argument("--bound", type=int, default=C.DEFAULT_AXIOM_BOUND)
    s.set_defaults(func=cmd_axioms)

    s = sub.add_parser("gen", help="generate a random instance")
    s.add_argument("--config")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_gen)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InstanceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BoundExceeded as exc:
        print(f"bound exceeded: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
