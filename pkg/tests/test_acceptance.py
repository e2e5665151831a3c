"""Acceptance criteria, one test each, with their time limits.

A pass/fail line per criterion is printed at the end of the run.
"""
import json
import time
from dataclasses import replace

import pytest

from capmatch.cli import main
from capmatch.contracts import (
    Original,
    Shadow,
    argmax_choice_table,
    check_irc,
    check_law_of_aggregate_demand,
    check_substitutability,
    chooser,
    contracts_of,
    hospital_side_choice,
    is_stable_allocation,
    to_matching,
)
from capmatch.core import distribution_of, matching_from_dict
from capmatch.harness import MECHANISMS, GeneratorConfig, fuzz_strategyproofness, generate_instance
from capmatch.mechanisms import adapted_capacities, run_da, run_fda, run_jrmp
from capmatch.verify import (
    BlockingPair,
    doctors_weakly_improve,
    is_constrained_efficient,
    is_doctor_optimal_stable,
    is_weakly_stable,
    stable_matchings,
    weak_stability_violations,
)

from conftest import FIXTURES, dense_market, load, with_order

EX1 = str(FIXTURES / "ex1.json")
SWEEP = GeneratorConfig()  # at most 6 doctors, 5 hospitals, 3 regions
N_SWEEP = 1000


def sweep_instances(n=N_SWEEP):
    return [generate_instance(replace(SWEEP, seed=i)) for i in range(n)]


def cli_matching(capsys, inst, *argv):
    assert main(list(argv)) == 0
    return matching_from_dict(json.loads(capsys.readouterr().out), inst)


class Timer:
    def __init__(self, limit):
        self.limit = limit

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
        if exc[0] is None:
            assert self.elapsed < self.limit, f"took {self.elapsed:.1f}s, limit {self.limit}s"


@pytest.mark.criterion(1, "golden JRMP outcome")
def test_ac1_jrmp(capsys, ex1, mu):
    with Timer(1):
        assert cli_matching(capsys, ex1, "run", "--mech", "jrmp", "--instance", EX1) == mu


@pytest.mark.criterion(2, "golden FDA outcome, both orders")
def test_ac2_fda(capsys, tmp_path, ex1, mu_dprime, mu_prime):
    with Timer(1):
        assert cli_matching(capsys, ex1, "run", "--mech", "fda", "--instance", EX1) == mu_dprime
        doc = json.loads((FIXTURES / "ex1.json").read_text())
        doc["regions"][0]["order"] = ["h2", "h1", "h3"]
        path = tmp_path / "ex1_b.json"
        path.write_text(json.dumps(doc))
        assert cli_matching(capsys, ex1, "run", "--mech", "fda", "--instance", str(path)) == mu_prime
        assert run_fda(with_order(ex1, ["h2", "h1", "h3"])) == mu_prime


@pytest.mark.criterion(3, "golden adapted-capacity DA outcome")
def test_ac3_da(capsys, tmp_path, ex1, mu_prime):
    with Timer(1):
        caps = tmp_path / "caps.json"
        caps.write_text(json.dumps({"h1": 1, "h2": 2, "h3": 1}))
        assert cli_matching(capsys, ex1, "run", "--mech", "da", "--instance", EX1, "--caps", str(caps)) == mu_prime


@pytest.mark.criterion(4, "FDA equals DA under adapted capacities, 1000 instances")
def test_ac4_equivalence():
    with Timer(60):
        failures = []
        for i, inst in enumerate(sweep_instances()):
            fda = run_fda(inst)
            if contracts_of(fda) != contracts_of(run_da(inst, adapted_capacities(fda, inst))):
                failures.append(i)
        assert failures == []


@pytest.mark.criterion(5, "FDA constrained efficient; doctors weakly gain over weakly stable JRMP")
def test_ac5_efficiency_and_welfare():
    with Timer(300):
        inefficient, worse = [], []
        for i, inst in enumerate(sweep_instances()):
            fda = run_fda(inst)
            da = run_da(inst, adapted_capacities(fda, inst))
            if not is_constrained_efficient(fda, inst)[0] or not is_constrained_efficient(da, inst)[0]:
                inefficient.append(i)
            jrmp = run_jrmp(inst)
            if is_weakly_stable(jrmp, inst) and not doctors_weakly_improve(da, jrmp, inst):
                worse.append(i)
        assert inefficient == [] and worse == []


@pytest.mark.criterion(6, "FDA weakly stable on 1000 instances; JRMP example is not")
def test_ac6_weak_stability(ex1, mu):
    with Timer(300):
        assert [i for i, inst in enumerate(sweep_instances()) if not is_weakly_stable(run_fda(inst), inst)] == []
        assert not is_weakly_stable(mu, ex1)
        assert BlockingPair("d3", "h1", "vacancy") in weak_stability_violations(mu, ex1)


def only_with_company(X):
    return frozenset(X) if len(X) >= 2 else frozenset()


def only_alone(X):
    return frozenset(X) if len(X) <= 1 else frozenset()


def parity(X):
    return frozenset({min(X)}) if len(X) % 2 else frozenset()


def markets(inst):
    return [Original(), Shadow(adapted_capacities(run_fda(inst), inst))]


@pytest.mark.criterion(7, "choice axioms hold for both markets; broken choices caught")
def test_ac7_axioms():
    checks = (check_substitutability, check_law_of_aggregate_demand, check_irc)
    with Timer(300):
        failures = []
        for seed in range(100):
            inst, universe = dense_market(seed, size=12)
            assert len(universe) <= 12
            for market in markets(inst):
                choose = chooser(market, inst)
                for check in checks:
                    res = check(choose, universe)
                    if not res.holds:
                        failures.append((seed, market, res.counterexample))
        assert failures == []

        _, universe = dense_market(0, size=12)
        for broken, check in ((only_with_company, check_substitutability),
                              (only_alone, check_law_of_aggregate_demand),
                              (parity, check_irc)):
            res = check(broken, universe)
            assert not res.holds and res.counterexample is not None


@pytest.mark.criterion(8, "score argmax reproduces both hospital-side choices")
def test_ac8_rationalization():
    with Timer(300):
        mismatches = []
        for seed in range(50):
            inst, universe = dense_market(seed, size=12)
            for market in markets(inst):
                # raises if any subset has more than one maximizer
                table = argmax_choice_table(market, universe, inst)
                assert len(table) == 2 ** len(universe)
                for X, chosen in table.items():
                    if chosen != hospital_side_choice(market, X, inst):
                        mismatches.append((seed, market, sorted(X)))
        assert mismatches == []


@pytest.mark.criterion(9, "cross-market stability and equal distributions, 500 instances")
def test_ac9_cross_market():
    with Timer(300):
        failures = []
        for i, inst in enumerate(sweep_instances(500)):
            fda = run_fda(inst)
            caps = adapted_capacities(fda, inst)
            xf, xd = contracts_of(fda), contracts_of(run_da(inst, caps))
            ok = (
                is_stable_allocation(xf, inst, Shadow(caps))
                and is_stable_allocation(xd, inst, Original())
                and distribution_of(to_matching(xf, inst), inst) == distribution_of(to_matching(xd, inst), inst)
            )
            if not ok:
                failures.append(i)
        assert failures == []


@pytest.mark.criterion(10, "no profitable misreports in 10000 trials per mechanism")
@pytest.mark.parametrize("mech", sorted(MECHANISMS))
def test_ac10_strategyproofness(mech):
    with Timer(120):
        assert fuzz_strategyproofness(mech, SWEEP, 10_000) == []


@pytest.mark.criterion(11, "DA doctor-optimal; stable sets share one distribution")
def test_ac11_da_optimality():
    with Timer(300):
        failures = []
        for i, inst in enumerate(sweep_instances(200)):
            for caps in (inst.physical_capacities(), inst.target_capacities()):
                m = run_da(inst, caps)
                dist = distribution_of(m, inst)
                if not is_doctor_optimal_stable(m, inst, caps):
                    failures.append((i, "optimality"))
                if any(distribution_of(o, inst) != dist for o in stable_matchings(inst, caps)):
                    failures.append((i, "rural hospital"))
        assert failures == []
