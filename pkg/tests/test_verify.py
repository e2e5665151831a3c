import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from capmatch.core import BoundExceeded, Matching, distribution_of, instance_from_dict
from capmatch.harness import GeneratorConfig, generate_instance
from capmatch.mechanisms import run_da, run_fda, run_jrmp
from capmatch.verify import (
    BlockingPair,
    blocking_pairs,
    enumerate_feasible_matchings,
    is_constrained_efficient,
    is_doctor_optimal_stable,
    is_feasible,
    is_individually_rational,
    is_stable,
    is_weakly_stable,
    pareto_dominates,
    stable_matchings,
    weak_stability_violations,
    welfare_comparison,
)

from conftest import matching

CAPS_121 = {"h1": 1, "h2": 2, "h3": 1}
CAPS_112 = {"h1": 1, "h2": 1, "h3": 2}
seeds = st.integers(0, 2**32)


def one_doctor(cap_r=1, listed=True):
    return instance_from_dict({
        "doctors": ["d1"],
        "doctor_prefs": {"d1": ["h1"] if listed else []},
        "hospitals": {"h1": {"region": "r", "capacity": 1, "prefs": ["d1"]}},
        "regions": [{"id": "r", "cap": cap_r, "order": ["h1"], "targets": {"h1": 0}}],
    })


def plain_market():
    """Two regions whose caps never bind."""
    return instance_from_dict({
        "doctors": ["a", "b", "c"],
        "doctor_prefs": {"a": ["x", "y"], "b": ["x", "y"], "c": ["y"]},
        "hospitals": {
            "x": {"region": "rx", "capacity": 1, "prefs": ["b", "a"]},
            "y": {"region": "ry", "capacity": 2, "prefs": ["a", "b", "c"]},
        },
        "regions": [
            {"id": "rx", "cap": 1, "order": ["x"], "targets": {"x": 1}},
            {"id": "ry", "cap": 2, "order": ["y"], "targets": {"y": 2}},
        ],
    })


# --- feasibility and individual rationality ---------------------------------


def test_feasibility(ex1, mu_dprime):
    assert is_feasible(mu_dprime, ex1)
    assert distribution_of(mu_dprime, ex1).total == 4
    assert not is_feasible(matching(ex1, h1=["d1", "d2", "d3", "d4", "d5"]), ex1)
    assert is_feasible(Matching.empty(ex1), ex1)


def test_regional_cap_alone_can_break_feasibility(ex1):
    five = matching(ex1, h1=["d1", "d2"], h2=["d3", "d4"], h3=["d5"])
    assert not is_feasible(five, ex1)


def test_individual_rationality(ex1, mu_prime):
    assert is_individually_rational(mu_prime, ex1)
    assert not is_individually_rational(matching(ex1, h3=["d4"]), ex1)
    assert is_individually_rational(Matching.empty(ex1), ex1)


# --- blocking pairs and stability -------------------------------------------


def test_blocking_pairs_of_mu(ex1, mu):
    assert BlockingPair("d3", "h1", "vacancy") in blocking_pairs(mu, ex1)


def test_blocking_pairs_of_mu_dprime(ex1, mu_dprime):
    assert BlockingPair("d4", "h2", "vacancy") in blocking_pairs(mu_dprime, ex1)


def test_stable_matching_of_a_plain_market_has_no_blocks():
    inst = plain_market()
    m = run_da(inst, inst.physical_capacities())
    assert blocking_pairs(m, inst) == []


def test_replacement_blocks_are_reported():
    inst = plain_market()
    # x holds a although it prefers b, who would rather be at x than at y
    m = matching(inst, x=["a"], y=["b", "c"])
    assert blocking_pairs(m, inst) == [BlockingPair("b", "x", "replacement")]


def test_stability_under_given_caps(ex1, mu, mu_prime):
    assert is_stable(mu_prime, ex1, CAPS_121)
    assert is_stable(mu, ex1, CAPS_112)
    assert not is_stable(mu, ex1, ex1.physical_capacities())


def test_weak_stability(ex1, mu, mu_dprime):
    assert is_weakly_stable(mu_dprime, ex1)
    assert not is_weakly_stable(mu, ex1)
    assert BlockingPair("d3", "h1", "vacancy") in weak_stability_violations(mu, ex1)


def test_weak_stability_trivial_when_nothing_is_acceptable():
    inst = one_doctor(listed=False)
    assert is_weakly_stable(Matching.empty(inst), inst)


def test_excuse_needs_strictly_better_incumbents(ex1):
    # region full, but h2 holds d4 whom it likes less than d3
    m = matching(ex1, h1=["d1", "d2"], h2=["d4"], h3=["d5"])
    assert BlockingPair("d3", "h2", "vacancy") in weak_stability_violations(m, ex1)


# --- enumeration ------------------------------------------------------------


def test_enumeration_contains_the_examples(ex1, mu, mu_prime, mu_dprime):
    found = list(enumerate_feasible_matchings(ex1))
    assert {mu, mu_prime, mu_dprime} <= set(found)
    assert len(found) == len(set(found))
    assert all(is_feasible(m, ex1) for m in found)


def test_enumeration_one_doctor():
    inst = one_doctor()
    assert set(enumerate_feasible_matchings(inst)) == {Matching({"d1": "h1"}), Matching({"d1": None})}


def test_enumeration_zero_regional_cap():
    inst = one_doctor(cap_r=0)
    assert list(enumerate_feasible_matchings(inst)) == [Matching({"d1": None})]


def test_enumeration_bound_is_enforced():
    inst = generate_instance(GeneratorConfig(doctors=(9, 9), seed=1))
    with pytest.raises(BoundExceeded):
        list(enumerate_feasible_matchings(inst))
    with pytest.raises(BoundExceeded):
        is_constrained_efficient(Matching.empty(inst), inst)


def test_enumeration_matches_a_plain_product():
    # brute force: every doctor independently picks None or a listed hospital
    import itertools

    for seed in range(30):
        inst = generate_instance(GeneratorConfig(doctors=(0, 4), seed=seed))
        opts = [[None, *inst.doctor_prefs[d]] for d in inst.doctors]
        expect = set()
        for combo in itertools.product(*opts):
            m = Matching(dict(zip(inst.doctors, combo)))
            if is_feasible(m, inst):
                expect.add(m)
        assert set(enumerate_feasible_matchings(inst)) == expect


# --- efficiency -------------------------------------------------------------


def test_mu_is_pareto_dominated(ex1, mu, mu_prime):
    ok, witness = is_constrained_efficient(mu, ex1)
    assert not ok
    assert is_feasible(witness, ex1)
    assert pareto_dominates(witness, mu, ex1)
    # the dominating matching exhibited for the example is one such witness
    assert pareto_dominates(mu_prime, mu, ex1)


@pytest.mark.parametrize("name", ["mu_prime", "mu_dprime"])
def test_examples_are_efficient(ex1, name, request):
    assert is_constrained_efficient(request.getfixturevalue(name), ex1) == (True, None)


def _dominated_by_brute_force(m, inst):
    return any(pareto_dominates(o, m, inst) for o in enumerate_feasible_matchings(inst))


@pytest.mark.parametrize("seed", range(60))
def test_pruned_search_agrees_with_full_enumeration(seed):
    inst = generate_instance(GeneratorConfig(doctors=(0, 5), seed=seed))
    for m in (run_fda(inst), run_jrmp(inst), Matching.empty(inst)):
        ok, witness = is_constrained_efficient(m, inst)
        assert ok == (not _dominated_by_brute_force(m, inst))
        if witness is not None:
            assert is_feasible(witness, inst) and pareto_dominates(witness, m, inst)


def test_pareto_dominance_is_irreflexive(ex1, mu):
    assert not pareto_dominates(mu, mu, ex1)


# --- doctor optimality and the rural hospital property ------------------------


def test_da_is_doctor_optimal_on_the_example(ex1):
    assert is_doctor_optimal_stable(run_da(ex1, CAPS_121), ex1, CAPS_121)


def test_empty_is_not_doctor_optimal_when_someone_can_match():
    inst = one_doctor()
    assert not is_doctor_optimal_stable(Matching.empty(inst), inst, {"h1": 1})


def test_unique_stable_matching_is_doctor_optimal():
    inst = one_doctor()
    (only,) = stable_matchings(inst, {"h1": 1})
    assert only == Matching({"d1": "h1"})
    assert is_doctor_optimal_stable(only, inst, {"h1": 1})


@settings(max_examples=150, deadline=None)
@given(seeds, st.booleans())
def test_da_optimal_and_rural_hospital(seed, physical):
    inst = generate_instance(GeneratorConfig(seed=seed))
    caps = inst.physical_capacities() if physical else inst.target_capacities()
    m = run_da(inst, caps)
    assert is_doctor_optimal_stable(m, inst, caps)
    dist = distribution_of(m, inst)
    for other in stable_matchings(inst, caps):
        assert distribution_of(other, inst) == dist
        assert set(other.unmatched()) == set(m.unmatched())


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_welfare_comparison_is_antisymmetric(seed):
    inst = generate_instance(GeneratorConfig(seed=seed))
    a, b = run_fda(inst), run_jrmp(inst)
    assert welfare_comparison(a, b, inst) == [-x for x in welfare_comparison(b, a, inst)]
