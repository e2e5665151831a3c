from dataclasses import replace
from pathlib import Path

import random

import pytest

from capmatch.contracts import acceptable_contracts
from capmatch.core import Matching, parse_instance
from capmatch.harness import GeneratorConfig, generate_instance

FIXTURES = Path(__file__).parent / "fixtures"

_criteria = []


def load(name):
    return parse_instance((FIXTURES / name).read_text())


def with_order(inst, order):
    (region,) = inst.regions
    return replace(inst, regions=(replace(region, order=tuple(order)),))


def with_targets(inst, targets):
    (region,) = inst.regions
    return replace(inst, regions=(replace(region, targets=dict(targets)),))


def matching(inst, **rosters):
    return Matching.from_rosters(inst, rosters)


# markets dense enough that regional caps and targets bind
DENSE = GeneratorConfig(doctors=(4, 6), hospitals=(2, 4), regions=(1, 2), doctor_list_length=(2, 4), regional_cap=(1, 6))


def dense_market(seed, size=12):
    """A seeded dense instance and at most ``size`` of its acceptable contracts."""
    inst = generate_instance(replace(DENSE, seed=seed))
    universe = acceptable_contracts(inst)
    if len(universe) > size:
        universe = random.Random(seed).sample(universe, size)
    return inst, universe


@pytest.fixture
def ex1():
    """Example market: one region (cap 4), hospitals h1-h3 of capacity 2, targets (1,1,2)."""
    return load("ex1.json")


@pytest.fixture
def ex1_b(ex1):
    return with_order(ex1, ["h2", "h1", "h3"])


@pytest.fixture
def mu(ex1):
    return matching(ex1, h1=["d1"], h2=["d2"], h3=["d5"])


@pytest.fixture
def mu_prime(ex1):
    return matching(ex1, h1=["d1"], h2=["d2", "d3"], h3=["d5"])


@pytest.fixture
def mu_dprime(ex1):
    return matching(ex1, h1=["d1", "d2"], h2=["d3"], h3=["d5"])


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call":
        return
    number, title = marker.args
    callspec = getattr(item, "callspec", None)
    if callspec is not None:
        title = f"{title} [{callspec.id}]"
    outcome = "PASS" if call.excinfo is None else "FAIL"
    _criteria.append((number, title, outcome, call.duration))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, outcome, duration in sorted(_criteria):
        terminalreporter.write_line(f"[{outcome}] AC{number:>2} {title} ({duration:.2f}s)")
