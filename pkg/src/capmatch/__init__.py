"""Two-sided matching under regional caps: DA, JRMP and FDA.

The headline check: FDA's outcome equals doctor-proposing DA run with each
hospital's capacity set to its FDA headcount.
"""
from .core import (
    BoundExceeded,
    Distribution,
    Instance,
    InstanceError,
    Matching,
    distribution_of,
    parse_instance,
    serialize_instance,
)
from .mechanisms import adapted_capacities, fda_da_equivalence, run_da, run_fda, run_jrmp

__all__ = [
    "BoundExceeded",
    "Distribution",
    "Instance",
    "InstanceError",
    "Matching",
    "adapted_capacities",
    "distribution_of",
    "fda_da_equivalence",
    "parse_instance",
    "run_da",
    "run_fda",
    "run_jrmp",
    "serialize_instance",
]
