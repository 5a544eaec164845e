"""Steiner multicycle approximation toolkit.

Cover a complete weighted (di)graph with vertex-disjoint cycles so that
every terminal group stays inside one cycle, at minimum total weight.
Three approximation pipelines (metric, {1,2}-weight, asymmetric) plus exact
desk-scale oracles and a benchmarking CLI.
"""

from .core import (CycleCover, FeasibilityReport, Instance, WeightClass,
                   cover_cost, generate_instance, make_cover, parse_instance,
                   parse_solution, format_instance, format_solution,
                   validate_instance, validate_solution)
from .errors import (BudgetExceededError, FormatError, InvalidCoverError,
                     SmcError, ValidationError)

__all__ = [
    "CycleCover", "FeasibilityReport", "Instance", "WeightClass",
    "cover_cost", "generate_instance", "make_cover", "parse_instance",
    "parse_solution", "format_instance", "format_solution",
    "validate_instance", "validate_solution",
    "BudgetExceededError", "FormatError", "InvalidCoverError", "SmcError",
    "ValidationError",
]
