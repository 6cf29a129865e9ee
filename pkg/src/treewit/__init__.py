"""Minimal witnessing subsystems for DTMCs and MDPs along directed tree partitions."""

from .errors import InputError, RefusalError
from .mdp import (
    Mdp,
    ValueAssumption,
    apply_assumption,
    assumed_values,
    induced_subsystem,
    reach_values,
    reachable_from,
    subsystem_value,
    validate_model,
)
from .partition import (
    DirectedTreePartition,
    block_interfaces,
    brute_force_min_width,
    heuristic_partition,
    quotient,
    validate_partition,
)
from .witness import (
    SearchConfig,
    SearchStats,
    Witness,
    brute_force_minimal_witness,
    minimal_witness,
)

__all__ = [
    "InputError",
    "RefusalError",
    "Mdp",
    "ValueAssumption",
    "apply_assumption",
    "assumed_values",
    "induced_subsystem",
    "reach_values",
    "reachable_from",
    "subsystem_value",
    "validate_model",
    "DirectedTreePartition",
    "block_interfaces",
    "brute_force_min_width",
    "heuristic_partition",
    "quotient",
    "validate_partition",
    "SearchConfig",
    "SearchStats",
    "Witness",
    "brute_force_minimal_witness",
    "minimal_witness",
]
