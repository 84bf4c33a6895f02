"""Fock-space Schmidt decompositions and state-specific Bell tests for mode-entangled fields."""

from .errors import (
    ContractViolation,
    EmptySectorError,
    FockError,
    PartitionMismatchError,
    SeparableStateError,
    ZeroStateError,
)
from .fock import (
    FieldState,
    ModeId,
    ModePartition,
    Party,
    Statistics,
    TruncationPolicy,
    a_mode,
    apply_annihilation,
    apply_creation,
    b_mode,
    inner_product,
    partial_overlap,
    project_fixed_numbers,
    tensor_with_ancilla,
)
from .schmidt import SchmidtDecomposition, build_coefficient_matrix, reconstruct, schmidt_decompose, schmidt_rank
from .bell import (
    CHReport,
    EffectiveQubitPair,
    SettingAngles,
    ch_probabilities,
    closed_form_settings,
    compare_settings,
    effective_pair_from_schmidt,
    numeric_optimal_settings,
)
from .feasibility import corollary1_holds, sector_table, theorem1_holds, violation_from_projection
from .states import attach_coherent_ancillas, beamsplit_single_photon, bghz, bsv, photon_subtract, tmsv

__version__ = "0.1.0"

__all__ = [
    "a_mode",
    "apply_annihilation",
    "apply_creation",
    "attach_coherent_ancillas",
    "b_mode",
    "beamsplit_single_photon",
    "bghz",
    "bsv",
    "build_coefficient_matrix",
    "ch_probabilities",
    "CHReport",
    "closed_form_settings",
    "compare_settings",
    "ContractViolation",
    "corollary1_holds",
    "effective_pair_from_schmidt",
    "EffectiveQubitPair",
    "EmptySectorError",
    "FieldState",
    "FockError",
    "inner_product",
    "ModeId",
    "ModePartition",
    "numeric_optimal_settings",
    "partial_overlap",
    "PartitionMismatchError",
    "Party",
    "photon_subtract",
    "project_fixed_numbers",
    "reconstruct",
    "schmidt_decompose",
    "schmidt_rank",
    "SchmidtDecomposition",
    "sector_table",
    "SeparableStateError",
    "SettingAngles",
    "Statistics",
    "tensor_with_ancilla",
    "theorem1_holds",
    "tmsv",
    "TruncationPolicy",
    "violation_from_projection",
    "ZeroStateError",
]
