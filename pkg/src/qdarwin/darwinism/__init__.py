"""Pointer-observable extraction, theorem certification, agreement and broadcast experiments."""
from .agreement import AgreementReport, outcome_agreement, pure_state_grid
from .bounds import average_bound, broadcast_epsilon, chain_bound, is_vacuous, optimal_k, theorem1_bound, theorem2_bound
from .broadcast import Corollary4Report, classical_broadcast_channel, classical_broadcast_protocol, corollary4_experiment
from .extraction import (
    ConditionalEnsemble,
    ExtractionResult,
    FragmentCmi,
    build_map_approximations,
    extract_pointer_povm,
    fragment_groups,
    joint_conditional_states,
)
from .report import CSV_FIELDS, to_csv, to_dict, to_json
from .verify import DarwinismReport, FragmentRecord, verify_theorem1, verify_theorem2

__all__ = [
    "AgreementReport", "outcome_agreement", "pure_state_grid",
    "average_bound", "broadcast_epsilon", "chain_bound", "is_vacuous", "optimal_k", "theorem1_bound", "theorem2_bound",
    "Corollary4Report", "classical_broadcast_channel", "classical_broadcast_protocol", "corollary4_experiment",
    "ConditionalEnsemble", "ExtractionResult", "FragmentCmi", "build_map_approximations", "extract_pointer_povm",
    "fragment_groups", "joint_conditional_states",
    "CSV_FIELDS", "to_csv", "to_dict", "to_json",
    "DarwinismReport", "FragmentRecord", "verify_theorem1", "verify_theorem2",
]
