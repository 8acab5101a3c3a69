"""Exact verification of finite conditional-belief structures.

Everything evaluates in exact rational arithmetic: the partial
combination-function table a structure induces, its order and
monotonicity laws, multiplicative-rescaling feasibility with replayable
certificates, the comparative-order axioms, and a randomized search for
further structures with the same defects.
"""

from .domain import (BeliefStructure, DomainError, EmptyConditioning,
                     StructureFormatError, HALPERN_DELTA, FINE13_DELTA,
                     build_halpern, build_fine13, select_delta,
                     validate_delta, offsetting_pair, parse_structure,
                     serialize_structure, structure_digest, parse_rational,
                     format_rational)
from .values import ValueIndex, build_value_index
from .pairs import (AssociativityWitness, Chain, ConflictError, PairTable,
                    build_pair_table, check_boundary_laws,
                    find_associativity_witnesses, find_witnesses_seeded,
                    search_witnesses, replay_witness, verify_complement,
                    verify_additivity)
from .monotone import check_monotone, check_role_swapped
from .triples import (check_constrained_triples, enumerate_constrained,
                      is_constrained_triple)
from .additive import (check_sum_equation, check_product_law,
                       enumerate_r_constrained, random_probability_check)
from .rescaling import (LogLinearSystem, Verdict, build_system, solve,
                        replay_certificate, verify_assignment,
                        rescale_structure)
from .ordering import (FilterFamily, InducedOrder, ClassMismatchError,
                       induced_order, check_qcc1_qcc2, check_qcc7,
                       agreeing_obstruction, restricted_fine_check,
                       restricted_obstruction, fine_clause_survey)
from .pipeline import (PipelineReport, run_pipeline, fine_report,
                       appendix_report)
from .search import SearchConfig, Finding, generate_structure, search, shrink

__version__ = "0.1.0"

__all__ = [
    "AssociativityWitness", "BeliefStructure", "Chain",
    "ClassMismatchError", "ConflictError", "DomainError",
    "EmptyConditioning", "FilterFamily", "Finding", "FINE13_DELTA",
    "HALPERN_DELTA", "InducedOrder", "LogLinearSystem", "PairTable",
    "PipelineReport", "SearchConfig", "StructureFormatError", "ValueIndex",
    "Verdict", "agreeing_obstruction", "appendix_report",
    "build_fine13", "build_halpern", "build_pair_table", "build_system",
    "build_value_index", "check_boundary_laws", "check_constrained_triples",
    "check_monotone", "check_product_law", "check_qcc1_qcc2", "check_qcc7",
    "check_role_swapped", "check_sum_equation", "enumerate_constrained",
    "enumerate_r_constrained", "find_associativity_witnesses",
    "find_witnesses_seeded", "fine_clause_survey", "fine_report",
    "format_rational", "generate_structure", "induced_order",
    "is_constrained_triple", "offsetting_pair", "parse_rational",
    "parse_structure", "random_probability_check", "replay_certificate",
    "replay_witness", "rescale_structure", "restricted_fine_check",
    "restricted_obstruction", "run_pipeline", "search", "search_witnesses",
    "select_delta", "serialize_structure", "shrink", "solve",
    "structure_digest", "validate_delta", "verify_additivity",
    "verify_assignment", "verify_complement",
]
