"""Quantum causal models built from SIC measurements.

Exact simulation of quantum functional models, the Quantum Markov Condition,
and closed-form intervention / un-measurement rules checked against circuit
surgery.
"""

__version__ = "0.1.0"

from .calculus import (  # noqa: E402
    compatible_qdags,
    intervene_formula,
    markov_check,
    unmeasure_formula,
)
from .circuit import (  # noqa: E402
    TEMPLATES,
    FunctionalModel,
    apply_intervention_surgery,
    apply_unmeasurement_surgery,
    derive_dag,
    random_model,
    simulate,
    time_reverse,
)
from .dist import JointDistribution, condition, marginalize, max_ci_violation, tv_distance  # noqa: E402
from .estimators import QDAGExplainer, QuantumCausalModel  # noqa: E402
from .graph import CausalGraph, causal_invert, find_slice, is_qdag, q_separated  # noqa: E402
from .sic import Fiducial, SicPovm, known_sic, search_fiducial, validate_sic, wh_povm_from_fiducial  # noqa: E402

__all__ = [
    "TEMPLATES",
    "CausalGraph",
    "Fiducial",
    "FunctionalModel",
    "JointDistribution",
    "QDAGExplainer",
    "QuantumCausalModel",
    "SicPovm",
    "apply_intervention_surgery",
    "apply_unmeasurement_surgery",
    "causal_invert",
    "compatible_qdags",
    "condition",
    "derive_dag",
    "find_slice",
    "intervene_formula",
    "is_qdag",
    "known_sic",
    "marginalize",
    "markov_check",
    "max_ci_violation",
    "q_separated",
    "random_model",
    "search_fiducial",
    "simulate",
    "time_reverse",
    "tv_distance",
    "unmeasure_formula",
    "validate_sic",
    "wh_povm_from_fiducial",
]
