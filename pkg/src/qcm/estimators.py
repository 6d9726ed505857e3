"""scikit-learn style wrappers around the causal calculus.

The "training data" of a quantum causal model is a joint distribution, so
``fit`` accepts a :class:`~qcm.dist.JointDistribution`, a
:class:`~qcm.circuit.FunctionalModel` (simulated exactly), or a
``(variables, table)`` pair.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .calculus import (
    ANCESTOR_MARGINAL,
    VARIANTS,
    compatible_qdags,
    intervene_formula,
    markov_check,
    unmeasure_formula,
)
from .circuit import FunctionalModel, derive_dag, simulate
from .dist import JointDistribution
from .errors import InputError
from .graph import CausalGraph, causal_invert


def check_distribution(X) -> JointDistribution:
    """Coerce supported inputs to a :class:`JointDistribution`."""
    if isinstance(X, JointDistribution):
        return X
    if isinstance(X, FunctionalModel):
        return simulate(X)
    if isinstance(X, tuple) and len(X) == 2:
        variables, table = X
        return JointDistribution(variables, np.asarray(table, dtype=float))
    raise InputError(f"expected a JointDistribution, FunctionalModel or (variables, table), got {type(X).__name__}")


def check_graph(graph, p: JointDistribution) -> CausalGraph:
    if not isinstance(graph, CausalGraph):
        raise InputError(f"graph must be a CausalGraph, got {type(graph).__name__}")
    if set(graph.names) != set(p.names):
        raise InputError(f"graph nodes {sorted(graph.names)} != variables {sorted(p.names)}")
    return graph


class QuantumCausalModel(BaseEstimator):
    """A (distribution, QDAG) pair checked against the Quantum Markov Condition.

    Parameters
    ----------
    graph : CausalGraph, default=None
        Causal structure. When None, ``fit`` must receive a FunctionalModel,
        whose derived DAG is used.
    tol : float, default=1e-9
        Tolerance for the Markov check and un-measurement clamping.
    variant : {"ancestor_marginal", "as_printed"}, default="ancestor_marginal"
        Intervention formula variant.

    Attributes
    ----------
    distribution_ : JointDistribution
    graph_ : CausalGraph
    markov_report_ : MarkovReport
    """

    def __init__(self, graph=None, tol=1e-9, variant=ANCESTOR_MARGINAL):
        self.graph = graph
        self.tol = tol
        self.variant = variant

    def fit(self, X, y=None):
        if self.variant not in VARIANTS:
            raise InputError(f"variant must be one of {VARIANTS}")
        p = check_distribution(X)
        if self.graph is None:
            if not isinstance(X, FunctionalModel):
                raise InputError("graph=None requires fitting on a FunctionalModel")
            graph = derive_dag(X)
        else:
            graph = check_graph(self.graph, p)
        self.distribution_ = p
        self.graph_ = graph
        self.markov_report_ = markov_check(p, graph, self.tol)
        return self

    @property
    def is_markov_(self) -> bool:
        check_is_fitted(self, "markov_report_")
        return self.markov_report_.passed

    def score(self, X=None, y=None) -> float:
        """Negated worst independence residual (higher is better)."""
        check_is_fitted(self, "markov_report_")
        if X is None:
            return -self.markov_report_.worst_residual
        return -markov_check(check_distribution(X), self.graph_, self.tol).worst_residual

    def intervene(self, node, value, companions=None):
        check_is_fitted(self, "markov_report_")
        return intervene_formula(self.distribution_, self.graph_, node, value, self.variant, companions)

    def unmeasure(self, node):
        check_is_fitted(self, "markov_report_")
        return unmeasure_formula(self.distribution_, self.graph_, node, tol=self.tol)

    def invert(self) -> "QuantumCausalModel":
        """Refit on the causally inverted graph."""
        check_is_fitted(self, "markov_report_")
        return QuantumCausalModel(causal_invert(self.graph_), self.tol, self.variant).fit(self.distribution_)


class QDAGExplainer(BaseEstimator):
    """Screens every QDAG over the variables against the Quantum Markov Condition.

    Attributes
    ----------
    graphs_ : list of CausalGraph
        QDAGs whose q-separation statements all hold within ``tol``.
    """

    def __init__(self, tol=1e-9, max_nodes=5):
        self.tol = tol
        self.max_nodes = max_nodes

    def fit(self, X, y=None):
        self.distribution_ = check_distribution(X)
        self.graphs_ = compatible_qdags(self.distribution_, self.tol, self.max_nodes)
        return self

    def predict(self, graphs):
        """Boolean per candidate graph: is it among the compatible QDAGs?"""
        check_is_fitted(self, "graphs_")
        return np.array([any(g.same_structure(h) for h in self.graphs_) for g in graphs])
