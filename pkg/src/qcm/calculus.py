"""Closed-form causal calculus on (distribution, graph) pairs.

* :func:`markov_check` tests the Quantum Markov Condition.
* :func:`intervene_formula` predicts post-intervention statistics.
* :func:`unmeasure_formula` predicts statistics when a SIC measurement is
  removed, via the Urgleichung.
* :func:`compatible_qdags` screens every QDAG over the variables.

Each rule is checked against circuit surgery in the test suite.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .dist import DEFAULT_EPS, JointDistribution, conditional_table, max_ci_violation
from .errors import InputError, NotQuantumError, ResourceError, UndefinedQueryError, UnsupportedShapeError
from .graph import CausalGraph, _slice_ok, all_dags, is_qdag, path_blocked, undirected_paths, valid_slices

MARKOV_MAX_NODES = 6
INFER_MAX_NODES = 5
ANCESTOR_MARGINAL = "ancestor_marginal"
AS_PRINTED = "as_printed"
VARIANTS = (ANCESTOR_MARGINAL, AS_PRINTED)


def _check_signature(p: JointDistribution, g: CausalGraph):
    if set(p.names) != set(g.names):
        raise InputError(f"distribution variables {sorted(p.names)} do not match graph nodes {sorted(g.names)}")
    for name, count in p.variables:
        d = g.dim(name)
        if count != d * d:
            raise InputError(f"{name!r} has {count} outcomes but graph dim {d} implies {d * d}")


# --- Quantum Markov Condition -------------------------------------------------


@dataclass(frozen=True)
class TripleCheck:
    u: tuple
    v: tuple
    w: tuple
    separated: bool
    rules: tuple = ()  # one "path: rule@node" entry per blocked path when separated
    residual: float | None = None


@dataclass(frozen=True)
class MarkovReport:
    graph: CausalGraph
    triples: tuple
    tolerance: float

    @property
    def worst_residual(self) -> float:
        return max((t.residual for t in self.triples if t.separated), default=0.0)

    @property
    def passed(self) -> bool:
        return self.worst_residual <= self.tolerance

    @property
    def failures(self) -> list:
        return [t for t in self.triples if t.separated and t.residual > self.tolerance]

    def to_dict(self) -> dict:
        return {
            "kind": "markov_report",
            "graph": self.graph.to_dict(),
            "tolerance": self.tolerance,
            "worst_residual": self.worst_residual,
            "pass": self.passed,
            "failures": [_triple_dict(t) for t in self.failures],
            "triples": [_triple_dict(t) for t in self.triples],
        }


def _triple_dict(t: TripleCheck) -> dict:
    return {
        "u": list(t.u),
        "v": list(t.v),
        "w": list(t.w),
        "q_separated": t.separated,
        "rules": list(t.rules),
        "residual": t.residual,
    }


def enumerate_triples(names):
    """Disjoint ``(u, v, w)`` with u, v nonempty; each unordered {u, v} appears once."""
    names = list(names)
    for labels in itertools.product(range(4), repeat=len(names)):
        u = tuple(n for n, lab in zip(names, labels) if lab == 1)
        v = tuple(n for n, lab in zip(names, labels) if lab == 2)
        if not u or not v or names.index(u[0]) > names.index(v[0]):
            continue
        w = tuple(n for n, lab in zip(names, labels) if lab == 3)
        yield u, v, w


class _Separation:
    """Memoized pairwise path blocking for one graph."""

    def __init__(self, g: CausalGraph):
        self.g = g
        self._paths = {}
        self._pairs = {}

    def pair(self, a, b, w: frozenset):
        key = (a, b, w)
        if key not in self._pairs:
            if (a, b) not in self._paths:
                self._paths[(a, b)] = undirected_paths(self.g, a, b)
            rules = []
            ok = True
            for path in self._paths[(a, b)]:
                res = path_blocked(self.g, path, w)
                if not res.blocked:
                    ok = False
                    break
                rules.append(f"{path}: {res.rule}@{res.node}")
            self._pairs[key] = (ok, tuple(rules) if ok else ())
        return self._pairs[key]

    def triple(self, u, v, w):
        wf = frozenset(w)
        rules = []
        for a in u:
            for b in v:
                ok, r = self.pair(a, b, wf)
                if not ok:
                    return False, ()
                rules.extend(r)
        return True, tuple(rules)


def markov_check(p: JointDistribution, g: CausalGraph, tol: float = 1e-9, eps: float = DEFAULT_EPS) -> MarkovReport:
    """Check every q-separation statement of ``g`` against ``p``.

    All disjoint triples over the nodes are enumerated; residuals are computed
    only for the q-separated ones.
    """
    _check_signature(p, g)
    if len(g.nodes) > MARKOV_MAX_NODES:
        raise ResourceError(f"markov_check is capped at {MARKOV_MAX_NODES} nodes")
    sep = _Separation(g)
    checks = []
    for u, v, w in enumerate_triples(p.names):
        ok, rules = sep.triple(u, v, w)
        residual = max_ci_violation(p, u, v, w, eps).residual if ok else None
        checks.append(TripleCheck(u, v, w, ok, rules, residual))
    return MarkovReport(g, tuple(checks), tol)


# --- interventions ------------------------------------------------------------


@dataclass(frozen=True)
class InterventionResult:
    target: str
    value: int
    variant: str
    partition: dict
    distribution: JointDistribution
    degeneracy: tuple = ()
    warnings: tuple = ()

    def to_dict(self) -> dict:
        return {
            "kind": "intervention",
            "target": self.target,
            "value": self.value,
            "variant": self.variant,
            "partition": {k: sorted(v) for k, v in self.partition.items()},
            "degeneracy": list(self.degeneracy),
            "warnings": list(self.warnings),
        }


def _partition(g: CausalGraph, w: str, companions: frozenset) -> dict:
    desc, anc = set(g.descendants(w)), set(g.ancestors(w))
    s_desc = set().union(*(g.descendants(s) for s in companions)) if companions else set()
    s_anc = set().union(*(g.ancestors(s) for s in companions)) if companions else set()
    part = {
        "D": desc,
        "A": anc,
        "S_W": set(companions),
        "R_D": s_desc - desc,
        "R_A": s_anc - anc,
    }
    seen = {w}
    for k in ("D", "A", "S_W", "R_D", "R_A"):
        if seen & part[k]:
            raise UnsupportedShapeError(f"node(s) {sorted(seen & part[k])} fall in more than one block")
        seen |= part[k]
    missing = set(g.names) - seen
    if missing:
        raise UnsupportedShapeError(
            f"unsupported graph shape for intervention formula: {sorted(missing)} are unrelated to {w!r} and its slice"
        )
    return {k: frozenset(v) for k, v in part.items()}


def intervention_partition(g: CausalGraph, w: str, companions=None) -> dict:
    """Split the nodes other than ``w`` into D, A, S_W, R_D, R_A.

    By default the first slice of ``w`` (smallest, then lexicographic) whose
    blocks cover every node is used. ``companions`` pins the slice instead; it
    is still checked for validity.
    """
    if companions is not None:
        companions = frozenset(companions)
        if w in companions or not _slice_ok(g, w, companions):
            raise InputError(f"{sorted(companions)} is not a valid slice companion set for {w!r}")
        return _partition(g, w, companions)
    error = None
    for sl in valid_slices(g, w):
        try:
            return _partition(g, w, sl.companions)
        except UnsupportedShapeError as exc:
            error = error or exc
    if error is None:
        raise UnsupportedShapeError(f"{w!r} has no slice; graph is not a QDAG")
    raise error


def intervene_formula(
    p: JointDistribution,
    g: CausalGraph,
    w: str,
    value: int,
    variant: str = ANCESTOR_MARGINAL,
    companions=None,
    eps: float = DEFAULT_EPS,
) -> InterventionResult:
    """Post-intervention distribution ``P(X | do(W = value))`` from observational data.

    ``variant="as_printed"`` evaluates

        P(D, R_D | W=value, S_W) * P(S_W, A, R_A | W=value)

    while the default ``"ancestor_marginal"`` drops the conditioning on W in the
    second factor, ``P(S_W, A, R_A)``. The two agree when W has no ancestors.
    The result covers all variables of ``p`` with W pinned to ``value``.
    """
    if variant not in VARIANTS:
        raise InputError(f"variant must be one of {VARIANTS}, got {variant!r}")
    _check_signature(p, g)
    if not is_qdag(g):
        raise UnsupportedShapeError("intervention formula requires a QDAG")
    part = intervention_partition(g, w, companions)
    aw = p.axis(w)
    k = p.shape[aw]
    if not 1 <= value <= k:
        raise InputError(f"value {value} out of range 1..{k} for {w!r}")
    if p.table.take(value - 1, axis=aw).sum() <= eps:
        raise UndefinedQueryError(f"formula undefined at this value: P({w}={value}) = 0")

    t = p.table
    pick = [value - 1]
    downstream = p.axes(part["D"] | part["R_D"])
    slice_given = p.axes(part["S_W"] | {w})
    f1, bad1 = conditional_table(t, downstream, slice_given, eps)
    f1, bad1 = f1.take(pick, axis=aw), bad1.take(pick, axis=aw)
    upstream = p.axes(part["S_W"] | part["A"] | part["R_A"])
    if variant == AS_PRINTED:
        f2, _ = conditional_table(t, upstream, (aw,), eps)
        f2 = f2.take(pick, axis=aw)
    else:
        f2, _ = conditional_table(t, upstream, (), eps)
    prod = f1 * f2

    out = np.zeros(p.shape)
    index = [slice(None)] * t.ndim
    index[aw] = slice(value - 1, value)
    out[tuple(index)] = np.broadcast_to(prod, out[tuple(index)].shape)

    flags = []
    n_bad = int(bad1.sum())
    if n_bad:
        live = np.broadcast_to(bad1, prod.shape) & (np.broadcast_to(f2, prod.shape) > 0)
        flags.append(
            f"first factor: {n_bad} zero-probability conditioning cell(s), "
            f"{int(np.any(live))} with nonzero companion weight"
        )
    warnings = []
    if variant == AS_PRINTED and part["A"]:
        warnings.append(
            f"as_printed conditions the ancestors of {w!r} on its observed value; "
            "this diverges from intervention surgery when W has ancestors"
        )
    dist = JointDistribution(p.variables, out)
    return InterventionResult(w, value, variant, part, dist, tuple(flags), tuple(warnings))


# --- un-measurements ----------------------------------------------------------


@dataclass(frozen=True)
class UnmeasurementResult:
    target: str
    hilbert_dim: int
    distribution: JointDistribution
    min_pre_clamp: float
    degeneracy: tuple = ()

    def to_dict(self) -> dict:
        return {
            "kind": "unmeasurement",
            "target": self.target,
            "hilbert_dim": self.hilbert_dim,
            "min_pre_clamp": self.min_pre_clamp,
            "degeneracy": list(self.degeneracy),
        }


def unmeasure_formula(
    p: JointDistribution,
    g: CausalGraph,
    z: str,
    dz: int | None = None,
    tol: float = 1e-9,
    eps: float = DEFAULT_EPS,
) -> UnmeasurementResult:
    """Statistics with measurement ``z`` removed, from the statistics with it present.

    Computes, cell by cell,

        sum_z P(D | A, R, z) [(1 + d) P(z | A, R) - 1/d] P(A, R)

    where D and A are the descendants and ancestors of ``z`` and R the rest.
    Values in ``[-tol, 0)`` are clamped to zero; anything more negative, or a
    total off by more than ``tol``, means no quantum model produced ``p``.
    """
    _check_signature(p, g)
    d = g.dim(z)
    if dz is not None and dz != d:
        raise InputError(f"dZ={dz} disagrees with graph dim {d} for {z!r}")
    az = p.axis(z)
    desc = g.descendants(z)
    others = [n for n in p.names if n != z and n not in desc]

    t = p.table
    p_ar, _ = conditional_table(t, p.axes(others), (), eps)
    p_z, bad_z = conditional_table(t, (az,), p.axes(others), eps)
    p_d, bad_d = conditional_table(t, p.axes(desc), p.axes(others) + (az,), eps)
    summand = p_d * ((1 + d) * p_z - 1.0 / d) * p_ar
    result = summand.sum(axis=az)

    lowest = float(result.min()) if result.size else 1.0
    total = float(result.sum())
    if lowest < -tol or abs(total - 1.0) > tol:
        raise NotQuantumError(
            f"input statistics not realizable by a quantum model (min {lowest!r}, total {total!r})"
        )
    result = np.where(result < 0, 0.0, result)
    flags = []
    if bad_z.any():
        flags.append(f"P(z|A,R): {int(bad_z.sum())} zero-probability conditioning cell(s)")
    if bad_d.any():
        flags.append(f"P(D|A,R,z): {int(bad_d.sum())} zero-probability conditioning cell(s)")
    rest = [v for v in p.variables if v[0] != z]
    return UnmeasurementResult(z, d, JointDistribution(rest, result), lowest, tuple(flags))


# --- structure screening ------------------------------------------------------


def graph_dims(p: JointDistribution) -> list:
    """(name, d) pairs implied by outcome counts ``d**2``."""
    nodes = []
    for name, count in p.variables:
        d = math.isqrt(count)
        if d * d != count or d < 2:
            raise InputError(f"{name!r} has {count} outcomes, not a square >= 4")
        nodes.append((name, d))
    return nodes


def compatible_qdags(p: JointDistribution, tol: float = 1e-9, max_nodes: int = INFER_MAX_NODES) -> list:
    """Every QDAG over ``p``'s variables that passes :func:`markov_check`.

    This screens on a necessary condition only; it does not certify that a
    functional model with that structure reproduces ``p``.
    """
    if max_nodes > INFER_MAX_NODES:
        raise ResourceError(f"max_nodes is capped at {INFER_MAX_NODES}")
    if len(p.names) > max_nodes:
        raise ResourceError(f"{len(p.names)} variables exceed max_nodes={max_nodes}")
    nodes = graph_dims(p)
    triples = list(enumerate_triples(p.names))
    residuals = {}
    keep = []
    for g in all_dags(nodes):
        if not is_qdag(g):
            continue
        sep = _Separation(g)
        ok = True
        for u, v, w in triples:
            if not sep.triple(u, v, w)[0]:
                continue
            key = (u, v, w)
            if key not in residuals:
                residuals[key] = max_ci_violation(p, u, v, w).residual
            if residuals[key] > tol:
                ok = False
                break
        if ok:
            keep.append(g)
    return sorted(keep, key=lambda g: (len(g.edges), sorted(g.edges)))
