"""Quantum functional models and their exact density-matrix simulation.

A model is a list of wires (all starting maximally mixed) and an ordered list
of gates. Pristine models hold only :class:`Unitary` and :class:`SicMeasure`
gates; :class:`DiscardInput` and :class:`PrepareProjector` are introduced by
intervention surgery.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np

from .dist import JointDistribution
from .errors import InputError, ResourceError, SimulationError, UnsupportedShapeError
from .graph import CausalGraph, is_qdag
from .sic import SicPovm, known_sic

MAX_OUTCOME_TUPLES = 10**6
UNITARY_TOL = 1e-10
TRACE_TOL = 1e-8


def haar_unitary(dim: int, seed: int) -> np.ndarray:
    """Haar-random unitary from a seeded Philox stream.

    QR of a complex Ginibre matrix with the phases of R's diagonal absorbed
    into Q, so the distribution is exactly Haar.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    return q * (diag / np.abs(diag))


@dataclass(frozen=True)
class Wire:
    id: str
    dim: int


@dataclass(frozen=True, eq=False)
class Unitary:
    """Unitary on an ordered subset of wires.

    Either ``matrix`` is given explicitly, or ``haar_seed`` names a seeded Haar
    sample. ``adjoint`` applies the conjugate transpose (set by time reversal).
    """

    wires: tuple
    matrix: np.ndarray | None = None
    haar_seed: int | None = None
    adjoint: bool = False

    def __post_init__(self):
        object.__setattr__(self, "wires", tuple(self.wires))
        if (self.matrix is None) == (self.haar_seed is None):
            raise InputError("a unitary needs exactly one of an explicit matrix or a haar seed")
        if self.matrix is not None:
            m = np.array(self.matrix, dtype=complex)
            m.setflags(write=False)
            object.__setattr__(self, "matrix", m)

    def operator(self, dims: dict) -> np.ndarray:
        side = int(np.prod([dims[w] for w in self.wires]))
        if self.matrix is not None:
            u = self.matrix
        else:
            u = haar_unitary(side, self.haar_seed)
        if u.shape != (side, side):
            raise InputError(f"unitary on {self.wires} must be {side}x{side}, got {u.shape}")
        return u.conj().T if self.adjoint else u

    def inverse(self) -> "Unitary":
        if self.matrix is not None:
            return Unitary(self.wires, self.matrix.conj().T)
        return Unitary(self.wires, haar_seed=self.haar_seed, adjoint=not self.adjoint)

    def _key(self):
        m = None if self.matrix is None else self.matrix.tobytes()
        return ("U", self.wires, m, self.haar_seed, self.adjoint)


@dataclass(frozen=True, eq=False)
class SicMeasure:
    node: str
    wire: str
    povm: SicPovm = field(repr=False)
    povm_ref: str = "sic2"

    def _key(self):
        return ("M", self.node, self.wire, self.povm_ref, self.povm.projectors.tobytes())


@dataclass(frozen=True, eq=False)
class DiscardInput:
    wire: str

    def _key(self):
        return ("D", self.wire)


@dataclass(frozen=True, eq=False)
class PrepareProjector:
    """Prepare ``Pi_outcome`` on ``wire``; the node's recorded value is pinned to ``outcome``."""

    wire: str
    node: str
    outcome: int
    povm: SicPovm = field(repr=False)
    povm_ref: str = "sic2"

    def _key(self):
        return ("P", self.wire, self.node, self.outcome, self.povm_ref, self.povm.projectors.tobytes())


Gate = Union[Unitary, SicMeasure, DiscardInput, PrepareProjector]

for _cls in (Unitary, SicMeasure, DiscardInput, PrepareProjector):
    _cls.__eq__ = lambda self, other: type(self) is type(other) and self._key() == other._key()
    _cls.__hash__ = lambda self: hash(self._key())


@dataclass(frozen=True)
class FunctionalModel:
    wires: tuple
    gates: tuple

    def __init__(self, wires, gates):
        wires = tuple(w if isinstance(w, Wire) else Wire(*w) for w in wires)
        object.__setattr__(self, "wires", wires)
        object.__setattr__(self, "gates", tuple(gates))
        self._validate()

    def _validate(self):
        ids = [w.id for w in self.wires]
        if len(set(ids)) != len(ids):
            raise InputError(f"duplicate wire ids {ids}")
        dims = self.dims
        for w in self.wires:
            if w.dim < 2:
                raise InputError(f"wire {w.id!r} has dim {w.dim} < 2")
        nodes = []
        discarded = set()
        for g in self.gates:
            touched = g.wires if isinstance(g, Unitary) else (g.wire,)
            for w in touched:
                if w not in dims:
                    raise InputError(f"gate {g!r} uses unknown wire {w!r}")
            if isinstance(g, Unitary):
                if len(set(g.wires)) != len(g.wires):
                    raise InputError(f"unitary repeats a wire: {g.wires}")
                u = g.operator(dims)
                if np.max(np.abs(u.conj().T @ u - np.eye(len(u)))) > UNITARY_TOL:
                    raise InputError(f"matrix on {g.wires} is not unitary")
            elif isinstance(g, (SicMeasure, PrepareProjector)):
                if g.povm.dim != dims[g.wire]:
                    raise InputError(f"node {g.node!r}: POVM dim {g.povm.dim} != wire dim {dims[g.wire]}")
                nodes.append(g.node)
                if isinstance(g, PrepareProjector) and not 1 <= g.outcome <= g.povm.n_outcomes:
                    raise InputError(f"prepared outcome {g.outcome} out of range")
            if isinstance(g, PrepareProjector):
                if g.wire not in discarded:
                    raise InputError(f"prepare on {g.wire!r} without a preceding discard")
                discarded.discard(g.wire)
            elif isinstance(g, DiscardInput):
                if g.wire in discarded:
                    raise InputError(f"wire {g.wire!r} discarded twice")
                discarded.add(g.wire)
            elif discarded & set(touched):
                raise InputError(f"gate {g!r} acts on a discarded wire")
        if len(set(nodes)) != len(nodes):
            raise InputError(f"duplicate node names {nodes}")

    @property
    def dims(self) -> dict:
        return {w.id: w.dim for w in self.wires}

    @property
    def node_order(self) -> tuple:
        return tuple(g.node for g in self.gates if isinstance(g, (SicMeasure, PrepareProjector)))

    @property
    def is_pristine(self) -> bool:
        return all(isinstance(g, (Unitary, SicMeasure)) for g in self.gates)

    def node_dim(self, node: str) -> int:
        for g in self.gates:
            if isinstance(g, (SicMeasure, PrepareProjector)) and g.node == node:
                return g.povm.dim
        raise InputError(f"unknown node {node!r}")

    def _measure_index(self, node: str) -> int:
        for i, g in enumerate(self.gates):
            if isinstance(g, SicMeasure) and g.node == node:
                return i
        raise InputError(f"{node!r} is not a measurement node of this model")


# --- simulation ---------------------------------------------------------------


def _apply_on_axes(t: np.ndarray, op: np.ndarray, axes: list, sub_dims: list) -> np.ndarray:
    """Contract ``op`` (acting on the subsystem at ``axes``) into tensor ``t``."""
    k = len(axes)
    op_t = op.reshape(sub_dims * 2)
    out = np.tensordot(op_t, t, axes=(list(range(k, 2 * k)), axes))
    return np.moveaxis(out, list(range(k)), axes)


def _conjugate(t, u, idx, sub_dims, n):
    t = _apply_on_axes(t, u, idx, sub_dims)
    return _apply_on_axes(t, u.conj(), [n + i for i in idx], sub_dims)


def simulate(m: FunctionalModel) -> JointDistribution:
    """Exact outcome distribution by enumerating every measurement branch.

    Each branch carries the full density tensor over all wires (row axes then
    column axes). A SIC measurement on wire k splits a branch by outcome with
    weight ``tr(rho (Pi_x/d on k))``; the rest of the system is updated to its
    conditional reduced state and wire k is re-prepared in ``Pi_x``.
    """
    order = m.node_order
    sizes = [m.node_dim(n) ** 2 for n in order]
    if int(np.prod(sizes, dtype=float)) > MAX_OUTCOME_TUPLES:
        raise ResourceError(f"{np.prod(sizes, dtype=float):.0f} outcome tuples exceed the cap of {MAX_OUTCOME_TUPLES}")
    ids = [w.id for w in m.wires]
    dims = [w.dim for w in m.wires]
    pos = {w: i for i, w in enumerate(ids)}
    n = len(ids)
    total = int(np.prod(dims))
    rho = (np.eye(total) / total).astype(complex).reshape(dims * 2)
    branches = [(rho, 1.0, ())]

    for g in m.gates:
        if isinstance(g, Unitary):
            u = g.operator(m.dims)
            idx = [pos[w] for w in g.wires]
            sub = [dims[i] for i in idx]
            branches = [(_conjugate(t, u, idx, sub, n), p, rec) for t, p, rec in branches]
        elif isinstance(g, SicMeasure):
            k = pos[g.wire]
            effects = g.povm.effects()
            new = []
            for t, p, rec in branches:
                r = np.moveaxis(t, [k, n + k], [-2, -1])
                reduced = np.einsum("...ij,xji->x...", r, effects)
                rest_side = total // dims[k]
                weights = np.trace(reduced.reshape(len(effects), rest_side, rest_side), axis1=1, axis2=2).real
                for x, wx in enumerate(weights):
                    if wx < -TRACE_TOL:
                        raise SimulationError(f"negative branch weight {wx!r} at node {g.node!r}")
                    if wx <= 1e-300:
                        continue
                    rest = reduced[x] / wx
                    state = np.multiply.outer(rest, g.povm.projectors[x])
                    new.append((np.moveaxis(state, [-2, -1], [k, n + k]), p * wx, rec + (x,)))
            branches = new
        elif isinstance(g, DiscardInput):
            k = pos[g.wire]
            d = dims[k]
            new = []
            for t, p, rec in branches:
                r = np.moveaxis(t, [k, n + k], [-2, -1])
                rest = np.trace(r, axis1=-2, axis2=-1)
                state = np.multiply.outer(rest, np.eye(d) / d)
                new.append((np.moveaxis(state, [-2, -1], [k, n + k]), p, rec))
            branches = new
        elif isinstance(g, PrepareProjector):
            k = pos[g.wire]
            proj = g.povm.projector(g.outcome)
            new = []
            for t, p, rec in branches:
                r = np.moveaxis(t, [k, n + k], [-2, -1])
                rest = np.trace(r, axis1=-2, axis2=-1)
                state = np.multiply.outer(rest, proj)
                new.append((np.moveaxis(state, [-2, -1], [k, n + k]), p, rec + (g.outcome - 1,)))
            branches = new
        else:
            raise InputError(f"unknown gate {g!r}")

    table = np.zeros(sizes)
    for _, p, rec in branches:
        table[rec] += p
    drift = abs(table.sum() - 1.0)
    if drift > TRACE_TOL:
        raise SimulationError(f"total probability drifted by {drift!r}")
    return JointDistribution(list(zip(order, sizes)), table)


# --- structure ----------------------------------------------------------------


def derive_dag(m: FunctionalModel) -> CausalGraph:
    """Causal graph read off the circuit's wiring.

    ``X -> Y`` iff a wire path runs from X's output to Y's input through
    unitaries only; every unitary links all of its inputs to all of its outputs.
    Intervened nodes (prepared by surgery) have no parents.
    """
    reach = {w.id: frozenset() for w in m.wires}
    edges = set()
    nodes = []
    for g in m.gates:
        if isinstance(g, Unitary):
            merged = frozenset().union(*(reach[w] for w in g.wires))
            for w in g.wires:
                reach[w] = merged
        elif isinstance(g, SicMeasure):
            edges |= {(p, g.node) for p in reach[g.wire]}
            reach[g.wire] = frozenset([g.node])
            nodes.append((g.node, g.povm.dim))
        elif isinstance(g, DiscardInput):
            reach[g.wire] = frozenset()
        elif isinstance(g, PrepareProjector):
            reach[g.wire] = frozenset([g.node])
            nodes.append((g.node, g.povm.dim))
    return CausalGraph(nodes, edges)


def apply_intervention_surgery(m: FunctionalModel, w: str, value: int) -> FunctionalModel:
    """Discard the input of measurement ``w`` and prepare ``Pi_value`` in its place."""
    i = m._measure_index(w)
    g = m.gates[i]
    if not 1 <= value <= g.povm.n_outcomes:
        raise InputError(f"value {value} out of range 1..{g.povm.n_outcomes} for {w!r}")
    surgery = [DiscardInput(g.wire), PrepareProjector(g.wire, w, value, g.povm, g.povm_ref)]
    return FunctionalModel(m.wires, [*m.gates[:i], *surgery, *m.gates[i + 1 :]])


def apply_unmeasurement_surgery(m: FunctionalModel, z: str) -> FunctionalModel:
    """Delete measurement ``z``; its wire passes through untouched."""
    i = m._measure_index(z)
    return FunctionalModel(m.wires, [*m.gates[:i], *m.gates[i + 1 :]])


def time_reverse(m: FunctionalModel) -> FunctionalModel:
    """Reverse gate order and replace each unitary by its adjoint."""
    if not m.is_pristine:
        raise InputError("time reversal undefined after surgery")
    gates = [g.inverse() if isinstance(g, Unitary) else g for g in reversed(m.gates)]
    return FunctionalModel(m.wires, gates)


# --- generators ---------------------------------------------------------------


def _child_seed(seed: int, k: int) -> int:
    return int(np.random.SeedSequence([seed, k]).generate_state(1, np.uint64)[0] >> 1)


def _topological_orders(g: CausalGraph):
    names = sorted(g.names)
    for perm in itertools.permutations(names):
        seen = set()
        ok = True
        for n in perm:
            if not g.parents(n) <= seen:
                ok = False
                break
            seen.add(n)
        if ok:
            yield perm


def _layout(template: CausalGraph, order, seed: int):
    sic2 = known_sic(2)
    reach = {n: frozenset() for n in order}  # keyed by wire owner
    gates = []
    k = 0
    for x in order:
        parents = template.parents(x)
        if parents:
            chosen = []
            for p in sorted(parents):
                options = [o for o in order if p in reach[o] and reach[o] <= parents and o not in chosen]
                if not options:
                    return None
                chosen.append(options[0])
            wires = [f"w_{o}" for o in chosen] + [f"w_{x}"]
            gates.append(Unitary(wires, haar_seed=_child_seed(seed, k)))
            k += 1
            merged = frozenset().union(*(reach[o] for o in chosen))
            for o in chosen:
                reach[o] = merged
        gates.append(SicMeasure(x, f"w_{x}", sic2, "sic2"))
        reach[x] = frozenset([x])
    return gates


def random_model(template: CausalGraph, seed: int) -> FunctionalModel:
    """Seeded functional model whose derived DAG is ``template``.

    Every node owns one qubit wire. Nodes are placed in a topological order;
    before measuring node X, a Haar-random unitary couples X's fresh wire with
    one wire carrying each parent's output, provided those wires carry no
    influence from non-parents. The first topological order (lexicographic)
    for which this works is used.
    """
    if len(template.nodes) > 6:
        raise UnsupportedShapeError("random_model supports at most 6 nodes")
    if any(d != 2 for _, d in template.nodes):
        raise UnsupportedShapeError("random_model only builds qubit (d=2) nodes")
    if not is_qdag(template):
        raise UnsupportedShapeError("random_model template must be a QDAG")
    for order in _topological_orders(template):
        gates = _layout(template, order, seed)
        if gates is None:
            continue
        model = FunctionalModel([Wire(f"w_{n}", 2) for n in order], gates)
        if derive_dag(model).same_structure(template):
            return model
    raise UnsupportedShapeError(f"no wire layout realizes {template}")


def chain_model(nodes, dim: int = 2, unitaries=None) -> FunctionalModel:
    """One wire measured successively by ``nodes``, with optional unitaries between them."""
    povm = known_sic(dim)
    ref = f"sic{dim}"
    gates = []
    for i, n in enumerate(nodes):
        if i and unitaries is not None and unitaries[i - 1] is not None:
            gates.append(Unitary(["q"], np.asarray(unitaries[i - 1])))
        gates.append(SicMeasure(n, "q", povm, ref))
    return FunctionalModel([Wire("q", dim)], gates)


TEMPLATES = {
    "chain3": CausalGraph.from_edges([("A", "Z"), ("Z", "D")]),
    "common_cause": CausalGraph.from_edges([("C", "A"), ("C", "B")], nodes=["A", "B", "C"]),
    "common_effect": CausalGraph.from_edges([("A", "C"), ("B", "C")]),
    "diamond": CausalGraph.from_edges([("A", "W"), ("A", "Z"), ("W", "D"), ("Z", "D")]),
}


def with_haar_seed_offset(m: FunctionalModel, seed: int) -> FunctionalModel:
    """Re-seed every Haar unitary: the k-th one gets a seed derived from ``(seed, k)``."""
    gates = []
    k = 0
    for g in m.gates:
        if isinstance(g, Unitary) and g.haar_seed is not None:
            g = replace(g, haar_seed=_child_seed(seed, k))
            k += 1
        gates.append(g)
    return FunctionalModel(m.wires, gates)
