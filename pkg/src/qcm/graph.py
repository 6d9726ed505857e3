"""Causal graphs, slices, causal inversion and the quantum path-blocking rules."""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass
from typing import Iterable, NamedTuple

from .errors import InputError, ResourceError

MAX_PATH_NODES = 12

# Blocking rule tags.
SSO = "g-SSO"
BK = "g-BK"
BK_STAR = "g-BK*"


@dataclass(frozen=True)
class CausalGraph:
    """A DAG over named nodes, each carrying a Hilbert-space dimension.

    Parameters
    ----------
    nodes : sequence of (name, dim)
        Node X has ``dim**2`` measurement outcomes.
    edges : iterable of (parent, child)
    """

    nodes: tuple
    edges: frozenset

    def __init__(self, nodes: Iterable, edges: Iterable = ()):
        nodes = tuple((str(n), int(d)) for n, d in nodes)
        edges = frozenset((str(a), str(b)) for a, b in edges)
        names = [n for n, _ in nodes]
        if len(set(names)) != len(names):
            raise InputError(f"duplicate node names in {names}")
        for n, d in nodes:
            if d < 2:
                raise InputError(f"node {n!r} has Hilbert dimension {d} < 2")
        known = set(names)
        for a, b in edges:
            if a not in known or b not in known:
                raise InputError(f"edge ({a!r}, {b!r}) names an unknown node")
            if a == b:
                raise InputError(f"self-loop on {a!r}")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", edges)
        self.topological_order()  # raises on cycles

    @classmethod
    def from_edges(cls, edges, dim: int = 2, nodes: Iterable[str] = ()) -> "CausalGraph":
        names = list(dict.fromkeys([*nodes, *itertools.chain.from_iterable(edges)]))
        return cls([(n, dim) for n in names], edges)

    @property
    def names(self) -> tuple:
        return tuple(n for n, _ in self.nodes)

    def dim(self, node: str) -> int:
        for n, d in self.nodes:
            if n == node:
                return d
        raise InputError(f"unknown node {node!r}")

    def _check(self, node):
        if node not in self.names:
            raise InputError(f"unknown node {node!r}")

    def parents(self, node: str) -> set:
        self._check(node)
        return {a for a, b in self.edges if b == node}

    def children(self, node: str) -> set:
        self._check(node)
        return {b for a, b in self.edges if a == node}

    def ancestors(self, node: str) -> frozenset:
        return relatives(self, node, "ancestors")

    def descendants(self, node: str) -> frozenset:
        return relatives(self, node, "descendants")

    def adjacent(self, a: str, b: str) -> bool:
        return (a, b) in self.edges or (b, a) in self.edges

    def topological_order(self) -> list:
        """Kahn's algorithm with lexicographic tie-breaking."""
        indeg = {n: 0 for n in self.names}
        for _, b in self.edges:
            indeg[b] += 1
        ready = sorted(n for n, k in indeg.items() if k == 0)
        order = []
        while ready:
            n = ready.pop(0)
            order.append(n)
            for a, b in sorted(self.edges):
                if a == n:
                    indeg[b] -= 1
                    if indeg[b] == 0:
                        ready.append(b)
            ready.sort()
        if len(order) != len(self.nodes):
            raise InputError("graph contains a directed cycle")
        return order

    def subgraph_without(self, node: str) -> "CausalGraph":
        return CausalGraph(
            [(n, d) for n, d in self.nodes if n != node],
            [(a, b) for a, b in self.edges if node not in (a, b)],
        )

    def same_structure(self, other: "CausalGraph") -> bool:
        """Equal node sets (with dims) and edges, ignoring node order."""
        return dict(self.nodes) == dict(other.nodes) and self.edges == other.edges

    def to_dict(self) -> dict:
        return {
            "nodes": [[n, d] for n, d in self.nodes],
            "edges": [[a, b] for a, b in sorted(self.edges)],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CausalGraph":
        try:
            return cls([tuple(x) for x in data["nodes"]], [tuple(e) for e in data["edges"]])
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed graph document: {exc}") from None

    def __str__(self):
        parts = []
        for n in self.topological_order():
            ps = sorted(self.parents(n))
            parts.append(f"[{n}|{','.join(ps)}]" if ps else f"[{n}]")
        return "".join(parts)


class UndirectedPath(NamedTuple):
    """A simple path; ``forward[i]`` is True when the edge is ``nodes[i] -> nodes[i+1]``."""

    nodes: tuple
    forward: tuple

    def reversed(self) -> "UndirectedPath":
        return UndirectedPath(self.nodes[::-1], tuple(not f for f in self.forward[::-1]))

    def __str__(self):
        out = [self.nodes[0]]
        for f, n in zip(self.forward, self.nodes[1:]):
            out += ["->" if f else "<-", n]
        return "".join(out)


class Blocking(NamedTuple):
    blocked: bool
    rule: str | None = None
    node: str | None = None


@functools.lru_cache(maxsize=65536)
def relatives(g: CausalGraph, x: str, direction: str) -> frozenset:
    """Transitive ancestors or descendants of ``x``, excluding ``x``."""
    g._check(x)
    if direction == "descendants":
        step = {}
        for a, b in g.edges:
            step.setdefault(a, []).append(b)
    elif direction == "ancestors":
        step = {}
        for a, b in g.edges:
            step.setdefault(b, []).append(a)
    else:
        raise ValueError(f"direction must be 'ancestors' or 'descendants', not {direction!r}")
    seen = set()
    stack = [x]
    while stack:
        for m in step.get(stack.pop(), ()):
            if m not in seen:
                seen.add(m)
                stack.append(m)
    seen.discard(x)
    return frozenset(seen)


def _check_size(g: CausalGraph):
    if len(g.nodes) > MAX_PATH_NODES:
        raise ResourceError(f"path enumeration is capped at {MAX_PATH_NODES} nodes, graph has {len(g.nodes)}")


def undirected_paths(g: CausalGraph, u: str, v: str) -> list:
    """All simple undirected paths from ``u`` to ``v``, sorted by node sequence."""
    g._check(u)
    g._check(v)
    if u == v:
        raise InputError("undirected_paths needs two distinct nodes")
    _check_size(g)
    nbrs = {n: [] for n in g.names}
    for a, b in g.edges:
        nbrs[a].append((b, True))
        nbrs[b].append((a, False))
    paths = []

    def extend(nodes, forward):
        last = nodes[-1]
        if last == v:
            paths.append(UndirectedPath(tuple(nodes), tuple(forward)))
            return
        for m, fwd in nbrs[last]:
            if m not in nodes:
                extend(nodes + [m], forward + [fwd])

    extend([u], [])
    return sorted(paths)


def path_blocked(g: CausalGraph, path: UndirectedPath, w) -> Blocking:
    """Apply the g-SSO, g-BK and g-BK* rules to each interior triple of ``path``.

    Returns the first rule that fires, scanning interior nodes from the start
    of the path.
    """
    w = set(w)
    nodes, fwd = path.nodes, path.forward
    if len(nodes) < 2 or len(fwd) != len(nodes) - 1 or len(set(nodes)) != len(nodes):
        raise InputError(f"malformed path {path!r}")
    for i, (a, b) in enumerate(zip(nodes, nodes[1:])):
        if ((a, b) if fwd[i] else (b, a)) not in g.edges:
            raise InputError(f"path step {a}-{b} is not an edge in the stated direction")
    if nodes[0] in w or nodes[-1] in w:
        raise InputError("conditioning set must not contain the path endpoints")
    for i in range(1, len(nodes) - 1):
        c = nodes[i]
        into_c, out_of_c = fwd[i - 1], fwd[i]
        if into_c == out_of_c:  # chain in either direction
            if c in w:
                return Blocking(True, SSO, c)
        elif into_c:  # a -> c <- b
            if c not in w and not (g.descendants(c) & w):
                return Blocking(True, BK, c)
        else:  # a <- c -> b
            if c not in w and not (g.ancestors(c) & w):
                return Blocking(True, BK_STAR, c)
    return Blocking(False)


def classical_path_blocked(g: CausalGraph, path: UndirectedPath, w) -> bool:
    """Ordinary d-separation blocking, for contrast with the quantum rules."""
    w = set(w)
    nodes, fwd = path.nodes, path.forward
    for i in range(1, len(nodes) - 1):
        c = nodes[i]
        if fwd[i - 1] and not fwd[i]:
            if c not in w and not (g.descendants(c) & w):
                return True
        elif c in w:
            return True
    return False


def _check_disjoint(*sets):
    for a, b in itertools.combinations(sets, 2):
        if set(a) & set(b):
            raise InputError(f"node sets overlap: {sorted(set(a) & set(b))}")


def q_separated(g: CausalGraph, u, v, w) -> bool:
    """True iff every undirected path between ``u`` and ``v`` is blocked by ``w``."""
    u, v, w = set(u), set(v), set(w)
    _check_disjoint(u, v, w)
    for n in u | v | w:
        g._check(n)
    for a in sorted(u):
        for b in sorted(v):
            for p in undirected_paths(g, a, b):
                if not path_blocked(g, p, w).blocked:
                    return False
    return True


def causal_invert(g: CausalGraph) -> CausalGraph:
    return CausalGraph(g.nodes, [(b, a) for a, b in g.edges])


@dataclass(frozen=True)
class Slice:
    center: str
    companions: frozenset

    @property
    def members(self) -> frozenset:
        return self.companions | {self.center}


def _slice_ok(g: CausalGraph, x: str, companions) -> bool:
    members = set(companions) | {x}
    for m in members:
        if g.descendants(m) & members:
            return False
    anc, desc = g.ancestors(x), g.descendants(x)
    if not anc or not desc:
        return True
    # Every directed ancestor->descendant path must pass through a slice member:
    # equivalently, with the members removed no descendant is reachable.
    cut = g.edges - {e for e in g.edges if e[0] in members or e[1] in members}
    frontier = list(anc)
    seen = set(anc)
    while frontier:
        n = frontier.pop()
        for a, b in cut:
            if a == n and b not in seen:
                seen.add(b)
                frontier.append(b)
    return not (seen & desc)


def valid_slices(g: CausalGraph, x: str):
    """Every slice of ``x``, smallest first, lexicographic within a size."""
    g._check(x)
    comparable = g.ancestors(x) | g.descendants(x) | {x}
    candidates = sorted(set(g.names) - comparable)
    for k in range(len(candidates) + 1):
        for combo in itertools.combinations(candidates, k):
            if _slice_ok(g, x, combo):
                yield Slice(x, frozenset(combo))


def find_slice(g: CausalGraph, x: str):
    """Smallest (then lexicographically first) valid companion set for ``x``, or None."""
    return next(valid_slices(g, x), None)


def is_qdag(g: CausalGraph) -> bool:
    return all(find_slice(g, n) is not None for n in g.names)


def graph_after_unmeasure(g: CausalGraph, z: str) -> CausalGraph:
    """Delete ``z`` and connect each former parent to each former child."""
    parents, children = g.parents(z), g.children(z)
    h = g.subgraph_without(z)
    return CausalGraph(h.nodes, h.edges | {(p, c) for p in parents for c in children})


def graph_after_intervention(g: CausalGraph, w: str, new_node: str = "Y") -> CausalGraph:
    """Cut all edges into ``w`` and add an exogenous parent ``new_node`` of matching dim."""
    d = g.dim(w)
    if new_node in g.names:
        raise InputError(f"intervention node name {new_node!r} already used")
    edges = {e for e in g.edges if e[1] != w} | {(new_node, w)}
    return CausalGraph([*g.nodes, (new_node, d)], edges)


def all_dags(nodes):
    """Every DAG over ``nodes`` ((name, dim) pairs), in a deterministic order."""
    nodes = list(nodes)
    names = [n for n, _ in nodes]
    pairs = list(itertools.combinations(names, 2))
    for choice in itertools.product((0, 1, 2), repeat=len(pairs)):
        edges = []
        for (a, b), c in zip(pairs, choice):
            if c == 1:
                edges.append((a, b))
            elif c == 2:
                edges.append((b, a))
        try:
            yield CausalGraph(nodes, edges)
        except InputError:
            continue
