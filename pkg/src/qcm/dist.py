"""Exact finite joint distributions over node outcomes.

Tables are dense numpy arrays with one axis per variable, in row-major order of
the variable sequence. Outcome labels exposed to callers are 1-based; axis
index ``k`` holds label ``k + 1``.
"""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass

import numpy as np

from .errors import InputError

NORM_TOL = 1e-9
NEG_TOL = 1e-12
DEFAULT_EPS = 1e-12


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """Probability table over named discrete variables.

    Parameters
    ----------
    variables : sequence of (name, outcome_count)
    table : array-like with shape ``tuple(outcome_count for each variable)``
    degenerate : bool
        Set by :func:`condition` when the conditioning event had probability zero.
    """

    variables: tuple
    table: np.ndarray
    degenerate: bool = False

    def __post_init__(self):
        variables = tuple((str(n), int(k)) for n, k in self.variables)
        names = [n for n, _ in variables]
        if len(set(names)) != len(names):
            raise InputError(f"duplicate variable names {names}")
        table = np.array(self.table, dtype=float)
        shape = tuple(k for _, k in variables)
        if table.shape != shape:
            raise InputError(f"table shape {table.shape} does not match variable sizes {shape}")
        if table.size and table.min() < -NEG_TOL:
            raise InputError(f"negative probability {table.min()!r}")
        table[table < 0] = 0.0
        total = table.sum()
        if abs(total - 1.0) > NORM_TOL:
            raise InputError(f"probabilities sum to {total!r}, not 1")
        table.setflags(write=False)
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "table", table)

    @property
    def names(self) -> tuple:
        return tuple(n for n, _ in self.variables)

    @property
    def shape(self) -> tuple:
        return self.table.shape

    def axis(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise InputError(f"unknown variable {name!r}") from None

    def axes(self, names) -> tuple:
        return tuple(sorted(self.axis(n) for n in names))

    def prob(self, assignment: dict) -> float:
        """Probability of a (possibly partial) assignment of 1-based labels."""
        m = marginalize(self, assignment.keys())
        idx = tuple(_label_index(m, n, assignment[n]) for n in m.names)
        return float(m.table[idx])

    def reorder(self, names) -> "JointDistribution":
        """Permute the variable order."""
        names = list(names)
        if sorted(names) != sorted(self.names):
            raise InputError(f"cannot reorder {self.names} as {names}")
        perm = [self.axis(n) for n in names]
        return JointDistribution([self.variables[i] for i in perm], self.table.transpose(perm), self.degenerate)

    def same_signature(self, other: "JointDistribution") -> bool:
        return self.variables == other.variables

    def __eq__(self, other):
        if not isinstance(other, JointDistribution):
            return NotImplemented
        return self.variables == other.variables and np.array_equal(self.table, other.table)

    def __repr__(self):
        return f"JointDistribution({list(self.variables)!r})"

    @classmethod
    def uniform(cls, variables) -> "JointDistribution":
        variables = tuple(variables)
        shape = tuple(k for _, k in variables)
        return cls(variables, np.full(shape, 1.0 / max(int(np.prod(shape)), 1)))

    @classmethod
    def from_function(cls, variables, fn) -> "JointDistribution":
        """Build a table by evaluating ``fn(*labels)`` on every 1-based outcome tuple."""
        variables = tuple(variables)
        shape = tuple(k for _, k in variables)
        table = np.empty(shape)
        for idx in np.ndindex(*shape):
            table[idx] = fn(*(i + 1 for i in idx))
        return cls(variables, table)

    def to_csv(self, header: str | None = None) -> str:
        buf = io.StringIO()
        if header:
            buf.write(f"# {header}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([*self.names, "probability"])
        for idx in np.ndindex(*self.shape):
            writer.writerow([*(i + 1 for i in idx), f"{self.table[idx]:.17g}"])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, outcome_counts: dict | None = None) -> "JointDistribution":
        """Parse the CSV format written by :meth:`to_csv`.

        Outcome counts are inferred as the largest label seen per column unless
        given explicitly.
        """
        lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        reader = csv.reader(lines)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError("empty distribution file") from None
        if not header or header[-1] != "probability":
            raise InputError("distribution CSV must end with a 'probability' column")
        names = header[:-1]
        rows = []
        for row in reader:
            if len(row) != len(header):
                raise InputError(f"row {row} has {len(row)} fields, expected {len(header)}")
            try:
                rows.append(([int(v) for v in row[:-1]], float(row[-1])))
            except ValueError as exc:
                raise InputError(f"bad row {row}: {exc}") from None
        counts = []
        for j, n in enumerate(names):
            seen = max((r[0][j] for r in rows), default=0)
            counts.append(int((outcome_counts or {}).get(n, seen)))
        table = np.zeros(tuple(counts))
        filled = np.zeros(tuple(counts), dtype=bool)
        for labels, pr in rows:
            if any(not 1 <= v <= k for v, k in zip(labels, counts)):
                raise InputError(f"outcome labels {labels} out of range")
            idx = tuple(v - 1 for v in labels)
            if filled[idx]:
                raise InputError(f"duplicate row for outcome {labels}")
            filled[idx] = True
            table[idx] = pr
        return cls(list(zip(names, counts)), table)


def _label_index(p: JointDistribution, name: str, label: int) -> int:
    k = p.variables[p.axis(name)][1]
    if not 1 <= int(label) <= k:
        raise InputError(f"outcome {label} of {name!r} out of range 1..{k}")
    return int(label) - 1


def marginalize(p: JointDistribution, keep) -> JointDistribution:
    """Sum out every variable not in ``keep``; kept variables retain their order."""
    keep = set(keep)
    for n in keep:
        p.axis(n)
    drop = tuple(i for i, n in enumerate(p.names) if n not in keep)
    kept = [v for v in p.variables if v[0] in keep]
    return JointDistribution(kept, p.table.sum(axis=drop))


def condition(p: JointDistribution, assignment: dict, eps: float = 0.0) -> JointDistribution:
    """Restrict to ``assignment`` and renormalize; conditioned variables are removed.

    If the event has probability ``<= eps`` the result is uniform over the
    remaining variables with ``degenerate=True``.
    """
    idx = [slice(None)] * len(p.names)
    for n, label in assignment.items():
        idx[p.axis(n)] = _label_index(p, n, label)
    rest = [v for v in p.variables if v[0] not in assignment]
    sub = p.table[tuple(idx)]
    mass = sub.sum()
    if mass <= eps:
        u = JointDistribution.uniform(rest)
        return JointDistribution(rest, u.table, degenerate=True)
    return JointDistribution(rest, sub / mass)


def conditional_table(table: np.ndarray, target_axes, given_axes, eps: float = DEFAULT_EPS):
    """``P(target | given)`` as a keepdims array aligned with ``table``'s axes.

    Axes not in ``target_axes | given_axes`` are summed out (length 1 in the
    result). Zero-probability conditioning cells get the uniform distribution
    over the targets. Returns ``(cond, degenerate_mask)``.
    """
    target_axes, given_axes = set(target_axes), set(given_axes)
    other = tuple(i for i in range(table.ndim) if i not in target_axes | given_axes)
    joint = table.sum(axis=other, keepdims=True) if other else table
    denom = joint.sum(axis=tuple(sorted(target_axes)), keepdims=True) if target_axes else joint
    bad = denom <= eps
    n_targets = int(np.prod([table.shape[i] for i in target_axes])) if target_axes else 1
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = np.where(bad, 1.0 / n_targets, joint / np.where(bad, 1.0, denom))
    return cond, bad


@dataclass(frozen=True)
class IndependenceReport:
    u: tuple
    v: tuple
    w: tuple
    residual: float
    epsilon: float
    skipped_cells: int


def max_ci_violation(p: JointDistribution, u, v, w=(), eps: float = DEFAULT_EPS) -> IndependenceReport:
    """Largest ``|P(uv|w) - P(u|w) P(v|w)|`` over conditioning cells with ``P(w) > eps``."""
    u, v, w = tuple(u), tuple(v), tuple(w)
    su, sv, sw = set(u), set(v), set(w)
    if su & sv or su & sw or sv & sw:
        raise InputError("u, v and w must be disjoint")
    if not su or not sv:
        raise InputError("u and v must be nonempty")
    au, av, aw = p.axes(u), p.axes(v), p.axes(w)
    other = tuple(i for i in range(p.table.ndim) if i not in set(au) | set(av) | set(aw))
    puvw = p.table.sum(axis=other, keepdims=True)
    pw = puvw.sum(axis=au + av, keepdims=True)
    puw = puvw.sum(axis=av, keepdims=True)
    pvw = puvw.sum(axis=au, keepdims=True)
    live = pw > eps
    safe = np.where(live, pw, 1.0)
    diff = np.abs(puvw / safe - (puw / safe) * (pvw / safe))
    diff = np.where(live, diff, 0.0)
    return IndependenceReport(u, v, w, float(diff.max()), eps, int((~live).sum()))


def tv_distance(p: JointDistribution, q: JointDistribution) -> float:
    if not p.same_signature(q):
        raise InputError(f"signature mismatch: {p.variables} vs {q.variables}")
    return float(0.5 * np.abs(p.table - q.table).sum())


def outcome_tuples(p: JointDistribution):
    """Iterate ``(labels, probability)`` in row-major order."""
    for idx in itertools.product(*(range(k) for _, k in p.variables)):
        yield tuple(i + 1 for i in idx), float(p.table[idx])
