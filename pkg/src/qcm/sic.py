"""SIC-POVMs: built-in fiducials, Weyl-Heisenberg orbits and numerical search.

A SIC-POVM on C^d is stored as its d**2 rank-1 projectors ``Pi_x``; the POVM
elements are ``Pi_x / d``. Outcome ``x`` (1-based) corresponds to the
displacement ``D_{p,q}`` with ``x = p*d + q + 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .errors import InputError, SearchFailedError

ANALYTIC_TOL = 1e-10
SEARCH_TOL = 1e-7


@dataclass(frozen=True, eq=False)
class Fiducial:
    dim: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if self.dim < 1 or amps.shape != (self.dim,):
            raise InputError(f"fiducial needs {self.dim} amplitudes, got {amps.size}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-12:
            raise InputError(f"fiducial is not normalized (norm {norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def normalized(cls, amplitudes) -> "Fiducial":
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        return cls(amps.size, amps / np.linalg.norm(amps))

    def __eq__(self, other):
        if not isinstance(other, Fiducial):
            return NotImplemented
        return self.dim == other.dim and np.array_equal(self.amplitudes, other.amplitudes)

    def to_text(self) -> str:
        lines = [str(self.dim)]
        lines += [f"{float(a.real)!r} {float(a.imag)!r}" for a in self.amplitudes]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Fiducial":
        rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        try:
            dim = int(rows[0][0])
            amps = [complex(float(re), float(im)) for re, im in rows[1 : dim + 1]]
        except (IndexError, ValueError) as exc:
            raise InputError(f"malformed fiducial file: {exc}") from None
        if len(amps) != dim or len(rows) != dim + 1:
            raise InputError(f"fiducial file declares d={dim} but has {len(rows) - 1} amplitude lines")
        return cls(dim, np.array(amps))


@dataclass(frozen=True, eq=False)
class SicPovm:
    dim: int
    projectors: np.ndarray  # shape (d**2, d, d)

    def __post_init__(self):
        proj = np.asarray(self.projectors, dtype=complex)
        d = self.dim
        if proj.shape != (d * d, d, d):
            raise InputError(f"expected {d * d} projectors of shape {d}x{d}, got array {proj.shape}")
        proj.setflags(write=False)
        object.__setattr__(self, "projectors", proj)

    @property
    def n_outcomes(self) -> int:
        return self.dim**2

    def effects(self) -> np.ndarray:
        """POVM elements ``Pi_x / d``."""
        return self.projectors / self.dim

    def projector(self, outcome: int) -> np.ndarray:
        """Projector for a 1-based outcome label."""
        if not 1 <= outcome <= self.n_outcomes:
            raise InputError(f"outcome {outcome} out of range 1..{self.n_outcomes}")
        return self.projectors[outcome - 1]

    def gram(self) -> np.ndarray:
        return np.einsum("aij,bji->ab", self.projectors, self.projectors).real

    def probabilities(self, rho) -> np.ndarray:
        """Outcome distribution ``tr(rho Pi_x / d)`` for a density matrix ``rho``."""
        return np.einsum("aij,ji->a", self.projectors, rho).real / self.dim


@dataclass(frozen=True)
class SicValidationReport:
    max_gram_error: float
    max_identity_error: float
    max_projector_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return max(self.max_gram_error, self.max_identity_error, self.max_projector_error) <= self.tolerance

    def to_dict(self) -> dict:
        return {
            "max_gram_error": self.max_gram_error,
            "max_identity_error": self.max_identity_error,
            "max_projector_error": self.max_projector_error,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }


def displacement_operators(d: int) -> np.ndarray:
    """Clock-and-shift operators ``X^p Z^q`` stacked in flattened ``(p, q)`` order."""
    shift = np.roll(np.eye(d), 1, axis=0)  # X|j> = |j+1>
    clock = np.diag(np.exp(2j * np.pi * np.arange(d) / d))
    ops = np.empty((d * d, d, d), dtype=complex)
    for p in range(d):
        xp = np.linalg.matrix_power(shift, p)
        for q in range(d):
            ops[p * d + q] = xp @ np.linalg.matrix_power(clock, q)
    return ops


def wh_povm_from_fiducial(fiducial: Fiducial) -> SicPovm:
    """Weyl-Heisenberg orbit of ``|f><f|``.

    The result is only a SIC-POVM if ``fiducial`` is a SIC fiducial; use
    :func:`validate_sic` to check.
    """
    d = fiducial.dim
    states = displacement_operators(d) @ fiducial.amplitudes
    return SicPovm(d, np.einsum("ai,aj->aij", states, states.conj()))


def _tetrahedron_fiducial() -> np.ndarray:
    theta = np.arccos(1 / np.sqrt(3))
    return np.array([np.cos(theta / 2), np.exp(1j * np.pi / 4) * np.sin(theta / 2)])


# d=3 fiducial from the Hesse configuration.
_BUILTIN = {
    2: _tetrahedron_fiducial,
    3: lambda: np.array([0.0, 1.0, -1.0]) / np.sqrt(2),
}


def known_fiducial(d: int) -> Fiducial:
    if d not in _BUILTIN:
        raise InputError(f"no built-in fiducial for d={d}; use search_fiducial(d, ...) instead")
    return Fiducial(d, _BUILTIN[d]())


def known_sic(d: int) -> SicPovm:
    """Analytic SIC-POVM for d in {2, 3}."""
    return wh_povm_from_fiducial(known_fiducial(d))


def validate_sic(povm: SicPovm, tol: float = ANALYTIC_TOL) -> SicValidationReport:
    d = povm.dim
    proj = povm.projectors
    target = (d * np.eye(d * d) + 1) / (d + 1)
    gram_err = float(np.max(np.abs(np.einsum("aij,bji->ab", proj, proj) - target)))
    ident_err = float(np.max(np.abs(proj.sum(axis=0) / d - np.eye(d))))

    herm = np.abs(proj - proj.conj().transpose(0, 2, 1)).max(axis=(1, 2))
    idem = np.abs(proj @ proj - proj).max(axis=(1, 2))
    trace = np.abs(np.trace(proj, axis1=1, axis2=2) - 1)
    eigs = np.linalg.eigvalsh((proj + proj.conj().transpose(0, 2, 1)) / 2)
    negativity = np.clip(-eigs.min(axis=1), 0, None)
    proj_err = float(np.max(np.stack([herm, idem, trace, negativity])))
    return SicValidationReport(gram_err, ident_err, proj_err, tol)


def frame_potential(amplitudes, ops: np.ndarray | None = None) -> float:
    """Sum over non-identity displacements of ``|<f|D|f>|^4`` for the normalized ``f``."""
    f = np.asarray(amplitudes, dtype=complex)
    f = f / np.linalg.norm(f)
    if ops is None:
        ops = displacement_operators(f.size)
    overlaps = np.einsum("i,aij,j->a", f.conj(), ops[1:], f)
    return float(np.sum(np.abs(overlaps) ** 4))


def _overlap_residuals(x, ops, d):
    f = x[:d] + 1j * x[d:]
    n2 = np.vdot(f, f).real
    c = np.einsum("i,aij,j->a", f.conj(), ops, f)
    return np.abs(c) ** 2 / n2**2 - 1 / (d + 1)


def _overlap_jacobian(x, ops, d):
    f = x[:d] + 1j * x[d:]
    n2 = np.vdot(f, f).real
    af = ops @ f
    ahf = ops.conj().transpose(0, 2, 1) @ f
    c = af @ f.conj()
    # derivative of |c|^2 / n^4 with respect to conj(f)
    dconj = (c.conj()[:, None] * af + c[:, None] * ahf) / n2**2 - 2 * (np.abs(c) ** 2)[:, None] * f / n2**3
    return np.hstack([2 * dconj.real, 2 * dconj.imag])


def search_fiducial(d: int, seed: int = 1, tol: float = SEARCH_TOL, max_iter: int = 100_000) -> Fiducial:
    """Numerically find a Weyl-Heisenberg SIC fiducial in dimension ``d``.

    Random restarts drawn from a seeded Philox stream are each driven to a
    local minimum of the frame potential. Since
    ``sum_k (|<f|D_k|f>|^2 - 1/(d+1))^2`` equals the frame potential minus its
    lower bound ``(d-1)/(d+1)``, the descent is run as a nonlinear least-squares
    problem on those residuals, which converges to full float precision.

    ``max_iter`` bounds the total number of residual evaluations over all
    restarts. Raises :class:`SearchFailedError` when it is exhausted.
    """
    if d < 2:
        raise InputError(f"search_fiducial needs d >= 2, got {d}")
    ops = displacement_operators(d)[1:]
    rng = np.random.Generator(np.random.Philox(seed))
    best = np.inf
    used = 0
    while used < max_iter:
        x0 = rng.standard_normal(2 * d)
        budget = max_iter - used
        sol = least_squares(
            _overlap_residuals,
            x0,
            jac=_overlap_jacobian,
            args=(ops, d),
            method="trf",
            xtol=1e-15,
            ftol=1e-15,
            gtol=1e-15,
            max_nfev=max(budget, 1),
        )
        used += max(sol.nfev, 1)
        amps = sol.x[:d] + 1j * sol.x[d:]
        fid = Fiducial.normalized(amps)
        best = min(best, frame_potential(fid.amplitudes, displacement_operators(d)))
        if validate_sic(wh_povm_from_fiducial(fid), tol).passed:
            return fid
    raise SearchFailedError(
        f"search failed for d={d} after {used} evaluations; best frame potential {best!r} "
        f"(optimum {(d - 1) / (d + 1)!r})",
        best,
    )


def resolve_povm(ref: str, base_dir=None) -> SicPovm:
    """Build the POVM named by a model-file reference: ``"sic2"``, ``"sic3"`` or a fiducial path."""
    if ref.startswith("sic") and ref[3:].isdigit():
        return known_sic(int(ref[3:]))
    from pathlib import Path

    path = Path(ref)
    if base_dir is not None and not path.is_absolute():
        path = Path(base_dir) / path
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read fiducial file {path}: {exc}") from None
    return wh_povm_from_fiducial(Fiducial.from_text(text))
