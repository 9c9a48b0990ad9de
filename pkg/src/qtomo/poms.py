"""Measurement outcome sets (POMs): constructors, Gram analysis, efficiencies.

A POM is an ordered collection of positive outcome operators whose sum is
bounded by the identity. "Perfect" POMs sum to the identity exactly; lossy
detectors are modeled by outcomes that sum to strictly less.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg as la
from .states import SIGMA_X, SIGMA_Z

__all__ = [
    "Pom",
    "GramReport",
    "make_von_neumann",
    "make_trine",
    "make_six",
    "make_qutrit_two_outcome",
    "make_quadrature_pom",
    "make_phase_randomized_fock_mixture",
    "optical_trine_outcomes",
    "gram_report",
    "apply_efficiencies",
    "hermite_functions",
]

PSD_TOL = -1e-10
SUM_TOL = 1e-10
PERFECT_TOL = 1e-9
RANK_TOL = 1e-10

CLASSIFICATIONS = (
    "perfect-complete",
    "imperfect-complete",
    "perfect-incomplete",
    "imperfect-incomplete",
)


@dataclass(frozen=True)
class Pom:
    """Ordered sequence of positive outcome operators on one Hilbert space.

    ``eta`` optionally records the efficiency map that produced an imperfect
    POM from an ideal one (see :func:`apply_efficiencies`).
    """

    outcomes: tuple[np.ndarray, ...]
    labels: tuple[str, ...] | None = None
    eta: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.outcomes:
            raise ValueError("a POM needs at least one outcome")
        mats = []
        dim = None
        for j, raw in enumerate(self.outcomes):
            m = la.require_hermitian(raw, f"outcome {j}")
            if dim is None:
                dim = m.shape[0]
            elif m.shape[0] != dim:
                raise ValueError("outcomes have inconsistent dimensions")
            lo = float(np.linalg.eigvalsh(la.hermitize(m)).min())
            if lo < PSD_TOL:
                raise ValueError(f"outcome {j} has negative eigenvalue {lo:.3e}")
            m.setflags(write=False)
            mats.append(m)
        if self.labels is not None and len(self.labels) != len(mats):
            raise ValueError("labels length does not match outcomes")
        g = la.hermitize(sum(mats))
        hi = float(np.linalg.eigvalsh(g).max())
        if hi > 1.0 + SUM_TOL:
            raise ValueError(f"outcome sum exceeds the identity (max eig {hi})")
        g.setflags(write=False)
        object.__setattr__(self, "outcomes", tuple(mats))
        object.__setattr__(self, "_sum", g)
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(str(s) for s in self.labels))

    @property
    def dim(self) -> int:
        return self.outcomes[0].shape[0]

    @property
    def n_outcomes(self) -> int:
        return len(self.outcomes)

    @property
    def sum_operator(self) -> np.ndarray:
        return self._sum  # type: ignore[attr-defined]

    @property
    def is_perfect(self) -> bool:
        return la.frob(self.sum_operator - np.eye(self.dim)) <= PERFECT_TOL

    def stacked(self) -> np.ndarray:
        """Outcomes as one (M, D, D) array, handy for vectorized traces."""
        return np.stack(self.outcomes)


@dataclass(frozen=True)
class GramReport:
    """Pairwise trace-overlap spectrum of a POM and the resulting class."""

    eigenvalues: tuple[float, ...]
    n_positive: int
    perfect: bool
    classification: str


def gram_report(pom: Pom) -> GramReport:
    """Count linearly independent outcomes via the outcome overlap matrix.

    An eigenvalue counts as positive when it exceeds ``RANK_TOL`` times the
    largest one; the POM is informationally complete when that count reaches
    dim^2.
    """
    mats = pom.stacked()
    gram = np.einsum("jab,kba->jk", mats, mats).real
    gram = (gram + gram.T) / 2
    vals = np.linalg.eigvalsh(gram)
    top = float(vals.max())
    n_pos = int(np.sum(vals > RANK_TOL * max(top, 0.0))) if top > 0 else 0
    perfect = pom.is_perfect
    complete = n_pos == pom.dim**2
    classification = ("perfect-" if perfect else "imperfect-") + (
        "complete" if complete else "incomplete"
    )
    return GramReport(tuple(float(v) for v in vals), n_pos, perfect, classification)


def make_von_neumann(basis) -> Pom:
    """Rank-one orthogonal projectors onto the columns of ``basis``."""
    b = la.as_matrix(basis)
    if b.shape[0] != b.shape[1]:
        raise ValueError("basis must be square (columns spanning the space)")
    if la.max_abs(b.conj().T @ b - np.eye(b.shape[0])) > 1e-10:
        raise ValueError("basis columns are not orthonormal")
    outcomes = [np.outer(b[:, k], b[:, k].conj()) for k in range(b.shape[1])]
    return Pom(tuple(outcomes), labels=tuple(f"P{k}" for k in range(b.shape[1])))


def make_trine() -> Pom:
    """Three symmetric qubit outcomes at 120 degrees in the x-z plane."""
    eye = np.eye(2)
    outcomes = (
        (eye + SIGMA_Z) / 3,
        (eye + np.sqrt(3) / 2 * SIGMA_X - SIGMA_Z / 2) / 3,
        (eye - np.sqrt(3) / 2 * SIGMA_X - SIGMA_Z / 2) / 3,
    )
    return Pom(outcomes, labels=("T1", "T2", "T3"))


def make_six() -> Pom:
    """Overcomplete qubit measurement (1 +/- sigma_a)/6 over the three axes."""
    eye = np.eye(2)
    outcomes = []
    labels = []
    for name in ("x", "y", "z"):
        sig = {"x": SIGMA_X, "y": np.array([[0, -1j], [1j, 0]]), "z": SIGMA_Z}[name]
        for sgn, tag in ((1, "+"), (-1, "-")):
            outcomes.append((eye + sgn * sig) / 6)
            labels.append(f"{name}{tag}")
    return Pom(tuple(outcomes), labels=tuple(labels))


def make_qutrit_two_outcome() -> Pom:
    """Two diagonal qutrit outcomes that probe only the third level's weight."""
    p1 = np.diag([0.5, 0.5, 1.0 / 3.0]).astype(complex)
    p2 = np.diag([0.5, 0.5, 2.0 / 3.0]).astype(complex)
    return Pom((p1, p2), labels=("Q1", "Q2"))


def hermite_functions(x, n_max: int) -> np.ndarray:
    """Orthonormal harmonic-oscillator wavefunctions psi_0..psi_{n_max-1}.

    Uses the stable normalized recurrence
    psi_{n+1} = x sqrt(2/(n+1)) psi_n - sqrt(n/(n+1)) psi_{n-1},
    which avoids the factorial overflow of raw Hermite polynomials.
    Returns an array of shape (n_max, len(x)).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    out = np.empty((n_max, x.size))
    out[0] = np.pi ** (-0.25) * np.exp(-0.5 * x**2)
    if n_max > 1:
        out[1] = np.sqrt(2.0) * x * out[0]
    for n in range(1, n_max - 1):
        out[n + 1] = x * np.sqrt(2.0 / (n + 1)) * out[n] - np.sqrt(n / (n + 1.0)) * out[n - 1]
    return out


def _grid_spacing(x_grid: np.ndarray) -> float:
    if x_grid.size < 2:
        raise ValueError("x_grid needs at least two points to define a bin width")
    dx = np.diff(x_grid)
    if dx.min() <= 0 or (dx.max() - dx.min()) > 1e-9 * dx.max():
        raise ValueError("x_grid must be uniformly increasing")
    return float(dx.mean())


def make_quadrature_pom(thetas, x_grid, d_rec: int, dx: float | None = None) -> Pom:
    """Binned quadrature-eigenstate outcomes truncated to ``d_rec`` levels.

    One rank-one outcome per (theta, x) pair, weighted by the bin width so a
    fine wide grid at fixed phase approximates the continuum resolution of the
    identity. With several phase settings the outcomes are additionally
    divided by the number of settings so the whole collection stays below the
    identity (an imperfect POM with uniform weight 1/n_settings).
    """
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    x_grid = np.atleast_1d(np.asarray(x_grid, dtype=float))
    if d_rec < 1:
        raise ValueError("d_rec must be >= 1")
    if dx is None:
        dx = _grid_spacing(x_grid)
    psi = hermite_functions(x_grid, d_rec)  # (d_rec, n_x)
    n = np.arange(d_rec)
    weight = dx / thetas.size
    outcomes = []
    labels = []
    for theta in thetas:
        phases = np.exp(1j * n * theta)
        for i, x in enumerate(x_grid):
            v = phases * psi[:, i]
            outcomes.append(weight * np.outer(v, v.conj()))
            labels.append(f"theta={theta:.6g},x={x:.6g}")
    return Pom(tuple(outcomes), labels=tuple(labels))


def make_phase_randomized_fock_mixture(x_grid, d_rec: int, dx: float | None = None) -> Pom:
    """Binned phase-averaged quadrature outcomes: diagonal Fock-state mixtures."""
    x_grid = np.atleast_1d(np.asarray(x_grid, dtype=float))
    if d_rec < 1:
        raise ValueError("d_rec must be >= 1")
    if dx is None:
        dx = _grid_spacing(x_grid)
    psi = hermite_functions(x_grid, d_rec)
    outcomes = []
    labels = []
    for i, x in enumerate(x_grid):
        outcomes.append(dx * np.diag(psi[:, i] ** 2).astype(complex))
        labels.append(f"x={x:.6g}")
    return Pom(tuple(outcomes), labels=tuple(labels))


def optical_trine_outcomes(mu: float) -> Pom:
    """Trine-type POM from the wave-plate / partial-polarizer matrix products.

    The transmitted arm contributes (1-mu^2)(1+sigma_z)/2; the two reflected
    arms go through a half-wave plate at pi/8 and a partial polarizing
    splitter with reflection amplitudes (mu, 1) before an ordinary polarizing
    splitter. mu = +/- 1/sqrt(3) reproduces the symmetric trine.
    """
    mu = float(mu)
    if abs(mu) > 1.0:
        raise ValueError("|mu| must not exceed 1")
    hwp = np.array([[np.cos(np.pi / 4), np.sin(np.pi / 4)],
                    [np.sin(np.pi / 4), -np.cos(np.pi / 4)]], dtype=complex)
    ppbs_reflect = np.diag([mu, 1.0]).astype(complex)
    chain = ppbs_reflect @ hwp
    phi2 = chain @ np.array([1.0, 0.0], dtype=complex)
    phi3 = chain @ np.array([0.0, 1.0], dtype=complex)
    p1 = (1.0 - mu**2) * (np.eye(2) + SIGMA_Z) / 2
    p2 = np.outer(phi2, phi2.conj())
    p3 = np.outer(phi3, phi3.conj())
    return Pom((p1, p2, p3), labels=("transmitted", "reflected+", "reflected-"))


def apply_efficiencies(pom: Pom, eta) -> Pom:
    """Mix and attenuate outcomes: new_j = sum_k eta[j, k] outcome_k.

    ``eta`` must be a square nonnegative matrix over the outcome index with
    column sums below one plus round-off; the diagonal case scales each
    outcome by its detector efficiency.
    """
    eta = np.asarray(eta, dtype=float)
    m = pom.n_outcomes
    if eta.shape != (m, m):
        raise ValueError(f"eta must be {m}x{m} for this POM")
    if eta.min() < 0:
        raise ValueError("efficiencies must be nonnegative")
    if np.any(eta.sum(axis=0) > 1.0 + 1e-12):
        raise ValueError("efficiency column sums must not exceed 1")
    mats = pom.stacked()
    new = tuple(la.hermitize(np.tensordot(eta[j], mats, axes=1)) for j in range(m))
    return Pom(new, labels=pom.labels, eta=eta)
