"""Quantum states: density matrices, Bloch vectors, entropy, truncation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg as la

__all__ = [
    "SIGMA_X",
    "SIGMA_Y",
    "SIGMA_Z",
    "PAULI",
    "DensityMatrix",
    "BlochVector",
    "state_matrix",
    "density_from_array",
    "bloch_to_rho",
    "rho_to_bloch",
    "purity",
    "von_neumann_entropy",
    "truncate_state",
    "maximally_mixed",
    "random_density_matrix",
]

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}

TRACE_TOL = 1e-10
BLOCH_TOL = 1e-10


@dataclass(frozen=True)
class DensityMatrix:
    """Positive unit-trace Hermitian matrix describing a quantum state."""

    matrix: np.ndarray

    def __post_init__(self):
        m = la.require_hermitian(self.matrix, "density matrix")
        tr = float(np.trace(m).real)
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix trace {tr} deviates from 1")
        lo = float(np.linalg.eigvalsh(la.hermitize(m)).min())
        if lo < la.EIG_CLAMP:
            raise ValueError(f"density matrix has negative eigenvalue {lo:.3e}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def state_matrix(rho) -> np.ndarray:
    """Accept a DensityMatrix or a bare array and return the matrix."""
    return la.as_matrix(getattr(rho, "matrix", rho))


def density_from_array(m) -> DensityMatrix:
    """Wrap an (approximately) valid state matrix, cleaning round-off drift."""
    m = la.hermitize(la.as_matrix(m))
    tr = float(np.trace(m).real)
    if tr <= 0:
        raise ValueError("state matrix has non-positive trace")
    return DensityMatrix(m / tr)


@dataclass(frozen=True)
class BlochVector:
    """Three real parameters of a qubit state, |s| <= 1."""

    s_x: float
    s_y: float
    s_z: float

    def __post_init__(self):
        if self.norm_sq > 1.0 + BLOCH_TOL:
            raise ValueError(f"Bloch vector norm {np.sqrt(self.norm_sq)} exceeds 1")

    @property
    def norm_sq(self) -> float:
        return self.s_x**2 + self.s_y**2 + self.s_z**2

    def as_array(self) -> np.ndarray:
        return np.array([self.s_x, self.s_y, self.s_z])


def bloch_to_rho(s) -> DensityMatrix:
    """Qubit state (1 + s . sigma)/2 from a Bloch vector (or a 3-sequence)."""
    if not isinstance(s, BlochVector):
        s = BlochVector(*(float(v) for v in s))
    m = (np.eye(2) + s.s_x * SIGMA_X + s.s_y * SIGMA_Y + s.s_z * SIGMA_Z) / 2
    return DensityMatrix(la.hermitize(m))


def rho_to_bloch(rho) -> BlochVector:
    m = state_matrix(rho)
    if m.shape != (2, 2):
        raise ValueError("Bloch coordinates are defined for qubits only")
    return BlochVector(
        la.trace_inner(m, SIGMA_X),
        la.trace_inner(m, SIGMA_Y),
        la.trace_inner(m, SIGMA_Z),
    )


def purity(rho) -> float:
    m = state_matrix(rho)
    return la.trace_inner(m, m)


def von_neumann_entropy(rho) -> float:
    """Entropy -sum(lam log lam) in nats, with 0 log 0 := 0."""
    vals = np.linalg.eigvalsh(la.hermitize(state_matrix(rho)))
    vals = vals[vals > 0.0]
    return float(-np.sum(vals * np.log(vals)))


def truncate_state(m, d_rec: int) -> np.ndarray:
    """Leading d_rec x d_rec sector in the computational basis, not renormalized."""
    m = la.as_matrix(m)
    if d_rec < 1 or d_rec > m.shape[0]:
        raise ValueError(f"d_rec = {d_rec} outside [1, {m.shape[0]}]")
    return np.ascontiguousarray(m[:d_rec, :d_rec])


def maximally_mixed(dim: int) -> DensityMatrix:
    return DensityMatrix(np.eye(dim, dtype=complex) / dim)


def random_density_matrix(dim: int, seed: int, rank: int | None = None) -> DensityMatrix:
    """Full-rank (or fixed-rank) random state, reproducible from the seed."""
    rng = np.random.default_rng(seed)
    r = dim if rank is None else rank
    g = rng.normal(size=(dim, r)) + 1j * rng.normal(size=(dim, r))
    m = g @ g.conj().T
    return DensityMatrix(la.hermitize(m) / float(np.trace(m).real))
