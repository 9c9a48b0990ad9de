"""Operator-space machinery: measured/unmeasured subspaces of a POM.

The outcomes of a POM span a subspace of the (dim^2)-dimensional real vector
space of Hermitian operators. Data determine a state only inside that span;
the trace-orthogonal complement is invisible to the measurement.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg as la
from .poms import Pom
from .states import state_matrix

__all__ = ["OperatorBasis", "SubspaceDecomposition", "gram_schmidt_operator_basis", "decompose_state"]

DROP_TOL = 1e-10


@dataclass(frozen=True)
class OperatorBasis:
    """Trace-orthonormal Hermitian basis split into measured span and complement."""

    gamma_meas: tuple[np.ndarray, ...]
    gamma_unmeas: tuple[np.ndarray, ...]

    @property
    def dim(self) -> int:
        return self.gamma_meas[0].shape[0] if self.gamma_meas else self.gamma_unmeas[0].shape[0]

    @property
    def elements(self) -> tuple[np.ndarray, ...]:
        return self.gamma_meas + self.gamma_unmeas

    def is_complete(self) -> bool:
        return len(self.elements) == self.dim**2


@dataclass(frozen=True)
class SubspaceDecomposition:
    """A state split into its measured and unmeasured operator parts."""

    basis: OperatorBasis
    rho_meas: np.ndarray
    rho_unmeas: np.ndarray


def _orthogonalize(candidate: np.ndarray, accepted: list[np.ndarray]) -> np.ndarray | None:
    g = la.hermitize(candidate)
    for b in accepted:
        g = g - la.trace_inner(g, b) * b
    norm = np.sqrt(max(la.trace_inner(g, g), 0.0))
    if norm < DROP_TOL:
        return None
    return g / norm


def gram_schmidt_operator_basis(pom: Pom, rng_seed: int) -> OperatorBasis:
    """Orthonormalize the POM outcomes, then complete the basis randomly.

    Outcomes are processed in order; candidates whose residual after projection
    falls below ``DROP_TOL`` are discarded as linearly dependent. The
    complement is generated from seeded random positive operators so the
    result is reproducible.
    """
    accepted: list[np.ndarray] = []
    for outcome in pom.outcomes:
        g = _orthogonalize(outcome, accepted)
        if g is not None:
            accepted.append(g)
    n_meas = len(accepted)

    dim = pom.dim
    rng = np.random.default_rng(rng_seed)
    guard = 0
    while len(accepted) < dim**2:
        a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        g = _orthogonalize(a @ a.conj().T, accepted)
        if g is not None:
            accepted.append(g)
        guard += 1
        if guard > 100 * dim**2:
            raise RuntimeError("failed to complete the operator basis")
    for g in accepted:
        g.setflags(write=False)
    return OperatorBasis(tuple(accepted[:n_meas]), tuple(accepted[n_meas:]))


def decompose_state(rho, basis: OperatorBasis) -> SubspaceDecomposition:
    """Project a state onto the measured span and its complement."""
    if not basis.is_complete():
        raise ValueError("operator basis is incomplete; cannot decompose")
    m = state_matrix(rho)
    if m.shape[0] != basis.dim:
        raise ValueError("state dimension does not match the basis")
    meas = np.zeros_like(m)
    for g in basis.gamma_meas:
        meas = meas + la.trace_inner(m, g) * g
    unmeas = np.zeros_like(m)
    for g in basis.gamma_unmeas:
        unmeas = unmeas + la.trace_inner(m, g) * g
    return SubspaceDecomposition(basis, la.hermitize(meas), la.hermitize(unmeas))
