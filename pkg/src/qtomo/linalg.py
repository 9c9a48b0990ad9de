"""Dense complex matrix algebra for operators on small Hilbert spaces.

Everything here works on plain ``numpy`` arrays of ``complex128`` treated as
dense row-major matrices. Hilbert-space dimensions in this package stay well
below ~64, so none of the routines attempt to exploit sparsity.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "EIG_CLAMP",
    "EIG_ERROR",
    "as_matrix",
    "hermitize",
    "max_abs",
    "frob",
    "is_hermitian",
    "require_hermitian",
    "kron",
    "partial_trace",
    "eigh",
    "matrix_sqrt_psd",
    "matrix_inv_sqrt_psd",
    "matrix_log_floored",
    "trace_inner",
]

# Eigenvalues in [EIG_CLAMP, 0) are round-off and get clamped to zero by the
# psd routines; anything below EIG_ERROR signals a broken positivity
# invariant upstream and raises.
EIG_CLAMP = -1e-10
EIG_ERROR = -1e-6


def as_matrix(a) -> np.ndarray:
    """Coerce ``a`` to a C-contiguous complex128 2-D array with finite entries."""
    m = np.ascontiguousarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m.view(np.float64))):
        raise ValueError("matrix entries must be finite")
    return m


def hermitize(m: np.ndarray) -> np.ndarray:
    """Hermitian part (m + m^dagger)/2; kills round-off drift after products."""
    return (m + m.conj().T) / 2


def max_abs(m: np.ndarray) -> float:
    return float(np.max(np.abs(m))) if m.size else 0.0


def frob(m: np.ndarray) -> float:
    """Frobenius norm."""
    return float(np.linalg.norm(m))


def is_hermitian(m: np.ndarray, tol: float = 1e-12) -> bool:
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        return False
    return max_abs(m - m.conj().T) <= tol * max(1.0, max_abs(m))


def require_hermitian(m: np.ndarray, what: str = "matrix") -> np.ndarray:
    m = as_matrix(m)
    if not is_hermitian(m):
        raise ValueError(f"{what} is not Hermitian within tolerance")
    return m


def kron(a, b) -> np.ndarray:
    """Tensor (Kronecker) product; dimensions multiply."""
    return np.kron(as_matrix(a), as_matrix(b))


def partial_trace(m, dim_h: int, dim_k: int, traced: str = "K") -> np.ndarray:
    """Trace out one tensor factor of an operator on H (x) K.

    ``traced`` names the factor to remove: "H" (first, dimension ``dim_h``)
    or "K" (second, dimension ``dim_k``). The total trace is preserved.
    """
    m = as_matrix(m)
    d = dim_h * dim_k
    if m.shape != (d, d):
        raise ValueError(
            f"matrix shape {m.shape} does not match dim_h*dim_k = {dim_h}*{dim_k}"
        )
    t = m.reshape(dim_h, dim_k, dim_h, dim_k)
    tag = str(traced).upper()
    if tag == "K":
        return np.ascontiguousarray(np.einsum("ikjk->ij", t))
    if tag == "H":
        return np.ascontiguousarray(np.einsum("kikj->ij", t))
    raise ValueError("traced must be 'H' or 'K'")


def eigh(m) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending.

    Returns ``(vals, vecs)`` with ``m = vecs @ diag(vals) @ vecs^dagger``.
    """
    m = require_hermitian(m)
    return np.linalg.eigh(hermitize(m))


def _psd_eigs(m, what: str) -> tuple[np.ndarray, np.ndarray]:
    vals, vecs = eigh(m)
    if vals.size and float(vals.min()) < EIG_ERROR:
        raise ValueError(
            f"{what}: eigenvalue {vals.min():.3e} below {EIG_ERROR}; "
            "input is not positive semidefinite"
        )
    return vals, vecs


def matrix_sqrt_psd(m) -> np.ndarray:
    """Principal square root of a positive semidefinite Hermitian matrix."""
    vals, vecs = _psd_eigs(m, "matrix_sqrt_psd")
    w = np.sqrt(np.clip(vals, 0.0, None))
    return hermitize((vecs * w) @ vecs.conj().T)


def matrix_inv_sqrt_psd(m, floor: float = 1e-12) -> tuple[np.ndarray, bool]:
    """Inverse square root of a psd matrix with an eigenvalue floor.

    Eigenvalues below ``floor`` are lifted to it before inversion; the second
    return value reports whether the floor engaged (near-singular input).
    """
    if floor <= 0:
        raise ValueError("floor must be positive")
    vals, vecs = _psd_eigs(m, "matrix_inv_sqrt_psd")
    hit = bool(vals.size and float(vals.min()) < floor)
    w = 1.0 / np.sqrt(np.maximum(vals, floor))
    return hermitize((vecs * w) @ vecs.conj().T), hit


def matrix_log_floored(m, floor: float) -> np.ndarray:
    """Matrix logarithm with eigenvalues clamped to ``floor`` before the log.

    Keeps the eigenvectors of ``m``; the clamp makes the log finite for
    rank-deficient psd inputs.
    """
    if floor <= 0:
        raise ValueError("floor must be positive")
    vals, vecs = _psd_eigs(m, "matrix_log_floored")
    w = np.log(np.maximum(vals, floor))
    return hermitize((vecs * w) @ vecs.conj().T)


def trace_inner(a, b) -> float:
    """Real trace inner product Re tr{a b} of two equal-size Hermitian matrices."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    # tr{a b} = sum_ij a_ij b_ji
    return float(np.real(np.sum(a * b.T)))
