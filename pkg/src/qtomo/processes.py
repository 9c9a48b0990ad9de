"""Quantum processes: Kraus / Choi / chi representations and their estimation.

A channel from a D_i- to a D_o-dimensional space is carried around as a
positive (D_i*D_o)-dimensional matrix on the tensor product of an input copy
(first factor, "H") and the output space (second factor, "K"); trace
preservation reads tr_K{E} = 1_H. The constrained steepest-ascent iteration
renormalizes every step through the inverse square root of that partial
trace, so trace preservation holds at machine precision for every iterate.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import linalg as la
from ._ascent import BoundaryRescue, StepEvaluation, monotone_ascent
from .estimate import EstimationConfig
from .sampling import ProcessDataset
from .states import DensityMatrix, SIGMA_X, SIGMA_Y, SIGMA_Z, density_from_array, state_matrix

__all__ = [
    "ChoiOperator",
    "KrausSet",
    "ChiMatrix",
    "ProcessEstimationReport",
    "kraus_to_choi",
    "kraus_apply",
    "choi_apply",
    "choi_to_chi",
    "chi_to_choi",
    "kraus_to_chi",
    "pauli_operator_basis",
    "matrix_unit_basis",
    "process_entropy",
    "w_ml_operator",
    "w0_operator",
    "qpt_ml_estimate",
    "qpt_mlme_estimate",
    "hs_process_error",
    "sequential_stopping",
    "random_tp_kraus",
    "random_tp_choi",
]

log = logging.getLogger("qtomo.processes")

PSD_TOL = -1e-10
TP_TOL = 1e-9
RENORM_FLOOR = 1e-12
RESCUE_MIX = 1e-9


@dataclass(frozen=True)
class ChoiOperator:
    """Positive matrix on input-copy (x) output space representing a channel."""

    dim_in: int
    dim_out: int
    matrix: np.ndarray

    def __post_init__(self):
        m = la.require_hermitian(self.matrix, "process matrix")
        d = self.dim_in * self.dim_out
        if m.shape != (d, d):
            raise ValueError(f"matrix shape {m.shape} does not match dims {self.dim_in}x{self.dim_out}")
        lo = float(np.linalg.eigvalsh(la.hermitize(m)).min())
        if lo < PSD_TOL:
            raise ValueError(f"process matrix has negative eigenvalue {lo:.3e}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def trace_preserving(self) -> bool:
        reduced = la.partial_trace(self.matrix, self.dim_in, self.dim_out, "K")
        return la.frob(reduced - np.eye(self.dim_in)) <= TP_TOL


@dataclass(frozen=True)
class KrausSet:
    """Operators K_m with sum K^dagger K bounded by the identity."""

    operators: tuple[np.ndarray, ...]

    def __post_init__(self):
        if not self.operators:
            raise ValueError("need at least one Kraus operator")
        mats = tuple(la.as_matrix(k) for k in self.operators)
        shape = mats[0].shape
        if any(k.shape != shape for k in mats):
            raise ValueError("Kraus operators must share one shape")
        gram = sum(k.conj().T @ k for k in mats)
        hi = float(np.linalg.eigvalsh(la.hermitize(gram)).max())
        if hi > 1.0 + 1e-10:
            raise ValueError(f"sum K^dagger K exceeds the identity (max eig {hi})")
        for k in mats:
            k.setflags(write=False)
        object.__setattr__(self, "operators", mats)

    @property
    def dim_out(self) -> int:
        return self.operators[0].shape[0]

    @property
    def dim_in(self) -> int:
        return self.operators[0].shape[1]


def kraus_to_choi(k: KrausSet) -> ChoiOperator:
    """Stack each operator into a ket on input-copy (x) output and sum the
    rank-one projectors; the rank equals the number of independent operators."""
    e = np.zeros((k.dim_in * k.dim_out,) * 2, dtype=complex)
    for op in k.operators:
        v = np.ascontiguousarray(op.T).reshape(-1)
        e += np.outer(v, v.conj())
    return ChoiOperator(k.dim_in, k.dim_out, la.hermitize(e))


def kraus_apply(k: KrausSet, rho) -> np.ndarray:
    """Direct channel action sum_m K rho K^dagger (unnormalized output)."""
    m = state_matrix(rho)
    out = np.zeros((k.dim_out, k.dim_out), dtype=complex)
    for op in k.operators:
        out += op @ m @ op.conj().T
    return la.hermitize(out)


def choi_apply(e: ChoiOperator, rho_in) -> DensityMatrix:
    """Channel output tr_H{E (rho^T (x) 1)} for a trace-preserving process."""
    m = state_matrix(rho_in)
    if m.shape[0] != e.dim_in:
        raise ValueError(f"input dim {m.shape[0]} does not match channel dim {e.dim_in}")
    big = e.matrix @ la.kron(m.T, np.eye(e.dim_out))
    out = la.partial_trace(big, e.dim_in, e.dim_out, "H")
    tr = float(np.trace(out).real)
    if abs(tr - 1.0) > 1e-9:
        raise ValueError(f"output trace {tr}; the process is not trace-preserving")
    return density_from_array(out)


def pauli_operator_basis() -> tuple[np.ndarray, ...]:
    """Trace-orthonormal qubit operator basis {1, sigma_x, sigma_y, sigma_z}/sqrt(2)."""
    s = np.sqrt(2.0)
    return (np.eye(2, dtype=complex) / s, SIGMA_X / s, SIGMA_Y / s, SIGMA_Z / s)


def matrix_unit_basis(dim_out: int, dim_in: int) -> tuple[np.ndarray, ...]:
    """Matrix units |a><i| as a trace-orthonormal basis of D_o x D_i operators."""
    out = []
    for a in range(dim_out):
        for i in range(dim_in):
            m = np.zeros((dim_out, dim_in), dtype=complex)
            m[a, i] = 1.0
            out.append(m)
    return tuple(out)


def _check_operator_basis(basis) -> tuple[tuple[np.ndarray, ...], int, int]:
    mats = tuple(la.as_matrix(b) for b in basis)
    if not mats:
        raise ValueError("empty operator basis")
    do, di = mats[0].shape
    if any(b.shape != (do, di) for b in mats):
        raise ValueError("basis operators must share one shape")
    if len(mats) != di * do:
        raise ValueError(f"basis must contain dim_in*dim_out = {di * do} operators")
    for j, bj in enumerate(mats):
        for k, bk in enumerate(mats):
            val = complex(np.trace(bj.conj().T @ bk))
            want = 1.0 if j == k else 0.0
            if abs(val - want) > 1e-10:
                raise ValueError("basis is not trace-orthonormal")
    return mats, di, do


@dataclass(frozen=True)
class ChiMatrix:
    """The same channel written in a trace-orthonormal operator basis."""

    basis: tuple[np.ndarray, ...]
    matrix: np.ndarray

    def __post_init__(self):
        mats, di, do = _check_operator_basis(self.basis)
        m = la.require_hermitian(self.matrix, "chi matrix")
        if m.shape != (di * do, di * do):
            raise ValueError("chi matrix size must match the basis size")
        lo = float(np.linalg.eigvalsh(la.hermitize(m)).min())
        if lo < PSD_TOL:
            raise ValueError(f"chi matrix has negative eigenvalue {lo:.3e}")
        m.setflags(write=False)
        object.__setattr__(self, "basis", mats)
        object.__setattr__(self, "matrix", m)

    @property
    def dim_out(self) -> int:
        return self.basis[0].shape[0]

    @property
    def dim_in(self) -> int:
        return self.basis[0].shape[1]


def _basis_unitary(mats, di: int) -> np.ndarray:
    """Columns are the kets obtained by stacking each basis operator."""
    cols = [np.ascontiguousarray(b.T).reshape(-1) for b in mats]
    return np.stack(cols, axis=1)


def choi_to_chi(e: ChoiOperator, basis) -> ChiMatrix:
    """Rotate the process matrix into the operator basis; the two descriptions
    are unitarily equivalent and share their eigenvalues."""
    mats, di, do = _check_operator_basis(basis)
    if (di, do) != (e.dim_in, e.dim_out):
        raise ValueError("basis dimensions do not match the channel")
    u = _basis_unitary(mats, di)
    chi = la.hermitize((u.conj().T @ e.matrix @ u).T)
    return ChiMatrix(mats, chi)


def chi_to_choi(chi: ChiMatrix) -> ChoiOperator:
    u = _basis_unitary(chi.basis, chi.dim_in)
    e = la.hermitize(u @ chi.matrix.T @ u.conj().T)
    return ChoiOperator(chi.dim_in, chi.dim_out, e)


def kraus_to_chi(k: KrausSet, basis) -> ChiMatrix:
    """chi_{j j'} = sum_m conj(k_{m j}) k_{m j'} from the expansion
    coefficients k_{m j} = tr{B_j^dagger K_m}."""
    mats, di, do = _check_operator_basis(basis)
    if (di, do) != (k.dim_in, k.dim_out):
        raise ValueError("basis dimensions do not match the Kraus set")
    coeff = np.array([[complex(np.trace(b.conj().T @ op)) for b in mats] for op in k.operators])
    chi = la.hermitize(np.einsum("mj,mk->jk", coeff.conj(), coeff))
    return ChiMatrix(mats, chi)


def process_entropy(e: ChoiOperator) -> float:
    """Entropy of E/D_i; zero exactly for (rank-one) unitary processes."""
    vals = np.linalg.eigvalsh(la.hermitize(e.matrix)) / e.dim_in
    vals = vals[vals > 0.0]
    return float(-np.sum(vals * np.log(vals)))


def hs_process_error(e1: ChoiOperator, e2: ChoiOperator) -> float:
    """Squared Hilbert-Schmidt distance tr{(E1-E2)^2} / (2 D_i)."""
    if (e1.dim_in, e1.dim_out) != (e2.dim_in, e2.dim_out):
        raise ValueError("channels have different dimensions")
    diff = e1.matrix - e2.matrix
    return float(la.frob(diff) ** 2 / (2.0 * e1.dim_in))


def sequential_stopping(reports, threshold: float) -> bool:
    """Stop growing the input set once consecutive estimates agree.

    True when the Hilbert-Schmidt error between the last two estimates is at
    most ``threshold``.
    """
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    items = [getattr(r, "estimator", r) for r in reports]
    if len(items) < 2:
        raise ValueError("need at least two estimates to compare")
    return hs_process_error(items[-2], items[-1]) <= threshold


def _dataset_effects(dataset: ProcessDataset) -> np.ndarray:
    mats_in = [s.matrix for s in dataset.input_states]
    pom_mats = dataset.pom.stacked()
    return np.stack(
        [np.kron(m.T, pi) / dataset.n_inputs for m in mats_in for pi in pom_mats]
    )


def _joint_probabilities(dataset: ProcessDataset, e_matrix: np.ndarray) -> np.ndarray:
    effects = _dataset_effects(dataset)
    flat = effects.transpose(0, 2, 1).reshape(len(effects), -1)
    return (flat @ e_matrix.reshape(-1)).real


def w_ml_operator(dataset: ProcessDataset, e: ChoiOperator, p_floor: float = 1e-14) -> np.ndarray:
    """Gradient operator sum_{lm} (nu_lm / p_lm) input_l^T (x) outcome_m / L."""
    effects = _dataset_effects(dataset)
    flat = effects.transpose(0, 2, 1).reshape(len(effects), -1)
    p = (flat @ e.matrix.reshape(-1)).real
    n = dataset.counts.reshape(-1).astype(float)
    active = n > 0
    if np.any(p[active] <= p_floor):
        raise ValueError("an observed outcome has probability at the floor")
    nu = n / n.sum()
    w = np.einsum("j,jab->ab", nu[active] / p[active], effects[active])
    return la.hermitize(w)


def w0_operator(dataset: ProcessDataset, e: ChoiOperator) -> np.ndarray:
    """Correction subtracted from W when the POM does not sum to the identity."""
    g_sum = dataset.pom.sum_operator
    p = _joint_probabilities(dataset, e.matrix)
    eta = float(p.sum())
    if eta <= 0:
        raise ValueError("total detection probability vanished")
    base = sum(np.kron(s.matrix.T, g_sum) for s in dataset.input_states) / dataset.n_inputs
    return la.hermitize(base / eta)


@dataclass(frozen=True)
class ProcessEstimationReport:
    estimator: ChoiOperator
    log_likelihood: float
    entropy: float
    iterations: int
    converged: bool
    residual: float
    likelihood_trace: tuple[float, ...] = field(repr=False)
    tp_defect_max: float = 0.0
    renormalizer_floor_hits: int = 0
    eta_hat: float | None = None
    n_emitted_estimate: float | None = None


def _process_evaluator(dataset: ProcessDataset, config: EstimationConfig, lam: float, floor_hits: list):
    di, do = dataset.dim_in, dataset.dim_out
    d = di * do
    effects = _dataset_effects(dataset)
    eff_flat = np.ascontiguousarray(effects.transpose(0, 2, 1).reshape(len(effects), -1))
    n = dataset.counts.reshape(-1).astype(float)
    total = float(n.sum())
    nu = n / total
    active = n > 0
    perfect = dataset.pom.is_perfect
    eye_big = np.eye(d, dtype=complex)
    eye_out = np.eye(do, dtype=complex)
    if not perfect:
        g_sum = dataset.pom.sum_operator
        w0_base = sum(np.kron(s.matrix.T, g_sum) for s in dataset.input_states) / dataset.n_inputs
    lam_total = lam * total

    def rescue(e_mat: np.ndarray) -> np.ndarray:
        return (1.0 - RESCUE_MIX) * e_mat + RESCUE_MIX * eye_big / do

    def evaluate(e_mat: np.ndarray) -> StepEvaluation:
        p = (eff_flat @ e_mat.reshape(-1)).real
        if np.any(p[active] <= config.p_floor):
            raise BoundaryRescue(rescue(e_mat))
        if perfect:
            obj = float(np.dot(n[active], np.log(p[active])))
        else:
            eta = float(p.sum())
            if eta <= config.p_floor:
                raise BoundaryRescue(rescue(e_mat))
            obj = float(np.dot(n[active], np.log(p[active] / eta)))
        w = np.einsum("j,jab->ab", nu[active] / p[active], effects[active])
        if not perfect:
            w = w - w0_base / eta
        if lam > 0.0:
            vals, vecs = np.linalg.eigh(la.hermitize(e_mat))
            scaled = vals / di
            floor = config.log_floor * max(float(scaled.max()), 1e-300)
            logw = np.log(np.maximum(scaled, floor))
            log_scaled = (vecs * logw) @ vecs.conj().T
            w = w - (lam / di) * (eye_big + log_scaled)
            q = np.clip(scaled, 0.0, None)
            nz = q[q > 0]
            obj += lam_total * float(-np.dot(nz, np.log(nz)))
        w = la.hermitize(w)
        we = w @ e_mat
        if perfect:
            lam_h = la.matrix_sqrt_psd(la.partial_trace(we @ w, di, do, "K"))
        else:
            # the corrected gradient W - W0 can have an indefinite constraint
            # multiplier, so take it from the stationarity condition directly
            lam_h = la.hermitize(la.partial_trace(we, di, do, "K"))
        defect = la.frob(we - np.kron(lam_h, eye_out) @ e_mat)

        def propose(eps: float) -> np.ndarray:
            center = la.partial_trace(we + e_mat @ w, di, do, "K")
            da = (eps / 2.0) * (w - 0.5 * np.kron(center, eye_out))
            f = eye_big + da
            sand = la.hermitize(f.conj().T @ e_mat @ f)
            s_h = la.partial_trace(sand, di, do, "K")
            s_inv, hit = la.matrix_inv_sqrt_psd(la.hermitize(s_h), floor=RENORM_FLOOR)
            if hit:
                floor_hits[0] += 1
            renorm = np.kron(s_inv, eye_out)
            return la.hermitize(renorm @ sand @ renorm)

        return StepEvaluation(obj, defect, propose)

    return evaluate


def _run_process_estimation(
    dataset: ProcessDataset,
    config: EstimationConfig | None,
    *,
    lam: float,
    e0: ChoiOperator | None,
    on_iterate=None,
) -> ProcessEstimationReport:
    config = config or EstimationConfig()
    if dataset.counts.sum() < 1:
        raise ValueError("at least one recorded event is required")
    di, do = dataset.dim_in, dataset.dim_out
    if e0 is None:
        start = np.eye(di * do, dtype=complex) / do
    else:
        if (e0.dim_in, e0.dim_out) != (di, do):
            raise ValueError("initial process dimensions do not match the dataset")
        if not e0.trace_preserving:
            raise ValueError("initial process must be trace-preserving")
        start = np.array(e0.matrix)

    floor_hits = [0]
    tp_max = [0.0]
    eye_in = np.eye(di)

    def hook(e_mat):
        tp_max[0] = max(
            tp_max[0], la.frob(la.partial_trace(e_mat, di, do, "K") - eye_in)
        )
        if on_iterate is not None:
            on_iterate(e_mat)

    result = monotone_ascent(
        start,
        _process_evaluator(dataset, config, lam, floor_hits),
        epsilon0=config.epsilon0,
        step_shrink=config.step_shrink,
        grad_tol=config.grad_tol,
        max_iters=config.max_iters,
        logger=log,
        on_iterate=hook,
    )
    est_mat = la.hermitize(result.x)
    lo = float(np.linalg.eigvalsh(est_mat).min())
    if lo < 0.0:
        # kill round-off negatives before wrapping
        vals, vecs = np.linalg.eigh(est_mat)
        est_mat = la.hermitize((vecs * np.clip(vals, 0.0, None)) @ vecs.conj().T)
    estimator = ChoiOperator(di, do, est_mat)
    p = _joint_probabilities(dataset, estimator.matrix)
    n = dataset.counts.reshape(-1).astype(float)
    active = n > 0
    if dataset.pom.is_perfect:
        ll = float(np.dot(n[active], np.log(p[active])))
        eta_hat = None
        n_emitted = None
    else:
        eta_hat = float(p.sum())
        ll = float(np.dot(n[active], np.log(p[active] / eta_hat)))
        n_emitted = float(n.sum()) / eta_hat if eta_hat > 0 else float("inf")
    log.info(
        "process estimation finished: %d iterations, converged=%s, residual=%.3e",
        result.iterations, result.converged, result.defect,
    )
    return ProcessEstimationReport(
        estimator=estimator,
        log_likelihood=ll,
        entropy=process_entropy(estimator),
        iterations=result.iterations,
        converged=result.converged,
        residual=result.defect,
        likelihood_trace=tuple(result.trace),
        tp_defect_max=tp_max[0],
        renormalizer_floor_hits=floor_hits[0],
        eta_hat=eta_hat,
        n_emitted_estimate=n_emitted,
    )


def qpt_ml_estimate(dataset, config=None, e0=None, on_iterate=None) -> ProcessEstimationReport:
    """Constrained ML process estimation; every iterate is trace-preserving."""
    return _run_process_estimation(dataset, config, lam=0.0, e0=e0, on_iterate=on_iterate)


def qpt_mlme_estimate(dataset, config=None, e0=None, on_iterate=None) -> ProcessEstimationReport:
    """Entropy-regularized process estimation.

    With lam = 0 the trajectory coincides with :func:`qpt_ml_estimate`.
    """
    config = config or EstimationConfig()
    return _run_process_estimation(dataset, config, lam=config.lam, e0=e0, on_iterate=on_iterate)


def random_tp_kraus(dim_in: int, dim_out: int, n_kraus: int, seed: int) -> KrausSet:
    """Exactly trace-preserving random Kraus set from a random isometry."""
    if dim_out * n_kraus < dim_in:
        raise ValueError("need dim_out * n_kraus >= dim_in for an isometry")
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(dim_out * n_kraus, dim_in)) + 1j * rng.normal(size=(dim_out * n_kraus, dim_in))
    q, _ = np.linalg.qr(g)
    ops = tuple(np.ascontiguousarray(q[m * dim_out:(m + 1) * dim_out, :]) for m in range(n_kraus))
    return KrausSet(ops)


def random_tp_choi(dim_in: int, dim_out: int, seed: int, n_kraus: int | None = None) -> ChoiOperator:
    n_kraus = n_kraus if n_kraus is not None else dim_in * dim_out
    return kraus_to_choi(random_tp_kraus(dim_in, dim_out, n_kraus, seed))
