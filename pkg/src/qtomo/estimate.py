"""Iterative maximum-likelihood and maximum-entropy state estimation.

All iterative estimators share one steepest-ascent scheme: the state is
updated multiplicatively as (1 + eps T) rho (1 + eps T) / trace, where T is
the (Hermitian) gradient operator of the run's objective, and a step is kept
only if that objective does not decrease. The objective is

* the log-likelihood sum_j n_j log p_j for plain ML on perfect POMs,
* the extended log-likelihood sum_j n_j log(p_j / eta), eta = sum_j p_j, when
  the outcomes do not sum to the identity (lossy detectors), and
* either of the above plus N * lambda * S(rho) for the entropy-regularized
  variants, which is the quantity those runs actually ascend.

``EstimationReport.likelihood_trace`` records the run's ascent objective at
every accepted step, so it is nondecreasing by construction;
``EstimationReport.log_likelihood`` is always the plain (or extended)
log-likelihood of the final estimator without the entropy term.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import linalg as la
from ._ascent import BoundaryRescue, StepEvaluation, monotone_ascent
from .poms import Pom, make_trine
from .sampling import CountsRecord, born_probabilities
from .states import DensityMatrix, bloch_to_rho, density_from_array, state_matrix, von_neumann_entropy

__all__ = [
    "EstimationConfig",
    "EstimationReport",
    "QutritTwoOutcomeMl",
    "log_likelihood",
    "extended_log_likelihood",
    "r_operator",
    "ml_estimate",
    "mlme_estimate",
    "extended_ml_estimate",
    "extended_mlme_estimate",
    "closed_form_von_neumann_mlme",
    "closed_form_trine_mlme",
    "trine_uniqueness_check",
    "qutrit_exception_ml",
]

log = logging.getLogger("qtomo.estimate")

RESCUE_MIX = 1e-9


@dataclass(frozen=True)
class EstimationConfig:
    """Knobs of the steepest-ascent iteration.

    ``lam`` weights the entropy term of the maximum-entropy variants; smaller
    values bias the estimator less (the bias is O(lam)) but select among
    likelihood-equivalent states more slowly. ``log_floor`` is relative to the
    largest eigenvalue when flooring the matrix logarithm.
    """

    epsilon0: float = 0.1
    lam: float = 1e-4
    max_iters: int = 20000
    grad_tol: float = 1e-10
    step_shrink: float = 0.5
    log_floor: float = 1e-12
    p_floor: float = 1e-14

    def __post_init__(self):
        if self.epsilon0 <= 0:
            raise ValueError("epsilon0 must be positive")
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if self.grad_tol <= 0:
            raise ValueError("grad_tol must be positive")
        if not (0.0 < self.step_shrink < 1.0):
            raise ValueError("step_shrink must lie in (0, 1)")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


@dataclass(frozen=True)
class EstimationReport:
    estimator: DensityMatrix
    log_likelihood: float
    entropy: float
    iterations: int
    converged: bool
    residual: float
    likelihood_trace: tuple[float, ...] = field(repr=False)
    eta_hat: float | None = None
    n_emitted_estimate: float | None = None


def _check_alignment(counts: CountsRecord, pom: Pom):
    if len(counts.counts) != pom.n_outcomes:
        raise ValueError(
            f"counts length {len(counts.counts)} does not match "
            f"{pom.n_outcomes} POM outcomes"
        )
    if counts.total < 1:
        raise ValueError("at least one recorded event is required")


def log_likelihood(counts: CountsRecord, rho, pom: Pom) -> float:
    """sum_j n_j log p_j; zero-count outcomes contribute nothing, and an
    impossible observed outcome (p_j <= 0 with n_j > 0) gives -inf."""
    _check_alignment(counts, pom)
    p = born_probabilities(rho, pom)
    n = np.asarray(counts.counts, dtype=float)
    active = n > 0
    if np.any(p[active] <= 0.0):
        return float("-inf")
    return float(np.dot(n[active], np.log(p[active])))


def extended_log_likelihood(counts: CountsRecord, rho, pom: Pom) -> float:
    """Likelihood over relative probabilities p_j / sum_k p_k for lossy POMs."""
    _check_alignment(counts, pom)
    p = born_probabilities(rho, pom)
    eta = float(p.sum())
    if eta <= 0.0:
        return float("-inf")
    n = np.asarray(counts.counts, dtype=float)
    active = n > 0
    if np.any(p[active] <= 0.0):
        return float("-inf")
    return float(np.dot(n[active], np.log(p[active] / eta)))


def r_operator(counts: CountsRecord, rho, pom: Pom, p_floor: float = 1e-14) -> np.ndarray:
    """Gradient operator sum_j (nu_j / p_j) outcome_j over observed outcomes."""
    _check_alignment(counts, pom)
    p = born_probabilities(rho, pom)
    n = np.asarray(counts.counts, dtype=float)
    active = n > 0
    if np.any(p[active] <= p_floor):
        raise ValueError(
            "an observed outcome has probability at the floor; the state sits "
            "on the boundary and needs regularizing before R is defined"
        )
    nu = n / counts.total
    r = np.einsum("j,jab->ab", nu[active] / p[active], pom.stacked()[active])
    return la.hermitize(r)


def _mixed(rho: np.ndarray, dim: int) -> np.ndarray:
    return (1.0 - RESCUE_MIX) * rho + RESCUE_MIX * np.eye(dim, dtype=complex) / dim


def _state_evaluator(counts: CountsRecord, pom: Pom, config: EstimationConfig, lam: float):
    mats = pom.stacked()
    dim = pom.dim
    eye = np.eye(dim, dtype=complex)
    n = np.asarray(counts.counts, dtype=float)
    total = float(counts.total)
    nu = n / total
    active = n > 0
    perfect = pom.is_perfect
    g_sum = pom.sum_operator
    lam_total = lam * total

    def evaluate(rho: np.ndarray) -> StepEvaluation:
        p = np.einsum("jab,ba->j", mats, rho).real
        if np.any(p[active] <= config.p_floor):
            raise BoundaryRescue(_mixed(rho, dim))
        if perfect:
            eta = 1.0
            obj = float(np.dot(n[active], np.log(p[active])))
        else:
            eta = float(p.sum())
            if eta <= config.p_floor:
                raise BoundaryRescue(_mixed(rho, dim))
            obj = float(np.dot(n[active], np.log(p[active] / eta)))
        t_op = np.einsum("j,jab->ab", nu[active] / p[active], mats[active])
        t_op = t_op - (eye if perfect else g_sum / eta)
        if lam > 0.0:
            vals, vecs = np.linalg.eigh(la.hermitize(rho))
            floor = config.log_floor * max(float(vals.max()), 1e-300)
            logw = np.log(np.maximum(vals, floor))
            log_rho = (vecs * logw) @ vecs.conj().T
            pos = np.clip(vals, 0.0, None)
            t_op = t_op - lam * (log_rho - float(np.dot(pos, logw)) * eye)
            nz = pos[pos > 0]
            obj += lam_total * float(-np.dot(nz, np.log(nz)))
        t_op = la.hermitize(t_op)
        defect = la.frob(t_op @ rho)

        def propose(eps: float) -> np.ndarray:
            step = eye + eps * t_op
            cand = la.hermitize(step @ rho @ step)
            tr = float(np.trace(cand).real)
            if not np.isfinite(tr) or tr <= 1e-300:
                raise BoundaryRescue(rho)
            return cand / tr

        return StepEvaluation(obj, defect, propose)

    return evaluate


def _run_state_estimation(
    counts: CountsRecord,
    pom: Pom,
    config: EstimationConfig | None,
    *,
    lam: float,
    require_perfect: bool,
    rho0=None,
    on_iterate=None,
) -> EstimationReport:
    config = config or EstimationConfig()
    _check_alignment(counts, pom)
    if require_perfect and not pom.is_perfect:
        raise ValueError(
            "this estimator requires a perfect POM; use the extended variant "
            "for lossy outcomes"
        )
    dim = pom.dim
    if rho0 is None:
        start = np.eye(dim, dtype=complex) / dim
    else:
        start = state_matrix(rho0)
        if start.shape[0] != dim:
            raise ValueError("initial state dimension does not match the POM")
    result = monotone_ascent(
        start,
        _state_evaluator(counts, pom, config, lam),
        epsilon0=config.epsilon0,
        step_shrink=config.step_shrink,
        grad_tol=config.grad_tol,
        max_iters=config.max_iters,
        logger=log,
        on_iterate=on_iterate,
    )
    estimator = density_from_array(result.x)
    perfect = pom.is_perfect
    if perfect:
        ll = log_likelihood(counts, estimator, pom)
        eta_hat = None
        n_emitted = None
    else:
        ll = extended_log_likelihood(counts, estimator, pom)
        eta_hat = float(born_probabilities(estimator, pom).sum())
        n_emitted = counts.total / eta_hat if eta_hat > 0 else float("inf")
    log.info(
        "estimation finished: %d iterations, converged=%s, residual=%.3e",
        result.iterations, result.converged, result.defect,
    )
    return EstimationReport(
        estimator=estimator,
        log_likelihood=ll,
        entropy=von_neumann_entropy(estimator),
        iterations=result.iterations,
        converged=result.converged,
        residual=result.defect,
        likelihood_trace=tuple(result.trace),
        eta_hat=eta_hat,
        n_emitted_estimate=n_emitted,
    )


def ml_estimate(counts, pom, config=None, rho0=None, on_iterate=None) -> EstimationReport:
    """Maximum-likelihood estimate on a perfect POM via steepest ascent."""
    return _run_state_estimation(
        counts, pom, config, lam=0.0, require_perfect=True, rho0=rho0, on_iterate=on_iterate
    )


def mlme_estimate(counts, pom, config=None, rho0=None, on_iterate=None) -> EstimationReport:
    """Entropy-regularized ML: among likelihood-equivalent states, pick the
    one of largest von Neumann entropy (up to an O(lambda) bias)."""
    config = config or EstimationConfig()
    if config.lam <= 0:
        raise ValueError("mlme_estimate needs config.lam > 0")
    return _run_state_estimation(
        counts, pom, config, lam=config.lam, require_perfect=True, rho0=rho0, on_iterate=on_iterate
    )


def extended_ml_estimate(counts, pom, config=None, rho0=None, on_iterate=None) -> EstimationReport:
    """ML over relative probabilities; handles POMs that sum below the identity.

    On a perfect POM this reduces exactly to :func:`ml_estimate`. The report's
    ``n_emitted_estimate`` is total detections divided by the estimated
    detection probability.
    """
    return _run_state_estimation(
        counts, pom, config, lam=0.0, require_perfect=False, rho0=rho0, on_iterate=on_iterate
    )


def extended_mlme_estimate(counts, pom, config=None, rho0=None, on_iterate=None) -> EstimationReport:
    """Entropy-regularized extended ML for lossy POMs."""
    config = config or EstimationConfig()
    if config.lam <= 0:
        raise ValueError("extended_mlme_estimate needs config.lam > 0")
    return _run_state_estimation(
        counts, pom, config, lam=config.lam, require_perfect=False, rho0=rho0, on_iterate=on_iterate
    )


def closed_form_von_neumann_mlme(counts: CountsRecord, basis) -> DensityMatrix:
    """Diagonal-in-the-measurement-basis estimator with the frequencies as weights."""
    b = la.as_matrix(basis)
    if la.max_abs(b.conj().T @ b - np.eye(b.shape[0])) > 1e-10:
        raise ValueError("basis columns are not orthonormal")
    if len(counts.counts) != b.shape[1]:
        raise ValueError("counts length must equal the basis size")
    nu = counts.frequencies
    return DensityMatrix(la.hermitize((b * nu) @ b.conj().T))


def closed_form_trine_mlme(counts: CountsRecord) -> DensityMatrix | None:
    """Closed-form entropy-maximal estimator for trine data.

    Valid only while the implied Bloch vector stays inside the ball; returns
    None when the data are inconsistent with any state, in which case the
    caller should fall back to the iterative estimator.
    """
    if len(counts.counts) != 3:
        raise ValueError("trine data have exactly three counts")
    nu = counts.frequencies
    s_x = np.sqrt(3.0) * (nu[1] - nu[2])
    s_z = 3.0 * nu[0] - 1.0
    norm_sq = s_x**2 + s_z**2
    if norm_sq > 1.0 + 1e-12:
        return None
    if norm_sq > 1.0:
        scale = 1.0 / np.sqrt(norm_sq)
        s_x, s_z = s_x * scale, s_z * scale
    return bloch_to_rho((s_x, 0.0, s_z))


def trine_uniqueness_check(counts: CountsRecord) -> tuple[bool, DensityMatrix | None]:
    """True when the Bloch circle condition pins the trine ML estimator.

    The data fix (s_x, s_z); when 3 (nu_2 - nu_3)^2 + (3 nu_1 - 1)^2 equals 1
    the remaining free coordinate is forced to zero and the (pure) estimator
    is returned alongside the flag.
    """
    if len(counts.counts) != 3:
        raise ValueError("trine data have exactly three counts")
    nu = counts.frequencies
    lhs = 3.0 * (nu[1] - nu[2]) ** 2 + (3.0 * nu[0] - 1.0) ** 2
    if abs(lhs - 1.0) > 1e-9:
        return False, None
    s_x = np.sqrt(3.0) * (nu[1] - nu[2])
    s_z = 2.0 - 3.0 * nu[1] - 3.0 * nu[2]
    norm = np.hypot(s_x, s_z)
    if norm > 1.0:
        s_x, s_z = s_x / norm, s_z / norm
    return True, bloch_to_rho((s_x, 0.0, s_z))


@dataclass(frozen=True)
class QutritTwoOutcomeMl:
    """ML solution set for the two-outcome qutrit measurement.

    Only the third diagonal entry is determined by the data; the upper 2x2
    block is free. ``boundary_non_unique`` flags the measure-zero situation
    where even inconsistent data leave a convex set of boundary estimators.
    """

    rho33: float
    boundary_non_unique: bool
    representative: DensityMatrix


def qutrit_exception_ml(counts: CountsRecord) -> QutritTwoOutcomeMl:
    if len(counts.counts) != 2:
        raise ValueError("the two-outcome qutrit POM has exactly two counts")
    n1, n2 = counts.counts
    if n1 + n2 == 0:
        raise ValueError("at least one recorded event is required")
    raw = 3.0 * (n2 - n1) / (n1 + n2)
    rho33 = min(max(raw, 0.0), 1.0)
    rep = DensityMatrix(np.diag([(1 - rho33) / 2, (1 - rho33) / 2, rho33]).astype(complex))
    return QutritTwoOutcomeMl(rho33=rho33, boundary_non_unique=raw <= 0.0, representative=rep)


def is_trine_pom(pom: Pom, tol: float = 1e-9) -> bool:
    """Outcome-wise match against the symmetric trine (used for dispatch)."""
    if pom.dim != 2 or pom.n_outcomes != 3:
        return False
    ref = make_trine()
    return all(la.max_abs(a - b) <= tol for a, b in zip(pom.outcomes, ref.outcomes))
