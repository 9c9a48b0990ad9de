"""Shared monotone steepest-ascent driver for the iterative estimators.

Each iteration proposes a multiplicative update of the current operator and
keeps it only if the run's ascent objective does not decrease; on a decrease
the step size is halved and the proposal retried. Once objective increments
fall below double-precision resolution the remaining progress is invisible in
the objective, so the driver switches to gating steps on the extremal-equation
defect, which stays measurable down to round-off. Only objective-gated steps
are recorded in the objective trace, which is therefore nondecreasing by
construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

_EPS_GROW = 1.2
_GROW_AFTER = 5
_MAX_HALVINGS = 45
_MAX_RESCUES = 8
_FLAT_FACTOR = 4.0 * np.finfo(float).eps


class BoundaryRescue(Exception):
    """Raised by an evaluator whose probabilities collapsed under the floor.

    Carries a slightly mixed replacement operator from which the iteration can
    resume; for proposal candidates the driver treats it as a plain rejection.
    """

    def __init__(self, replacement):
        super().__init__("probability floor hit")
        self.replacement = replacement


@dataclass
class StepEvaluation:
    objective: float
    defect: float
    propose: Callable[[float], object]


@dataclass
class AscentResult:
    x: object
    objective: float
    defect: float
    trace: list[float]
    iterations: int
    converged: bool


def monotone_ascent(
    x0,
    evaluate: Callable[[object], StepEvaluation],
    *,
    epsilon0: float,
    step_shrink: float,
    grad_tol: float,
    max_iters: int,
    logger=None,
    on_iterate: Callable[[object], None] | None = None,
) -> AscentResult:
    if not (0.0 < step_shrink < 1.0):
        raise ValueError("step_shrink must lie in (0, 1)")
    if epsilon0 <= 0 or grad_tol <= 0:
        raise ValueError("epsilon0 and grad_tol must be positive")

    x = x0
    for _ in range(_MAX_RESCUES):
        try:
            ev = evaluate(x)
            break
        except BoundaryRescue as rescue:
            x = rescue.replacement
    else:
        raise RuntimeError("estimation start is stuck at the probability floor")

    if on_iterate is not None:
        on_iterate(x)
    trace = [ev.objective]
    eps = epsilon0
    streak = 0
    polishing = False
    iterations = 0

    while iterations < max_iters and ev.defect > grad_tol:
        iterations += 1
        stepped = False
        e = eps
        cand = cand_ev = None
        for _ in range(_MAX_HALVINGS):
            try:
                cand = ev.propose(e)
                cand_ev = evaluate(cand)
            except BoundaryRescue:
                e *= step_shrink
                continue
            ok = (cand_ev.defect < ev.defect) if polishing else (cand_ev.objective >= ev.objective)
            if ok:
                stepped = True
                break
            e *= step_shrink
        if not stepped:
            if polishing:
                break
            polishing = True
            continue

        gain = cand_ev.objective - ev.objective
        x, ev = cand, cand_ev
        if on_iterate is not None:
            on_iterate(x)
        if not polishing:
            trace.append(ev.objective)
            if gain <= _FLAT_FACTOR * (1.0 + abs(ev.objective)):
                polishing = True
        if e < eps:
            eps = e
            streak = 0
        else:
            streak += 1
            if streak >= _GROW_AFTER:
                eps = min(eps * _EPS_GROW, epsilon0)
                streak = 0
        if logger is not None:
            logger.debug(
                "iter %d: objective %.12g defect %.3e eps %.3e%s",
                iterations, ev.objective, ev.defect, e, " (polish)" if polishing else "",
            )

    return AscentResult(x, ev.objective, ev.defect, trace, iterations, ev.defect <= grad_tol)
