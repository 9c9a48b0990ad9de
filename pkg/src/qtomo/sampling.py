"""Outcome probabilities and synthetic measurement data.

Sampling uses numpy's PCG64 generator seeded through ``SeedSequence``; child
streams for multi-input datasets are derived with ``SeedSequence.spawn``, so
identical seeds reproduce datasets bit-exactly across platforms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg as la
from .poms import Pom
from .states import DensityMatrix, state_matrix

__all__ = [
    "CountsRecord",
    "ProcessDataset",
    "born_probabilities",
    "sample_counts",
    "process_probabilities",
    "simulate_process_dataset",
]

PROB_CLAMP = -1e-12
NORM_TOL = 1e-9


@dataclass(frozen=True)
class CountsRecord:
    """Per-outcome occurrence counts; ``total`` is the number of recorded events.

    For lossy measurements the copies that triggered no detector are kept out
    of ``counts`` and reported separately in ``n_undetected``.
    """

    counts: tuple[int, ...]
    n_undetected: int | None = None
    seed: int | None = None

    def __post_init__(self):
        cleaned = tuple(int(c) for c in self.counts)
        if any(c < 0 for c in cleaned):
            raise ValueError("counts must be nonnegative")
        if self.n_undetected is not None and self.n_undetected < 0:
            raise ValueError("n_undetected must be nonnegative")
        object.__setattr__(self, "counts", cleaned)

    @property
    def total(self) -> int:
        return int(sum(self.counts))

    @property
    def frequencies(self) -> np.ndarray:
        if self.total == 0:
            raise ValueError("no recorded events; frequencies undefined")
        return np.asarray(self.counts, dtype=float) / self.total


@dataclass(frozen=True)
class ProcessDataset:
    """Counts from sending N copies of each input state through a channel."""

    input_states: tuple[DensityMatrix, ...]
    pom: Pom
    counts: np.ndarray  # shape (L, M)
    copies_per_input: int
    n_undetected: tuple[int, ...] | None = None
    seed: int | None = None

    def __post_init__(self):
        if not self.input_states:
            raise ValueError("need at least one input state")
        dims = {s.dim for s in self.input_states}
        if len(dims) != 1:
            raise ValueError("input states have inconsistent dimensions")
        c = np.asarray(self.counts, dtype=int)
        if c.shape != (len(self.input_states), self.pom.n_outcomes):
            raise ValueError(
                f"counts shape {c.shape} does not match (inputs, outcomes) = "
                f"({len(self.input_states)}, {self.pom.n_outcomes})"
            )
        if c.min() < 0:
            raise ValueError("counts must be nonnegative")
        if self.pom.is_perfect and np.any(c.sum(axis=1) != self.copies_per_input):
            raise ValueError("perfect POM: per-input counts must sum to copies_per_input")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    @property
    def n_inputs(self) -> int:
        return len(self.input_states)

    @property
    def dim_in(self) -> int:
        return self.input_states[0].dim

    @property
    def dim_out(self) -> int:
        return self.pom.dim


def born_probabilities(rho, pom: Pom) -> np.ndarray:
    """Outcome probabilities Re tr{rho outcome_j}, clamped at round-off zero."""
    m = state_matrix(rho)
    if m.shape[0] != pom.dim:
        raise ValueError(f"state dim {m.shape[0]} does not match POM dim {pom.dim}")
    p = np.einsum("jab,ba->j", pom.stacked(), m).real
    if p.min() < PROB_CLAMP:
        raise ValueError(f"probability {p.min():.3e} below the clamp window")
    return np.clip(p, 0.0, None)


def sample_counts(rho, pom: Pom, n_total: int, seed: int) -> CountsRecord:
    """Multinomial draw of ``n_total`` copies measured by the POM.

    For imperfect POMs an implicit no-detection bucket with probability
    1 - sum(p) absorbs the lost copies; only detections enter ``counts``.
    """
    if n_total < 0:
        raise ValueError("n_total must be nonnegative")
    p = born_probabilities(rho, pom)
    total_p = float(p.sum())
    if total_p > 1.0 + NORM_TOL:
        raise ValueError(f"probabilities sum to {total_p} > 1")
    if pom.is_perfect and abs(total_p - 1.0) > NORM_TOL:
        raise ValueError(f"perfect POM probabilities sum to {total_p}, not 1")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    if pom.is_perfect:
        draw = rng.multinomial(n_total, p / total_p) if n_total else np.zeros(p.size, int)
        return CountsRecord(tuple(int(c) for c in draw), n_undetected=None, seed=seed)
    p_ext = np.append(p, max(1.0 - total_p, 0.0))
    p_ext /= p_ext.sum()
    draw = rng.multinomial(n_total, p_ext) if n_total else np.zeros(p_ext.size, int)
    return CountsRecord(tuple(int(c) for c in draw[:-1]), n_undetected=int(draw[-1]), seed=seed)


def process_probabilities(e, inputs, pom: Pom) -> np.ndarray:
    """Joint probabilities p[l, m] = tr{E (input_l^T (x) outcome_m)} / L."""
    from .processes import ChoiOperator  # local import to avoid a cycle

    if not isinstance(e, ChoiOperator):
        raise TypeError("e must be a ChoiOperator")
    inputs = tuple(inputs)
    n_l = len(inputs)
    if n_l == 0:
        raise ValueError("need at least one input state")
    mats = [state_matrix(s) for s in inputs]
    if any(m.shape[0] != e.dim_in for m in mats):
        raise ValueError("input dimension does not match the channel")
    if pom.dim != e.dim_out:
        raise ValueError("POM dimension does not match the channel output")
    out = np.empty((n_l, pom.n_outcomes))
    for l, m in enumerate(mats):
        for j, outcome in enumerate(pom.outcomes):
            eff = la.kron(m.T, outcome)
            out[l, j] = float(np.real(np.sum(e.matrix * eff.T))) / n_l
    if out.min() < PROB_CLAMP:
        raise ValueError("negative process probability beyond round-off")
    return np.clip(out, 0.0, None)


def simulate_process_dataset(e, inputs, pom: Pom, n_per_input: int, seed: int) -> ProcessDataset:
    """Sample counts for each input state; one child RNG stream per input."""
    from .processes import choi_apply

    inputs = tuple(inputs)
    if n_per_input < 0:
        raise ValueError("n_per_input must be nonnegative")
    children = np.random.SeedSequence(seed).spawn(len(inputs))
    rows = []
    undetected = []
    for child, state in zip(children, inputs):
        rho_out = choi_apply(e, state)
        p = born_probabilities(rho_out, pom)
        total_p = float(p.sum())
        rng = np.random.default_rng(child)
        if pom.is_perfect:
            draw = rng.multinomial(n_per_input, p / total_p) if n_per_input else np.zeros(p.size, int)
            rows.append(draw)
            undetected.append(0)
        else:
            p_ext = np.append(p, max(1.0 - total_p, 0.0))
            p_ext /= p_ext.sum()
            draw = rng.multinomial(n_per_input, p_ext) if n_per_input else np.zeros(p_ext.size, int)
            rows.append(draw[:-1])
            undetected.append(int(draw[-1]))
    dms = tuple(s if isinstance(s, DensityMatrix) else DensityMatrix(state_matrix(s)) for s in inputs)
    return ProcessDataset(
        dms,
        pom,
        np.asarray(rows, dtype=int),
        n_per_input,
        n_undetected=tuple(undetected) if not pom.is_perfect else None,
        seed=seed,
    )
