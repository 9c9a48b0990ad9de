"""Shared test utilities."""

import numpy as np


def assert_monotone_trace(report):
    trace = np.asarray(report.likelihood_trace)
    diffs = np.diff(trace)
    assert trace.size >= 1
    assert np.all(diffs >= 0), f"ascent objective decreased: min step {diffs.min():.3e}"


def random_bloch(rng, max_norm=1.0):
    v = rng.normal(size=3)
    v /= np.linalg.norm(v)
    return v * max_norm * rng.uniform() ** (1 / 3)


def trace_distance(a, b):
    a = np.asarray(getattr(a, "matrix", a))
    b = np.asarray(getattr(b, "matrix", b))
    vals = np.linalg.eigvalsh((a - b + (a - b).conj().T) / 2)
    return 0.5 * float(np.sum(np.abs(vals)))
