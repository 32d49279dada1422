"""Structured shrinkage targets derived from a base covariance estimate.

Every target here preserves the trace of its input, so convex
combinations of base estimate and target keep the total power; all of
them are Hermitian PSD whenever the input is.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .estimators import scm, scm_leave_one_out
from .hermitian import require_hermitian

__all__ = [
    "scaled_identity_target",
    "diagonal_target",
    "toeplitz_average_target",
    "knowledge_aided_target",
]


def scaled_identity_target(r: np.ndarray) -> np.ndarray:
    """Identity scaled to match the trace of ``r``: (tr r / n) I."""
    r = require_hermitian(r)
    n = r.shape[0]
    return (float(np.trace(r).real) / n) * np.eye(n)


def diagonal_target(r: np.ndarray) -> np.ndarray:
    """Diagonal of ``r`` as a real PSD matrix.

    Rounding dust on the diagonal is clipped to zero; genuinely
    negative diagonal entries are rejected.
    """
    r = require_hermitian(r)
    d = np.diag(r).real.copy()
    scale = max(1.0, float(np.max(np.abs(d)))) if d.size else 1.0
    if np.any(d < -1e-12 * scale):
        raise ValueError("diagonal target requires nonnegative diagonal entries")
    d[d < 0.0] = 0.0
    return np.diag(d)


def toeplitz_average_target(r: np.ndarray) -> np.ndarray:
    """Project ``r`` onto real symmetric Toeplitz structure by band averaging.

    Band ``i`` of the result carries the mean real part of the i-th
    super/sub-diagonal of ``r``; band 0 is tr(r)/n, so the trace is
    preserved exactly.
    """
    r = require_hermitian(r)
    n = r.shape[0]
    first_row = np.empty(n)
    for i in range(n):
        first_row[i] = float(np.mean(np.diagonal(r, offset=i).real))
    return scipy.linalg.toeplitz(first_row)


def knowledge_aided_target(past_samples: np.ndarray) -> np.ndarray:
    """Target learned from an independent block of past samples.

    Returns the convex combination rho R_past + (1 - rho) mu I selected
    by leave-one-out cross-validation on the past block, where R_past is
    its sample covariance and mu I its scaled identity.  The convex
    constraint keeps the trace of R_past, so the target remains a
    calibrated power reference even when the past block is short.
    """
    from .single_target import (
        loocv_moments_general,
        scm_fast_moments,
        shrink,
        solve_quadratic_2d,
    )

    r = scm(past_samples)
    t0 = scaled_identity_target(r)
    count = past_samples.shape[1]
    if count >= 3:
        moments = scm_fast_moments(past_samples, t0)
    else:
        # the closed-form accumulator needs T >= 3; fall back to the
        # explicit leave-one-out covariances for tiny past blocks
        loo = [scm_leave_one_out(r, past_samples, i) for i in range(count)]
        moments = loocv_moments_general(loo, past_samples, t0)
    sol = solve_quadratic_2d(moments, constrained=True)
    return shrink(r, t0, sol)
