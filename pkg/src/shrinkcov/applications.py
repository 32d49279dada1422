"""Array-processing consumers of covariance estimates.

Minimum-variance distortionless beamforming, pilot-based channel
estimation, and linear detection all take a covariance (or channel
covariance) estimate as input; better-conditioned estimates translate
directly into output SINR or estimation error.  These helpers are the
fixed downstream stages used by the experiment harness.
"""

from __future__ import annotations

import numpy as np

from .hermitian import hermitize, require_hermitian

__all__ = [
    "ula_steering",
    "mvdr_weights",
    "mvdr_weights_pseudo",
    "output_sinr",
    "mmse_channel_estimate",
    "ls_to_channel_cov",
    "lmmse_detect",
]


def ula_steering(theta: float, n: int) -> np.ndarray:
    """Steering vector of an n-element half-wavelength uniform linear array.

    ``theta`` is the arrival angle in radians measured from broadside.
    """
    return np.exp(-1j * np.pi * np.arange(n) * np.sin(theta))


def _solve_pd(cov: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve cov @ x = rhs for Hermitian positive definite cov."""
    cov = require_hermitian(cov)
    try:
        np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise ValueError("covariance must be positive definite") from None
    return np.linalg.solve(cov, rhs)


def mvdr_weights(cov: np.ndarray, steering: np.ndarray) -> np.ndarray:
    """Distortionless minimum-variance weights cov^-1 s / (s^H cov^-1 s).

    Requires a positive definite covariance; use
    :func:`mvdr_weights_pseudo` for rank-deficient estimates.
    """
    q = _solve_pd(cov, steering)
    denom = float(np.vdot(steering, q).real)
    return q / denom


def mvdr_weights_pseudo(cov: np.ndarray, steering: np.ndarray) -> np.ndarray:
    """Minimum-variance weights through the eigenvalue pseudoinverse.

    Eigenvalues below the usual rank cutoff are dropped rather than
    inverted, so sample covariances with T < N remain usable.  Raises if
    the steering vector is orthogonal to the retained subspace (the
    distortionless constraint is then unsatisfiable).
    """
    cov = require_hermitian(cov)
    w, v = np.linalg.eigh(hermitize(cov))
    cutoff = cov.shape[0] * np.finfo(float).eps * max(float(w[-1]), 0.0)
    keep = w > cutoff
    if not np.any(keep):
        raise ValueError("covariance has no positive eigenvalues")
    coords = v[:, keep].conj().T @ steering
    q = v[:, keep] @ (coords / w[keep])
    denom = float(np.vdot(steering, q).real)
    if denom <= 1e-14:
        raise ValueError("steering vector is orthogonal to the covariance "
                         "range; distortionless weights do not exist")
    return q / denom


def output_sinr(weights: np.ndarray, steering: np.ndarray, signal_power: float,
                interference_cov: np.ndarray) -> float:
    """Output SINR of a beamformer in dB.

    SINR = signal_power |w^H s|^2 / (w^H Sigma_in w) with Sigma_in the
    interference-plus-noise covariance.
    """
    denom = float(np.vdot(weights, interference_cov @ weights).real)
    if denom <= 0.0:
        raise ValueError("interference-plus-noise power at the beamformer "
                         "output must be positive")
    num = signal_power * abs(np.vdot(weights, steering)) ** 2
    return float(10.0 * np.log10(num / denom))


def mmse_channel_estimate(channel_cov: np.ndarray, pilot: np.ndarray,
                          observation: np.ndarray) -> np.ndarray:
    """Bayesian linear estimate of a channel from one pilot observation.

    Model: observation = pilot @ h + noise with unit-variance white
    noise and prior covariance ``channel_cov`` on ``h``; the estimate is
    Sigma P^H (P Sigma P^H + I)^-1 y.
    """
    channel_cov = require_hermitian(channel_cov)
    gram = pilot @ channel_cov @ pilot.conj().T + np.eye(pilot.shape[0])
    return channel_cov @ pilot.conj().T @ np.linalg.solve(gram, observation)


def ls_to_channel_cov(ls_cov: np.ndarray, pilot_power: float) -> np.ndarray:
    """Channel covariance implied by a least-squares estimate covariance.

    The LS channel estimate equals the channel plus white noise of
    variance 1/pilot_power, so the channel covariance is the LS
    covariance minus that noise floor, with negative eigenvalues (pure
    noise dimensions) clipped to zero to keep the result PSD.
    """
    ls_cov = require_hermitian(ls_cov)
    n = ls_cov.shape[0]
    w, v = np.linalg.eigh(hermitize(ls_cov - np.eye(n) / pilot_power))
    w = np.maximum(w, 0.0)
    return (v * w) @ v.conj().T


def lmmse_detect(channel: np.ndarray, cov: np.ndarray,
                 observation: np.ndarray) -> np.ndarray:
    """Linear MMSE-style detection statistic H^H cov^-1 y.

    ``cov`` is the observation covariance estimate and must be positive
    definite.
    """
    return channel.conj().T @ _solve_pd(cov, observation)
