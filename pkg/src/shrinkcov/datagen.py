"""Reproducible covariance models and sample generators for experiments.

Randomness is organized around :class:`RngStream`, a small wrapper over
numpy's seed-sequence spawning: every (seed, stream, index) triple maps
to one independent PCG64 generator, so parallel experiment replications
can draw from non-overlapping streams in any order and still reproduce
bit-identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np
import scipy.linalg

from .applications import ula_steering
from .hermitian import hermitize, require_hermitian

__all__ = [
    "RngStream",
    "ExperimentScene",
    "ar_covariance",
    "gaussian_samples",
    "linear_model_scene",
    "kronecker_channel_cov",
    "interference_scene",
]


@dataclass(frozen=True)
class RngStream:
    """Addressable random stream: a seed plus a flat stream offset.

    ``generator(i)`` materializes the stream at offset
    ``stream_index + i`` (``generator()`` at the base offset itself), so
    ``RngStream(s, k).generator()`` and ``RngStream(s).generator(k)``
    name the same stream.  Distinct offsets give statistically
    independent generators and every offset is reproducible in
    isolation.
    """

    seed: int
    stream_index: int = 0

    def generator(self, index: int | None = None) -> np.random.Generator:
        key = self.stream_index + (0 if index is None else index)
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=(key,))
        return np.random.Generator(np.random.PCG64(seq))


@dataclass(frozen=True)
class ExperimentScene:
    """A ground-truth covariance with a matching sample generator.

    ``generator(t, gen)`` draws a T-sample block (or a tuple of blocks
    for regression scenes) using the provided numpy generator;
    ``metadata`` carries scene-specific side information such as the
    true coefficients or steering vectors.
    """

    true_covariance: np.ndarray
    generator: Callable
    metadata: dict = field(default_factory=dict)


def ar_covariance(n: int, r) -> np.ndarray:
    """First-order autoregressive covariance with coefficient ``r``.

    Entry (i, j) is r**(j-i) above the diagonal and the conjugate below;
    requires |r| < 1.  Real coefficients give a real matrix.
    """
    if abs(r) >= 1.0:
        raise ValueError("autoregressive coefficient must satisfy |r| < 1")
    first_row = np.asarray(r) ** np.arange(n)
    return scipy.linalg.toeplitz(np.conj(first_row), first_row)


def _covariance_factor(sigma: np.ndarray) -> np.ndarray:
    """Square root factor F with F F^H = sigma, accepting PSD inputs."""
    sigma = require_hermitian(sigma)
    try:
        return np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(hermitize(sigma))
        scale = max(1.0, float(w[-1])) if w.size else 1.0
        if w.size and float(w[0]) < -1e-8 * scale:
            raise ValueError("covariance must be positive semidefinite") from None
        return v * np.sqrt(np.maximum(w, 0.0))


def gaussian_samples(sigma: np.ndarray, t: int, rng,
                     complex_field: bool = False) -> np.ndarray:
    """Draw an N x T block of zero-mean Gaussian samples with covariance sigma.

    ``rng`` is a numpy Generator or an :class:`RngStream` (materialized
    at its root address).  Complex samples are circularly symmetric with
    E[y y^H] = sigma.
    """
    if isinstance(rng, RngStream):
        rng = rng.generator()
    factor = _covariance_factor(sigma)
    n = factor.shape[0]
    if complex_field:
        z = (rng.standard_normal((n, t))
             + 1j * rng.standard_normal((n, t))) / math.sqrt(2.0)
    else:
        z = rng.standard_normal((n, t))
    return factor @ z


def linear_model_scene(n: int, m: int, sigma2: float,
                       rng) -> ExperimentScene:
    """Scene for the linear observation model y = H x + noise.

    The n x m coefficient matrix has independent N(0, 1/m) entries, so
    the signal part of the covariance has trace about n; ``sigma2`` is
    the white noise variance.  The scene generator returns the pair
    (inputs, outputs) for the least-squares estimation path.
    """
    if m < 1:
        raise ValueError("the linear model needs at least one input dimension")
    if isinstance(rng, RngStream):
        rng = rng.generator()
    coef = rng.standard_normal((n, m)) / math.sqrt(m)
    truth = coef @ coef.T + sigma2 * np.eye(n)

    def draw(t: int, gen: np.random.Generator):
        x = gen.standard_normal((m, t))
        y = coef @ x + math.sqrt(sigma2) * gen.standard_normal((n, t))
        return x, y

    return ExperimentScene(true_covariance=truth, generator=draw,
                           metadata={"coef": coef, "noise_var": sigma2})


def kronecker_channel_cov(nt: int, nr: int, r_t, r_r) -> np.ndarray:
    """Separable MIMO channel covariance kron(Sigma_tx, Sigma_rx).

    Both factors are first-order autoregressive covariances; the result
    has unit diagonal and trace nt * nr.
    """
    return np.kron(ar_covariance(nt, r_t), ar_covariance(nr, r_r))


def interference_scene(aoas, inr_db: float, noise_db: float,
                       n: int) -> ExperimentScene:
    """Array snapshot scene: broadside unit-power signal plus interferers.

    ``aoas`` lists interferer arrival angles in radians, each received
    at ``inr_db`` relative power; ``noise_db`` sets the white noise
    floor.  The scene metadata carries the signal steering vector and
    the interference-plus-noise covariance needed for SINR scoring.
    """
    steering = ula_steering(0.0, n)
    inr = 10.0 ** (inr_db / 10.0)
    noise = 10.0 ** (noise_db / 10.0)
    sigma_in = noise * np.eye(n, dtype=complex)
    for theta in np.atleast_1d(np.asarray(aoas, dtype=float)):
        v = ula_steering(float(theta), n)
        sigma_in = sigma_in + inr * np.outer(v, v.conj())
    truth = sigma_in + np.outer(steering, steering.conj())

    def draw(t: int, gen: np.random.Generator) -> np.ndarray:
        return gaussian_samples(truth, t, gen, complex_field=True)

    return ExperimentScene(true_covariance=truth, generator=draw,
                           metadata={"steering": steering,
                                     "interference_plus_noise": sigma_in})
