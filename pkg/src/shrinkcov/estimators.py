"""Base covariance estimates and their leave-one-out variants.

Two estimation paths are supported:

* the sample covariance matrix (SCM) ``R = (1/T) Y Y^H`` with the exact
  leave-one-out identity ``R_t = (T R - y_t y_t^H) / (T - 1)``;
* the least-squares path for linear observation models ``y = H x + n``,
  where ``R = H_hat H_hat^H + sigma2_hat I`` and each leave-one-out
  refit is reconstructed from rank-one updates of the full fit instead
  of refitting T times.

The Gram matrix of the regressors is factorized once and reused for all
T leave-one-out terms; everything downstream of the full fit costs
O(N (N + M)) per sample.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hermitian import validate_samples

__all__ = [
    "scm",
    "scm_leave_one_out",
    "OlsFit",
    "OlsLooTerm",
    "ols_fit",
    "ols_covariance",
    "ols_loo_terms",
    "ols_loo_covariance",
    "ols_loo_covariances",
]


def scm(y: np.ndarray) -> np.ndarray:
    """Sample covariance matrix (1/T) sum_t y_t y_t^H of an N x T block."""
    y = validate_samples(y)
    t = y.shape[1]
    return y @ y.conj().T / t


def scm_leave_one_out(r: np.ndarray, y: np.ndarray, t: int) -> np.ndarray:
    """Sample covariance with column ``t`` removed, via a rank-one downdate.

    Parameters
    ----------
    r : ndarray
        Full sample covariance of ``y`` (as returned by :func:`scm`).
    y : ndarray
        The N x T sample block ``r`` was computed from; T >= 2.
    t : int
        Index of the held-out column.
    """
    y = validate_samples(y, min_count=2)
    count = y.shape[1]
    if not 0 <= t < count:
        raise ValueError(f"hold-out index {t} outside 0..{count - 1}")
    yt = y[:, t]
    return (count * r - np.outer(yt, yt.conj())) / (count - 1)


# ---------------------------------------------------------------------------
# least-squares path


@dataclass(frozen=True)
class OlsFit:
    """Full least-squares fit of Y ~ coef @ X.

    Attributes
    ----------
    coef : ndarray
        N x M coefficient estimate ``Y X^H (X X^H)^-1``.
    noise_var : float
        Residual noise variance estimate ||Y - coef X||_F^2 / (T N).
    leverage : ndarray
        Length-T hat-matrix diagonal ``x_t^H (X X^H)^-1 x_t``.
    residuals : ndarray
        N x T residual block ``Y - coef X``.
    gram_dirs : ndarray
        M x T block of directions ``(X X^H)^-1 x_t``, reused by every
        leave-one-out update.
    """

    coef: np.ndarray
    noise_var: float
    leverage: np.ndarray
    residuals: np.ndarray
    gram_dirs: np.ndarray


@dataclass(frozen=True)
class OlsLooTerm:
    """Rank-one ingredients of one leave-one-out covariance update.

    With ``e`` the full-fit residual of the held-out sample, the refit
    covariance is ``R_t = R - noise_shift I - e fitted_dir^H
    - mixed_dir e^H``.
    """

    residual: np.ndarray
    gram_dir: np.ndarray
    noise_shift: float
    fitted_dir: np.ndarray
    mixed_dir: np.ndarray


def ols_fit(x: np.ndarray, y: np.ndarray) -> OlsFit:
    """Least-squares fit of an N x T output block on an M x T input block.

    Requires a well-conditioned Gram matrix ``X X^H`` (rank-deficient or
    nearly singular inputs are rejected); T == M is allowed here, the
    leave-one-out machinery adds its own stricter requirement.
    """
    x = validate_samples(x, name="inputs")
    y = validate_samples(y, name="outputs")
    if x.shape[1] != y.shape[1]:
        raise ValueError("inputs and outputs must have the same sample count")
    t = x.shape[1]
    gram = x @ x.conj().T
    if np.linalg.cond(gram) > 1e12:
        raise ValueError("regressor Gram matrix is singular or ill-conditioned")
    gram_dirs = np.linalg.solve(gram, x)
    coef = y @ gram_dirs.conj().T
    residuals = y - coef @ x
    noise_var = float(np.vdot(residuals, residuals).real) / (t * y.shape[0])
    leverage = np.sum(x.conj() * gram_dirs, axis=0).real
    return OlsFit(coef=coef, noise_var=noise_var, leverage=leverage,
                  residuals=residuals, gram_dirs=gram_dirs)


def ols_covariance(fit: OlsFit) -> np.ndarray:
    """Covariance estimate coef coef^H + noise_var I from a full fit."""
    n = fit.coef.shape[0]
    return fit.coef @ fit.coef.conj().T + fit.noise_var * np.eye(n)


def ols_loo_terms(x: np.ndarray, y: np.ndarray, fit: OlsFit) -> list[OlsLooTerm]:
    """Per-sample rank-one update terms for all T leave-one-out refits.

    Requires every leverage to be strictly below one, i.e. T > M in
    general position; otherwise some refit is underdetermined.
    """
    t = x.shape[1]
    n = y.shape[0]
    if t < 2:
        raise ValueError("leave-one-out needs at least two samples")
    if np.max(fit.leverage) >= 1.0 - 1e-10:
        raise ValueError("a leverage value reaches one; leave-one-out refits "
                         "are underdetermined (need T > M)")
    terms = []
    for i in range(t):
        e = fit.residuals[:, i]
        slack = 1.0 - fit.leverage[i]
        f = fit.gram_dirs[:, i] / slack
        delta = (float(np.vdot(e, e).real) / (n * (t - 1) * slack)
                 - fit.noise_var / (t - 1))
        phi = fit.coef @ f
        psi = phi - float(np.vdot(f, f).real) * e
        terms.append(OlsLooTerm(residual=e, gram_dir=f, noise_shift=delta,
                                fitted_dir=phi, mixed_dir=psi))
    return terms


def ols_loo_covariance(r: np.ndarray, term: OlsLooTerm) -> np.ndarray:
    """Reconstruct one leave-one-out covariance from the full estimate."""
    e, phi, psi = term.residual, term.fitted_dir, term.mixed_dir
    n = r.shape[0]
    return (r - term.noise_shift * np.eye(n)
            - np.outer(e, phi.conj()) - np.outer(psi, e.conj()))


def ols_loo_covariances(x: np.ndarray, y: np.ndarray) -> list[np.ndarray]:
    """All T leave-one-out covariance estimates of the least-squares path."""
    fit = ols_fit(x, y)
    r = ols_covariance(fit)
    return [ols_loo_covariance(r, term) for term in ols_loo_terms(x, y, fit)]
