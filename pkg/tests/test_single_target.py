import numpy as np
import pytest

from shrinkcov.datagen import ar_covariance, gaussian_samples
from shrinkcov.estimators import scm, scm_leave_one_out
from shrinkcov.hermitian import frobenius_norm_sq, is_psd
from shrinkcov.single_target import (
    Clip,
    QuadMoments,
    loocv_moments_general,
    ols_fast_moments,
    oracle_moments,
    scm_fast_moments,
    scm_solution_constrained,
    scm_solution_unconstrained,
    select_single_target,
    shrink,
    solve_quadratic_2d,
)
from shrinkcov.targets import scaled_identity_target

from oracles import (
    cv_cost_direct,
    grid_min_2d_fast,
    grid_min_2d_full,
    grid_min_constrained,
    ols_loo_cov_refit,
    random_psd,
    random_samples,
)


def scm_loo_covs(y):
    r = scm(y)
    return [scm_leave_one_out(r, y, t) for t in range(y.shape[1])]


def kkt_ok(m: QuadMoments, rho, tau, tol=1e-9):
    """First-order optimality over the nonnegative quadrant."""
    g_r = m.a_rr * rho + m.a_rt * tau - m.b_r
    g_t = m.a_rt * rho + m.a_tt * tau - m.b_t
    ok_r = abs(g_r) <= tol if rho > tol else g_r >= -tol
    ok_t = abs(g_t) <= tol if tau > tol else g_t >= -tol
    return ok_r and ok_t


def random_moments(rng):
    l = rng.standard_normal((2, 2))
    a = l @ l.T + 1e-3 * np.eye(2)
    b = rng.standard_normal(2)
    return QuadMoments(a_rr=a[0, 0], a_rt=a[0, 1], a_tt=a[1, 1],
                       b_r=b[0], b_t=b[1], const=float(rng.standard_normal()))


# ------------------------------------------------------------------- moments

def test_oracle_moments_frozen_perfect_fit():
    r = np.eye(2)
    t0 = np.diag([1.0, 0.0])
    sigma = np.diag([2.0, 1.0])
    m = oracle_moments(r, t0, sigma)
    assert (m.a_rr, m.a_rt, m.a_tt) == pytest.approx((2.0, 1.0, 1.0))
    assert (m.b_r, m.b_t, m.const) == pytest.approx((3.0, 2.0, 5.0))
    sol = solve_quadratic_2d(m)
    # rho R + tau T0 = I + diag(1,0) reproduces Sigma exactly
    assert (sol.rho, sol.tau) == pytest.approx((1.0, 1.0), abs=1e-12)
    assert sol.clip is Clip.NONE
    assert sol.objective == pytest.approx(0.0, abs=1e-12)


def test_loocv_moments_general_frozen_two_samples():
    y = np.eye(2)
    m = loocv_moments_general(scm_loo_covs(y), y, np.eye(2))
    assert m.a_rr == pytest.approx(1.0, abs=1e-14)
    assert m.a_rt == pytest.approx(1.0, abs=1e-14)
    assert m.a_tt == pytest.approx(2.0, abs=1e-14)
    assert m.b_r == pytest.approx(0.0, abs=1e-14)
    assert m.b_t == pytest.approx(1.0, abs=1e-14)
    assert m.const == pytest.approx(1.0, abs=1e-14)


def test_loocv_objective_equals_direct_cost():
    rng = np.random.default_rng(31)
    for cplx in (False, True):
        y = random_samples(4, 8, rng, cplx)
        t0 = random_psd(4, rng, cplx)
        covs = scm_loo_covs(y)
        m = loocv_moments_general(covs, y, t0)
        for _ in range(20):
            rho, tau = rng.uniform(-1, 2, size=2)
            want = cv_cost_direct(rho, tau, covs, y, t0)
            assert m.objective(rho, tau) == pytest.approx(want, rel=1e-10,
                                                          abs=1e-10)


def test_scm_fast_moments_frozen_three_samples():
    y = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])
    m = scm_fast_moments(y, np.eye(2))
    assert m.a_rr == pytest.approx(4.0 / 3.0, rel=1e-14)
    assert m.a_rt == pytest.approx(4.0 / 3.0, rel=1e-14)
    assert m.a_tt == pytest.approx(2.0, rel=1e-14)
    assert m.b_r == pytest.approx(2.0 / 3.0, rel=1e-13)
    assert m.b_t == pytest.approx(4.0 / 3.0, rel=1e-14)
    assert m.const == pytest.approx(2.0, rel=1e-14)


def test_scm_fast_matches_general_random():
    rng = np.random.default_rng(32)
    for cplx in (False, True):
        for _ in range(10):
            n = int(rng.integers(2, 8))
            t = int(rng.integers(3, 20))
            y = random_samples(n, t, rng, cplx)
            t0 = random_psd(n, rng, cplx)
            fast = scm_fast_moments(y, t0)
            slow = loocv_moments_general(scm_loo_covs(y), y, t0)
            for f in ("a_rr", "a_rt", "a_tt", "b_r", "b_t", "const"):
                assert getattr(fast, f) == pytest.approx(
                    getattr(slow, f), rel=1e-10, abs=1e-12), f


def test_scm_fast_requires_three_samples():
    y = np.eye(2)
    with pytest.raises(ValueError):
        scm_fast_moments(y, np.eye(2))
    with pytest.raises(ValueError):
        scm_solution_unconstrained(y, np.eye(2))
    with pytest.raises(ValueError):
        scm_solution_constrained(y, np.eye(2))


# -------------------------------------------------------------------- solver

def test_solve2d_interior_frozen():
    m = QuadMoments(1.0, 0.0, 1.0, 0.3, 0.7, 1.0)
    sol = solve_quadratic_2d(m)
    assert (sol.rho, sol.tau) == pytest.approx((0.3, 0.7), abs=1e-14)
    assert sol.clip is Clip.NONE
    assert sol.objective == pytest.approx(0.42, abs=1e-14)


def test_solve2d_boundary_frozen():
    sol = solve_quadratic_2d(QuadMoments(1.0, 0.0, 1.0, -1.0, 0.5, 1.0))
    assert (sol.rho, sol.tau) == pytest.approx((0.0, 0.5), abs=1e-14)
    assert sol.clip is Clip.RHO_ZERO
    assert sol.objective == pytest.approx(0.75, abs=1e-14)

    sol = solve_quadratic_2d(QuadMoments(1.0, 0.0, 1.0, 0.5, -1.0, 1.0))
    assert (sol.rho, sol.tau) == pytest.approx((0.5, 0.0), abs=1e-14)
    assert sol.clip is Clip.TAU_ZERO

    # exact tie between the two boundary candidates prefers tau = 0
    sol = solve_quadratic_2d(QuadMoments(1.0, 0.0, 1.0, -1.0, -1.0, 1.0))
    assert (sol.rho, sol.tau) == pytest.approx((0.0, 0.0), abs=1e-14)
    assert sol.clip is Clip.TAU_ZERO
    assert sol.objective == pytest.approx(1.0, abs=1e-14)


def test_solve2d_collinear_prefers_tau_zero():
    # singular moment matrix (target collinear with the estimate)
    m = QuadMoments(1.0, 2.0, 4.0, 1.0, 2.0, 0.0)
    sol = solve_quadratic_2d(m)
    assert sol.clip is Clip.TAU_ZERO
    assert (sol.rho, sol.tau) == pytest.approx((1.0, 0.0), abs=1e-14)
    assert sol.objective == pytest.approx(-1.0, abs=1e-14)


def test_solve2d_zero_target_block():
    m = QuadMoments(2.0, 0.0, 0.0, 1.0, 0.0, 0.0)
    sol = solve_quadratic_2d(m)
    assert (sol.rho, sol.tau) == pytest.approx((0.5, 0.0), abs=1e-14)
    assert sol.tau == 0.0


def test_solve2d_nonpsd_raises():
    with pytest.raises(ValueError):
        solve_quadratic_2d(QuadMoments(1.0, 2.0, 1.0, 0.0, 0.0, 0.0))


def test_solve2d_random_kkt_and_grid():
    rng = np.random.default_rng(33)
    for _ in range(50):
        m = random_moments(rng)
        sol = solve_quadratic_2d(m)
        assert sol.rho >= 0 and sol.tau >= 0
        assert kkt_ok(m, sol.rho, sol.tau)
        grid = grid_min_2d_fast(m.a_rr, m.a_rt, m.a_tt, m.b_r, m.b_t, m.const)
        assert sol.objective <= grid + 1e-9


def test_solve2d_constrained_frozen():
    sol = solve_quadratic_2d(QuadMoments(1.0, 0.0, 1.0, 0.5, 0.0, 0.0),
                             constrained=True)
    assert (sol.rho, sol.tau) == pytest.approx((0.75, 0.25), abs=1e-14)
    assert sol.clip is Clip.NONE
    assert sol.objective == pytest.approx(-0.125, abs=1e-14)

    sol = solve_quadratic_2d(QuadMoments(1.0, 0.0, 1.0, 3.0, 0.0, 1.0),
                             constrained=True)
    assert (sol.rho, sol.tau) == pytest.approx((1.0, 0.0), abs=1e-14)
    assert sol.clip is Clip.CONVEX_BOUNDARY
    # J(1, 0) = a_rr - 2 b_r + const = 1 - 6 + 1
    assert sol.objective == pytest.approx(-4.0, abs=1e-14)

    sol = solve_quadratic_2d(QuadMoments(1.0, 0.0, 1.0, 0.0, 3.0, 1.0),
                             constrained=True)
    assert (sol.rho, sol.tau) == pytest.approx((0.0, 1.0), abs=1e-14)
    assert sol.clip is Clip.CONVEX_BOUNDARY


def test_solve2d_constrained_degenerate_same_estimate():
    # R_t == T0 throughout: every rho gives the same estimate
    m = QuadMoments(1.0, 1.0, 1.0, 0.5, 0.5, 0.0)
    sol = solve_quadratic_2d(m, constrained=True)
    assert sol.rho + sol.tau == pytest.approx(1.0, abs=1e-14)
    assert (sol.rho, sol.tau) == (1.0, 0.0)


def test_solve2d_constrained_matches_grid():
    rng = np.random.default_rng(34)
    for _ in range(50):
        m = random_moments(rng)
        sol = solve_quadratic_2d(m, constrained=True)
        assert sol.rho + sol.tau == pytest.approx(1.0, abs=1e-12)
        assert 0.0 <= sol.rho <= 1.0
        grid = grid_min_constrained(m.a_rr, m.a_rt, m.a_tt, m.b_r, m.b_t,
                                    m.const, step=1e-4)
        assert sol.objective <= grid + 1e-9


def test_grid_fast_equals_grid_full():
    rng = np.random.default_rng(35)
    for _ in range(3):
        m = random_moments(rng)
        fast = grid_min_2d_fast(m.a_rr, m.a_rt, m.a_tt, m.b_r, m.b_t, m.const)
        full = grid_min_2d_full(m.a_rr, m.a_rt, m.a_tt, m.b_r, m.b_t, m.const)
        assert fast == pytest.approx(full, rel=1e-12, abs=1e-12)


# -------------------------------------------------------- closed-form (SCM)

def test_scm_unconstrained_frozen_three_samples():
    y = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])
    sol = scm_solution_unconstrained(y, np.eye(2))
    assert sol.clip is Clip.RHO_ZERO
    assert sol.rho == 0.0
    assert sol.tau == pytest.approx(2.0 / 3.0, rel=1e-13)


def test_scm_constrained_frozen_three_samples():
    y = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])
    sol = scm_solution_constrained(y, np.eye(2))
    assert sol.rho == pytest.approx(0.0, abs=1e-12)
    assert sol.tau == pytest.approx(1.0, abs=1e-12)


def test_scm_unconstrained_matches_grid_search():
    rng = np.random.default_rng(36)
    sigma = ar_covariance(5, 0.5)
    y = gaussian_samples(sigma, 20, rng)
    t0 = scaled_identity_target(scm(y))
    sol = scm_solution_unconstrained(y, t0)
    m = scm_fast_moments(y, t0)
    grid = grid_min_2d_fast(m.a_rr, m.a_rt, m.a_tt, m.b_r, m.b_t, m.const,
                            step=1e-4)
    assert m.objective(sol.rho, sol.tau) <= grid + 1e-12
    assert grid - m.objective(sol.rho, sol.tau) <= 1e-6


def test_scm_constrained_matches_grid_search():
    rng = np.random.default_rng(37)
    sigma = ar_covariance(6, 0.7)
    for _ in range(5):
        y = gaussian_samples(sigma, 12, rng)
        t0 = scaled_identity_target(scm(y))
        sol = scm_solution_constrained(y, t0)
        m = scm_fast_moments(y, t0)
        grid = grid_min_constrained(m.a_rr, m.a_rt, m.a_tt, m.b_r, m.b_t,
                                    m.const, step=1e-5)
        assert m.objective(sol.rho, sol.tau) <= grid + 1e-12


def test_scm_identity_target_collapse():
    # with the scaled identity target the unconstrained solution already
    # satisfies rho + tau = 1, so both variants coincide
    rng = np.random.default_rng(38)
    sigma = ar_covariance(8, 0.5)
    for _ in range(10):
        y = gaussian_samples(sigma, 25, rng)
        t0 = scaled_identity_target(scm(y))
        unc = scm_solution_unconstrained(y, t0)
        con = scm_solution_constrained(y, t0)
        assert unc.rho + unc.tau == pytest.approx(1.0, abs=1e-10)
        assert abs(unc.rho - con.rho) <= 1e-10


def test_scm_solution_scaling_covariance():
    rng = np.random.default_rng(39)
    sigma = ar_covariance(6, 0.5)
    y = gaussian_samples(sigma, 60, rng)
    t0 = np.eye(6)
    base = scm_solution_unconstrained(y, t0)
    scaled = scm_solution_unconstrained(3.0 * y, t0)
    assert base.clip is Clip.NONE and scaled.clip is Clip.NONE
    assert scaled.rho == pytest.approx(base.rho, rel=1e-8)
    assert scaled.tau == pytest.approx(9.0 * base.tau, rel=1e-8)


# ---------------------------------------------------------------- OLS+LOOCV

def test_ols_fast_moments_match_explicit_refits():
    rng = np.random.default_rng(40)
    for cplx in (False, True):
        for _ in range(6):
            m_in = int(rng.integers(1, 4))
            t = int(rng.integers(m_in + 3, m_in + 10))
            n = int(rng.integers(2, 6))
            x = random_samples(m_in, t, rng, cplx)
            y = random_samples(n, t, rng, cplx)
            t0 = random_psd(n, rng, cplx)
            fast = ols_fast_moments(x, y, t0)
            covs = [ols_loo_cov_refit(x, y, i) for i in range(t)]
            slow = loocv_moments_general(covs, y, t0)
            for f in ("a_rr", "a_rt", "a_tt", "b_r", "b_t", "const"):
                assert getattr(fast, f) == pytest.approx(
                    getattr(slow, f), rel=1e-8, abs=1e-8), f


def test_ols_fast_moments_zero_target():
    rng = np.random.default_rng(41)
    x = random_samples(2, 9, rng, True)
    y = random_samples(3, 9, rng, True)
    m = ols_fast_moments(x, y, np.zeros((3, 3)))
    assert m.a_rt == 0.0 and m.b_t == 0.0 and m.a_tt == 0.0
    sol = solve_quadratic_2d(m)
    assert sol.tau == 0.0
    assert sol.clip is Clip.TAU_ZERO


# ------------------------------------------------------------------- facade

def test_select_dispatch_matches_components():
    rng = np.random.default_rng(42)
    sigma = ar_covariance(5, 0.6)
    y = gaussian_samples(sigma, 15, rng)
    t0 = scaled_identity_target(scm(y))

    cv = select_single_target("cv", t0, samples=y)
    ref = scm_solution_unconstrained(y, t0)
    assert (cv.rho, cv.tau, cv.clip) == (ref.rho, ref.tau, ref.clip)

    cvc = select_single_target("cv_constrained", t0, samples=y)
    refc = scm_solution_constrained(y, t0)
    assert (cvc.rho, cvc.tau) == (refc.rho, refc.tau)

    orc = select_single_target("oracle", t0, samples=y, truth=sigma)
    refo = solve_quadratic_2d(oracle_moments(scm(y), t0, sigma))
    assert (orc.rho, orc.tau) == (refo.rho, refo.tau)

    x = random_samples(2, 12, rng, False)
    yo = random_samples(4, 12, rng, False)
    d0 = np.eye(4)
    cvo = select_single_target("cv", d0, inputs=x, outputs=yo)
    refm = solve_quadratic_2d(ols_fast_moments(x, yo, d0))
    assert (cvo.rho, cvo.tau) == (refm.rho, refm.tau)


def test_select_argument_guards():
    y = np.eye(3)
    with pytest.raises(ValueError):
        select_single_target("cv", np.eye(3))  # no data at all
    with pytest.raises(ValueError):
        select_single_target("oracle", np.eye(3), samples=y)  # no truth
    with pytest.raises(ValueError):
        select_single_target("nope", np.eye(3), samples=y)


def test_oracle_solution_dominates_random_candidates():
    rng = np.random.default_rng(43)
    sigma = ar_covariance(6, 0.5)
    y = gaussian_samples(sigma, 10, rng)
    r = scm(y)
    t0 = scaled_identity_target(r)
    sol = solve_quadratic_2d(oracle_moments(r, t0, sigma))
    best = frobenius_norm_sq(shrink(r, t0, sol) - sigma)
    for _ in range(100):
        rho, tau = rng.uniform(0, 2, size=2)
        other = frobenius_norm_sq(rho * r + tau * t0 - sigma)
        assert best <= other + 1e-10


def test_shrink_nonneg_guard_and_psd():
    rng = np.random.default_rng(44)
    r = random_psd(4, rng)
    t0 = np.eye(4)
    from shrinkcov.single_target import ShrinkageSolution
    est = shrink(r, t0, ShrinkageSolution(rho=0.5, tau=0.25))
    assert is_psd(est)
    assert np.allclose(est, 0.5 * r + 0.25 * t0)
    with pytest.raises(ValueError):
        shrink(r, t0, ShrinkageSolution(rho=-0.1, tau=0.5))
