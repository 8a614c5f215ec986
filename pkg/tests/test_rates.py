import io
import math

import numpy as np
import pytest
from scipy import special

import holderprob as hp
from holderprob import (ConvergenceError, DomainError, MeanPoint, OptimizerSpec, QuadratureSpec,
                        RngStream, TiltPoint)
from holderprob.oracles import GridOracleSpec, grid_legendre, grid_rate
from holderprob.rates import RateResult, in_finite_domain, write_rate_csv


def _gamma_log_mgf(s, p):
    return -math.log(1 - p * s) / p


def test_lambda_at_origin():
    for p in (1.5, 2.0, 3.0):
        assert abs(hp.cgf_lambda((0, 0, 0), p)) <= 1e-9


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0, 6.0])
@pytest.mark.parametrize("s,t", [(0.25, 0.0), (-2.0, 0.1), (0.3, -1.0), (-0.5, -0.5)])
def test_lambda_separable_slices(p, s, t):
    pair = hp.conjugate(p)
    s, t = min(s, 0.9 / p), min(t, 0.9 / pair.q)
    exact = _gamma_log_mgf(s, p) + _gamma_log_mgf(t, pair.q)
    assert hp.cgf_lambda((0, s, t), pair) == pytest.approx(exact, abs=1e-9)


def test_lambda_half_normal_slice_value():
    assert hp.cgf_lambda(TiltPoint(0, 0.25, 0), 2.0) == pytest.approx(0.3465736, abs=1e-7)


def test_gradient_at_origin_is_mean():
    for p in (2.0, 3.0):
        pair = hp.conjugate(p)
        h = 1e-4
        fd = [(hp.cgf_lambda(h * e, pair) - hp.cgf_lambda(-h * e, pair)) / (2 * h)
              for e in np.eye(3)]
        np.testing.assert_allclose(fd, [hp.limit_constants(pair).m, 1, 1], atol=1e-5)


def test_hessian_at_origin_is_covariance():
    pair = hp.conjugate(3.0)
    _, grad, hess = hp.cgf_derivatives(np.zeros(3), pair)
    np.testing.assert_allclose(grad, [hp.limit_constants(pair).m, 1, 1], atol=1e-10)
    np.testing.assert_allclose(hess, hp.covariance_moment_form(pair), atol=1e-9)


def test_analytic_derivatives_match_finite_differences():
    pair = hp.conjugate(2.5)
    th = np.array([0.4, -0.3, 0.1])
    lam, grad, hess = hp.cgf_derivatives(th, pair)
    h = 1e-5
    g_fd = np.array([(hp.cgf_grid(th + h * e, pair)[0] - hp.cgf_grid(th - h * e, pair)[0]) / (2 * h)
                     for e in np.eye(3)])
    np.testing.assert_allclose(grad, g_fd, atol=1e-7)
    h_fd = np.array([(hp.cgf_derivatives(th + h * e, pair)[1]
                      - hp.cgf_derivatives(th - h * e, pair)[1]) / (2 * h) for e in np.eye(3)])
    np.testing.assert_allclose(hess, h_fd, atol=1e-6)
    assert np.all(np.linalg.eigvalsh(hess) > 0)


@pytest.mark.parametrize("p", [1.5, 3.0])
def test_nested_quadrature_agrees_with_ray(p):
    th = (0.3, -0.2, 0.05)
    assert hp.cgf_lambda(th, p, method="nested") == pytest.approx(
        hp.cgf_lambda(th, p), abs=1e-8)


def test_lambda_monte_carlo():
    pair = hp.conjugate(3.0)
    n = 10 ** 6
    z = np.abs(hp.sample_pgg(pair, "p", RngStream(1), size=n))
    e = np.abs(hp.sample_pgg(pair, "q", RngStream(2), size=n))
    th = (0.3, 0.05, -0.1)
    vals = np.exp(th[0] * z * e + th[1] * z ** 3 + th[2] * e ** 1.5)
    est = vals.mean()
    se = vals.std() / math.sqrt(n)
    assert abs(math.exp(hp.cgf_lambda(th, pair)) - est) <= 4 * se


def test_lambda_convex_along_segment():
    pair = hp.conjugate(2.0)
    a, b = np.array([-1.0, -0.5, 0.2]), np.array([0.6, 0.1, -2.0])
    ts = np.linspace(0, 1, 21)
    vals = hp.cgf_grid(a[None, :] + ts[:, None] * (b - a), pair)
    assert np.all(np.diff(vals, 2) >= -1e-10)


def test_domains():
    pair = hp.conjugate(2.0)
    assert not TiltPoint(0, 0.5, 0).in_domain(pair)
    assert not TiltPoint(0, 0, 0.5).in_finite_domain(pair)
    # With s = -1 the exact bound on r is sqrt(3) while the Young box stops at 1.
    tp = TiltPoint(1.5, -1.0, 0.0)
    assert tp.in_finite_domain(pair) and not tp.in_domain(pair)
    with pytest.raises(DomainError):
        hp.cgf_lambda(tp, pair)
    assert math.isfinite(hp.cgf_lambda(tp, pair, domain="exact"))
    assert np.isinf(hp.cgf_grid([[1.0, 0, 0]], pair)[0])
    np.testing.assert_array_equal(in_finite_domain(np.array([[0.99, 0, 0], [1.01, 0, 0]]), pair),
                                  [True, False])
    with pytest.raises(DomainError):
        hp.cgf_derivatives((2.0, 0.0, 0.0), pair)


@pytest.mark.parametrize("r", [-3.0, -0.5, 0.3, 0.6, 0.9, 0.99, 0.999])
def test_lambda_p2_r_axis(r):
    # For p = 2 both coordinates are standard normal. For |r| < 1,
    # E exp(r |Z1 Z2|) = (1 + (2/pi) arcsin r) / sqrt(1 - r^2); otherwise
    # integrate E_b exp(r a b) = erfcx(-r a / sqrt(2)) against the half-normal.
    from scipy import integrate
    pair = hp.conjugate(2.0)
    if abs(r) < 1:
        exact = math.log((1 + 2 / math.pi * math.asin(r)) / math.sqrt(1 - r * r))
    else:
        dens = lambda a: 2 * math.exp(-a * a / 2) / math.sqrt(2 * math.pi)
        exact = math.log(integrate.quad(lambda a: dens(a) * special.erfcx(-r * a / math.sqrt(2)),
                                        0, np.inf, epsabs=1e-14, epsrel=1e-13)[0])
    assert hp.cgf_lambda((r, 0, 0), pair, domain="exact") == pytest.approx(exact, abs=1e-9)


def test_legendre_zero_at_mean():
    for p in (1.5, 2.0, 3.0):
        m = hp.limit_constants(p).m
        assert abs(hp.legendre_star(MeanPoint(m, 1, 1), p)) <= 1e-6


def test_legendre_matches_grid_oracle():
    mu = (0.5, 1.2, 0.8)
    grid = grid_legendre(mu, 2.0, GridOracleSpec(tilt_points=21, levels=8)).value
    assert hp.legendre_star(MeanPoint(*mu), 2.0) == pytest.approx(grid, abs=1e-6)


def test_legendre_dominates_marginal():
    p, v = 3.0, 1.7
    marginal = (v - 1) / p - math.log(v) / p
    assert hp.legendre_star(MeanPoint(0.6, v, 1.0), p) >= marginal - 1e-10


def test_legendre_infinite_outside_support():
    # u exceeds v^{1/p} w^{1/q}, impossible by Hölder.
    res = hp.solve_legendre(np.array([1.2, 1.0, 1.0]), 2.0)
    assert res.diverged and math.isinf(res.value)


def test_legendre_stall_raises():
    opt = OptimizerSpec(max_iter=1, max_evals=2)
    with pytest.raises(ConvergenceError) as info:
        hp.legendre_star(MeanPoint(0.3, 2.0, 0.4), 3.0, opt=opt)
    assert info.value.residual is not None


def test_mean_point_validation():
    with pytest.raises(DomainError):
        MeanPoint(0.5, 0.0, 1.0)
    assert MeanPoint(0.5, 4.0, 1.0).ratio(2.0) == pytest.approx(0.25)


def test_rate_zero_only_at_mean():
    m = hp.limit_constants(2.0).m
    assert abs(hp.ldp_rate(m, 2.0)) <= 1e-6
    for x in (0.3, 0.55, 0.7, 0.9):
        assert hp.ldp_rate(x, 2.0) > 1e-4


def test_rate_infinite_off_support():
    for x in (0.0, -1.0):
        res = hp.solve_ldp_rate(x, 2.0)
        assert math.isinf(res.value) and res.converged
    assert math.isinf(hp.ldp_rate(1.2, 2.0))


def test_rate_monotone_on_each_side():
    m = hp.limit_constants(3.0).m
    left = [hp.ldp_rate(x, 3.0) for x in (0.2, 0.4, 0.55)]
    right = [hp.ldp_rate(x, 3.0) for x in (0.7, 0.8, 0.9)]
    assert left[0] > left[1] > left[2] > 0
    assert 0 < right[0] < right[1] < right[2]
    assert m > 0.55 and m < 0.7


@pytest.mark.parametrize("p", [2.0, 3.0])
def test_rate_curvature_matches_clt_variance(p):
    consts = hp.limit_constants(p)
    d = 0.01
    avg = 0.5 * (hp.ldp_rate(consts.m + d, p) + hp.ldp_rate(consts.m - d, p))
    assert avg == pytest.approx(d * d / (2 * consts.sigma2), rel=2e-3)


@pytest.mark.slow
def test_rate_matches_grid_oracle_p3():
    x = 0.75
    grid = grid_rate(x, 3.0).value
    assert hp.ldp_rate(x, 3.0) == pytest.approx(grid, abs=1e-6)


def test_mdp_rate():
    assert hp.mdp_rate(0.0, 2.0) == 0.0
    assert hp.mdp_rate(1.0, 2.0) == pytest.approx(1 / (2 * (1 - 8 / math.pi ** 2)), rel=1e-12)
    assert hp.mdp_rate(1.0, 2.0) == pytest.approx(2.6394, abs=1e-4)
    assert hp.mdp_rate(-0.7, 3.0) == hp.mdp_rate(0.7, 3.0)


def test_rate_csv_format(tmp_path):
    rows = [RateResult(0.0, math.inf, True, True, 0.0),
            RateResult(0.75, 0.0386813, True, False, 1e-12)]
    buf = io.StringIO()
    write_rate_csv(buf, rows)
    assert buf.getvalue() == ("x,rate,converged,residual\r\n0.0,inf,true,0.0\r\n"
                              "0.75,0.0386813,true,1e-12\r\n")
    path = tmp_path / "rate.csv"
    write_rate_csv(path, rows)
    assert path.read_bytes() == buf.getvalue().encode()


def test_quadrature_spec_validation():
    with pytest.raises(DomainError):
        QuadratureSpec(rel_tol=0)
    with pytest.raises(DomainError):
        QuadratureSpec(max_subdivisions=0)


def _young_tilts(pair, size, seed):
    gen = RngStream(seed).generator()
    out = []
    while len(out) < size:
        th = gen.uniform([-2, -2, -2], [1, 1 / pair.p, 1 / pair.q])
        if TiltPoint(*th).in_domain(pair):
            out.append(th)
    return np.array(out)


@pytest.mark.parametrize("p", [1.5, 3.0])
def test_lambda_convexity_invariant(p):
    pair = hp.conjugate(p)
    a, b = _young_tilts(pair, 10, 1), _young_tilts(pair, 10, 2)
    for lam in (0.25, 0.5, 0.75):
        mid = hp.cgf_grid(lam * a + (1 - lam) * b, pair)
        chord = lam * hp.cgf_grid(a, pair) + (1 - lam) * hp.cgf_grid(b, pair)
        assert np.all(mid <= chord + 1e-8)


def test_lambda_monotone_in_each_tilt():
    pair = hp.conjugate(3.0)
    base = _young_tilts(pair, 20, 3) - 0.05
    for k in range(3):
        bumped = base.copy()
        bumped[:, k] += 0.04
        assert np.all(hp.cgf_grid(bumped, pair) >= hp.cgf_grid(base, pair))


def test_rate_scan_zero_only_at_mean():
    m = hp.limit_constants(2.0).m
    for x in np.round(np.arange(0.1, 1.0, 0.1), 10):
        assert hp.ldp_rate(x, 2.0) > 1e-6
    assert hp.ldp_rate(m, 2.0) <= 1e-6


def test_mdp_rate_uses_constants_variance():
    consts = hp.limit_constants(3.0)
    assert hp.mdp_rate(1.0, 3.0) == 1.0 / (2.0 * consts.sigma2)
