"""Cumulant generating function, Legendre transform and rate functions.

Write ``a = |zeta|^p / p`` and ``b = |eta|^q / q`` (independent Gamma(1/p)
and Gamma(1/q) variables). Then ``lam = a + b`` is Exp(1), ``T = a / lam`` is
Beta(1/p, 1/q), the two are independent, and the tilted triple is
``lam * phi(T)`` with ``phi(tau) = (g(tau), p tau, q (1 - tau))`` and
``g(tau) = (p tau)^{1/p} (q (1 - tau))^{1/q}``. Integrating ``lam`` out gives

    Lambda(theta) = log E[1 / h(T)],   h(tau) = 1 - <theta, phi(tau)>,

a one-dimensional integral evaluated with tanh-sinh quadrature ("ray"
method). The nested two-dimensional quadrature of the original integral is
kept as an independent check ("nested" method).

The integral is finite exactly when ``h > 0`` on ``[0, 1]``, which by the
weighted AM-GM inequality is ``s < 1/p``, ``t < 1/q`` and
``r < (1 - p s)^{1/p} (1 - q t)^{1/q}``. The Young-inequality box
``s + max(r, 0)/p < 1/p``, ``t + max(r, 0)/q < 1/q`` is a strict subset.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Optional

import numpy as np
from scipy import integrate, optimize
from scipy.special import betaln, gammainccinv, gammaln

from .constants import ConjugatePair, conjugate, limit_constants
from .exceptions import ConvergenceError, DomainError

__all__ = [
    "TiltPoint",
    "MeanPoint",
    "QuadratureSpec",
    "OptimizerSpec",
    "LegendreResult",
    "RateResult",
    "cgf_lambda",
    "cgf_grid",
    "cgf_derivatives",
    "solve_legendre",
    "legendre_star",
    "solve_ldp_rate",
    "ldp_rate",
    "mdp_rate",
    "in_finite_domain",
    "write_rate_csv",
]


def _as_pair(pair) -> ConjugatePair:
    return pair if isinstance(pair, ConjugatePair) else conjugate(pair)


@dataclass(frozen=True)
class TiltPoint:
    """Tilt ``(r, s, t)`` paired with ``(|zeta eta|, |zeta|^p, |eta|^q)``."""

    r: float
    s: float
    t: float

    def as_array(self) -> np.ndarray:
        return np.array([self.r, self.s, self.t], dtype=float)

    def in_domain(self, pair) -> bool:
        """Young-inequality sufficient condition for a finite Lambda."""
        pair = _as_pair(pair)
        rp = max(self.r, 0.0)
        return self.s + rp / pair.p < 1.0 / pair.p and self.t + rp / pair.q < 1.0 / pair.q

    def in_finite_domain(self, pair) -> bool:
        """Exact finiteness condition (see module docstring)."""
        return bool(in_finite_domain(self.as_array(), pair))


@dataclass(frozen=True)
class MeanPoint:
    """Mean ``(u, v, w)`` of ``(|zeta eta|, |zeta|^p, |eta|^q)``."""

    u: float
    v: float
    w: float

    def __post_init__(self):
        if not (self.v > 0.0 and self.w > 0.0):
            raise DomainError(f"v and w must be positive, got {self.v}, {self.w}")

    def as_array(self) -> np.ndarray:
        return np.array([self.u, self.v, self.w], dtype=float)

    def ratio(self, pair) -> float:
        """The Hölder ratio ``u / (v^{1/p} w^{1/q})`` this point contracts to."""
        pair = _as_pair(pair)
        return self.u / (self.v ** (1.0 / pair.p) * self.w ** (1.0 / pair.q))


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_subdivisions: int = 200

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise DomainError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be at least 1")


@dataclass(frozen=True)
class OptimizerSpec:
    """Tolerances and budgets for the Legendre and contraction solves.

    ``max_evals`` caps Lambda evaluations per Legendre solve;
    ``theta_cap`` / ``value_cap`` decide when a supremum is declared infinite.
    """

    gtol: float = 1e-10
    xtol: float = 1e-8
    ftol: float = 1e-10
    max_evals: int = 500
    max_iter: int = 200
    theta_cap: float = 1e5
    value_cap: float = 1e6
    contraction_gtol: float = 1e-8


def in_finite_domain(theta, pair) -> np.ndarray:
    """Vectorized exact domain test for tilts of shape ``(..., 3)``."""
    pair = _as_pair(pair)
    th = np.asarray(theta, dtype=float)
    r, s, t = th[..., 0], th[..., 1], th[..., 2]
    a = 1.0 - pair.p * s
    b = 1.0 - pair.q * t
    ok = (a > 0) & (b > 0)
    bound = np.where(ok, np.maximum(a, 0) ** (1.0 / pair.p) * np.maximum(b, 0) ** (1.0 / pair.q), 0)
    return ok & (r < bound)


# ---------------------------------------------------------------- ray quadrature

_MAX_LEVEL = 14


@lru_cache(maxsize=128)
def _ray_nodes(p: float, level: int):
    """tanh-sinh nodes for E_{Beta(1/p, 1/q)}; returns (phi, log weights)."""
    q = p / (p - 1.0)
    a, b = 1.0 / p, 1.0 / q
    # Past |u| ~ 45/min(a, b) the Beta weight is below e^-45.
    t_max = math.asinh(45.0 / (math.pi * min(a, b)))
    step = 0.5 / 2 ** level
    k = math.ceil(t_max / step)
    t = step * np.arange(-k, k + 1)
    u = math.pi * np.sinh(t)
    log_tau = -np.logaddexp(0.0, -u)
    log_1m = -np.logaddexp(0.0, u)
    log_cosh = np.abs(t) + np.log1p(np.exp(-2 * np.abs(t))) - math.log(2.0)
    log_w = (a * log_tau + b * log_1m + math.log(math.pi) + log_cosh
             - betaln(a, b) + math.log(step))
    log_g = a * (math.log(p) + log_tau) + b * (math.log(q) + log_1m)
    phi = np.column_stack([np.exp(log_g), p * np.exp(log_tau), q * np.exp(log_1m)])
    keep = log_w > -745.0
    phi, log_w = phi[keep], log_w[keep]
    phi.setflags(write=False)
    log_w.setflags(write=False)
    return phi, log_w


def _ray_moments(theta: np.ndarray, pair: ConjugatePair, quad: QuadratureSpec,
                 order: int = 0):
    """E[1/h], and optionally E[phi/h^2], E[phi phi^T/h^3], for rows of theta.

    Each row is refined by step halving until its E[1/h] stabilizes; rows stop
    independently. tanh-sinh roughly squares its error per halving, so the
    stopping rule is conservative.
    """
    theta = np.atleast_2d(theta)
    m = theta.shape[0]
    m0 = np.empty(m)
    final = np.full(m, -1)
    prev = None
    active = np.arange(m)
    max_level = min(_MAX_LEVEL, quad.max_subdivisions)
    for level in range(max_level + 1):
        phi, log_w = _ray_nodes(pair.p, level)
        cur = (1.0 / (1.0 - theta[active] @ phi.T)) @ np.exp(log_w)
        if prev is not None and level >= 2:
            done = np.abs(cur - prev) <= quad.rel_tol * np.abs(cur) + quad.abs_tol
            m0[active[done]] = cur[done]
            final[active[done]] = level
            active, cur = active[~done], cur[~done]
            if active.size == 0:
                break
        prev = cur
    else:
        raise ConvergenceError(
            f"ray quadrature did not reach rel_tol={quad.rel_tol} within {max_level} halvings")
    if order == 0:
        return m0, None, None
    m1 = np.empty((m, 3))
    m2 = np.empty((m, 3, 3)) if order >= 2 else None
    for level in np.unique(final):
        rows = np.flatnonzero(final == level)
        phi, log_w = _ray_nodes(pair.p, int(level))
        inv = 1.0 / (1.0 - theta[rows] @ phi.T)
        inv2 = inv * inv * np.exp(log_w)
        m1[rows] = inv2 @ phi
        if order >= 2:
            m2[rows] = np.einsum("mk,ki,kj->mij", inv2 * inv, phi, phi)
    return m0, m1, m2


def cgf_grid(theta, pair, quad: QuadratureSpec = QuadratureSpec()) -> np.ndarray:
    """Lambda on an ``(M, 3)`` array of tilts; ``inf`` outside the finite domain."""
    pair = _as_pair(pair)
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    out = np.full(theta.shape[0], np.inf)
    ok = in_finite_domain(theta, pair)
    if ok.any():
        idx = np.flatnonzero(ok)
        for lo in range(0, idx.size, 4096):
            sl = idx[lo:lo + 4096]
            m0, _, _ = _ray_moments(theta[sl], pair, quad)
            out[sl] = np.log(m0)
    return out


def cgf_derivatives(theta, pair, quad: QuadratureSpec = QuadratureSpec()):
    """``(Lambda, grad, hessian)`` at one in-domain tilt, all analytic."""
    pair = _as_pair(pair)
    th = np.asarray(theta.as_array() if isinstance(theta, TiltPoint) else theta, dtype=float)
    if not in_finite_domain(th, pair):
        raise DomainError(f"tilt {th.tolist()} is outside the domain of Lambda")
    m0, m1, m2 = _ray_moments(th[None, :], pair, quad, order=2)
    m0, m1, m2 = m0[0], m1[0], m2[0]
    grad = m1 / m0
    hess = 2.0 * m2 / m0 - np.outer(grad, grad)
    return float(math.log(m0)), grad, hess


# ------------------------------------------------------------- nested quadrature

def _nested_lambda(th: np.ndarray, pair: ConjugatePair, quad: QuadratureSpec) -> float:
    r, s, t = th
    p, q = pair.p, pair.q
    rp = max(r, 0.0)
    ka, kb = 1.0 - p * s - rp, 1.0 - q * t - rp
    if ka <= 0 or kb <= 0:
        raise DomainError("nested quadrature needs the Young-inequality domain")
    # (p a)^{1/p} (q b)^{1/q} <= a + b, so the integrand is dominated by a
    # product of Gamma kernels with rates ka, kb; cut where their tails drop
    # below abs_tol.
    za, zb = ka ** (-1.0 / p), kb ** (-1.0 / q)
    eps = 0.25 * quad.abs_tol / (za * zb)
    cut_a = gammainccinv(1.0 / p, min(eps, 0.5)) / ka
    cut_b = gammainccinv(1.0 / q, min(eps, 0.5)) / kb
    log_norm = -gammaln(1.0 / p) - gammaln(1.0 / q)
    cp, cq = p ** (1.0 / p), q ** (1.0 / q)

    def inner(a):
        ga = cp * a ** (1.0 / p)

        def f(b):
            return math.exp(r * ga * cq * b ** (1.0 / q) + (p * s - 1.0) * a
                            + (q * t - 1.0) * b + log_norm)

        val, _err, *rest = integrate.quad(
            f, 0.0, cut_b, weight="alg", wvar=(1.0 / q - 1.0, 0.0),
            epsabs=quad.abs_tol, epsrel=quad.rel_tol, limit=quad.max_subdivisions,
            full_output=1)
        if len(rest) > 1 and rest[0] not in (0,):
            raise ConvergenceError(f"inner quadrature failed: {rest[1]}")
        return val

    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, _err = integrate.quad(
                inner, 0.0, cut_a, weight="alg", wvar=(1.0 / p - 1.0, 0.0),
                epsabs=quad.abs_tol, epsrel=quad.rel_tol, limit=quad.max_subdivisions)
        except integrate.IntegrationWarning as exc:
            raise ConvergenceError(f"nested quadrature did not converge: {exc}") from exc
    return math.log(val)


@lru_cache(maxsize=65536)
def _cgf_cached(key, p: float, quad: QuadratureSpec, method: str) -> float:
    pair = conjugate(p)
    th = np.asarray(key, dtype=float)
    if method == "nested":
        return _nested_lambda(th, pair, quad)
    m0, _, _ = _ray_moments(th[None, :], pair, quad)
    return float(math.log(m0[0]))


def cgf_lambda(theta, pair, quad: QuadratureSpec = QuadratureSpec(), *,
               method: str = "ray", domain: str = "young") -> float:
    """Lambda(r, s, t) = log E exp(r|zeta eta| + s|zeta|^p + t|eta|^q).

    ``domain="young"`` refuses tilts outside the Young-inequality box;
    ``domain="exact"`` accepts the full finiteness domain (ray method only).
    Results are memoized on theta rounded to 1e-10.
    """
    pair = _as_pair(pair)
    tp = theta if isinstance(theta, TiltPoint) else TiltPoint(*map(float, theta))
    if method not in ("ray", "nested"):
        raise ValueError(f"unknown method {method!r}")
    if domain == "young":
        ok = tp.in_domain(pair)
    elif domain == "exact":
        ok = tp.in_finite_domain(pair)
    else:
        raise ValueError(f"unknown domain {domain!r}")
    if not ok:
        raise DomainError(f"tilt {tp} is outside the {domain} domain of Lambda")
    key = tuple(round(v, 10) for v in (tp.r, tp.s, tp.t))
    return _cgf_cached(key, pair.p, quad, method)


# ------------------------------------------------------------ Legendre transform

@dataclass(frozen=True)
class LegendreResult:
    value: float
    theta: np.ndarray = field(repr=False)
    residual: float
    converged: bool
    diverged: bool
    evaluations: int


def _newton_legendre(mu, pair, quad, opt, theta0):
    th = np.zeros(3) if theta0 is None else np.asarray(theta0, dtype=float).copy()
    if not in_finite_domain(th, pair):
        th = np.zeros(3)
    lam, grad, hess = cgf_derivatives(th, pair, quad)
    evals = 1
    f = th @ mu - lam
    for _ in range(opt.max_iter):
        g = mu - grad
        res = float(np.linalg.norm(g))
        if res <= opt.gtol:
            return LegendreResult(f, th, res, True, False, evals)
        try:
            step = np.linalg.solve(hess, g)
        except np.linalg.LinAlgError:
            step = g
        slope = g @ step
        if not slope > 0:
            step, slope = g, g @ g
        alpha = 1.0
        while True:
            cand = th + alpha * step
            if in_finite_domain(cand, pair):
                evals += 1
                try:
                    lam_c, grad_c, hess_c = cgf_derivatives(cand, pair, quad)
                except ConvergenceError:
                    # Too close to the boundary to integrate reliably: back off.
                    lam_c = math.inf
                f_c = cand @ mu - lam_c
                if f_c >= f + 1e-4 * alpha * slope or alpha * np.abs(step).max() < 1e-15:
                    break
            alpha *= 0.5
            if alpha < 1e-20 or evals >= opt.max_evals:
                return LegendreResult(f, th, res, res <= 1e3 * opt.gtol, False, evals)
        done = abs(f_c - f) <= opt.ftol * max(1.0, abs(f)) and \
            alpha * np.abs(step).max() <= opt.xtol
        th, lam, grad, hess, f = cand, lam_c, grad_c, hess_c, f_c
        if f > opt.value_cap or np.abs(th).max() > opt.theta_cap:
            return LegendreResult(math.inf, th, math.inf, False, True, evals)
        if evals >= opt.max_evals:
            break
        if done:
            res = float(np.linalg.norm(mu - grad))
            return LegendreResult(f, th, res, res <= 1e3 * opt.gtol, False, evals)
    res = float(np.linalg.norm(mu - grad))
    return LegendreResult(f, th, res, res <= opt.gtol, False, evals)


def _axis_starts():
    s = 0.05
    return [np.zeros(3)] + [sign * s * e for e in np.eye(3) for sign in (1.0, -1.0)]


def solve_legendre(point, pair, quad: QuadratureSpec = QuadratureSpec(),
                   opt: OptimizerSpec = OptimizerSpec(), *, theta0=None) -> LegendreResult:
    """Maximize ``<theta, mu> - Lambda(theta)`` by damped Newton.

    The origin (or `theta0`) is tried first; if that solve neither converges
    nor diverges, the six axis-perturbed starts are tried and the best kept.
    """
    pair = _as_pair(pair)
    mu = point.as_array() if isinstance(point, MeanPoint) else np.asarray(point, dtype=float)
    if not np.all(np.isfinite(mu)):
        raise DomainError("mean point must be finite")
    best = _newton_legendre(mu, pair, quad, opt, theta0)
    if best.converged or best.diverged:
        return best
    for start in _axis_starts():
        cand = _newton_legendre(mu, pair, quad, opt, start)
        if cand.diverged:
            return cand
        if cand.converged or cand.value > best.value:
            best = cand
        if cand.converged:
            break
    return best


def legendre_star(point, pair, quad: QuadratureSpec = QuadratureSpec(),
                  opt: OptimizerSpec = OptimizerSpec()) -> float:
    """Lambda*(mu); ``inf`` when the supremum diverges.

    Raises :class:`ConvergenceError` (carrying ``best`` and ``residual``) when
    the solver stalls.
    """
    res = solve_legendre(point, pair, quad, opt)
    if not res.converged and not res.diverged:
        raise ConvergenceError(
            f"Legendre solve stalled at value {res.value!r}, residual {res.residual:.3g}",
            best=res.value, residual=res.residual)
    return res.value


# ------------------------------------------------------------------- contraction

@dataclass(frozen=True)
class RateResult:
    x: float
    value: float
    converged: bool
    diverged: bool
    residual: float
    v: float = math.nan
    w: float = math.nan
    theta: Optional[np.ndarray] = field(default=None, repr=False)

    def as_row(self) -> dict:
        return {"x": self.x, "rate": self.value, "converged": self.converged,
                "residual": self.residual}


_CONTRACTION_STARTS = ((1.0, 1.0), (2.0, 2.0), (0.5, 0.5), (2.0, 0.5), (0.5, 2.0))


def solve_ldp_rate(x: float, pair, quad: QuadratureSpec = QuadratureSpec(),
                   opt: OptimizerSpec = OptimizerSpec()) -> RateResult:
    """``I(x) = inf_{v,w>0} Lambda*(x v^{1/p} w^{1/q}, v, w)``.

    Minimized by BFGS over ``(log v, log w)``; the gradient follows from the
    envelope theorem, ``d Lambda*/d mu = theta*``.
    """
    pair = _as_pair(pair)
    x = float(x)
    if math.isnan(x):
        raise DomainError("x is NaN")
    if x <= 0.0:
        return RateResult(x, math.inf, True, True, 0.0)
    p, q = pair.p, pair.q
    warm = {"theta": None}
    state = {"diverged": False, "stalled": 0, "last": None}

    def objective(z):
        v, w = math.exp(z[0]), math.exp(z[1])
        u = x * v ** (1.0 / p) * w ** (1.0 / q)
        res = solve_legendre(np.array([u, v, w]), pair, quad, opt, theta0=warm["theta"])
        if res.diverged:
            state["diverged"] = True
            return math.inf, np.zeros(2)
        if not res.converged:
            state["stalled"] += 1
        warm["theta"] = res.theta
        state["last"] = res
        th = res.theta
        grad = np.array([th[0] * u / p + th[1] * v, th[0] * u / q + th[2] * w])
        return res.value, grad

    best: Optional[RateResult] = None
    all_diverged = True
    for v0, w0 in _CONTRACTION_STARTS:
        state.update(diverged=False, stalled=0, last=None)
        warm["theta"] = None
        z0 = np.log([v0, w0])
        f0, _ = objective(z0)
        if state["diverged"] or not math.isfinite(f0):
            continue
        all_diverged = False
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            sol = optimize.minimize(objective, z0, jac=True, method="BFGS",
                                    options={"gtol": opt.contraction_gtol, "maxiter": 200})
        if not math.isfinite(sol.fun):
            continue
        gnorm = float(np.linalg.norm(sol.jac))
        ok = (sol.success or gnorm <= 1e2 * opt.contraction_gtol) and state["stalled"] == 0
        v, w = float(np.exp(sol.x[0])), float(np.exp(sol.x[1]))
        cand = RateResult(x, max(float(sol.fun), 0.0), bool(ok), False, gnorm, v, w,
                          None if state["last"] is None else state["last"].theta)
        if best is None or cand.value < best.value - 1e-12 or (
                not best.converged and cand.converged and cand.value <= best.value + 1e-9):
            best = cand
        if best.converged:
            # Remaining starts are a fallback for stalled solves only.
            break
    if all_diverged or best is None:
        return RateResult(x, math.inf, True, True, math.inf)
    return best


def ldp_rate(x: float, pair, quad: QuadratureSpec = QuadratureSpec(),
             opt: OptimizerSpec = OptimizerSpec()) -> float:
    """The LDP rate of the Hölder ratio at `x` (``inf`` for ``x <= 0`` or divergence)."""
    res = solve_ldp_rate(x, pair, quad, opt)
    if not res.converged:
        raise ConvergenceError(
            f"rate solve at x={x} stalled at {res.value!r}, residual {res.residual:.3g}",
            best=res.value, residual=res.residual)
    return res.value


def mdp_rate(t: float, pair) -> float:
    """Moderate-deviation rate ``t^2 / (2 sigma^2)``."""
    return float(t) ** 2 / (2.0 * limit_constants(_as_pair(pair)).sigma2)


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    value = float(value)
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return repr(value)


def write_rate_csv(path_or_file, results: Iterable[RateResult]) -> None:
    """Rate-curve dump with header ``x,rate,converged,residual``."""
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="", encoding="utf-8") if own else path_or_file
    try:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(["x", "rate", "converged", "residual"])
        for res in results:
            row = res.as_row()
            writer.writerow([_fmt(row["x"]), _fmt(row["rate"]), _fmt(row["converged"]),
                             _fmt(row["residual"])])
    finally:
        if own:
            fh.close()
