"""Linear surrogate of a weakly theta-up-concave function and its one-query
stochastic estimator.

Along the ray ``r -> r x`` the exponent is

    l(r, x) = -(gamma / R_theta) * int_r^1 theta(s x) ds,

the surrogate is ``int_0^1 exp(l(r, x)) grad f(r x) dr`` and the estimator
draws ``z`` with density proportional to ``exp(l(., x))`` and returns
``w(x) * Q(z x)`` where ``w(x) = int_0^1 exp(l(r, x)) dr``.

For theta = ||.||_p^sigma the exponent has the closed form
``-c (1 - r^(sigma+1))`` with ``c = gamma ||x||_p^sigma / (R_theta (sigma+1))``
and the heavy lifting goes to the compiled kernels.
"""
from dataclasses import dataclass

import numpy as np

from . import kernels
from .domains import MAX_VERTEX_DIM, ThetaSpec, UnsupportedError, radial_bounds, vertices

SURROGATE_TOL = 1e-8
MAX_NODES = 4097
CDF_TOL = 1e-10


class QuadratureError(RuntimeError):
    def __init__(self, message, residual):
        super().__init__(f"{message} (last residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class LinearizationContext:
    gamma: float
    theta: ThetaSpec
    R_theta: float
    n_nodes: int = 65
    cdf_tol: float = CDF_TOL

    def __post_init__(self):
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")
        if self.R_theta <= 0:
            raise ValueError("R_theta must be positive")
        if self.n_nodes < 3 or self.n_nodes % 2 == 0:
            raise ValueError("Simpson needs an odd node count >= 3")


@dataclass
class SurrogateEstimate:
    g: np.ndarray
    weight: float
    z: float
    queries: int = 1


def make_context(K, theta, gamma=1.0, **kwargs):
    """Context whose R_theta comes from the ambient set ``K``."""
    return LinearizationContext(gamma, theta, radial_bounds(K, theta).R_theta, **kwargs)


def ray_coefficients(ctx, x):
    """``(c, s)`` with l(r, x) = -c (1 - r^s) for closed-form weights."""
    s = ctx.theta.exponent + 1.0
    c = ctx.gamma * float(ctx.theta(np.asarray(x, dtype=np.float64))) / (ctx.R_theta * s)
    return c, s


def _theta_line_integral(ctx, x, r):
    """int_r^1 theta(s x) ds for each entry of ``r`` (custom weights)."""
    r = np.atleast_1d(np.asarray(r, dtype=np.float64))
    t = np.linspace(0.0, 1.0, ctx.n_nodes)
    s = r[:, None] + (1.0 - r[:, None]) * t[None, :]
    pts = (s[..., None] * x).reshape(-1, x.shape[0])
    vals = np.asarray(ctx.theta(pts), dtype=np.float64).reshape(s.shape)
    h = (1.0 - r) / (ctx.n_nodes - 1)
    return h / 3.0 * (vals[:, 0] + vals[:, -1] + 4.0 * vals[:, 1:-1:2].sum(axis=1)
                      + 2.0 * vals[:, 2:-1:2].sum(axis=1))


def ell(ctx, r, x):
    """Exponent l(r, x) <= 0, with l(1, x) = 0."""
    x = np.asarray(x, dtype=np.float64)
    scalar = np.ndim(r) == 0
    if ctx.theta.closed_form:
        c, s = ray_coefficients(ctx, x)
        out = -c * (1.0 - np.power(np.asarray(r, dtype=np.float64), s))
    else:
        out = -ctx.gamma / ctx.R_theta * _theta_line_integral(ctx, x, r)
    return float(out) if scalar else out


def _profile(ctx, x):
    """Integrand r -> exp(l(r, x)) as a vectorized callable."""
    if ctx.theta.closed_form:
        c, s = ray_coefficients(ctx, x)
        return lambda r: kernels.ray_integrand(c, s, r)
    return lambda r: np.exp(ell(ctx, np.asarray(r), x))


def weight_integral(ctx, x):
    """w(x) = int_0^1 exp(l(r, x)) dr, in (exp(l(0, x)), 1]."""
    if ctx.theta.closed_form:
        c, s = ray_coefficients(ctx, x)
        if c == 0.0:
            return 1.0
        return kernels.ray_weight(c, s)
    value, _, _ = kernels.simpson_refine(_profile(ctx, x), n0=ctx.n_nodes)
    return float(value)


def surrogate_exact(ctx, f, x, tol=SURROGATE_TOL, max_nodes=MAX_NODES):
    """Quadrature of int_0^1 exp(l(r, x)) grad f(r x) dr with node doubling."""
    x = np.asarray(x, dtype=np.float64)
    profile = _profile(ctx, x)

    def integrand(r):
        return profile(r)[:, None] * f.grad(r[:, None] * x[None, :])

    value, n, residual = kernels.simpson_refine(integrand, n0=ctx.n_nodes,
                                                nmax=max_nodes, tol=tol)
    if residual >= tol:
        raise QuadratureError(f"surrogate quadrature did not converge with {n} nodes",
                              residual)
    return value


def theta_ray_integral(ctx, x):
    """int_0^1 theta(s x) ds."""
    if ctx.theta.closed_form:
        return float(ctx.theta(np.asarray(x, dtype=np.float64))) / (ctx.theta.exponent + 1.0)
    return float(_theta_line_integral(ctx, np.asarray(x, dtype=np.float64), 0.0)[0])


def alpha_at(ctx, x):
    """Pointwise coefficient 1 - exp(-(gamma/R_theta) int_0^1 theta(s x) ds)."""
    return float(-np.expm1(-ctx.gamma / ctx.R_theta * theta_ray_integral(ctx, x)))


def alpha_star(ctx, Kstar):
    """Coefficient valid for every point of the maximal convex subset."""
    if ctx.theta.closed_form:
        r_theta = radial_bounds(Kstar, ctx.theta).r_theta
        inner = r_theta / (ctx.theta.exponent + 1.0)
    else:
        if Kstar.d > MAX_VERTEX_DIM:
            raise UnsupportedError("custom theta needs d <= %d" % MAX_VERTEX_DIM)
        inner = min(theta_ray_integral(ctx, v) for v in vertices(Kstar))
    return float(-np.expm1(-ctx.gamma / ctx.R_theta * inner))


def z_cdf(ctx, x, z):
    """P(Z_x <= z)."""
    return kernels.profile_cdf(_profile(ctx, x), z)


def sample_z(ctx, x, rng, size=None):
    """Inverse-CDF draws of Z_x (bisection to ``ctx.cdf_tol`` in z)."""
    u = rng.random(1 if size is None else size)
    z = invert_z_cdf(ctx, x, u)
    return float(z[0]) if size is None else z


def invert_z_cdf(ctx, x, u):
    if ctx.theta.closed_form:
        c, s = ray_coefficients(ctx, x)
        return kernels.sample_ray(c, s, np.asarray(u, dtype=np.float64), ctx.cdf_tol)
    return kernels.sample_profile(_profile(ctx, x), u, ctx.cdf_tol)


def estimate_surrogate(ctx, oracle, x, rng):
    """One-query unbiased estimate of the surrogate at ``x``."""
    if oracle.order != "first":
        raise ValueError("the surrogate estimator needs a first-order oracle")
    x = np.asarray(x, dtype=np.float64)
    w = weight_integral(ctx, x)
    z = sample_z(ctx, x, rng)
    sample = oracle.query(z * x)
    return SurrogateEstimate(w * sample, w, z, 1)


def estimate_surrogate_batch(ctx, oracle, x, n, rng):
    """``n`` independent one-query estimates at ``x`` as an ``(n, d)`` array."""
    if oracle.order != "first":
        raise ValueError("the surrogate estimator needs a first-order oracle")
    x = np.asarray(x, dtype=np.float64)
    w = weight_integral(ctx, x)
    z = sample_z(ctx, x, rng, size=n)
    return w * oracle.query_batch(z[:, None] * x[None, :])
