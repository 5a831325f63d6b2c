"""Test objectives with exact gradients and numerical class-membership checks.

All evaluators accept a single point ``(d,)`` or a batch ``(n, d)``.
"""
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .domains import ThetaSpec

PAIR_MIN_NORM = 1e-3
OSS_MIN_NORM = 1e-2
FD_STEP = 1e-4


@dataclass(frozen=True)
class Objective:
    """Differentiable monotone function on [0,1]^d.

    ``B`` is the exact supremum of ``||grad f||`` over the unit box and ``M0``
    the supremum of ``f``.  ``tag`` records the certified class, e.g.
    ``{"class": "p-sigma", "gamma": 1.0, "p": 1, "sigma": 1.0}``.
    """
    d: int
    value: Callable
    grad: Callable
    B: float
    M0: float
    tag: dict = field(default_factory=lambda: {"class": "unknown"})
    name: str = "objective"
    params: dict = field(default_factory=dict, compare=False)

    def __call__(self, x):
        return self.value(x)

    def with_tag(self, **tag):
        return replace(self, tag={**self.tag, **tag})

    def theta(self):
        """Weight matching the certified class, for building a context."""
        cls = self.tag.get("class")
        if cls == "p-sigma":
            return ThetaSpec.norm_power(self.tag.get("p", 1.0), self.tag["sigma"])
        return ThetaSpec.constant()

    @property
    def gamma(self):
        return float(self.tag.get("gamma", 1.0))


@dataclass
class MembershipReport:
    n_tested: int
    lower_violation: float
    upper_violation: float
    witness: tuple = None

    @property
    def max_violation(self):
        return max(self.lower_violation, self.upper_violation)

    def passes(self, tol=0.0):
        return self.max_violation <= tol


def _quadratic_parts(a, H):
    a = np.asarray(a, dtype=np.float64)
    H = np.asarray(H, dtype=np.float64)
    d = a.shape[0]
    if H.shape != (d, d):
        raise ValueError("H must be d x d")
    if not np.allclose(H, H.T, atol=1e-12):
        raise ValueError("H must be symmetric")

    def value(x):
        x = np.asarray(x, dtype=np.float64)
        return x @ a - 0.5 * np.einsum("...i,ij,...j->...", x, H, x)

    def grad(x):
        return a - np.asarray(x, dtype=np.float64) @ H

    return a, H, value, grad


def dr_gamma(a, H):
    """Exact weak-DR constant of ``a.x - x.Hx/2`` on the unit box (capped at 1)."""
    a = np.asarray(a, dtype=np.float64)
    H = np.asarray(H, dtype=np.float64)
    pos = np.where(H > 0, H, 0.0).sum(axis=1)
    neg = np.where(H < 0, -H, 0.0).sum(axis=1)
    low = a - pos
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(low + neg > 0, low / (low + neg), 1.0)
    return float(min(1.0, ratios.min()))


def make_monotone_quadratic(a, H):
    """f(x) = a.x - x.Hx/2 with H >= 0 entrywise and a >= H 1 (DR-submodular)."""
    a, H, value, grad = _quadratic_parts(a, H)
    if np.any(a < 0) or np.any(H < 0):
        raise ValueError("monotone quadratic needs a >= 0 and H >= 0")
    if np.any(a < H.sum(axis=1) - 1e-12):
        raise ValueError("need a >= H 1 so the gradient stays nonnegative")
    ones = np.ones(a.shape[0])
    return Objective(
        d=a.shape[0], value=value, grad=grad,
        B=float(np.linalg.norm(a)), M0=float(value(ones)),
        tag={"class": "dr-submodular", "gamma": 1.0},
        name="quadratic", params={"a": a, "H": H},
    )


def make_weakly_dr_quadratic(a, H):
    """Quadratic whose H may carry negative (supermodular) entries.

    Monotone when ``a >= sum of positive H entries per row``; tagged with the
    exact weak-DR constant from :func:`dr_gamma`.
    """
    a, H, value, grad = _quadratic_parts(a, H)
    pos = np.where(H > 0, H, 0.0).sum(axis=1)
    if np.any(a < pos - 1e-12):
        raise ValueError("gradient would turn negative on the unit box")
    neg = np.where(H < 0, -H, 0.0).sum(axis=1)
    ones = np.ones(a.shape[0])
    B = float(np.linalg.norm(a + neg))
    return Objective(
        d=a.shape[0], value=value, grad=grad, B=B, M0=float(value(ones)),
        tag={"class": "dr-submodular", "gamma": dr_gamma(a, H)},
        name="weak_quadratic", params={"a": a, "H": H},
    )


def make_linear(a):
    a = np.asarray(a, dtype=np.float64)
    f = make_monotone_quadratic(a, np.zeros((a.shape[0], a.shape[0])))
    return replace(f, name="linear")


def random_quadratic(d, seed=0, density=1.0, scale=1.0, gamma=1.0):
    """Random monotone quadratic; ``gamma < 1`` mixes in supermodular terms.

    With ``gamma < 1`` about half of the off-diagonal pairs turn negative and
    are scaled so that the exact weak-DR constant lands at ``gamma``.
    """
    rng = np.random.default_rng(seed)
    U = rng.random((d, d)) * (rng.random((d, d)) < density)
    H = scale * (U + U.T) / 2
    if gamma >= 1.0:
        a = H.sum(axis=1) + rng.random(d) + 0.1
        return make_monotone_quadratic(a, H)
    flip = np.triu(rng.random((d, d)) < 0.5, 1)
    flip = flip | flip.T
    N = np.where(flip, H, 0.0)
    N[N.sum(axis=1) == 0, :] = 0.0
    P = H - N
    a = P.sum(axis=1) + rng.random(d) + 0.1
    low = a - P.sum(axis=1)
    rows = N.sum(axis=1) > 0
    if not np.any(rows):
        return make_monotone_quadratic(a, P)
    # row i has gamma_i = low_i / (low_i + t N_i 1); pick t so the min is gamma
    t = float(np.min(low[rows] * (1 - gamma) / (gamma * N.sum(axis=1)[rows])))
    return make_weakly_dr_quadratic(a, P - t * N)


def make_norm_power(d, m):
    """f(x) = ||x||_1^m, in the (1,1,m-1) class and (m-1)/2-OSS."""
    if m < 1:
        raise ValueError("norm power needs m >= 1")
    if d < 1:
        raise ValueError("dimension must be >= 1")
    m = float(m)

    def value(x):
        s = np.maximum(np.sum(np.asarray(x, dtype=np.float64), axis=-1), 0.0)
        return np.power(s, m)

    def grad(x):
        x = np.asarray(x, dtype=np.float64)
        s = np.maximum(np.sum(x, axis=-1), 0.0)
        g = m * np.power(s, m - 1.0)
        return np.broadcast_to(np.asarray(g)[..., None], x.shape).copy()

    return Objective(
        d=d, value=value, grad=grad,
        B=m * d ** (m - 1.0) * np.sqrt(d), M0=float(d) ** m,
        tag={"class": "p-sigma", "gamma": 1.0, "p": 1.0, "sigma": m - 1.0},
        name="norm_power", params={"m": m},
    )


def from_dict(spec, d=None):
    kind = spec.get("type")
    if kind == "quadratic":
        if "a" in spec:
            a = np.asarray(spec["a"], dtype=np.float64)
            H = np.asarray(spec.get("H", np.zeros((a.size, a.size))), dtype=np.float64)
            if np.any(H < 0):
                return make_weakly_dr_quadratic(a, H)
            return make_monotone_quadratic(a, H)
        return random_quadratic(spec.get("d", d), seed=spec.get("seed", 0),
                                density=spec.get("density", 1.0),
                                scale=spec.get("scale", 1.0),
                                gamma=spec.get("gamma", 1.0))
    if kind == "linear":
        return make_linear(spec["a"])
    if kind == "norm_power":
        return make_norm_power(spec.get("d", d), spec.get("m", 2.0))
    raise ValueError(f"unknown objective type {kind!r}")


def sum_objective(objs):
    """Pointwise sum, used as the comparator target for a sequence of rounds."""
    objs = list(objs)
    return Objective(
        d=objs[0].d,
        value=lambda x: sum(f.value(x) for f in objs),
        grad=lambda x: sum(f.grad(x) for f in objs),
        B=sum(f.B for f in objs), M0=sum(f.M0 for f in objs),
        name="sum",
    )


def sample_pairs(d, n, rng, min_norm=PAIR_MIN_NORM):
    """x uniform on the box (||x||_inf >= min_norm), y = x + U (1 - x)."""
    x = rng.random((n, d))
    bad = np.max(x, axis=1) < min_norm
    while np.any(bad):
        x[bad] = rng.random((int(bad.sum()), d))
        bad = np.max(x, axis=1) < min_norm
    y = x + rng.random((n, d)) * (1.0 - x)
    return x, y


def _up_concave_terms(f, theta, x, y):
    diff = y - x
    delta = f.value(y) - f.value(x)
    tx = np.asarray(theta(x), dtype=np.float64) * np.ones(len(x))
    ty = np.asarray(theta(y), dtype=np.float64) * np.ones(len(x))
    inner_y = np.einsum("ij,ij->i", f.grad(y), diff)
    inner_x = np.einsum("ij,ij->i", f.grad(x), diff)
    return delta, tx, ty, inner_y, inner_x


def check_up_concave(f, gamma, theta, n_pairs=10_000, rng_seed=0):
    """Largest violations of the two weak theta-up-concavity inequalities."""
    rng = np.random.default_rng(rng_seed)
    x, y = sample_pairs(f.d, n_pairs, rng)
    delta, tx, ty, inner_y, inner_x = _up_concave_terms(f, theta, x, y)
    lower = np.maximum(gamma * tx / ty * inner_y - delta, 0.0)
    upper = np.maximum(delta - ty / (gamma * tx) * inner_x, 0.0)
    worst = int(np.argmax(np.maximum(lower, upper)))
    return MembershipReport(n_pairs, float(lower.max()), float(upper.max()),
                            (x[worst], y[worst]))


def tightest_gamma(f, theta, n_pairs=10_000, rng_seed=0):
    """Largest gamma in (0, 1] with no violation on the sampled pairs."""
    rng = np.random.default_rng(rng_seed)
    x, y = sample_pairs(f.d, n_pairs, rng)
    delta, tx, ty, inner_y, inner_x = _up_concave_terms(f, theta, x, y)
    with np.errstate(divide="ignore", invalid="ignore"):
        lo = np.where(tx * inner_y > 0, delta * ty / (tx * inner_y), np.inf)
        up = np.where((delta > 0) & (tx > 0), ty * inner_x / (tx * delta), np.inf)
    return float(min(1.0, lo.min(), up.min()))


def tightest_sigma(f, gamma=1.0, n_pairs=10_000, rng_seed=0):
    """Smallest sigma with theta = ||.||_1^sigma passing on the sampled pairs.

    Sample-based, so it can undershoot the true class parameter.
    """
    rng = np.random.default_rng(rng_seed)
    x, y = sample_pairs(f.d, n_pairs, rng)
    diff = y - x
    delta = f.value(y) - f.value(x)
    inner_y = np.einsum("ij,ij->i", f.grad(y), diff)
    inner_x = np.einsum("ij,ij->i", f.grad(x), diff)
    ratio = x.sum(axis=1) / y.sum(axis=1)
    log_ratio = np.log(ratio)
    need = np.zeros(len(x))
    with np.errstate(divide="ignore", invalid="ignore"):
        lo_bad = (gamma * inner_y > delta) & (delta > 0) & (log_ratio < 0)
        need = np.where(lo_bad, np.log(delta / (gamma * inner_y)) / log_ratio, need)
        up_bad = (gamma * delta > inner_x) & (inner_x > 0) & (log_ratio < 0)
        need = np.maximum(need, np.where(up_bad, np.log(gamma * delta / inner_x) / -log_ratio, 0.0))
    return float(max(0.0, need.max()))


def hessian_form(f, x, u, h=FD_STEP):
    """u' (Hess f)(x) u from central differences of the gradient."""
    gp = f.grad(x + h * u)
    gm = f.grad(x - h * u)
    return np.einsum("...i,...i->...", gp - gm, u) / (2 * h)


def check_oss(f, sigma, n_points=10_000, rng_seed=0):
    """Largest violation of 0.5 u'Hu <= sigma ||u||_1/||x||_1 u'grad f(x)."""
    rng = np.random.default_rng(rng_seed)
    x = rng.random((n_points, f.d))
    bad = np.max(x, axis=1) < OSS_MIN_NORM
    while np.any(bad):
        x[bad] = rng.random((int(bad.sum()), f.d))
        bad = np.max(x, axis=1) < OSS_MIN_NORM
    u = rng.random((n_points, f.d))
    lhs = 0.5 * hessian_form(f, x, u)
    rhs = sigma * u.sum(axis=1) / x.sum(axis=1) * np.einsum("ij,ij->i", u, f.grad(x))
    viol = np.maximum(lhs - rhs, 0.0)
    worst = int(np.argmax(viol))
    return MembershipReport(n_points, 0.0, float(viol.max()), (x[worst], u[worst]))


@dataclass
class ContainmentReport:
    up_concave_sigma: MembershipReport
    oss: MembershipReport
    up_concave_2sigma: MembershipReport


def check_containment(f, sigma, n=10_000, rng_seed=0):
    """The three checks whose outcomes the two containments relate."""
    return ContainmentReport(
        check_up_concave(f, 1.0, ThetaSpec.norm_power(1, sigma), n, rng_seed),
        check_oss(f, sigma, n, rng_seed),
        check_up_concave(f, 1.0, ThetaSpec.norm_power(1, 2 * sigma), n, rng_seed),
    )


def lyapunov_profile(f, sigma, x, y, n_grid=50):
    """q(t) = g'(t) / ||x + t(y - x)||_1^(2 sigma) on a uniform grid of [0, 1]."""
    t = np.linspace(0.0, 1.0, n_grid)
    phi = x[None, :] + t[:, None] * (y - x)[None, :]
    gprime = f.grad(phi) @ (y - x)
    return gprime / np.power(phi.sum(axis=1), 2 * sigma)


def gradient_fd_error(f, x, h=1e-6):
    """Max relative gap between ``f.grad`` and central differences of ``f``."""
    x = np.asarray(x, dtype=np.float64)
    eye = np.eye(f.d)
    fd = np.stack([(f.value(x + h * e) - f.value(x - h * e)) / (2 * h) for e in eye], axis=-1)
    g = f.grad(x)
    scale = np.maximum(np.abs(g), 1.0)
    return float(np.max(np.abs(fd - g) / scale))
