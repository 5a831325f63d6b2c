"""Pure numpy implementations of the hot numerical kernels.

These mirror ``_ckernels.pyx`` one for one and are used whenever the compiled
extension is unavailable (or ``UPCONCAVE_PURE_PYTHON=1`` is set).  The scalar
loops of the compiled version are vectorized here instead.
"""
import numpy as np

# 5-point Gauss-Legendre rule on [-1, 1]
GL_NODES = np.array([
    -0.9061798459386640, -0.5384693101056831, 0.0,
    0.5384693101056831, 0.9061798459386640,
])
GL_WEIGHTS = np.array([
    0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
    0.4786286704993665, 0.2369268850561891,
])

N_PANELS = 64


def project_capped_simplex(v, k, equality):
    """Euclidean projection onto {0 <= x <= 1, sum(x) = k} (or <= k).

    Sorted-breakpoint search over tau in clip(v - tau, 0, 1); ties in the
    breakpoint order are broken by lower coordinate index.
    """
    v = np.asarray(v, dtype=np.float64)
    d = v.shape[0]
    clipped = np.clip(v, 0.0, 1.0)
    if not equality and clipped.sum() <= k:
        return clipped
    if k <= 0.0:
        return np.zeros(d)
    if k >= d:
        return np.ones(d)
    # breakpoints: v_i - 1 (coordinate leaves the cap), v_i (hits zero)
    bps = np.concatenate([v - 1.0, v])
    delta = np.concatenate([-np.ones(d), np.ones(d)])
    order = np.argsort(bps, kind="stable")
    bps = bps[order]
    delta = delta[order]

    total = float(d)
    slope = 0.0
    prev = bps[0]
    tau = bps[-1]
    for j in range(2 * d):
        b = bps[j]
        nxt = total + slope * (b - prev)
        if nxt <= k:
            tau = prev + (k - total) / slope if slope != 0.0 else prev
            break
        total = nxt
        prev = b
        slope += delta[j]
    return np.clip(v - tau, 0.0, 1.0)


def ray_integrand(c, s, r):
    return np.exp(-c * (1.0 - np.power(r, s)))


def _simpson(values, h):
    return h / 3.0 * (values[0] + values[-1]
                      + 4.0 * values[1:-1:2].sum(axis=0) + 2.0 * values[2:-1:2].sum(axis=0))


def simpson_refine(func, n0=65, nmax=4097, tol=1e-12):
    """Composite Simpson on [0, 1], doubling nodes until two passes agree.

    Returns ``(value, n_nodes, residual)``; ``func`` maps an array of nodes to
    an array of values (leading axis) and may be vector valued.
    """
    n = n0
    grid = np.linspace(0.0, 1.0, n)
    prev = _simpson(func(grid), 1.0 / (n - 1))
    residual = np.inf
    while n < nmax:
        n = 2 * n - 1
        grid = np.linspace(0.0, 1.0, n)
        cur = _simpson(func(grid), 1.0 / (n - 1))
        residual = float(np.max(np.abs(cur - prev)))
        prev = cur
        if residual < tol:
            break
    return prev, n, residual


def ray_weight(c, s, tol=1e-12, n0=65, nmax=4097):
    value, _, _ = simpson_refine(lambda r: ray_integrand(c, s, r), n0, nmax, tol)
    return float(value)


def _panel_integrals(func, edges):
    """Gauss-Legendre integrals of ``func`` over consecutive intervals."""
    a = edges[:-1, None]
    b = edges[1:, None]
    half = 0.5 * (b - a)
    nodes = 0.5 * (a + b) + half * GL_NODES
    vals = func(nodes.ravel()).reshape(nodes.shape)
    return (half[:, 0]) * (vals @ GL_WEIGHTS)


def cdf_table(func, n_panels=N_PANELS):
    edges = np.linspace(0.0, 1.0, n_panels + 1)
    cum = np.concatenate([[0.0], np.cumsum(_panel_integrals(func, edges))])
    return edges, cum


def profile_cdf(func, z, n_panels=N_PANELS):
    """Normalized CDF of the density proportional to ``func`` on [0, 1]."""
    z = np.clip(np.atleast_1d(np.asarray(z, dtype=np.float64)), 0.0, 1.0)
    edges, cum = cdf_table(func, n_panels)
    j = np.clip(np.searchsorted(edges, z, side="right") - 1, 0, n_panels - 1)
    partial = _panel_integrals_pairs(func, edges[j], z)
    return (cum[j] + partial) / cum[-1]


def _panel_integrals_pairs(func, a, b):
    half = 0.5 * (b - a)
    nodes = (0.5 * (a + b))[:, None] + half[:, None] * GL_NODES
    vals = func(nodes.ravel()).reshape(nodes.shape)
    return half * (vals @ GL_WEIGHTS)


def sample_profile(func, u, tol=1e-10, max_iter=60, n_panels=N_PANELS):
    """Inverse-CDF samples for uniforms ``u`` by panel search plus bisection."""
    u = np.atleast_1d(np.asarray(u, dtype=np.float64))
    edges, cum = cdf_table(func, n_panels)
    target = u * cum[-1]
    j = np.clip(np.searchsorted(cum, target, side="right") - 1, 0, n_panels - 1)
    lo = edges[j].copy()
    hi = edges[j + 1].copy()
    base = cum[j] - target
    for _ in range(max_iter):
        if np.all(hi - lo <= tol):
            break
        mid = 0.5 * (lo + hi)
        val = base + _panel_integrals_pairs(func, edges[j], mid)
        below = val < 0.0
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    z = 0.5 * (lo + hi)
    z[u <= 0.0] = 0.0
    z[u >= 1.0] = 1.0
    return z


def sample_ray(c, s, u, tol=1e-10, max_iter=60, n_panels=N_PANELS):
    return sample_profile(lambda r: ray_integrand(c, s, r), u, tol, max_iter, n_panels)
