"""Stochastic first- and zeroth-order query oracles with bounded additive noise."""
import numpy as np

NOISE_KINDS = ("none", "uniform", "sphere")
BOX_TOL = 1e-9


def _noise(rng, kind, radius, n, dim):
    """Zero-mean noise: uniform in the ball or on the sphere of ``radius``."""
    if kind == "none" or radius == 0.0:
        return np.zeros((n, dim))
    v = rng.standard_normal((n, dim))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    if kind == "uniform":
        v *= rng.random((n, 1)) ** (1.0 / dim)
    return radius * v


class QueryOracle:
    """Unbiased oracle for ``objective`` with almost-sure bound ``B``.

    ``B`` is the objective's exact gradient (or value) bound plus the noise
    radius; samples are never clipped.
    """

    def __init__(self, objective, order="first", noise="none", radius=0.0, seed=0):
        if order not in ("first", "zeroth"):
            raise ValueError(f"order must be 'first' or 'zeroth', got {order!r}")
        if noise not in NOISE_KINDS:
            raise ValueError(f"noise must be one of {NOISE_KINDS}, got {noise!r}")
        if radius < 0:
            raise ValueError("noise radius must be >= 0")
        self.objective = objective
        self.order = order
        self.noise = noise
        self.radius = float(radius) if noise != "none" else 0.0
        base = objective.B if order == "first" else objective.M0
        self.B = float(base) + self.radius
        self.rng = np.random.default_rng(seed)
        self.count = 0

    def _validate(self, y):
        y = np.asarray(y, dtype=np.float64)
        if y.shape[-1] != self.objective.d:
            raise ValueError("query dimension mismatch")
        if np.any(y < -BOX_TOL) or np.any(y > 1 + BOX_TOL):
            raise ValueError("query point outside the unit box")
        return y

    def query(self, y):
        y = self._validate(y)
        self.count += 1
        if self.order == "first":
            return self.objective.grad(y) + _noise(self.rng, self.noise, self.radius, 1, y.shape[0])[0]
        return float(self.objective.value(y)) + float(
            _noise(self.rng, self.noise, self.radius, 1, 1)[0, 0])

    def query_batch(self, Y):
        """One query per row of ``Y``; counts ``len(Y)`` queries."""
        Y = self._validate(np.atleast_2d(Y))
        n = Y.shape[0]
        self.count += n
        if self.order == "first":
            return self.objective.grad(Y) + _noise(self.rng, self.noise, self.radius, n, Y.shape[1])
        return self.objective.value(Y) + _noise(self.rng, self.noise, self.radius, n, 1)[:, 0]

    def __repr__(self):
        return (f"QueryOracle(order={self.order!r}, noise={self.noise!r}, "
                f"radius={self.radius}, B={self.B:.6g}, count={self.count})")
