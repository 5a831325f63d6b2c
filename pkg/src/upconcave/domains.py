"""Feasible regions inside [0, 1]^d: boxes, uniform and partition matroid
polytopes, and single points.

Every set supports membership, Euclidean projection, separation, its maximal
convex subset K*, vertex enumeration and the radial quantities r_theta,
R_theta used to size the approximation coefficient.
"""
from dataclasses import dataclass, field
from itertools import combinations, product
from math import comb, sqrt

import numpy as np

from . import kernels

TOL = 1e-9
MAX_VERTEX_DIM = 20

FAMILIES = ("box", "uniform", "partition", "singleton")


class UnsupportedError(ValueError):
    """Raised when an operation is not available for a (family, theta) pair."""


@dataclass(frozen=True)
class ThetaSpec:
    """Monotone weight ``theta: [0,1]^d -> R>=0``.

    ``kind`` is ``"constant"`` (theta = 1), ``"pnorm"`` (theta = ||x||_p^sigma)
    or ``"custom"`` (``func`` maps an ``(n, d)`` array to ``n`` values).
    """
    kind: str = "constant"
    p: float = 1.0
    sigma: float = 0.0
    func: object = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("constant", "pnorm", "custom"):
            raise ValueError(f"unknown theta kind {self.kind!r}")
        if self.kind == "pnorm" and (self.p < 1 or self.sigma < 0):
            raise ValueError("pnorm theta needs p >= 1 and sigma >= 0")
        if self.kind == "custom" and not callable(self.func):
            raise ValueError("custom theta needs a callable")

    @classmethod
    def constant(cls):
        return cls("constant")

    @classmethod
    def norm_power(cls, p=1.0, sigma=1.0):
        return cls("pnorm", p=float(p), sigma=float(sigma))

    @classmethod
    def custom(cls, func):
        return cls("custom", func=func)

    @property
    def closed_form(self):
        return self.kind != "custom"

    @property
    def exponent(self):
        """sigma for the closed-form kinds (0 for the constant weight)."""
        return self.sigma if self.kind == "pnorm" else 0.0

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "constant":
            return np.ones(x.shape[:-1]) if x.ndim > 1 else 1.0
        if self.kind == "pnorm":
            norm = np.linalg.norm(x, ord=self.p, axis=-1) if np.isfinite(self.p) \
                else np.max(np.abs(x), axis=-1)
            return np.power(norm, self.sigma)
        return self.func(x)

    def to_dict(self):
        if self.kind == "custom":
            raise UnsupportedError("custom theta cannot be serialized")
        if self.kind == "constant":
            return {"kind": "constant"}
        return {"kind": "pnorm", "p": self.p, "sigma": self.sigma}

    @classmethod
    def from_dict(cls, spec):
        kind = spec.get("kind", "constant")
        if kind == "constant":
            return cls.constant()
        if kind == "pnorm":
            return cls.norm_power(spec.get("p", 1.0), spec.get("sigma", 0.0))
        raise ValueError(f"theta kind {kind!r} is not serializable")


@dataclass(frozen=True)
class RadialBounds:
    r_theta: float
    R_theta: float


@dataclass(frozen=True)
class Hyperplane:
    """Half-space ``<normal, y> <= offset`` containing the set but not the query."""
    normal: np.ndarray
    offset: float


@dataclass(frozen=True)
class ConstraintSet:
    family: str
    d: int
    k: int = 0
    blocks: tuple = ()
    caps: tuple = ()
    basis: bool = False
    point: tuple = ()

    @property
    def rank(self):
        if self.family == "uniform":
            return self.k
        if self.family == "partition":
            return int(sum(self.caps))
        if self.family == "box":
            return self.d
        return float(np.sum(self.point))

    @property
    def diameter(self):
        return diameter(self)

    def contains(self, x, tol=TOL):
        return contains(self, x, tol)

    def project(self, x):
        return project(self, x)

    def to_dict(self):
        out = {"family": self.family, "d": self.d}
        if self.family == "uniform":
            out.update(k=self.k, basis=self.basis)
        elif self.family == "partition":
            out.update(blocks=[list(b) for b in self.blocks], caps=list(self.caps),
                       basis=self.basis)
        elif self.family == "singleton":
            out.update(point=list(self.point))
        return out


def make_box(d):
    if d < 1:
        raise ValueError("box dimension must be >= 1")
    return ConstraintSet("box", int(d))


def make_uniform_matroid(d, k, basis=False):
    if d < 1 or not 1 <= k <= d:
        raise ValueError(f"uniform matroid needs 1 <= k <= d, got d={d}, k={k}")
    return ConstraintSet("uniform", int(d), k=int(k), basis=bool(basis))


def make_partition_matroid(blocks, caps, basis=False):
    """Partition matroid with 0-based index ``blocks`` covering ``range(d)``."""
    blocks = tuple(tuple(int(i) for i in b) for b in blocks)
    caps = tuple(int(c) for c in caps)
    if len(blocks) != len(caps) or not blocks:
        raise ValueError("need one cap per block and at least one block")
    flat = [i for b in blocks for i in b]
    d = len(flat)
    if sorted(flat) != list(range(d)):
        raise ValueError("blocks must be disjoint and cover 0..d-1")
    for b, c in zip(blocks, caps):
        if not 1 <= c <= len(b):
            raise ValueError(f"cap {c} out of range for block of size {len(b)}")
    return ConstraintSet("partition", d, blocks=blocks, caps=caps, basis=bool(basis))


def make_singleton(point):
    point = tuple(float(v) for v in point)
    if not point or min(point) < 0 or max(point) > 1:
        raise ValueError("singleton point must lie in [0,1]^d")
    return ConstraintSet("singleton", len(point), point=point)


def from_dict(spec):
    family = spec["family"]
    if family == "box":
        return make_box(spec["d"])
    if family == "uniform":
        return make_uniform_matroid(spec["d"], spec["k"], spec.get("basis", False))
    if family == "partition":
        K = make_partition_matroid(spec["blocks"], spec["caps"], spec.get("basis", False))
        if "d" in spec and spec["d"] != K.d:
            raise ValueError("blocks do not cover the declared dimension")
        return K
    if family == "singleton":
        return make_singleton(spec["point"])
    raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")


def _check_dim(K, x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != K.d:
        raise ValueError(f"dimension mismatch: set has d={K.d}, point has {x.shape[-1]}")
    return x


def _groups(K):
    """(index array, cap) pairs for the matroid families."""
    if K.family == "uniform":
        return [(np.arange(K.d), K.k)]
    return [(np.asarray(b), c) for b, c in zip(K.blocks, K.caps)]


def contains(K, x, tol=TOL):
    x = _check_dim(K, x)
    if K.family == "singleton":
        return bool(np.all(np.abs(x - np.asarray(K.point)) <= tol))
    if np.any(x < -tol) or np.any(x > 1 + tol):
        return False
    if K.family == "box":
        return True
    for idx, cap in _groups(K):
        s = x[idx].sum()
        if s > cap + tol or (K.basis and s < cap - tol):
            return False
    return True


def project(K, x):
    """Euclidean projection of ``x`` onto ``K``."""
    x = _check_dim(K, x)
    if K.family == "box":
        return np.clip(x, 0.0, 1.0)
    if K.family == "singleton":
        return np.asarray(K.point, dtype=np.float64).copy()
    if K.family == "uniform":
        return kernels.project_capped_simplex(x, float(K.k), K.basis)
    if K.family == "partition":
        out = np.empty(K.d)
        for idx, cap in _groups(K):
            out[idx] = kernels.project_capped_simplex(x[idx], float(cap), K.basis)
        return out
    raise UnsupportedError(f"no projection for family {K.family!r}")


def separate(K, x, tol=TOL):
    """Return ``None`` when ``x`` is in ``K``, else a separating :class:`Hyperplane`."""
    x = _check_dim(K, x)
    d = K.d
    if K.family == "singleton":
        p = np.asarray(K.point)
        diff = x - p
        if np.all(np.abs(diff) <= tol):
            return None
        return Hyperplane(diff, float(diff @ p))
    i = int(np.argmax(x))
    if x[i] > 1 + tol:
        e = np.zeros(d)
        e[i] = 1.0
        return Hyperplane(e, 1.0)
    i = int(np.argmin(x))
    if x[i] < -tol:
        e = np.zeros(d)
        e[i] = -1.0
        return Hyperplane(e, 0.0)
    if K.family == "box":
        return None
    for idx, cap in _groups(K):
        s = x[idx].sum()
        normal = np.zeros(d)
        if s > cap + tol:
            normal[idx] = 1.0
            return Hyperplane(normal, float(cap))
        if K.basis and s < cap - tol:
            normal[idx] = -1.0
            return Hyperplane(normal, -float(cap))
    return None


def maximal_convex_subset(K):
    """K* = conv of the coordinate-wise maximal points of K."""
    if K.family == "box":
        return make_singleton(np.ones(K.d))
    if K.family == "singleton":
        return K
    if K.family in ("uniform", "partition"):
        if K.basis:
            return K
        return ConstraintSet(K.family, K.d, k=K.k, blocks=K.blocks, caps=K.caps,
                             basis=True)
    raise UnsupportedError(f"unsupported family {K.family!r}")


def diameter(K):
    """Exact Euclidean diameter (attained between two vertices)."""
    if K.family == "box":
        return sqrt(K.d)
    if K.family == "singleton":
        return 0.0
    total = 0
    for idx, cap in _groups(K):
        n = len(idx)
        total += 2 * min(cap, n - cap) if K.basis else min(2 * cap, n)
    return sqrt(total)


def n_vertices(K):
    if K.family == "box":
        return 2 ** K.d
    if K.family == "singleton":
        return 1
    count = 1
    for idx, cap in _groups(K):
        n = len(idx)
        count *= comb(n, cap) if K.basis else sum(comb(n, j) for j in range(cap + 1))
    return count


def vertices(K, limit=200_000):
    """All vertices as an ``(m, d)`` array; refuses sets with more than ``limit``."""
    m = n_vertices(K)
    if m > limit:
        raise UnsupportedError(f"{m} vertices exceeds enumeration limit {limit}")
    if K.family == "singleton":
        return np.asarray([K.point], dtype=np.float64)
    if K.family == "box":
        return np.asarray(list(product((0.0, 1.0), repeat=K.d)))
    per_block = []
    for idx, cap in _groups(K):
        sizes = [cap] if K.basis else range(cap + 1)
        per_block.append([(idx, sub) for j in sizes for sub in combinations(range(len(idx)), j)])
    out = np.zeros((m, K.d))
    for row, choice in enumerate(product(*per_block)):
        for idx, sub in choice:
            out[row, idx[list(sub)]] = 1.0
    return out


def initial_vertex(K):
    """Lexicographically smallest vertex of ``K``."""
    if K.family == "singleton":
        return np.asarray(K.point, dtype=np.float64)
    if K.family == "box":
        return np.zeros(K.d)
    x = np.zeros(K.d)
    if not K.basis:
        return x
    for idx, cap in _groups(K):
        x[np.sort(idx)[len(idx) - cap:]] = 1.0
    return x


def center_point(K):
    """Point of K* that is uniform within each block (minimizes every p-norm)."""
    Ks = maximal_convex_subset(K)
    if Ks.family == "singleton":
        return np.asarray(Ks.point, dtype=np.float64)
    x = np.zeros(K.d)
    for idx, cap in _groups(Ks):
        x[idx] = cap / len(idx)
    return x


def radial_bounds(K, theta):
    """r_theta = min of theta over K*, R_theta = max of theta over K.

    Closed forms for constant and p-norm weights.  Custom weights use vertex
    enumeration of K* (d <= 20): exact for R_theta when theta is quasi-convex
    and for r_theta when theta is quasi-concave.
    """
    if theta.kind == "constant":
        return RadialBounds(1.0, 1.0)
    Ks = maximal_convex_subset(K)
    if theta.kind == "pnorm":
        if Ks.family == "singleton":
            val = float(theta(np.asarray(Ks.point)))
            return RadialBounds(val, val)
        rho = Ks.rank
        r_p = float(np.linalg.norm(center_point(K), ord=theta.p))
        R_p = rho ** (1.0 / theta.p)
        if theta.p == 1:
            r_p = R_p = float(rho)
        return RadialBounds(r_p ** theta.sigma, R_p ** theta.sigma)
    if K.d > MAX_VERTEX_DIM:
        raise UnsupportedError(
            f"custom theta needs vertex enumeration, only available for d <= {MAX_VERTEX_DIM}")
    vals = np.asarray(theta(vertices(Ks)), dtype=np.float64)
    return RadialBounds(float(vals.min()), float(vals.max()))
