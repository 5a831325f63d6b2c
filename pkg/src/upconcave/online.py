"""Online gradient ascent over K*, the OMBQ loop around it, alpha-regret
bookkeeping and online-to-batch conversion."""
from dataclasses import dataclass, field, replace
from math import sqrt

import numpy as np

from .domains import contains, initial_vertex, maximal_convex_subset, project
from .linearization import alpha_star, estimate_surrogate, make_context
from .objectives import sum_objective
from .oracles import QueryOracle

DEFAULT_CHECKPOINTS = (100, 1_000, 10_000)


@dataclass(frozen=True)
class OGAState:
    """Projected online gradient ascent with step D / (B1 sqrt(t))."""
    x: np.ndarray
    t: int
    D: float
    B1: float

    @property
    def eta(self):
        if self.B1 <= 0:
            return 0.0
        return self.D / (self.B1 * sqrt(self.t))


def oga_init(Kstar, B1):
    return OGAState(initial_vertex(Kstar), 1, Kstar.diameter, float(B1))


def oga_step(state, g, Kstar):
    g = np.asarray(g, dtype=np.float64)
    if g.shape != state.x.shape:
        raise ValueError("gradient dimension mismatch")
    if not np.all(np.isfinite(g)):
        raise ValueError("non-finite gradient estimate")
    x_next = project(Kstar, state.x + state.eta * g)
    return replace(state, x=x_next, t=state.t + 1)


def ombq_round(state, ctx, oracle, Kstar, rng):
    """Play x_t, query the surrogate estimator there, update the base learner."""
    play = state.x
    est = estimate_surrogate(ctx, oracle, state.x, rng)
    return play, oga_step(state, est.g, Kstar), est


@dataclass
class RegretTrace:
    """Per-round actions, surrogate estimates and payoffs of one run.

    ``cum_regret[t-1] = alpha * sum_{s<=t} f_s(u*) - sum_{s<=t} f_s(x_s)`` for
    the horizon comparator ``u*``; ``checkpoint_regret`` uses a comparator
    recomputed on each prefix when the adversary is not a single function.
    """
    actions: np.ndarray
    estimates: np.ndarray
    values: np.ndarray
    comparator_values: np.ndarray
    alpha: float
    opt: float
    cum_regret: np.ndarray
    checkpoint_regret: dict = field(default_factory=dict)
    linear_regret: dict = field(default_factory=dict)
    queries: int = 0
    B1: float = 0.0
    D: float = 0.0

    @property
    def T(self):
        return len(self.values)

    def bound(self, t):
        return 1.5 * self.B1 * self.D * sqrt(t)


def _adversary(objectives, T):
    if callable(getattr(objectives, "value", None)):
        return lambda t: objectives
    if callable(objectives):
        return objectives
    seq = list(objectives)
    return lambda t: seq[(t - 1) % len(seq)]


def run_online(K, objectives, theta, gamma, T, noise="none", radius=0.0, seed=0,
               comparator=None, checkpoints=DEFAULT_CHECKPOINTS, ctx=None):
    """Run OMBQ(OGA) for ``T`` rounds over the maximal convex subset of ``K``.

    ``objectives`` is a single Objective, a sequence cycled over rounds, or a
    callable ``t -> Objective``.  ``comparator`` is a callable taking
    (Kstar, Objective) and returning ``(u_star, value)``; it is required for
    regret bookkeeping.  Payoffs f_t(x_t) use exact evaluators; the learner
    only sees oracle outputs.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    Kstar = maximal_convex_subset(K)
    if ctx is None:
        ctx = make_context(K, theta, gamma)
    alpha = alpha_star(ctx, Kstar)
    adversary = _adversary(objectives, T)
    fixed = callable(getattr(objectives, "value", None))

    streams = np.random.SeedSequence(seed).spawn(3)
    rng = np.random.default_rng(streams[0])
    # every oracle draws its noise from one shared stream
    noise_rng = np.random.default_rng(streams[1])
    oracles = {}

    def oracle_for(f):
        if id(f) not in oracles:
            oracles[id(f)] = QueryOracle(f, "first", noise, radius, seed=noise_rng)
        return oracles[id(f)]

    first = adversary(1)
    B1 = oracle_for(first).B
    if not fixed:
        B1 = max(adversary(t).B for t in range(1, T + 1)) + (radius if noise != "none" else 0.0)
    state = oga_init(Kstar, B1)

    d = K.d
    actions = np.empty((T, d))
    estimates = np.empty((T, d))
    values = np.empty(T)
    fs = []
    queries = 0
    for t in range(1, T + 1):
        f = adversary(t)
        oracle = oracle_for(f)
        before = oracle.count
        play, state, est = ombq_round(state, ctx, oracle, Kstar, rng)
        queries += oracle.count - before
        actions[t - 1] = play
        estimates[t - 1] = est.g
        values[t - 1] = f.value(play)
        if not fixed:
            fs.append(f)

    trace = RegretTrace(actions, estimates, values, np.zeros(T), alpha, np.nan,
                        np.full(T, np.nan), queries=queries, B1=B1, D=Kstar.diameter)
    if comparator is None:
        return trace

    cks = sorted({c for c in checkpoints if c <= T} | {T})
    if fixed:
        u_star, opt = comparator(Kstar, first)
        comp_vals = np.full(T, opt)
    else:
        u_star, _ = comparator(Kstar, sum_objective(fs))
        comp_vals = np.array([f.value(u_star) for f in fs])
        opt = float(comp_vals.mean())
    trace.opt = float(opt)
    trace.comparator_values = comp_vals
    trace.cum_regret = alpha * np.cumsum(comp_vals) - np.cumsum(values)
    lin = np.cumsum(estimates @ u_star - np.einsum("ij,ij->i", estimates, actions))
    for c in cks:
        if fixed or c == T:
            trace.checkpoint_regret[c] = float(trace.cum_regret[c - 1])
        else:
            _, best = comparator(Kstar, sum_objective(fs[:c]))
            trace.checkpoint_regret[c] = float(alpha * best - values[:c].sum())
        trace.linear_regret[c] = float(lin[c - 1])
    return trace


def pick_round(seed, T):
    """Uniform round index in 1..T from the seed's third stream."""
    rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(3)[2])
    return int(rng.integers(1, T + 1))


def online_to_batch(K, objective, theta, gamma, T, noise="none", radius=0.0, seed=0,
                    ctx=None, return_trace=False):
    """Offline maximizer: iterate of a uniformly drawn round of an online run."""
    if T < 1:
        raise ValueError("T must be >= 1")
    trace = run_online(K, objective, theta, gamma, T, noise, radius, seed, ctx=ctx)
    point = trace.actions[pick_round(seed, T) - 1].copy()
    return (point, trace) if return_trace else point


def feasible(Kstar, actions, tol=1e-9):
    return all(contains(Kstar, x, tol) for x in actions)
