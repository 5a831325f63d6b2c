"""Experiment driver: JSON configs, the comparator (OPT) oracle, multi-seed
regret runs and CSV / JSON / SVG output."""
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from math import log10, sqrt
from pathlib import Path

import numpy as np

from . import domains, objectives
from .domains import ThetaSpec, maximal_convex_subset, n_vertices, project, vertices
from .linearization import alpha_star, make_context
from .online import DEFAULT_CHECKPOINTS, pick_round, run_online

log = logging.getLogger(__name__)

OUTPUT_ENV = "UPCONCAVE_OUTPUT_DIR"
MULTISTARTS = 64
ASCENT_ITERS = 300
GRID_MAX_DIM = 10
VERTEX_LIMIT = 100_000


@dataclass
class ComparatorResult:
    u_star: np.ndarray
    opt: float
    method: str
    probes: int
    gap_estimate: float
    per_method: dict = field(default_factory=dict)


def _dyadic_levels(budget, d):
    """Largest m = 2^j + 1 with m^d <= budget (nested grids as budget grows)."""
    m = 0
    j = 0
    while (2 ** j + 1) ** d <= budget:
        m = 2 ** j + 1
        j += 1
    return m


def _projected_ascent(Kstar, f, x, iters=ASCENT_ITERS):
    """Projected gradient ascent with backtracking; returns the final point."""
    fx = float(f.value(x))
    step = 1.0
    for _ in range(iters):
        g = f.grad(x)
        while True:
            y = project(Kstar, x + step * g)
            fy = float(f.value(y))
            if fy >= fx + 1e-4 * float(g @ (y - x)) or step < 1e-12:
                break
            step *= 0.5
        moved = float(np.linalg.norm(y - x))
        x, fx = y, fy
        step *= 2.0
        if moved < 1e-12:
            break
    return x, fx


def find_comparator(Kstar, f, budget=4096, rng_seed=0):
    """Best fixed point over K* by vertex enumeration, a projected grid and
    multistart projected ascent."""
    if budget < 1:
        raise ValueError("comparator budget must be >= 1")
    d = Kstar.d
    best = {}
    probes = 0

    if n_vertices(Kstar) <= VERTEX_LIMIT:
        V = vertices(Kstar)
        vals = np.asarray(f.value(V), dtype=np.float64)
        i = int(np.argmax(vals))
        best["vertex-enum"] = (V[i], float(vals[i]))
        probes += len(V)

    if d <= GRID_MAX_DIM:
        m = _dyadic_levels(budget, d)
        if m >= 2:
            axes = np.linspace(0.0, 1.0, m)
            mesh = np.stack(np.meshgrid(*([axes] * d), indexing="ij"), axis=-1).reshape(-1, d)
            pts = np.array([project(Kstar, p) for p in mesh])
            vals = np.asarray(f.value(pts), dtype=np.float64)
            i = int(np.argmax(vals))
            best["grid"] = (pts[i], float(vals[i]))
            probes += len(pts)

    rng = np.random.default_rng(rng_seed)
    starts = [project(Kstar, p) for p in rng.random((MULTISTARTS, d))]
    runs = [_projected_ascent(Kstar, f, s) for s in starts]
    i = int(np.argmax([v for _, v in runs]))
    best["multistart-ascent"] = runs[i]
    probes += MULTISTARTS

    method = max(best, key=lambda k: best[k][1])
    u_star, opt = best[method]
    values = [v for _, v in best.values()]
    return ComparatorResult(np.asarray(u_star), float(opt), method, probes,
                            float(opt - min(values)),
                            {k: v for k, (_, v) in best.items()})


def comparator_fn(budget=4096, rng_seed=0):
    """Adapter with the ``(Kstar, f) -> (u_star, opt)`` shape used by run_online."""
    def comparator(Kstar, f):
        res = find_comparator(Kstar, f, budget, rng_seed)
        return res.u_star, res.opt
    return comparator


@dataclass
class ExperimentConfig:
    constraint: domains.ConstraintSet
    objective_specs: list
    theta: ThetaSpec
    gamma: float = 1.0
    noise: str = "none"
    radius: float = 0.0
    T: int = 1000
    seeds: list = field(default_factory=lambda: [0])
    checkpoints: list = field(default_factory=lambda: list(DEFAULT_CHECKPOINTS))
    mode: str = "online"
    comparator_budget: int = 4096
    out: str = None
    raw: dict = field(default_factory=dict)

    def objectives(self):
        return [objectives.from_dict(s, self.constraint.d) for s in self.objective_specs]


def parse_config(spec):
    """Validate a JSON-style dict into an :class:`ExperimentConfig`."""
    K = domains.from_dict(spec["constraint"])
    if "objectives" in spec:
        objs = list(spec["objectives"])
    elif "objective" in spec:
        objs = [spec["objective"]]
    else:
        raise ValueError("config needs 'objective' or 'objectives'")
    if not objs:
        raise ValueError("empty objective list")
    noise = spec.get("noise", {"kind": "none"})
    cfg = ExperimentConfig(
        constraint=K,
        objective_specs=objs,
        theta=ThetaSpec.from_dict(spec.get("theta", {"kind": "constant"})),
        gamma=float(spec.get("gamma", 1.0)),
        noise=noise.get("kind", "none"),
        radius=float(noise.get("radius", 0.0)),
        T=int(spec.get("T", 1000)),
        seeds=list(spec.get("seeds", [0])),
        checkpoints=list(spec.get("checkpoints", DEFAULT_CHECKPOINTS)),
        mode=spec.get("mode", "online"),
        comparator_budget=int(spec.get("comparator_budget", 4096)),
        out=spec.get("out"),
        raw=dict(spec),
    )
    if cfg.T < 1:
        raise ValueError("T must be >= 1")
    if not cfg.seeds:
        raise ValueError("seeds must be nonempty")
    if cfg.mode not in ("online", "offline"):
        raise ValueError("mode must be 'online' or 'offline'")
    if cfg.mode == "offline" and len(objs) != 1:
        raise ValueError("offline mode needs a single objective")
    for f in cfg.objectives():
        if f.d != K.d:
            raise ValueError("objective dimension does not match the constraint set")
    if cfg.noise not in ("none", "uniform", "sphere"):
        raise ValueError(f"unknown noise kind {cfg.noise!r}")
    return cfg


def load_config(path):
    with open(path) as fh:
        return parse_config(json.load(fh))


def _config_echo(cfg):
    return {
        "constraint": cfg.constraint.to_dict(),
        "objectives": cfg.objective_specs,
        "theta": cfg.theta.to_dict(),
        "gamma": cfg.gamma,
        "noise": {"kind": cfg.noise, "radius": cfg.radius},
        "T": cfg.T,
        "seeds": cfg.seeds,
        "checkpoints": cfg.checkpoints,
        "mode": cfg.mode,
        "comparator_budget": cfg.comparator_budget,
    }


def _fmt(v):
    return "%.17g" % v


def _run_cell(raw, seed, cell_path):
    """One (config, seed) cell; rebuilt from the raw dict so it can run in a
    worker process.  Writes its own CSV and returns the numbers for the summary."""
    cfg = parse_config(raw)
    fs = cfg.objectives()
    adversary = fs[0] if len(fs) == 1 else fs
    comparator = comparator_fn(cfg.comparator_budget)
    trace = run_online(cfg.constraint, adversary, cfg.theta, cfg.gamma, cfg.T,
                       cfg.noise, cfg.radius, seed, comparator=comparator,
                       checkpoints=cfg.checkpoints)
    extra = {}
    if cfg.mode == "offline":
        # same rule as online_to_batch, reusing this trace
        point = trace.actions[pick_round(seed, cfg.T) - 1]
        extra = {"output": point.tolist(), "f_output": float(fs[0].value(point))}
    d = cfg.constraint.d
    with open(cell_path, "w", newline="\n") as fh:
        for t in range(trace.T):
            row = [str(seed), str(t + 1)] + [_fmt(v) for v in trace.actions[t]]
            row += [_fmt(trace.values[t]), _fmt(trace.cum_regret[t])]
            fh.write(",".join(row) + "\n")
    return {
        "seed": seed,
        "opt": trace.opt,
        "alpha": trace.alpha,
        "B1": trace.B1,
        "D": trace.D,
        "checkpoint_regret": {str(k): v for k, v in trace.checkpoint_regret.items()},
        "linear_regret": {str(k): v for k, v in trace.linear_regret.items()},
        "mean_regret_curve": trace.cum_regret.tolist(),
        "queries": trace.queries,
        "d": d,
        **extra,
    }


def loglog_slope(t0, r0, t1, r1):
    """Slope of log r against log t; ``None`` when either value is not positive."""
    if r0 <= 0 or r1 <= 0:
        return None
    return (log10(r1) - log10(r0)) / (log10(t1) - log10(t0))


def run_experiment(cfg, out_dir=None, workers=1):
    """Run every seed of ``cfg``, write regret.csv, summary.json and regret.svg.

    Returns the summary dict; ``summary["passed"]`` aggregates all checks.
    """
    out = Path(out_dir or cfg.out or os.environ.get(OUTPUT_ENV, "results"))
    try:
        out.mkdir(parents=True, exist_ok=True)
        cells_dir = out / "cells"
        cells_dir.mkdir(exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    if not os.access(out, os.W_OK):
        raise OSError(f"output directory {out} is not writable")

    raw = _config_echo(cfg)
    paths = [cells_dir / f"regret_seed{s}.csv" for s in cfg.seeds]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            cells = list(pool.map(_run_cell, [raw] * len(cfg.seeds), cfg.seeds, paths))
    else:
        cells = [_run_cell(raw, s, p) for s, p in zip(cfg.seeds, paths)]

    d = cfg.constraint.d
    header = ["seed", "t"] + [f"x{i}" for i in range(d)] + ["f", "cum_regret"]
    with open(out / "regret.csv", "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for p in paths:
            fh.write(p.read_text())

    Kstar = maximal_convex_subset(cfg.constraint)
    ctx = make_context(cfg.constraint, cfg.theta, cfg.gamma)
    alpha = alpha_star(ctx, Kstar)
    B1, D = cells[0]["B1"], cells[0]["D"]
    cks = sorted({c for c in cfg.checkpoints if c <= cfg.T} | {cfg.T})
    per_ck = {}
    all_ok = True
    for c in cks:
        vals = np.array([cell["checkpoint_regret"][str(c)] for cell in cells])
        lin = np.array([cell["linear_regret"][str(c)] for cell in cells])
        bound = 1.5 * B1 * D * sqrt(c)
        ok = bool(np.all(vals <= bound))
        all_ok &= ok
        per_ck[str(c)] = {
            "mean_regret": float(vals.mean()), "std_regret": float(vals.std()),
            "max_regret": float(vals.max()), "bound": bound,
            "envelope_ratio": float(vals.mean() / bound) if bound > 0 else None,
            "mean_linear_regret": float(lin.mean()), "within_bound": ok,
        }
    curve = np.mean([cell["mean_regret_curve"] for cell in cells], axis=0)
    summary = {
        "config": raw,
        "alpha": alpha,
        "opt": cells[0]["opt"],
        "B1": B1,
        "D": D,
        "checkpoints": per_ck,
        "queries_per_seed": [cell["queries"] for cell in cells],
    }
    comp = None
    if len(cfg.objective_specs) == 1:
        comp = find_comparator(Kstar, cfg.objectives()[0], cfg.comparator_budget)
        summary["comparator"] = {"method": comp.method, "probes": comp.probes,
                                 "gap_estimate": comp.gap_estimate,
                                 "u_star": comp.u_star.tolist()}
    if len(cks) >= 2:
        t0, t1 = cks[-2], cks[-1]
        summary["loglog_slope"] = loglog_slope(
            t0, per_ck[str(t0)]["mean_regret"], t1, per_ck[str(t1)]["mean_regret"])
    if cfg.mode == "offline":
        fo = np.array([cell["f_output"] for cell in cells])
        threshold = alpha * summary["opt"] - 1.5 * B1 * D / sqrt(cfg.T)
        ok = bool(fo.mean() >= threshold)
        all_ok &= ok
        summary["offline"] = {"mean_f_output": float(fo.mean()), "threshold": threshold,
                              "passed": ok, "f_output": fo.tolist()}
    summary["passed"] = bool(all_ok)
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2)
    write_svg(out / "regret.svg", np.arange(1, cfg.T + 1), curve,
              1.5 * B1 * D * np.sqrt(np.arange(1, cfg.T + 1)))
    log.info("wrote %s", out)
    return summary


def write_svg(path, t, regret, envelope, width=640, height=400):
    """Two-series line plot: mean alpha-regret and the sqrt(t) envelope."""
    pad = 50
    stride = max(1, len(t) // 1000)
    t, regret, envelope = t[::stride], regret[::stride], envelope[::stride]
    ymin = min(float(np.min(regret)), 0.0)
    ymax = max(float(np.max(envelope)), float(np.max(regret)), 1e-12)
    xmax = float(t[-1]) if t[-1] > t[0] else float(t[0]) + 1

    def pts(ys):
        xs = pad + (t - t[0]) / max(xmax - t[0], 1) * (width - 2 * pad)
        yy = height - pad - (ys - ymin) / (ymax - ymin) * (height - 2 * pad)
        return " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(xs, yy))

    zero_y = height - pad - (0 - ymin) / (ymax - ymin) * (height - 2 * pad)
    svg = f"""<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">
<rect width="100%" height="100%" fill="white"/>
<line x1="{pad}" y1="{zero_y:.2f}" x2="{width - pad}" y2="{zero_y:.2f}" stroke="#999"/>
<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="#999"/>
<polyline fill="none" stroke="#c33" stroke-dasharray="6,4" points="{pts(envelope)}"/>
<polyline fill="none" stroke="#236" stroke-width="1.5" points="{pts(regret)}"/>
<text x="{pad}" y="{pad - 20}" font-size="13">mean alpha-regret (solid) vs 1.5 B1 D sqrt(t) (dashed)</text>
<text x="{width - pad}" y="{height - pad + 20}" font-size="11" text-anchor="end">t = {int(xmax)}</text>
<text x="{pad - 5}" y="{pad}" font-size="11" text-anchor="end">{ymax:.3g}</text>
<text x="{pad - 5}" y="{height - pad}" font-size="11" text-anchor="end">{ymin:.3g}</text>
</svg>
"""
    Path(path).write_text(svg)
