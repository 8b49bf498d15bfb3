"""``sfperc`` command-line front end.

    sfperc <constants|generate|degrees|percolation|distances|gfun> --config PATH
           [--out DIR] [--seed U64] [--threads N]

Every command writes its tables plus ``manifest.json`` into ``--out``.  All
data files are byte-identical for a fixed resolved config whatever the
thread count; only the manifest's ``runtime`` block (wall clock, threads)
varies between runs.
"""

import argparse
import math
from pathlib import Path
import sys
import time

import numpy as np

from . import __version__
from . import config as C
from . import estimators as E
from . import graph as G
from . import io
from .parallel import map_trials
from .errors import (
    ConfigError,
    DivergenceError,
    DomainError,
    NumericalError,
    SfpercError,
)
from .model import (
    classify_regime,
    distance_constant,
    gamma_exponent,
    lambda_c_lower_bound,
    lattice_sum,
    unit_ball_volume,
    xi_constant,
)
from .rng import trial_seed

COMMANDS = ("constants", "generate", "degrees", "percolation", "distances", "gfun")
SEED_RULE = "trial seed = splitmix64 avalanche mix of (master seed, 0x54, trial id)"

# looser tolerances tried when the requested lattice-sum tolerance is out of budget
_FALLBACK_TOLS = (1e-4, 1e-3, 1e-2)


# ---------------------------------------------------------------------------
# derived constants


def _attempt(fn):
    try:
        return fn(), None
    except (DomainError, NumericalError) as exc:
        return None, str(exc)


def _lattice_sum_relaxed(d, alpha, rel_tol):
    last = None
    for tol in (rel_tol, *[t for t in _FALLBACK_TOLS if t > rel_tol]):
        try:
            return lattice_sum(d, alpha, tol), tol
        except NumericalError as exc:
            last = exc
    raise last


def derived_constants(params, rel_tol=1e-6):
    """Every closed-form quantity that applies to ``params``, with reasons for the rest."""
    report = classify_regime(params)
    out = {
        "gamma": gamma_exponent(params),
        "degrees_infinite": report.degrees_infinite,
        "regime": report.to_dict(),
        "unit_ball_volume": unit_ball_volume(params.d),
    }
    xi, why = _attempt(lambda: xi_constant(params))
    out["xi"], out["xi_reason"] = xi, why
    if report.degrees_infinite and why is None:
        out["xi"], out["xi_reason"] = None, "degrees are infinite"

    try:
        ls, tol = _lattice_sum_relaxed(params.d, params.alpha, rel_tol)
        out["lattice_sum"] = {**ls.to_dict(), "rel_tol": tol}
        out["lattice_sum_reason"] = None
    except (DivergenceError, NumericalError) as exc:
        out["lattice_sum"], out["lattice_sum_reason"] = None, str(exc)
        ls, tol = None, rel_tol

    if ls is None:
        out["lambda_c_lower_bound"] = None
        out["lambda_c_lower_bound_reason"] = out["lattice_sum_reason"]
    else:
        lb, why = _attempt(lambda: lambda_c_lower_bound(params, tol))
        out["lambda_c_lower_bound"], out["lambda_c_lower_bound_reason"] = lb, why

    dc, why = _attempt(lambda: distance_constant(params))
    out["distance_constants"] = dc.to_dict() if dc else None
    out["distance_constants_reason"] = why
    return out


def manifest(cfg, command, constants, started):
    params = C.build_params(cfg)
    return {
        "tool": "sfperc",
        "version": __version__,
        "format_version": io.FORMAT_VERSION,
        "command": command,
        "config": cfg,
        "norm": params.norm,
        "derived": constants,
        "seed_rule": SEED_RULE,
        "runtime": {"wall_clock_seconds": time.perf_counter() - started, "threads": cfg["threads"]},
    }


# ---------------------------------------------------------------------------
# commands


def cmd_constants(cfg, out):
    params = C.build_params(cfg)
    doc = derived_constants(params, cfg.get("constants", C.DEFAULTS["constants"])["rel_tol"])
    io.write_json(out / "constants.json", doc)
    return doc


def cmd_generate(cfg, out):
    params = C.build_params(cfg)
    box = C.build_box(cfg)
    budget = cfg.get("generate", C.DEFAULTS["generate"])["pair_budget"]
    graph = G.generate_graph(params, box, cfg["seed"], pair_budget=budget)
    io.write_edge_list(out / "edges.txt", graph)
    io.write_weights(out / "weights.txt", graph)
    _, sizes = G.connected_components(graph)
    summary = {
        "points": box.point_count,
        "edge_count": graph.edge_count,
        "largest_component_fraction": float(sizes[0]) / box.point_count,
        "component_count": int(sizes.size),
    }
    io.write_json(out / "generate_summary.json", summary)
    return summary


def _bound_on_grid(params, w0, R):
    """Per-sample truncation bounds, evaluated at the next point of a geometric grid.

    The bound is nondecreasing in ``w``, so its value at any grid point above
    ``w0`` still bounds the truncation error for ``w0``.
    """
    lo = float(np.min(w0))
    hi = float(np.max(w0))
    if hi <= lo:
        return np.full(w0.shape, G.truncation_bound(params, lo, R))
    ratio = 1.05
    m = int(math.ceil(math.log(hi / lo) / math.log(ratio))) + 1
    grid = lo * ratio ** np.arange(m + 1)
    grid[0] = lo
    values = np.array([G.truncation_bound(params, w, R) for w in grid])
    idx = np.searchsorted(grid, w0, side="left")
    return values[np.minimum(idx, grid.size - 1)]


def _growth_prediction(d, alpha, radii):
    # mean truncated degree grows like R^(d - alpha) (log R at alpha = d)
    if len(radii) < 3 or alpha > d:
        return None
    if alpha == d:
        f = np.log(radii)
    else:
        f = np.asarray(radii, dtype=float) ** (d - alpha)
    inc = np.diff(f)
    return (inc[1:] / inc[:-1]).tolist()


def cmd_degrees(cfg, out):
    params = C.build_params(cfg)
    block = C.require(cfg, "degrees")
    trials, R = block["trials"], float(block["R"])
    seed, threads = cfg["seed"], cfg["threads"]
    report = classify_regime(params)
    radii = sorted({float(r) for r in block["radii"]} | {R})
    chunk = 500
    starts = list(range(0, trials, chunk))

    def run(ci):
        lo = starts[ci]
        seeds = [trial_seed(seed, t) for t in range(lo, min(lo + chunk, trials))]
        return G.origin_degree_profile(params, radii, seeds)

    parts = map_trials(run, range(len(starts)), threads)
    w0 = np.concatenate([p[0] for p in parts])
    prof = np.concatenate([p[1] for p in parts])
    deg = prof[:, radii.index(R)]
    if report.degrees_infinite:
        bounds = np.full(trials, math.inf)
    else:
        bounds = _bound_on_grid(params, w0, R)
    io.write_csv(out / "degrees.csv", ["trial", "w0", "degree", "R", "truncation_bound"],
                 ((t, w0[t], int(deg[t]), R, bounds[t]) for t in range(trials)))

    summary = {"trials": trials, "R": R, "gamma": gamma_exponent(params),
               "degrees_infinite": report.degrees_infinite, "mean_degree": float(deg.mean())}
    k = block["k"] if block["k"] is not None else (E.default_hill_k(trials) if trials >= 3 else None)
    try:
        hill = E.hill_estimator(deg, k)
        s_min = float(np.sort(deg)[::-1][hill.k])
        summary["hill"] = hill.to_dict()
        summary["ccdf_s_min"] = s_min
        summary["ccdf_slope"], why = _attempt(lambda: E.ccdf_slope(deg, s_min))
        summary["ccdf_reason"] = why
        top = np.argsort(-deg, kind="mergesort")[:hill.k]
        summary["hill_top_k_bound_ge_1"] = int(np.count_nonzero(bounds[top] >= 1.0))
        summary["hill_reason"] = None
    except DomainError as exc:
        summary["hill"], summary["hill_reason"] = None, str(exc)

    if len(radii) > 1:
        means = prof.mean(axis=0)
        ses = prof.std(axis=0, ddof=1) / math.sqrt(trials) if trials > 1 else np.full(len(radii), math.inf)
        io.write_csv(out / "degree_growth.csv", ["R", "mean_degree", "stderr"], zip(radii, means, ses))
        inc = np.diff(means)
        summary["growth"] = {
            "radii": radii,
            "mean_degree": means.tolist(),
            "increments": inc.tolist(),
            "increment_ratios": (inc[1:] / inc[:-1]).tolist() if inc.size > 1 else [],
            "predicted_ratios": _growth_prediction(params.d, params.alpha, radii),
        }

    if block["w_values"] and not report.degrees_infinite:
        rows = []
        for i, w in enumerate(block["w_values"]):
            quad = E.conditional_degree_quadrature(params, w, R)
            mean, se = E.conditional_degree_empirical(params, w, R, block["w_trials"],
                                                      trial_seed(seed, 10**9 + i), threads)
            rows.append((w, R, quad, G.truncation_bound(params, w, R), mean, se))
        io.write_csv(out / "conditional_degree.csv",
                     ["w", "R", "quadrature", "truncation_bound", "empirical_mean", "stderr"], rows)
    io.write_json(out / "degrees_summary.json", summary)
    return summary


def cmd_percolation(cfg, out):
    params = C.build_params(cfg)
    block = C.require(cfg, "percolation")
    boundary = cfg.get("geometry", {}).get("boundary", "torus")
    curve = E.percolation_curve(params, block["sides"], block["lambdas"], block["trials"], cfg["seed"],
                                cfg["threads"], boundary, block["pair_budget"])
    io.write_csv(out / "percolation.csv", ["L", "lambda", "trials", "mean_fraction", "stderr"],
                 ((r.side, r.lam, r.trials, r.mean_fraction, r.stderr) for r in curve.rows))
    io.write_csv(out / "percolation_trials.csv", ["trial", "L", "lambda", "fraction"], curve.raw)
    doc = {"threshold": block["threshold"]}
    try:
        crossings, note = E.crossing_lambda_estimate(curve, block["threshold"])
        doc["crossings"] = [{"L": c.side, "lambda": c.lam, "stderr": c.stderr} for c in crossings]
        doc["note"], doc["reason"] = note, None
    except DomainError as exc:
        doc["crossings"], doc["note"], doc["reason"] = None, None, str(exc)
    lb, why = _attempt(lambda: lambda_c_lower_bound(params))
    doc["lambda_c_lower_bound"], doc["lambda_c_lower_bound_reason"] = lb, why
    io.write_json(out / "crossing.json", doc)
    return doc


def cmd_distances(cfg, out):
    params = C.build_params(cfg)
    box = C.build_box(cfg)
    block = C.require(cfg, "distances")
    table = E.distance_scaling(params, box, block["pair_norms"], block["pairs_per_norm"], block["max_hops"],
                               cfg["seed"], cfg["threads"], block["realisations"], block["block_bits"],
                               block["frontier_guard"])
    io.write_csv(out / "distances.csv", ["norm", "pair", "x", "y", "hops"], table.raw)
    io.write_csv(out / "distance_table.csv",
                 ["norm", "pairs", "connected_fraction", "median_hops", "mean_hops"],
                 ((r.norm, r.pairs, r.connected_fraction, r.median_hops, r.mean_hops) for r in table.rows))
    summary = {"rows": [r.__dict__ for r in table.rows]}
    try:
        fits = E.distance_regressions(table)
        summary["regressions"] = {k: v.to_dict() for k, v in fits.items()}
        summary["regressions_reason"] = None
    except DomainError as exc:
        summary["regressions"], summary["regressions_reason"] = None, str(exc)
    dc, why = _attempt(lambda: distance_constant(params))
    summary["distance_constants"] = dc.to_dict() if dc else None
    summary["distance_constants_reason"] = why
    if block["reach_hops"] is not None:
        lazy = G.LazyGraph(params, box, trial_seed(cfg["seed"], 0), block_bits=block["block_bits"])
        summary["reach_profile"] = {"source": 0,
                                    "radii": lazy.reach_profile(0, block["reach_hops"], block["frontier_guard"])}
    io.write_json(out / "distances_summary.json", summary)
    return summary


def cmd_gfun(cfg, out):
    params = C.build_params(cfg)
    block = C.require(cfg, "gfun")
    rows, max_ratio = E.gfun_envelope_check(params.weights, block["u_grid"])
    io.write_csv(out / "gfun.csv", ["u", "g", "envelope_ratio"], ((r.u, r.g, r.ratio) for r in rows))
    ratios = [r.ratio for r in rows]
    summary = {
        "exponent": E.envelope_exponent(params.weights),
        "max_ratio": max_ratio,
        "min_ratio": min(ratios),
        "ratio_spread": max_ratio / min(ratios) if min(ratios) > 0 else None,
        "g_nonincreasing": all(a.g >= b.g for a, b in zip(rows, rows[1:])),
    }
    io.write_json(out / "gfun_summary.json", summary)
    return summary


_HANDLERS = {
    "constants": cmd_constants,
    "generate": cmd_generate,
    "degrees": cmd_degrees,
    "percolation": cmd_percolation,
    "distances": cmd_distances,
    "gfun": cmd_gfun,
}


# ---------------------------------------------------------------------------
# entry point


def build_parser():
    p = argparse.ArgumentParser(prog="sfperc", description="Scale-free percolation on Z^d: simulations and constants.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="JSON experiment configuration")
    p.add_argument("--out", default=".", help="output directory (created if missing)")
    p.add_argument("--seed", type=int, default=None, help="master seed (overrides the config)")
    p.add_argument("--threads", type=int, default=None, help="worker threads (overrides the config)")
    return p


def run(command, raw_cfg, out, seed=None, threads=None):
    """Resolve ``raw_cfg``, run ``command`` and write outputs plus manifest to ``out``."""
    started = time.perf_counter()
    raw = dict(raw_cfg)
    if seed is not None:
        raw["seed"] = seed
    if threads is not None:
        raw["threads"] = threads
    cfg = C.resolve(raw)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    result = _HANDLERS[command](cfg, out)
    rel_tol = cfg.get("constants", C.DEFAULTS["constants"])["rel_tol"]
    derived = result if command == "constants" else derived_constants(C.build_params(cfg), rel_tol)
    io.write_json(out / "manifest.json", manifest(cfg, command, derived, started))
    return result


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        raw = C.load(args.config)
        result = run(args.command, raw, args.out, args.seed, args.threads)
    except ConfigError as exc:
        print(f"sfperc: configuration error: {exc}", file=sys.stderr)
        if exc.offending:
            print("offending keys: " + ", ".join(exc.offending), file=sys.stderr)
        return exc.exit_code
    except DomainError as exc:
        print(f"sfperc: invalid parameters: {exc}", file=sys.stderr)
        return ConfigError.exit_code
    except SfpercError as exc:
        print(f"sfperc: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"sfperc: I/O error: {exc}", file=sys.stderr)
        return 1
    if args.command == "constants":
        sys.stdout.write(io.dumps_json(result))
    return 0


if __name__ == "__main__":
    sys.exit(main())
