"""magkit command line.

Exit codes: 0 ok, 1 usage, 2 data error, 3 numerical failure.  Errors are
reported on stderr as one JSON line.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from contextlib import nullcontext

import numpy as np

from . import active_learning, approx, datasets, graphs, outlier
from .errors import MagkitError, InputError
from .io import read_table, write_csv, write_json
from .metric_core import pairwise_distances, similarity_matrix
from .weighting import log_grid, magnitude_function, weighting_vector

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _cmd_weight(a):
    pts, _, _ = read_table(a.input, a.label_col)
    wv = weighting_vector(similarity_matrix(pairwise_distances(pts, a.metric), a.t))
    if a.format == "json":
        write_json(a.out, {"t": a.t, "metric": a.metric, "magnitude": wv.magnitude,
                           "residual": wv.residual, "weights": wv.w})
    else:
        write_csv(a.out, ["index", "weight"], [(i, w) for i, w in enumerate(wv.w)])
    return EXIT_OK


def _cmd_magnitude_fn(a):
    pts, _, _ = read_table(a.input, a.label_col)
    series = magnitude_function(pairwise_distances(pts, a.metric), log_grid(a.t_min, a.t_max, a.per_decade))
    write_csv(a.out, ["t", "magnitude"], zip(series.ts, series.mags))
    if series.gaps:
        print(f"{len(series.gaps)} of {series.ts.size} scales failed and were written as nan",
              file=sys.stderr)
    return EXIT_OK


def _errors(approx_w, exact):
    diff = approx_w - exact
    return {"l2": float(np.linalg.norm(diff)), "linf": float(np.max(np.abs(diff)))}


def _cmd_approx_bench(a):
    pts, _, _ = read_table(a.input, a.label_col)
    t0 = time.perf_counter()
    dist = pairwise_distances(pts, a.metric)
    sim = similarity_matrix(dist, a.t)
    exact = weighting_vector(sim)
    t_exact = time.perf_counter() - t0

    t0 = time.perf_counter()
    kde = approx.weight_approx_kde(sim)
    t_kde = time.perf_counter() - t0
    t0 = time.perf_counter()
    rect = approx.weight_approx_rect(pts, a.h, normalized=True, norm=a.norm)
    t_rect = time.perf_counter() - t0
    t0 = time.perf_counter()
    rect_u = approx.weight_approx_rect(pts, a.h, normalized=False, norm=a.norm)
    t_rect_u = time.perf_counter() - t0

    rep = approx.scatter_report(dist, a.t)
    write_json(a.out, {
        "n": int(pts.shape[0]), "d": int(pts.shape[1]), "t": a.t, "h": a.h,
        "metric": a.metric, "norm": a.norm, "magnitude": exact.magnitude,
        "scatter": {"is_scattered": rep.is_scattered, "eps_min": rep.eps_min,
                    "t_required": rep.t_required, "bound": rep.bound},
        "errors": {"kde": _errors(kde, exact.w), "rect": _errors(rect, exact.w),
                   "rect_unnormalized": _errors(rect_u, exact.w)},
        "seconds": {"exact": t_exact, "kde": t_kde, "rect": t_rect, "rect_unnormalized": t_rect_u},
    })
    return EXIT_OK


GRID_NAMES = ("default", "paper")  # both name the 14-value grid {1, 5} x 10^-5..10^1


def _parse_grid(text):
    if text in GRID_NAMES:
        return outlier.default_t_grid()
    try:
        grid = np.array(sorted(float(v) for v in text.split(",") if v.strip()))
    except ValueError:
        raise UsageError(f"--t-grid must be 'default' or a comma list of numbers, got {text!r}") from None
    if grid.size == 0:
        raise UsageError("--t-grid is empty")
    return grid


def _cmd_outlier(a):
    grid = _parse_grid(a.t_grid)
    if a.eval:
        train, tl, _ = read_table(a.inliers, a.labels_col if a.labels_col_in_inliers else None)
        if tl is not None:
            train = train[tl == 0]
        pts, lab, _ = read_table(a.eval, a.labels_col)
        rng = np.random.default_rng(a.seed)
        to_val = rng.random(pts.shape[0]) < 0.5
        split = outlier.DatasetSplit(train, pts[to_val], lab[to_val] != 0, pts[~to_val], lab[~to_val] != 0)
    else:
        pts, lab, _ = read_table(a.inliers, a.labels_col)
        pts, lab, dropped = outlier.drop_duplicates(pts, lab)
        if dropped:
            print(f"dropped {dropped} repeated rows", file=sys.stderr)
        split = outlier.split_dataset(pts[lab == 0], pts[lab != 0], a.seed)
    res = outlier.run_benchmark(split, k=a.k, grid=grid, seed=a.seed, max_train=a.max_train,
                                metric=a.metric)
    m = res.metrics
    write_json(a.out, {
        "metrics": {"precision_at_k": m.precision_at_k, "recall_at_k": m.recall_at_k,
                    "f1_at_k": m.f1_at_k, "auc": m.auc, "k": m.k},
        "t_search": {"best_t": res.search.best_t, "selection": "argmax validation AUC, ties to smaller t",
                     "grid": [{"t": t, "validation_auc": auc} for t, auc in res.search.grid],
                     "failures": {repr(t): why for t, why in res.search.failures.items()}},
        "sizes": {"train": int(split.train.shape[0]), "validation": int(split.validation.shape[0]),
                  "test": int(split.test.shape[0])},
        "seed": a.seed, "metric": a.metric,
    })
    return EXIT_OK


def _cmd_fetch_odds(a):
    path = datasets.fetch_dataset(a.name, a.dir, allow_network=a.allow_network, sha256=a.sha256, url=a.url)
    print(path)
    return EXIT_OK


def _cmd_active_learn(a):
    pts, lab, _ = read_table(a.pool, a.labels_col)
    if lab is None:
        raise InputError("--labels-col is required")
    summary = active_learning.run_experiment(
        pts, lab, a.strategy, a.budget, seeds=range(a.seed, a.seed + a.seeds), t=a.t)
    write_csv(a.out, ["iteration", "labels_mean", "accuracy_mean", "accuracy_std"],
              zip(summary.iteration, summary.labels_mean, summary.acc_mean, summary.acc_std))
    return EXIT_OK


def _cmd_graph_weight(a):
    g = graphs.read_edge_list(a.edges)
    res = graphs.graph_weighting(g, a.metric, a.t)
    if not res.ok:
        hint = f"; try t > {res.suggested_t:.6g}" if res.suggested_t else ""
        raise _NumericFailure(f"no weighting for this graph at t={a.t}: {res.failure}{hint}")
    deg = g.degrees()
    write_csv(a.out, ["node", "weight", "degree"], [(i, w, deg[i]) for i, w in enumerate(res.weighting.w)])
    return EXIT_OK


class _NumericFailure(MagkitError):
    exit_code = EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="magkit", description="Metric-space magnitude and weighting vectors.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser, required=True)

    def pts_args(s):
        s.add_argument("--input", required=True)
        s.add_argument("--label-col", default=None, help="column to exclude from the geometry")
        s.add_argument("--metric", default="l2", choices=["l1", "l2", "linf"])

    s = sub.add_parser("weight", help="weighting vector of a point cloud")
    pts_args(s)
    s.add_argument("--t", type=float, default=1.0)
    s.add_argument("--format", choices=["csv", "json"], default="csv")
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_weight)

    s = sub.add_parser("magnitude-fn", help="t -> Mag(tX) on a log grid")
    pts_args(s)
    s.add_argument("--t-min", type=float, default=1e-3)
    s.add_argument("--t-max", type=float, default=1e2)
    s.add_argument("--per-decade", type=int, default=50)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_magnitude_fn)

    s = sub.add_parser("approx-bench", help="exact vs approximate weighting errors and timings")
    pts_args(s)
    s.add_argument("--t", type=float, default=50.0)
    s.add_argument("--h", type=float, default=0.03)
    s.add_argument("--norm", default="linf", choices=["linf", "l2"])
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_approx_bench)

    s = sub.add_parser("outlier", help="weighting-score outlier benchmark with t search")
    s.add_argument("--inliers", required=True,
                   help="training inliers; without --eval, a labeled file split by the protocol")
    s.add_argument("--eval", default=None, help="labeled points split evenly into validation/test")
    s.add_argument("--labels-col", default="label", help="label column, 1 = outlier")
    s.add_argument("--labels-col-in-inliers", action="store_true",
                   help="the inliers file also has the label column (rows labeled 1 are dropped)")
    s.add_argument("--k", type=int, default=outlier.DEFAULT_K)
    s.add_argument("--t-grid", default="default",
                   help="'default' (14 values, 1e-5 to 50) or a comma list of scales")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--max-train", type=int, default=outlier.MAX_TRAIN)
    s.add_argument("--metric", default="l2", choices=["l1", "l2", "linf"])
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_outlier)

    s = sub.add_parser("fetch-odds", help="download a benchmark file (network opt-in)")
    s.add_argument("--name", required=True)
    s.add_argument("--dir", default="data")
    s.add_argument("--sha256", default=None)
    s.add_argument("--url", default=None)
    s.add_argument("--allow-network", action="store_true")
    s.set_defaults(func=_cmd_fetch_odds)

    s = sub.add_parser("active-learn", help="active learning curves averaged over seeds")
    s.add_argument("--pool", required=True)
    s.add_argument("--labels-col", required=True)
    s.add_argument("--strategy", choices=active_learning.STRATEGIES, default="weighting")
    s.add_argument("--budget", type=int, default=100)
    s.add_argument("--seeds", type=int, default=100)
    s.add_argument("--seed", type=int, default=0, help="first seed")
    s.add_argument("--t", type=float, default=active_learning.QUERY_T)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_active_learn)

    s = sub.add_parser("graph-weight", help="weighting vector of a graph metric")
    s.add_argument("--edges", required=True)
    s.add_argument("--metric", choices=sorted(graphs.GRAPH_METRICS), default="resistance")
    s.add_argument("--t", type=float, default=1.0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_graph_weight)
    return p


def _thread_limit():
    raw = os.environ.get("MAGKIT_THREADS")
    if not raw:
        return nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=max(1, int(raw)))


def _report(kind, code, message):
    print(json.dumps({"error": kind, "exit": code, "message": message}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        return _report("UsageError", EXIT_USAGE, str(exc))
    try:
        with _thread_limit():
            return args.func(args)
    except UsageError as exc:
        return _report("UsageError", EXIT_USAGE, str(exc))
    except MagkitError as exc:
        return _report(type(exc).__name__, exc.exit_code, str(exc))
    except OSError as exc:
        return _report(type(exc).__name__, EXIT_DATA, str(exc))


if __name__ == "__main__":
    sys.exit(main())
