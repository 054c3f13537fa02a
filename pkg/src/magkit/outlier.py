"""Weighting-score outlier detection.

A point x is scored by its own entry in the weighting vector of Phi(Y u {x}),
where Y is a retained sample of training inliers and Phi the standardizer fit
on the training inliers.  Phi is frozen at fit time so that the cached inverse
of zeta_{Phi(Y)} stays valid; each score is then one O(|Y|^2) augmentation.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .errors import (AUCUndefinedError, DuplicatePointError, InputError, InsufficientDataError,
                     MagkitError, NumericalError, SingularMatrixError)
from .gluing import KernelCache, augment_many, augment_one
from .metric_core import (DEFAULT_METRIC, Metric, Standardizer, as_points, check_scale,
                          cross_distances, similarity_from_points)
from .weighting import _threads

log = logging.getLogger(__name__)

MAX_TRAIN = 1000
DEFAULT_K = 10
SPLIT_RATIOS = (0.6, 0.2, 0.2)
# max |zeta w - 1| the cached inverse must achieve on the training set
CACHE_RESIDUAL_TOL = 1e-8


def default_t_grid() -> np.ndarray:
    """{1e j, 5e j : -5 <= j <= 1}, ascending (14 values)."""
    return np.array(sorted(m * 10.0 ** j for j in range(-5, 2) for m in (1, 5)))


@dataclass(frozen=True)
class OutlierModel:
    standardizer: Standardizer
    train: np.ndarray          # retained inliers, standardized
    train_index: np.ndarray    # their rows in the fit input
    t: float
    cache: KernelCache
    k: int = DEFAULT_K
    metric: str = DEFAULT_METRIC.value

    @property
    def n_train(self) -> int:
        return self.train.shape[0]


def _duplicate_rows(pts):
    _, inverse, counts = np.unique(pts, axis=0, return_inverse=True, return_counts=True)
    groups = [np.flatnonzero(inverse.ravel() == g) for g in np.flatnonzero(counts > 1)]
    return [g.tolist() for g in groups]


def fit(inliers, t, seed=0, k: int = DEFAULT_K, max_train: int = MAX_TRAIN,
        metric=DEFAULT_METRIC) -> OutlierModel:
    """Standardize the inliers, retain at most ``max_train`` of them, cache zeta^-1."""
    pts = as_points(inliers)
    t = check_scale(t)
    if pts.shape[0] < 2:
        raise InsufficientDataError(f"need at least 2 inliers, got {pts.shape[0]}")
    std = Standardizer.fit(pts)
    idx = np.arange(pts.shape[0])
    if pts.shape[0] > max_train:
        rng = np.random.default_rng(seed)
        idx = np.sort(rng.choice(pts.shape[0], size=max_train, replace=False))
    train = std.apply(pts[idx])
    dups = _duplicate_rows(train)
    if dups:
        rows = [idx[g].tolist() for g in dups]
        raise DuplicatePointError(f"duplicate standardized inliers at rows {rows[:5]}",
                                  indices=[i for g in rows for i in g])
    metric = Metric.parse(metric)
    zeta = similarity_from_points(train, t, metric).zeta
    cache = KernelCache.from_similarity(zeta)
    residual = float(np.max(np.abs(zeta @ cache.w - 1.0)))
    if not residual <= CACHE_RESIDUAL_TOL:
        raise SingularMatrixError(
            f"training similarity matrix too ill-conditioned at t={t:g}: "
            f"residual {residual:.2e} exceeds {CACHE_RESIDUAL_TOL:.0e}")
    train.setflags(write=False)
    return OutlierModel(std, train, idx, t, cache, int(k), metric.value)


def _cross(model, x):
    z = model.standardizer.apply(np.atleast_2d(np.asarray(x, dtype=np.float64)))
    return np.exp(-model.t * cross_distances(z, model.train, model.metric))


def score(model: OutlierModel, x) -> float:
    """Weight of Phi(x) in the weighting vector of Phi(Y) u {Phi(x)}."""
    x = np.asarray(x, dtype=np.float64).ravel()
    _, wx = augment_one(model.cache, _cross(model, x)[0])
    return wx


def score_batch(model: OutlierModel, points) -> np.ndarray:
    """``score`` for every row; each point is added to Y on its own."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if pts.shape[0] == 0:
        return np.empty(0)
    return augment_many(model.cache, _cross(model, pts))


def classify_topk(scores, k: int) -> np.ndarray:
    """True for the k largest scores; ties at the cut go to the lower index."""
    s = np.asarray(scores, dtype=np.float64)
    if not 0 <= k <= s.size:
        raise InputError(f"k={k} must lie in [0, {s.size}]")
    order = np.argsort(-s, kind="stable")
    flags = np.zeros(s.size, dtype=bool)
    flags[order[:k]] = True
    return flags


@dataclass(frozen=True)
class EvalMetrics:
    precision_at_k: float
    recall_at_k: float
    f1_at_k: float
    auc: float
    k: int = DEFAULT_K


def auc_score(scores, labels) -> float:
    """P(score_pos > score_neg) + 0.5 P(tie), via average ranks."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels).astype(bool)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise AUCUndefinedError("AUC needs at least one positive and one negative label")
    ranks = rankdata(s)
    return float((ranks[y].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def evaluate(scores, labels, k: int = DEFAULT_K) -> EvalMetrics:
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels).astype(bool)
    if s.shape != y.shape:
        raise InputError(f"{s.size} scores but {y.size} labels")
    flagged = classify_topk(s, k)
    tp = int(np.sum(flagged & y))
    precision = tp / k if k else 0.0
    recall = tp / int(y.sum()) if y.any() else 0.0
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return EvalMetrics(precision, recall, f1, auc_score(s, y), int(k))


@dataclass(frozen=True)
class TSearchResult:
    best_t: float
    grid: list          # (t, validation AUC or NaN if the fit/score failed)
    failures: dict = field(default_factory=dict)

    @property
    def best_auc(self) -> float:
        return dict(self.grid)[self.best_t]


def _auc_at(t, inliers, points, labels, seed, max_train, metric):
    try:
        model = fit(inliers, t, seed=seed, max_train=max_train, metric=metric)
        return auc_score(score_batch(model, points), labels), None
    except AUCUndefinedError:
        raise
    except MagkitError as exc:
        return math.nan, str(exc)


def t_search(inliers, validation_points, validation_labels, grid=None, seed=0,
             max_train: int = MAX_TRAIN, metric=DEFAULT_METRIC) -> TSearchResult:
    """Pick the t with the largest validation AUC; ties go to the smaller t."""
    grid = default_t_grid() if grid is None else np.sort(np.atleast_1d(np.asarray(grid, dtype=np.float64)))
    if grid.size == 0:
        raise InputError("empty t grid")
    labels = np.asarray(validation_labels).astype(bool)
    if labels.all() or not labels.any():
        raise AUCUndefinedError("validation set needs both inliers and outliers")

    def run(t):
        return _auc_at(float(t), inliers, validation_points, labels, seed, max_train, metric)

    workers = min(_threads(), grid.size)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(run, grid))
    else:
        results = [run(t) for t in grid]

    rows = [(float(t), float(a)) for t, (a, _) in zip(grid, results)]
    failures = {float(t): why for t, (_, why) in zip(grid, results) if why}
    for t, why in failures.items():
        log.info("t=%g skipped: %s", t, why)
    best_t, best_auc = None, -math.inf
    for t, a in rows:
        if math.isfinite(a) and a > best_auc:
            best_t, best_auc = t, a
    if best_t is None:
        raise NumericalError(f"every grid value failed; first failure: {next(iter(failures.values()))}")
    return TSearchResult(best_t, rows, failures)


def drop_duplicates(points, labels):
    """Keep the first occurrence of every distinct row; returns (points, labels, n_dropped).

    Repeated points make the similarity matrix singular, so benchmark data with
    repeats (common for integer-valued features) is reduced before splitting.
    """
    pts = as_points(points)
    labels = np.asarray(labels)
    _, first = np.unique(pts, axis=0, return_index=True)
    keep = np.sort(first)
    return pts[keep], labels[keep], pts.shape[0] - keep.size


@dataclass(frozen=True)
class DatasetSplit:
    train: np.ndarray
    validation: np.ndarray
    validation_labels: np.ndarray
    test: np.ndarray
    test_labels: np.ndarray

    @property
    def has_outliers(self) -> bool:
        return bool(self.validation_labels.any() or self.test_labels.any())


def split_dataset(inliers, outliers, seed=0, ratios=SPLIT_RATIOS) -> DatasetSplit:
    """Shuffle inliers into train/validation/test; send each outlier to validation
    or test with probability 1/2.  Labels are True for outliers."""
    inl = as_points(inliers)
    d = inl.shape[1]
    out = np.empty((0, d)) if outliers is None or len(outliers) == 0 else as_points(outliers)
    if out.shape[1] != d:
        raise InputError("inliers and outliers differ in dimension")
    if len(ratios) != 3 or min(ratios) < 0 or not math.isclose(sum(ratios), 1.0):
        raise InputError(f"split ratios must be three non-negative numbers summing to 1, got {ratios}")
    rng = np.random.default_rng(seed)
    n = inl.shape[0]
    order = rng.permutation(n)
    n_train = int(round(ratios[0] * n))
    n_val = int(round(ratios[1] * n))
    tr, va, te = order[:n_train], order[n_train:n_train + n_val], order[n_train + n_val:]
    to_val = rng.random(out.shape[0]) < 0.5
    val = np.vstack([inl[va], out[to_val]])
    test = np.vstack([inl[te], out[~to_val]])
    val_lab = np.r_[np.zeros(va.size, bool), np.ones(int(to_val.sum()), bool)]
    test_lab = np.r_[np.zeros(te.size, bool), np.ones(int((~to_val).sum()), bool)]
    return DatasetSplit(inl[tr], val, val_lab, test, test_lab)


@dataclass(frozen=True)
class BenchmarkResult:
    search: TSearchResult
    metrics: EvalMetrics
    test_scores: np.ndarray


def run_benchmark(split: DatasetSplit, k: int = DEFAULT_K, grid=None, seed=0,
                  max_train: int = MAX_TRAIN, metric=DEFAULT_METRIC) -> BenchmarkResult:
    """t search on validation, then top-k metrics and AUC on test at the chosen t."""
    search = t_search(split.train, split.validation, split.validation_labels, grid, seed,
                      max_train, metric)
    model = fit(split.train, search.best_t, seed=seed, k=k, max_train=max_train, metric=metric)
    scores = score_batch(model, split.test)
    return BenchmarkResult(search, evaluate(scores, split.test_labels, k), scores)
