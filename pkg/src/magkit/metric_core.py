"""Point clouds, distance matrices, similarity matrices and standardization.

Everything downstream consumes the frozen containers defined here. Arrays held
by the containers are flagged read-only so a cached matrix cannot drift after
construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.spatial.distance import cdist

from .errors import InputError, InsufficientDataError


class Metric(str, Enum):
    L1 = "l1"
    L2 = "l2"
    LINF = "linf"

    @classmethod
    def parse(cls, value) -> "Metric":
        if isinstance(value, Metric):
            return value
        key = str(value).strip().lower()
        aliases = {"l1": "l1", "cityblock": "l1", "manhattan": "l1",
                   "l2": "l2", "euclidean": "l2",
                   "linf": "linf", "chebyshev": "linf", "inf": "linf", "max": "linf"}
        if key not in aliases:
            raise InputError(f"unknown metric {value!r}; expected one of l1, l2, linf")
        return cls(aliases[key])


_SCIPY_METRIC = {Metric.L1: "cityblock", Metric.L2: "euclidean", Metric.LINF: "chebyshev"}

DEFAULT_METRIC = Metric.L2


def _frozen(a):
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PointCloud:
    """n points in R^d, one per row."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise InputError(f"point cloud must be a non-empty n x d array, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            bad = np.argwhere(~np.isfinite(pts))[0]
            raise InputError(f"non-finite coordinate at row {bad[0]}, column {bad[1]}")
        object.__setattr__(self, "points", _frozen(pts))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.n


def as_points(cloud) -> np.ndarray:
    """Validated float64 (n, d) array from a PointCloud or array-like."""
    if isinstance(cloud, PointCloud):
        return cloud.points
    return PointCloud(cloud).points


@dataclass(frozen=True)
class DistanceMatrix:
    """Dense symmetric distance matrix.

    ``eps_min`` is the smallest off-diagonal entry; it is NaN for a single point
    and 0 when duplicate points are present (``has_duplicates`` is then set).
    """

    dist: np.ndarray
    eps_min: float
    metric: str = "raw"

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    @property
    def has_duplicates(self) -> bool:
        return self.n > 1 and self.eps_min == 0.0

    @classmethod
    def from_array(cls, dist, metric: str = "raw", check: bool = True) -> "DistanceMatrix":
        d = np.array(dist, dtype=np.float64)
        if d.ndim != 2 or d.shape[0] != d.shape[1] or d.shape[0] < 1:
            raise InputError(f"distance matrix must be square and non-empty, got shape {d.shape}")
        if check:
            if not np.all(np.isfinite(d)):
                raise InputError("distance matrix has non-finite entries")
            if np.any(d < 0):
                raise InputError("distance matrix has negative entries")
            if np.any(np.diag(d) != 0):
                raise InputError("distance matrix diagonal must be zero")
            if not np.array_equal(d, d.T):
                raise InputError("distance matrix is not symmetric")
        eps = _off_diagonal_min(d)
        return cls(_frozen(d), eps, metric)


def _off_diagonal_min(d: np.ndarray) -> float:
    n = d.shape[0]
    if n < 2:
        return math.nan
    diag = d.diagonal().copy()
    np.fill_diagonal(d, np.inf)
    m = float(d.min())
    np.fill_diagonal(d, diag)
    return m


def cross_distances(a, b, metric=DEFAULT_METRIC) -> np.ndarray:
    """Distances between rows of ``a`` (m x d) and rows of ``b`` (k x d)."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    if a.shape[1] != b.shape[1]:
        raise InputError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    return cdist(a, b, metric=_SCIPY_METRIC[Metric.parse(metric)])


def pairwise_distances(cloud, metric=DEFAULT_METRIC) -> DistanceMatrix:
    """All-pairs distances of a point cloud under L1, L2 or L-infinity."""
    pts = as_points(cloud)
    metric = Metric.parse(metric)
    d = cdist(pts, pts, metric=_SCIPY_METRIC[metric])
    np.fill_diagonal(d, 0.0)
    eps = _off_diagonal_min(d)
    return DistanceMatrix(_frozen(d), eps, metric.value)


@dataclass(frozen=True)
class SimilarityMatrix:
    """zeta = exp(-t * dist); ``source`` is one of euclidean, graph, raw."""

    zeta: np.ndarray
    t: float = 1.0
    source: str = "raw"

    @property
    def n(self) -> int:
        return self.zeta.shape[0]

    @classmethod
    def from_array(cls, zeta, t: float = 1.0, source: str = "raw") -> "SimilarityMatrix":
        z = np.array(zeta, dtype=np.float64)
        if z.ndim != 2 or z.shape[0] != z.shape[1]:
            raise InputError(f"similarity matrix must be square, got shape {z.shape}")
        return cls(_frozen(z), float(t), source)


def check_scale(t) -> float:
    t = float(t)
    if not (math.isfinite(t) and t > 0):
        raise InputError(f"scale t must be positive and finite, got {t}")
    return t


def similarity_matrix(dist: DistanceMatrix, t=1.0, source: str | None = None) -> SimilarityMatrix:
    """Laplacian-kernel similarity of the scaled space tX."""
    t = check_scale(t)
    if not isinstance(dist, DistanceMatrix):
        dist = DistanceMatrix.from_array(dist)
    if source is None:
        # every Minkowski-p metric used here gives a positive definite kernel
        source = "euclidean" if dist.metric in ("l1", "l2", "linf") else "raw"
    z = np.multiply(dist.dist, -t)
    np.exp(z, out=z)
    return SimilarityMatrix(_frozen(z), t, source)


def similarity_from_points(cloud, t=1.0, metric=DEFAULT_METRIC) -> SimilarityMatrix:
    return similarity_matrix(pairwise_distances(cloud, metric), t)


@dataclass(frozen=True)
class Standardizer:
    """Per-feature affine map to zero mean and unit (population) variance."""

    mean: np.ndarray
    stdev: np.ndarray

    @classmethod
    def fit(cls, cloud) -> "Standardizer":
        pts = as_points(cloud)
        if pts.shape[0] < 2:
            raise InsufficientDataError(f"standardization needs at least 2 points, got {pts.shape[0]}")
        mean = pts.mean(axis=0)
        std = pts.std(axis=0)
        # zero-variance features: keep them, centered, with unit scale
        flat = std <= 1e-12 * np.maximum(1.0, np.abs(mean))
        std = np.where(flat, 1.0, std)
        return cls(_frozen(mean), _frozen(std))

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.mean.shape[0]:
            raise InputError(f"expected {self.mean.shape[0]} features, got {x.shape[-1]}")
        return (x - self.mean) / self.stdev

    def invert(self, z) -> np.ndarray:
        return np.asarray(z, dtype=np.float64) * self.stdev + self.mean


def standardize(cloud):
    """Return (standardized points, fitted Standardizer)."""
    s = Standardizer.fit(cloud)
    return s.apply(as_points(cloud)), s
