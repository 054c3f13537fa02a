"""Fast approximations of the weighting vector.

For a scattered space (exp(-eps) < 1/(n-1), eps the smallest nonzero distance)
the weighting is within a closed-form bound of 1/(n f), f the Laplacian kernel
density.  The rectangle-count estimator replaces f with a box count from a k-d
tree, which makes the whole approximation O(n log n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import InputError, NotScatteredError
from .metric_core import DistanceMatrix, Metric, SimilarityMatrix, as_points, check_scale
from .weighting import _zeta_array


@dataclass(frozen=True)
class ScatterReport:
    """Scatteredness of tX and the matching error bound.

    ``bound`` is NaN when the space is not scattered (bound not applicable).
    ``t_required`` is the scale log(n-1)/eps_min above which X becomes scattered.
    """

    is_scattered: bool
    eps_min: float
    n: int
    t: float
    t_required: float
    bound: float
    ratio: float

    @property
    def bound_applicable(self) -> bool:
        return self.is_scattered


def error_bound(n: int, scaled_eps: float) -> float:
    """RHS of |w(x) - 1/(n f(x))| <= (n(n-1)^2 e^{-2e} + n(n-1) e^{-e}) / (1 - (n-1) e^{-e})."""
    if n <= 1:
        return 0.0
    q = math.exp(-scaled_eps)
    r = (n - 1) * q
    if not r < 1:
        return math.nan
    return (n * (n - 1) ** 2 * q * q + n * (n - 1) * q) / (1.0 - r)


def scatter_report(dist: DistanceMatrix, t=1.0) -> ScatterReport:
    t = check_scale(t)
    if not isinstance(dist, DistanceMatrix):
        dist = DistanceMatrix.from_array(dist)
    n = dist.n
    if n == 1:
        return ScatterReport(True, math.nan, 1, t, 0.0, 0.0, 0.0)
    eps = dist.eps_min
    if eps == 0:
        return ScatterReport(False, 0.0, n, t, math.inf, math.nan, float(n - 1))
    ratio = (n - 1) * math.exp(-t * eps)
    scattered = ratio < 1.0
    return ScatterReport(scattered, eps, n, t, math.log(n - 1) / eps,
                         error_bound(n, t * eps) if scattered else math.nan, ratio)


@dataclass(frozen=True)
class DensityEstimate:
    f: np.ndarray
    kind: str
    params: dict = field(default_factory=dict)
    counts: np.ndarray | None = None


def kde_laplacian(zeta) -> DensityEstimate:
    """f(x_i) = (1/n) sum_j zeta_ij, self term included."""
    z = _zeta_array(zeta)
    params = {"t": zeta.t} if isinstance(zeta, SimilarityMatrix) else {}
    return DensityEstimate(z.mean(axis=1), "laplacian_kde", params)


def weight_approx_kde(zeta) -> np.ndarray:
    """1 / (n f) for the Laplacian kernel density f."""
    z = _zeta_array(zeta)
    return 1.0 / z.sum(axis=1)


_P = {Metric.LINF: np.inf, Metric.L2: 2.0, Metric.L1: 1.0}


def box_counts(cloud, h: float, norm=Metric.LINF, tree: cKDTree | None = None) -> np.ndarray:
    """Number of points within distance h of each point (self included, boundary inclusive)."""
    pts = as_points(cloud)
    h = float(h)
    if not (math.isfinite(h) and h > 0):
        raise InputError(f"box half-width h must be positive, got {h}")
    if tree is None:
        tree = cKDTree(pts)
    counts = tree.query_ball_point(pts, r=h, p=_P[Metric.parse(norm)], return_length=True)
    return np.asarray(counts, dtype=np.int64)


def rect_count_density(cloud, h: float, norm=Metric.LINF) -> DensityEstimate:
    """f~(x) = |R_h(x) n X| / (n (2h)^d) with R_h(x) the box of half-width h."""
    pts = as_points(cloud)
    n, d = pts.shape
    counts = box_counts(pts, h, norm)
    f = counts / (n * (2.0 * h) ** d)
    return DensityEstimate(f, "rect_count", {"h": float(h), "norm": Metric.parse(norm).value}, counts)


def weight_approx_rect(cloud, h: float, normalized: bool = True, norm=Metric.LINF) -> np.ndarray:
    """(2h)^d / count when normalized, else 1 / count."""
    pts = as_points(cloud)
    counts = box_counts(pts, h, norm)
    if normalized:
        return (2.0 * float(h)) ** pts.shape[1] / counts
    return 1.0 / counts


@dataclass(frozen=True)
class NeumannResult:
    inverse: np.ndarray
    k_max: int
    ratio: float
    truncation_bound: float


def neumann_inverse(zeta, k_max: int, eps_min: float | None = None) -> NeumannResult:
    """Partial sum sum_{k<=k_max} (-1)^k E^k of the inverse, E = zeta - I.

    E^k(a, b) is the sum over walks a = a_0 != a_1 != ... != a_k = b of the
    products of similarities, each bounded by ((n-1) e^{-eps})^k = r^k.  The
    series is refused unless r < 1.  ``eps_min`` is the smallest nonzero
    scaled distance; when omitted it is read off the largest off-diagonal entry.
    """
    z = _zeta_array(zeta)
    n = z.shape[0]
    if k_max < 0:
        raise InputError("k_max must be non-negative")
    e = z - np.eye(n)
    if n > 1:
        q = math.exp(-eps_min) if eps_min is not None else float(np.max(np.abs(e)))
        r = (n - 1) * q
    else:
        r = 0.0
    if not r < 1.0:
        raise NotScatteredError(f"series ratio (n-1)e^(-eps) = {r:.4g} >= 1; Neumann expansion may diverge")
    total = np.eye(n)
    term = np.eye(n)
    for _ in range(k_max):
        term = -(term @ e)
        total += term
    tail = n * r ** (k_max + 1) / (1.0 - r) if r > 0 else 0.0
    return NeumannResult(total, k_max, r, tail)
