"""Weighting vectors, magnitude, magnitude functions and the one-class SVM objective."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.linalg.lapack import dpotrf

from .errors import InputError, MagkitError, SingularMatrixError
from .metric_core import DistanceMatrix, SimilarityMatrix, check_scale, similarity_matrix

# gap criterion for magnitude_function (a tolerance choice of this package)
RESIDUAL_TOL = 1e-6


def _zeta_array(zeta) -> np.ndarray:
    if isinstance(zeta, SimilarityMatrix):
        return zeta.zeta
    z = np.asarray(zeta, dtype=np.float64)
    if z.ndim != 2 or z.shape[0] != z.shape[1]:
        raise InputError(f"similarity matrix must be square, got shape {z.shape}")
    return z


def cholesky(a, overwrite: bool = False) -> np.ndarray:
    """Lower Cholesky factor of a symmetric matrix.

    Raises SingularMatrixError naming the first non-positive pivot (index and
    value) when ``a`` is not numerically positive definite.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.shape[0] == 0:
        return a.copy()
    c, info = dpotrf(a, lower=1, clean=1, overwrite_a=int(overwrite))
    if info > 0:
        k = info - 1
        pivot = float("nan")
        if not overwrite:
            row = a[k, :k]
            if k:
                row = solve_triangular(np.tril(c[:k, :k]), row, lower=True, check_finite=False)
            pivot = float(a[k, k] - row @ row)
        raise SingularMatrixError(
            f"matrix is not positive definite: pivot {k} is {pivot:.3e}",
            pivot_index=k, pivot_value=pivot)
    if info < 0:
        raise InputError(f"invalid argument {-info} passed to Cholesky factorization")
    if not np.all(np.isfinite(np.diag(c))):
        raise SingularMatrixError("Cholesky factor has non-finite entries")
    return c


def spd_solve(c: np.ndarray, b) -> np.ndarray:
    return cho_solve((c, True), b, check_finite=False)


def spd_inverse(a) -> np.ndarray:
    c = cholesky(a)
    inv = spd_solve(c, np.eye(c.shape[0]))
    return 0.5 * (inv + inv.T)


@dataclass(frozen=True)
class WeightingVector:
    w: np.ndarray
    magnitude: float
    residual: float = 0.0

    def __len__(self):
        return self.w.shape[0]


def weighting_vector(zeta, overwrite: bool = False) -> WeightingVector:
    """Solve zeta w = 1 by Cholesky; residual is max |zeta w - 1|.

    ``overwrite`` lets the factorization reuse a writable input array, which
    halves peak memory for large dense problems.
    """
    z = _zeta_array(zeta)
    n = z.shape[0]
    if n == 0:
        raise InputError("empty similarity matrix")
    ones = np.ones(n)
    if overwrite:
        c = cholesky(z, overwrite=True)
        w = spd_solve(c, ones)
        residual = math.nan
    else:
        c = cholesky(z)
        w = spd_solve(c, ones)
        residual = float(np.max(np.abs(z @ w - ones)))
    if not np.all(np.isfinite(w)):
        raise SingularMatrixError("weighting solve produced non-finite values")
    return WeightingVector(w, float(w.sum()), residual)


def magnitude(zeta) -> float:
    return weighting_vector(zeta).magnitude


@dataclass(frozen=True)
class MagnitudeSeries:
    """Magnitude at each scale; failed solves are NaN and listed in ``gaps``."""

    ts: np.ndarray
    mags: np.ndarray
    gaps: list = field(default_factory=list)

    @property
    def ok(self) -> np.ndarray:
        return np.isfinite(self.mags)


def log_grid(t_min: float, t_max: float, per_decade: int = 50) -> np.ndarray:
    t_min, t_max = check_scale(t_min), check_scale(t_max)
    if t_max < t_min:
        raise InputError("t_max must not be below t_min")
    count = max(1, int(round(per_decade * math.log10(t_max / t_min))) + 1)
    return np.unique(np.logspace(math.log10(t_min), math.log10(t_max), count))


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("MAGKIT_THREADS", "1")))
    except ValueError:
        return 1


def _magnitude_at(dist, t, residual_tol):
    try:
        wv = weighting_vector(similarity_matrix(dist, t))
    except MagkitError as exc:
        return math.nan, str(exc)
    if not wv.residual <= residual_tol:
        return math.nan, f"residual {wv.residual:.3e} exceeds {residual_tol:.1e}"
    return wv.magnitude, None


def magnitude_function(dist: DistanceMatrix, ts, residual_tol: float = RESIDUAL_TOL) -> MagnitudeSeries:
    """Evaluate t -> Mag(tX) on an ascending grid, recording failed solves as gaps."""
    ts = np.atleast_1d(np.asarray(ts, dtype=np.float64))
    if ts.size == 0:
        raise InputError("empty t grid")
    for t in ts:
        check_scale(t)
    if ts.size > 1 and np.any(np.diff(ts) <= 0):
        raise InputError("t grid must be strictly increasing")
    if not isinstance(dist, DistanceMatrix):
        dist = DistanceMatrix.from_array(dist)

    workers = min(_threads(), ts.size)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(lambda t: _magnitude_at(dist, t, residual_tol), ts))
    else:
        results = [_magnitude_at(dist, t, residual_tol) for t in ts]

    mags = np.array([m for m, _ in results])
    gaps = [(float(t), why) for t, (_, why) in zip(ts, results) if why is not None]
    if len(gaps) == ts.size:
        raise SingularMatrixError(f"magnitude solve failed at every t; first failure: {gaps[0][1]}")
    return MagnitudeSeries(ts, mags, gaps)


def svm_objective(zeta, u, gamma: float) -> float:
    """One-class objective || min(zeta u - (1 + gamma) 1, 0) ||_1."""
    z = _zeta_array(zeta)
    u = np.asarray(u, dtype=np.float64)
    if u.shape != (z.shape[0],):
        raise InputError(f"u must have length {z.shape[0]}, got shape {u.shape}")
    slack = z @ u - (1.0 + gamma)
    return float(np.abs(np.minimum(slack, 0.0)).sum())


@dataclass(frozen=True)
class BoundaryProfile:
    interior_cv: float
    boundary_min_over_interior_max: float


def boundary_profile(w, interior_mask) -> BoundaryProfile:
    """Spread of interior weights and how boundary weights compare to them.

    ``interior_cv`` is the population coefficient of variation of the interior
    weights; the ratio is min(boundary weights) / max(interior weights).
    """
    w = w.w if isinstance(w, WeightingVector) else np.asarray(w, dtype=np.float64)
    mask = np.asarray(interior_mask, dtype=bool)
    if mask.shape != w.shape:
        raise InputError("interior mask must match the weighting vector length")
    if mask.all() or not mask.any():
        raise InputError("interior mask must leave both interior and boundary non-empty")
    inner, outer = w[mask], w[~mask]
    mean = inner.mean()
    spread = inner.std()
    cv = 0.0 if spread == 0 else (spread / abs(mean) if mean != 0 else math.inf)
    return BoundaryProfile(float(cv), float(outer.min() / inner.max()))
