"""Schur-complement gluing of weighting vectors.

Block convention: a BlockPartition lists the "head" indices (the known block,
Y) followed by the "tail" indices (Ybar).  ``perm = concat(head, tail)`` maps a
block-ordered vector back to canonical order via ``out[perm] = block_vec``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import DegenerateAugmentationError, DuplicatePointError, InputError, SingularMatrixError
from .metric_core import DEFAULT_METRIC, as_points, check_scale, cross_distances, similarity_from_points
from .weighting import WeightingVector, _zeta_array, cholesky, spd_inverse, spd_solve, weighting_vector

# Schur scalar threshold below which a new point is treated as a duplicate
AUGMENT_MIN_SCHUR = 1e-12


@dataclass(frozen=True)
class BlockPartition:
    head_idx: np.ndarray
    tail_idx: np.ndarray

    def __post_init__(self):
        head = np.asarray(self.head_idx, dtype=np.intp).ravel()
        tail = np.asarray(self.tail_idx, dtype=np.intp).ravel()
        both = np.concatenate([head, tail])
        if np.unique(both).size != both.size:
            raise InputError("head and tail indices must be disjoint and free of repeats")
        if both.size and (both.min() != 0 or both.max() != both.size - 1):
            raise InputError("partition must cover 0..n-1 exactly")
        object.__setattr__(self, "head_idx", head)
        object.__setattr__(self, "tail_idx", tail)

    @property
    def n(self) -> int:
        return self.head_idx.size + self.tail_idx.size

    @property
    def perm(self) -> np.ndarray:
        return np.concatenate([self.head_idx, self.tail_idx])

    @classmethod
    def from_head(cls, head, n: int) -> "BlockPartition":
        head = np.asarray(head, dtype=np.intp).ravel()
        mask = np.ones(n, dtype=bool)
        mask[head] = False
        return cls(head, np.flatnonzero(mask))

    def blocks(self, m):
        """(A, B, C, D) with A the head-head block and D the tail-tail block."""
        h, t = self.head_idx, self.tail_idx
        return m[np.ix_(h, h)], m[np.ix_(h, t)], m[np.ix_(t, h)], m[np.ix_(t, t)]


def _lu(a, what):
    if a.shape[0] == 0:
        raise SingularMatrixError(f"{what} block is empty")
    lu, piv = lu_factor(a, check_finite=False)
    d = np.abs(np.diag(lu))
    if not np.all(np.isfinite(d)) or d.min() <= np.finfo(float).eps * max(1.0, d.max()) * a.shape[0]:
        raise SingularMatrixError(f"{what} block is singular", pivot_index=int(np.argmin(d)),
                                  pivot_value=float(d.min()))
    return lu, piv


def schur_complement(m, part: BlockPartition, pivot: str = "head") -> np.ndarray:
    """M/A = D - C A^-1 B (pivot="head") or M/D = A - B D^-1 C (pivot="tail")."""
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (part.n, part.n):
        raise InputError(f"matrix shape {m.shape} does not match a partition of size {part.n}")
    a, b, c, d = part.blocks(m)
    if pivot == "head":
        return d - c @ lu_solve(_lu(a, "pivot"), b, check_finite=False)
    if pivot == "tail":
        return a - b @ lu_solve(_lu(d, "pivot"), c, check_finite=False)
    raise InputError(f"pivot must be 'head' or 'tail', got {pivot!r}")


def _w(v) -> np.ndarray:
    return v.w if isinstance(v, WeightingVector) else np.asarray(v, dtype=np.float64)


def _assemble(part, head_vals, tail_vals):
    out = np.empty(part.n)
    out[part.head_idx] = head_vals
    out[part.tail_idx] = tail_vals
    return out


def _result(z, w):
    return WeightingVector(w, float(w.sum()), float(np.max(np.abs(z @ w - 1.0))))


def weights_from_disjoint_parts(zeta_x, part: BlockPartition, w_y, w_ybar) -> WeightingVector:
    """w_X from the weighting vectors of the two blocks of a disjoint split.

    w_X|Y    = (zeta_X / zeta_Ybar)^-1 (1 - zeta_{Y,Ybar} w_Ybar)
    w_X|Ybar = (zeta_X / zeta_Y)^-1    (1 - zeta_{Y,Ybar}^T w_Y)
    """
    z = _zeta_array(zeta_x)
    w_y, w_ybar = _w(w_y), _w(w_ybar)
    a, b, _, d = part.blocks(z)
    if w_y.shape != (a.shape[0],) or w_ybar.shape != (d.shape[0],):
        raise InputError("block weighting vectors do not match the partition sizes")
    if a.shape[0] == 0 or d.shape[0] == 0:
        return _result(z, _assemble(part, w_y, w_ybar))

    ca, cd = cholesky(a), cholesky(d)
    s_head = a - b @ spd_solve(cd, b.T)   # zeta_X / zeta_Ybar
    s_tail = d - b.T @ spd_solve(ca, b)   # zeta_X / zeta_Y
    head = spd_solve(cholesky(s_head), 1.0 - b @ w_ybar)
    tail = spd_solve(cholesky(s_tail), 1.0 - b.T @ w_y)
    return _result(z, _assemble(part, head, tail))


@dataclass(frozen=True)
class GluingCorrection:
    """Correction taking [w_Y; 0] to the block-ordered weighting of X.

    ``rho_ones`` is rho_XY @ 1 in block order; ``rho`` is only materialized on
    request since it is n x n.
    """

    perm: np.ndarray
    rho_ones: np.ndarray
    mag_correction: float
    rho: np.ndarray | None = None


def rho_matrix(m, part: BlockPartition) -> np.ndarray:
    """rho_MA in block order, so that M^-1 = blockdiag(A^-1, 0) + rho (block order)."""
    m = np.asarray(m, dtype=np.float64)
    a, b, c, d = part.blocks(m)
    k, n = a.shape[0], part.n
    if k == n:
        return np.zeros((n, n))
    if k == 0:
        return np.linalg.inv(d)
    lua = _lu(a, "head")
    ainv_b = lu_solve(lua, b, check_finite=False)
    c_ainv = lu_solve(lua, c.T, trans=1, check_finite=False).T
    s_inv = np.linalg.inv(d - c @ ainv_b)
    rho = np.empty((n, n))
    rho[:k, :k] = ainv_b @ s_inv @ c_ainv
    rho[:k, k:] = -ainv_b @ s_inv
    rho[k:, :k] = -s_inv @ c_ainv
    rho[k:, k:] = s_inv
    return rho


def extend_weighting_subset(zeta_x, part: BlockPartition, w_y, materialize: bool = False):
    """Extend the weighting of the head block Y to all of X.

    Returns (w_X, correction) with w_X = P([w_Y; 0] + rho_XY 1) and
    Mag(X) = Mag(Y) + 1^T rho_XY 1.  An empty head follows the convention
    rho = zeta_X^-1, i.e. a direct solve.
    """
    z = _zeta_array(zeta_x)
    w_y = _w(w_y)
    a, b, c, d = part.blocks(z)
    k, n = a.shape[0], part.n
    if w_y.shape != (k,):
        raise InputError(f"w_Y has length {w_y.size}, head block has {k} points")
    perm = part.perm

    if k == n:
        rho_ones = np.zeros(n)
    elif k == 0:
        rho_ones = weighting_vector(z[np.ix_(perm, perm)]).w
    else:
        ca = cholesky(a)
        schur = d - c @ spd_solve(ca, b)
        tail = spd_solve(cholesky(schur), 1.0 - c @ w_y)
        rho_ones = np.concatenate([-spd_solve(ca, b @ tail), tail])

    block_w = rho_ones.copy()
    block_w[:k] += w_y
    w = np.empty(n)
    w[perm] = block_w
    rho = None
    if materialize:
        rho = spd_inverse(z[np.ix_(perm, perm)]) if k == 0 else rho_matrix(z, part)
    corr = GluingCorrection(perm, rho_ones, float(rho_ones.sum()), rho)
    return _result(z, w), corr


def _row_keys(pts):
    return [row.tobytes() for row in np.ascontiguousarray(pts + 0.0)]


def _check_distinct(pts, name):
    seen = {}
    for i, key in enumerate(_row_keys(pts)):
        if key in seen:
            raise DuplicatePointError(f"{name} has duplicate points at rows {seen[key]} and {i}",
                                      indices=(seen[key], i))
        seen[key] = i


def union_points(x, y):
    """Deduplicated union X u Y ordered as X, then the points of Y not in X.

    Returns (Z, x_idx, y_idx): row positions of X and Y inside Z.  Point
    identity is exact coordinate equality.
    """
    x, y = as_points(x), as_points(y)
    if x.shape[1] != y.shape[1]:
        raise InputError("X and Y live in different dimensions")
    _check_distinct(x, "X")
    _check_distinct(y, "Y")
    where = {k: i for i, k in enumerate(_row_keys(x))}
    extra, y_idx = [], []
    for j, key in enumerate(_row_keys(y)):
        if key not in where:
            where[key] = x.shape[0] + len(extra)
            extra.append(j)
        y_idx.append(where[key])
    z = np.vstack([x, y[extra]]) if extra else x.copy()
    return z, np.arange(x.shape[0]), np.asarray(y_idx, dtype=np.intp)


def union_weighting(x, y, t, metric=DEFAULT_METRIC) -> WeightingVector:
    """Weighting of Z = X u Y (ordered as in ``union_points``) by inclusion-exclusion.

    w_Z = P_ZX([w_X;0] + rho_ZX 1) + P_ZY([w_Y;0] + rho_ZY 1)
          - P_Z(X^Y)([w_{X^Y};0] + rho_Z(X^Y) 1)
    When X and Y are disjoint the two-block gluing formula is used instead.
    """
    t = check_scale(t)
    z_pts, x_idx, y_idx = union_points(x, y)
    zeta = similarity_from_points(z_pts, t, metric).zeta
    n = z_pts.shape[0]
    inter = np.intersect1d(x_idx, y_idx)

    def sub_w(idx):
        return weighting_vector(zeta[np.ix_(idx, idx)]).w

    if inter.size == 0:
        return weights_from_disjoint_parts(zeta, BlockPartition(x_idx, y_idx), sub_w(x_idx), sub_w(y_idx))

    total = np.zeros(n)
    for idx, sign in ((x_idx, 1.0), (y_idx, 1.0), (inter, -1.0)):
        wz, _ = extend_weighting_subset(zeta, BlockPartition.from_head(idx, n), sub_w(idx))
        total += sign * wz.w
    return _result(zeta, total)


@dataclass(frozen=True)
class KernelCache:
    """Explicit inverse and weighting of a training similarity matrix.

    Immutable after construction; safe to share between threads.
    """

    inverse: np.ndarray
    w: np.ndarray

    @classmethod
    def from_similarity(cls, zeta) -> "KernelCache":
        inv = spd_inverse(_zeta_array(zeta))
        w = inv.sum(axis=1)
        inv.setflags(write=False)
        w.setflags(write=False)
        return cls(inv, w)

    @property
    def n(self) -> int:
        return self.w.shape[0]


def augment_one(cache: KernelCache, cross):
    """Weighting of Y u {x} from a cached zeta_Y^-1 in O(|Y|^2).

    ``cross`` holds exp(-t d(x, y_i)).  Returns (full weighting with x last,
    weight of x).
    """
    b = np.asarray(cross, dtype=np.float64)
    if b.shape != (cache.n,):
        raise InputError(f"cross similarities must have length {cache.n}, got shape {b.shape}")
    v = cache.inverse @ b
    s = 1.0 - b @ v
    if not s > AUGMENT_MIN_SCHUR:
        raise DegenerateAugmentationError(
            f"Schur scalar {s:.3e} is not positive; the new point duplicates a cached point",
            pivot_index=cache.n, pivot_value=float(s))
    wx = (1.0 - b @ cache.w) / s
    return np.append(cache.w - v * wx, wx), float(wx)


def augment_many(cache: KernelCache, cross) -> np.ndarray:
    """Weight of each query point when added alone to Y; ``cross`` is (m, |Y|)."""
    b = np.atleast_2d(np.asarray(cross, dtype=np.float64))
    if b.shape[1] != cache.n:
        raise InputError(f"cross similarities must have {cache.n} columns, got {b.shape[1]}")
    v = b @ cache.inverse
    s = 1.0 - np.einsum("ij,ij->i", b, v)
    bad = np.flatnonzero(~(s > AUGMENT_MIN_SCHUR))
    if bad.size:
        raise DegenerateAugmentationError(
            f"query rows {bad.tolist()} duplicate cached points (Schur scalar {s[bad[0]]:.3e})",
            pivot_index=cache.n, pivot_value=float(s[bad[0]]), indices=bad.tolist())
    return (1.0 - b @ cache.w) / s


def augment_point(cache: KernelCache, train, x, t, metric=DEFAULT_METRIC):
    """augment_one for a raw point x against the (already transformed) training set."""
    cross = np.exp(-t * cross_distances(np.atleast_2d(x), train, metric)[0])
    return augment_one(cache, cross)
