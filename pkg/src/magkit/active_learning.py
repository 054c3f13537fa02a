"""Pool-based active learning with a weighting-vector query strategy.

Each round the pool is split by the current classifier's predicted label; the
weighting vector of every predicted class is computed and, restricted to the
unlabeled points, the entries of smallest and largest modulus are queried (an
interior point and a boundary point per class).  The baseline queries the
unlabeled points with the smallest decision margin.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from .errors import InputError, InsufficientDataError, NoQueryError, SingularMatrixError
from .metric_core import Metric, Standardizer, cross_distances, similarity_from_points
from .weighting import weighting_vector

KERNEL_GAMMA = 0.1
RIDGE = 1e-8
QUERY_T = 1.0
QUERY_METRIC = Metric.L1
TEST_FRACTION = 0.33


def laplacian_kernel(a, b, gamma=KERNEL_GAMMA) -> np.ndarray:
    """K(x, y) = exp(-gamma ||x - y||_1)."""
    return np.exp(-gamma * cross_distances(a, b, Metric.L1))


@dataclass(frozen=True)
class LssvmClassifier:
    """Binary least-squares SVM, f(x) = K(x, L)^T w - w0, labels in {-1, +1}."""

    support: np.ndarray
    weights: np.ndarray
    bias: float
    kernel_gamma: float = KERNEL_GAMMA
    ridge: float = RIDGE
    residual: float = 0.0

    def decision_function(self, x) -> np.ndarray:
        return laplacian_kernel(np.atleast_2d(x), self.support, self.kernel_gamma) @ self.weights - self.bias

    def predict(self, x) -> np.ndarray:
        return np.where(self.decision_function(x) >= 0, 1, -1)


def lssvm_fit(points, y, gamma=KERNEL_GAMMA, ridge=RIDGE) -> LssvmClassifier:
    """Solve [[K + ridge I, -1], [1^T, 0]] [w; w0] = [y; 0]."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    n = pts.shape[0]
    if n < 2 or y.size != n:
        raise InsufficientDataError("LS-SVM needs at least 2 labeled points with one label each")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise InputError("LS-SVM labels must be -1 or +1")
    if np.unique(y).size < 2:
        raise InputError("LS-SVM needs both classes among the labeled points")
    if ridge < 0:
        raise InputError("ridge must be non-negative")

    a = np.zeros((n + 1, n + 1))
    a[:n, :n] = laplacian_kernel(pts, pts, gamma) + ridge * np.eye(n)
    a[:n, n] = -1.0
    a[n, :n] = 1.0
    rhs = np.r_[y, 0.0]
    with warnings.catch_warnings():
        # singularity is detected from the pivots below
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(a, check_finite=False)
    d = np.abs(np.diag(lu))
    if d.min() <= 1e2 * np.finfo(float).eps * d.max():
        raise SingularMatrixError(
            f"LS-SVM system is singular (ridge={ridge:g}); duplicate points? retry with ridge > 0",
            pivot_index=int(np.argmin(d)), pivot_value=float(d.min()))
    sol = lu_solve((lu, piv), rhs, check_finite=False)
    residual = float(np.max(np.abs(a @ sol - rhs)))
    pts = pts.copy()
    pts.setflags(write=False)
    return LssvmClassifier(pts, sol[:n], float(sol[n]), gamma, ridge, residual)


@dataclass(frozen=True)
class Classifier:
    """LS-SVM over arbitrary labels: one machine for two classes, one-vs-rest otherwise."""

    classes: np.ndarray
    machines: tuple

    def scores(self, x) -> np.ndarray:
        return np.column_stack([m.decision_function(x) for m in self.machines])

    def predict(self, x) -> np.ndarray:
        s = self.scores(x)
        if len(self.machines) == 1:
            return self.classes[(s[:, 0] >= 0).astype(int)]
        return self.classes[np.argmax(s, axis=1)]

    def margin(self, x) -> np.ndarray:
        """|f(x)| for two classes; gap between the two best one-vs-rest scores otherwise."""
        s = self.scores(x)
        if s.shape[1] == 1:
            return np.abs(s[:, 0])
        top = np.sort(s, axis=1)
        return top[:, -1] - top[:, -2]


def train_classifier(points, labels, gamma=KERNEL_GAMMA, ridge=RIDGE) -> Classifier:
    labels = np.asarray(labels)
    classes = np.unique(labels)
    if classes.size < 2:
        raise InputError("need at least two classes among the labeled points")
    if classes.size == 2:
        machines = (lssvm_fit(points, np.where(labels == classes[1], 1, -1), gamma, ridge),)
    else:
        machines = tuple(lssvm_fit(points, np.where(labels == c, 1, -1), gamma, ridge) for c in classes)
    return Classifier(classes, machines)


@dataclass
class ALState:
    """Labeled / unlabeled split of the pool plus the learning curve so far.

    ``labeled`` keeps the order in which labels were granted.
    """

    pool_size: int
    labeled: list
    curve: list = field(default_factory=list)

    @property
    def unlabeled(self) -> np.ndarray:
        mask = np.ones(self.pool_size, dtype=bool)
        mask[self.labeled] = False
        return np.flatnonzero(mask)


def query_weighting(pool, state: ALState, clf: Classifier, t=QUERY_T, metric=QUERY_METRIC,
                    per_class: int = 2, max_queries: int | None = None) -> list:
    """argmin |w| and argmax |w| over the unlabeled members of each predicted class."""
    pool = np.asarray(pool, dtype=np.float64)
    unl = np.zeros(state.pool_size, dtype=bool)
    unl[state.unlabeled] = True
    if not unl.any():
        raise NoQueryError("no unlabeled points left")
    pred = clf.predict(pool)
    picked = []
    for c in clf.classes:
        members = np.flatnonzero(pred == c)
        cand = unl[members]
        if not cand.any():
            continue
        w = np.abs(weighting_vector(similarity_from_points(pool[members], t, metric)).w)
        local = np.flatnonzero(cand)
        order = [local[np.argmin(w[local])], local[np.argmax(w[local])]][:per_class]
        for i in order:
            idx = int(members[i])
            if idx not in picked:
                picked.append(idx)
    if not picked:
        raise NoQueryError("no predicted class has unlabeled members")
    return picked if max_queries is None else picked[:max_queries]


def query_uncertainty(pool, state: ALState, clf: Classifier, n_queries: int = 4) -> list:
    """The unlabeled points with the smallest margin, ties by pool index."""
    unl = state.unlabeled
    if unl.size == 0:
        raise NoQueryError("no unlabeled points left")
    m = clf.margin(np.asarray(pool, dtype=np.float64)[unl])
    order = np.argsort(m, kind="stable")[:n_queries]
    return [int(i) for i in unl[order]]


STRATEGIES = ("weighting", "uncertainty")


@dataclass
class ALRun:
    state: ALState
    classifier: Classifier
    pool_index: np.ndarray
    test_index: np.ndarray
    standardizer: Standardizer

    @property
    def curve(self) -> list:
        return self.state.curve


def split_pool(n: int, seed=0, test_fraction=TEST_FRACTION):
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    n_test = int(round(test_fraction * n))
    return np.sort(order[n_test:]), np.sort(order[:n_test])


def run_al(points, labels, strategy: str = "weighting", budget: int = 40, seed=0, t=QUERY_T,
           gamma=KERNEL_GAMMA, ridge=RIDGE, test_fraction=TEST_FRACTION,
           queries_per_iteration: int | None = None, metric=QUERY_METRIC) -> ALRun:
    """Simulate pool-based active learning with a label oracle.

    The data is split into a training pool and a test set, standardized on the
    pool, seeded with one random labeled point per class, then queried and
    refit until ``budget`` labels are spent or the pool is exhausted.  The curve
    records (labels spent, test accuracy) after every fit.
    """
    if strategy not in STRATEGIES:
        raise InputError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    x = np.asarray(points, dtype=np.float64)
    y = np.asarray(labels)
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise InputError("points must be n x d with one label per row")
    pool_idx, test_idx = split_pool(x.shape[0], seed, test_fraction)
    std = Standardizer.fit(x[pool_idx])
    pool, pool_y = std.apply(x[pool_idx]), y[pool_idx]
    test, test_y = std.apply(x[test_idx]), y[test_idx]
    classes = np.unique(pool_y)
    if classes.size < 2:
        raise InputError("the training pool must contain at least two classes")
    if budget < classes.size:
        raise InputError(f"budget {budget} is below the {classes.size} initial labels")
    budget = min(budget, pool.shape[0])
    per_iter = queries_per_iteration or 2 * classes.size

    rng = np.random.default_rng([seed, 1])
    labeled = [int(rng.choice(np.flatnonzero(pool_y == c))) for c in classes]
    state = ALState(pool.shape[0], labeled)

    def refit():
        clf = train_classifier(pool[state.labeled], pool_y[state.labeled], gamma, ridge)
        acc = float(np.mean(clf.predict(test) == test_y)) if test.shape[0] else float("nan")
        state.curve.append((len(state.labeled), acc))
        return clf

    clf = refit()
    while len(state.labeled) < budget and state.unlabeled.size:
        room = min(per_iter, budget - len(state.labeled))
        if strategy == "weighting":
            q = query_weighting(pool, state, clf, t, metric, max_queries=room)
        else:
            q = query_uncertainty(pool, state, clf, room)
        state.labeled.extend(q)
        clf = refit()
    return ALRun(state, clf, pool_idx, test_idx, std)


@dataclass(frozen=True)
class CurveSummary:
    iteration: np.ndarray
    labels_mean: np.ndarray
    acc_mean: np.ndarray
    acc_std: np.ndarray


def run_experiment(points, labels, strategy="weighting", budget=40, seeds=range(10), **kw) -> CurveSummary:
    """Mean and population stdev of the accuracy per iteration over seeds.

    Shorter curves are padded with their final value.
    """
    curves = [run_al(points, labels, strategy, budget, s, **kw).curve for s in seeds]
    if not curves:
        raise InputError("no seeds given")
    length = max(len(c) for c in curves)
    spent = np.array([[c[min(i, len(c) - 1)][0] for i in range(length)] for c in curves], float)
    acc = np.array([[c[min(i, len(c) - 1)][1] for i in range(length)] for c in curves], float)
    return CurveSummary(np.arange(length), spent.mean(0), acc.mean(0), acc.std(0))
