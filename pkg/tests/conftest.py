import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def brute_distances(pts, p):
    """Double loop over pairs; p in {1, 2, inf}."""
    n = len(pts)
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            diff = [abs(a - b) for a, b in zip(pts[i], pts[j])]
            if p == 1:
                d[i, j] = sum(diff)
            elif p == 2:
                d[i, j] = sum(x * x for x in diff) ** 0.5
            else:
                d[i, j] = max(diff)
    return d


def direct_weights(zeta):
    """Independent oracle: explicit inverse times ones."""
    return np.linalg.inv(zeta) @ np.ones(zeta.shape[0])
