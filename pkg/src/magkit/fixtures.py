"""Seeded synthetic point sets used by tests, benchmarks and the CLI demos."""

import numpy as np


def interval_grid(n, length=6.0):
    return np.linspace(0.0, length, n).reshape(-1, 1)


def square_grid(side, length=1.0):
    g = np.linspace(0.0, length, side)
    xx, yy = np.meshgrid(g, g, indexing="ij")
    pts = np.c_[xx.ravel(), yy.ravel()]
    ring = (xx == 0) | (xx == length) | (yy == 0) | (yy == length)
    return pts, ring.ravel()


def moons(n, noise=0.05, seed=0):
    """Two interleaved half circles; returns (points, labels in {0, 1})."""
    rng = np.random.default_rng(seed)
    n0 = n // 2
    a = np.pi * rng.random(n0)
    b = np.pi * rng.random(n - n0)
    upper = np.c_[np.cos(a), np.sin(a)]
    lower = np.c_[1.0 - np.cos(b), 0.5 - np.sin(b)]
    pts = np.vstack([upper, lower]) + rng.normal(0.0, noise, (n, 2))
    return pts, np.r_[np.zeros(n0, int), np.ones(n - n0, int)]


def blobs(n, centers=((-3.0, 0.0), (3.0, 0.0)), scale=0.6, seed=0):
    """Isotropic Gaussian blobs, points split evenly; returns (points, labels)."""
    rng = np.random.default_rng(seed)
    centers = np.asarray(centers, dtype=float)
    labels = np.arange(n) % len(centers)
    pts = centers[labels] + rng.normal(0.0, scale, (n, centers.shape[1]))
    return pts, labels


def circles(n, factor=0.4, noise=0.05, seed=0):
    """Concentric circles (inner label 1); returns (points, labels)."""
    rng = np.random.default_rng(seed)
    n_out = n // 2
    a = 2 * np.pi * rng.random(n)
    r = np.where(np.arange(n) < n_out, 1.0, factor)
    pts = np.c_[r * np.cos(a), r * np.sin(a)] + rng.normal(0.0, noise, (n, 2))
    return pts, (np.arange(n) >= n_out).astype(int)


def ring_and_core(n_core=150, n_ring=60, core_radius=1.0, ring_radius=2.5, seed=0):
    """Uniform disk of points surrounded by a thin ring; returns (points, is_ring)."""
    rng = np.random.default_rng(seed)
    rad = core_radius * np.sqrt(rng.random(n_core))
    a = 2 * np.pi * rng.random(n_core)
    core = np.c_[rad * np.cos(a), rad * np.sin(a)]
    b = 2 * np.pi * rng.random(n_ring)
    ring = ring_radius * np.c_[np.cos(b), np.sin(b)]
    return np.vstack([core, ring]), np.r_[np.zeros(n_core, bool), np.ones(n_ring, bool)]


def gaussian_with_outliers(n_in=500, n_out=25, box=8.0, min_radius=5.0, seed=0):
    """Standard 2-D Gaussian inliers and outliers uniform on a box minus a disk."""
    rng = np.random.default_rng(seed)
    inliers = rng.normal(size=(n_in, 2))
    out = np.empty((0, 2))
    while out.shape[0] < n_out:
        cand = rng.uniform(-box, box, (4 * n_out, 2))
        out = np.vstack([out, cand[np.linalg.norm(cand, axis=1) > min_radius]])
    return inliers, out[:n_out]
