"""Slow, independent reference computations used to check the fast paths.

None of these share code with the solvers they check beyond the distance
function of the space.
"""
from __future__ import annotations

import itertools

import numpy as np

from .geometry import Hyperboloid2, MetricTree, Space
from .transport import FiniteMeasure


def permutation_w2(space: Space, X: np.ndarray, Y: np.ndarray) -> float:
    """W2 between two equal-weight k-atom measures by trying all k! matchings.

    Optimal couplings of uniform measures include a permutation matrix
    (extreme points of the Birkhoff polytope).
    """
    k = len(X)
    if len(Y) != k:
        raise ValueError("permutation oracle needs equal support sizes")
    C = space.pairwise(X, Y) ** 2
    rows = np.arange(k)
    best = min(C[rows, list(p)].mean() for p in itertools.permutations(range(k)))
    return float(np.sqrt(best))


def _frechet(space, X, Y, w, chunk=1 << 22):
    X = np.atleast_2d(X)
    step = max(1, chunk // len(Y))
    return np.concatenate([space.pairwise(X[i:i + step], Y) ** 2 @ w for i in range(0, len(X), step)])


def klein_to_hyperboloid(k: np.ndarray) -> np.ndarray:
    k = np.atleast_2d(k)
    s = 1.0 / np.sqrt(1.0 - np.sum(k ** 2, axis=1))
    return np.stack([s, s * k[:, 0], s * k[:, 1]], axis=1)


def hyperbolic_grid_barycentre(mu: FiniteMeasure, grid: int = 201, tol: float = 1e-11) -> np.ndarray:
    """Dense grid over the Klein-model bounding box of the atoms, then compass search.

    Geodesic convex hulls are Euclidean convex hulls in the Klein model and
    the barycentre lies in the convex hull of the support, so the box
    contains it.
    """
    H: Hyperboloid2 = mu.space
    Y, w = mu.coords, mu.weights
    K = Y[:, 1:] / Y[:, :1]
    lo, hi = K.min(axis=0), K.max(axis=0)
    gx, gy = np.meshgrid(np.linspace(lo[0], hi[0], grid), np.linspace(lo[1], hi[1], grid))
    cand = np.stack([gx.ravel(), gy.ravel()], axis=1)
    cand = cand[np.sum(cand ** 2, axis=1) < 1]
    vals = _frechet(H, klein_to_hyperboloid(cand), Y, w)
    k = cand[np.argmin(vals)]
    f = vals.min()
    step = max(float(np.max(hi - lo)) / (grid - 1), 1e-3)
    dirs = np.array([[1, 0], [-1, 0], [0, 1], [0, -1], [1, 1], [-1, -1], [1, -1], [-1, 1]], dtype=float)
    while step > tol:
        trial = k + step * dirs
        trial = trial[np.sum(trial ** 2, axis=1) < 1]
        tv = _frechet(H, klein_to_hyperboloid(trial), Y, w)
        if tv.min() < f:
            k, f = trial[np.argmin(tv)], tv.min()
        else:
            step /= 2
    return klein_to_hyperboloid(k)[0]


def tree_grid_barycentre(mu: FiniteMeasure, grid: int = 1001, tol: float = 1e-12) -> np.ndarray:
    """Grid over every edge, then golden-section search on the best edge."""
    T: MetricTree = mu.space
    Y, w = mu.coords, mu.weights
    best = None
    for e, L in enumerate(T.shape.length):
        s = np.linspace(0.0, L, grid)
        pts = np.stack([np.full(grid, float(e)), s], axis=1)
        vals = _frechet(T, pts, Y, w)
        i = int(np.argmin(vals))
        if best is None or vals[i] < best[0]:
            best = (vals[i], e, max(s[i] - L / (grid - 1), 0.0), min(s[i] + L / (grid - 1), L))
    _, e, a, b = best

    def F(x):
        return float(_frechet(T, np.array([[e, x]], dtype=float), Y, w)[0])

    g = (np.sqrt(5) - 1) / 2
    c, d = b - g * (b - a), a + g * (b - a)
    while b - a > tol:
        if F(c) < F(d):
            b, d = d, c
            c = b - g * (b - a)
        else:
            a, c = c, d
            d = a + g * (b - a)
    return T.canonical([e, (a + b) / 2])
