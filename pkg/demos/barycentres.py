"""Barycentres in the four reference spaces, and the Wasserstein bound on how far they move.

Run: python demos/barycentres.py
"""
import numpy as np

from hadamard_lab import (Euclidean, FiniteMeasure, Hyperboloid2, MetricTree, Product, barycentre, dist,
                          lipschitz_check, tripod)

rng = np.random.default_rng(7)
spaces = {
    "plane": Euclidean(2),
    "hyperbolic plane": Hyperboloid2(),
    "tripod": MetricTree(tripod()),
    "plane x hyperbolic": Product([Euclidean(2), Hyperboloid2()]),
}

# Same weights, five random atoms per space.
w = rng.dirichlet(np.ones(5))
for name, space in spaces.items():
    mu = FiniteMeasure(space, space.random_coords(rng, 5), w)
    res = barycentre(mu)
    print(f"{name:>20}: b = {np.round(res.point.coords, 4)}  F = {res.functional_value:.4f}  "
          f"[{res.method}, {res.iterations} it, residual {res.stationarity_residual:.1e}]")

# Moving the atoms moves the barycentre by at most W2.
H = spaces["hyperbolic plane"]
X = H.random_coords(rng, 8)
for eps in (1.0, 0.1, 0.01):
    Y = H.canonical(X + np.c_[np.zeros(8), eps * rng.normal(size=(8, 2))])
    chk = lipschitz_check(FiniteMeasure(H, X), FiniteMeasure(H, Y))
    print(f"perturbation {eps:>5}: d(b(mu), b(nu)) = {chk.lhs:.5f} <= W2 = {chk.rhs:.5f}")

# A Dirac is its own barycentre.
p = H.point(H.from_polar(2.0, 1.0))
print("Dirac check:", dist(barycentre(FiniteMeasure.dirac(p)).point, p))
