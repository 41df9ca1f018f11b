"""Randomised property sweeps over the four reference spaces.

Each check returns a :class:`CheckResult`; ``selftest`` runs them all with
reduced counts, the acceptance suite with the full ones.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import oracles
from .barycentre import barycentre, lipschitz_check, variance_gap
from .geometry import (Euclidean, Hyperboloid2, MetricTree, Product, Space, cn_inequality_residual,
                       dist, geodesic_point, minkowski, tripod)
from .transport import FiniteMeasure, tv_distance, tv_to_w2_bound_check, w2_distance


@dataclass
class CheckResult:
    name: str
    passed: bool
    worst: float
    cases: int

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}  (worst {self.worst:.3g}, {self.cases} cases)"


def reference_spaces() -> dict[str, Space]:
    return {
        "euclidean3": Euclidean(3),
        "hyperboloid2": Hyperboloid2(),
        "tripod": MetricTree(tripod()),
        "product": Product([Euclidean(2), Hyperboloid2()]),
    }


def random_measure(space: Space, rng: np.random.Generator, max_atoms: int = 20) -> FiniteMeasure:
    k = int(rng.integers(1, max_atoms + 1))
    return FiniteMeasure(space, space.random_coords(rng, k), rng.dirichlet(np.ones(k)))


def _worst(name, values, limit, cases, larger_is_worse=True):
    values = np.asarray(values, dtype=float)
    worst = float(values.max() if larger_is_worse else values.min())
    ok = worst <= limit if larger_is_worse else worst >= limit
    return CheckResult(name, bool(ok), worst, cases)


# ---------------------------------------------------------------- geometry

def cn_check(space: Space, count: int = 1000, seed: int = 0, limit: float = 1e-9) -> CheckResult:
    rng = np.random.default_rng(seed)
    P = space.random_points(rng, 3 * count)
    res = [cn_inequality_residual(*P[3 * i:3 * i + 3]) for i in range(count)]
    return _worst(f"CN inequality residual <= {limit:g} [{space.key()[0]}]", res, limit, count)


def metric_check(space: Space, count: int = 1000, seed: int = 0, limit: float = 1e-9) -> CheckResult:
    """Symmetry, identity, triangle inequality and geodesic distance consistency."""
    rng = np.random.default_rng(seed)
    errs = []
    for _ in range(count):
        a, b, c = space.random_points(rng, 3)
        t = float(rng.random())
        dab = dist(a, b)
        g = geodesic_point(a, b, t)
        errs.append(max(
            abs(dab - dist(b, a)),
            dist(a, a),
            dab - dist(a, c) - dist(c, b),
            abs(dist(a, g) - t * dab),
            abs(dist(g, b) - (1 - t) * dab),
        ))
    return _worst(f"metric and geodesic consistency <= {limit:g} [{space.key()[0]}]", errs, limit, count)


def sheet_drift_check(steps: int = 100, seed: int = 0, limit: float = 1e-9) -> CheckResult:
    """Chained geodesic steps on the hyperboloid stay on the upper sheet."""
    H = Hyperboloid2()
    rng = np.random.default_rng(seed)
    p = H.point([1.0, 0.0, 0.0])
    drift = []
    for _ in range(steps):
        q = H.random_points(rng, 1)[0]
        p = geodesic_point(p, q, float(rng.random()))
        drift.append(abs(-minkowski(p.coords, p.coords) - 1.0))
    return _worst(f"hyperboloid sheet drift over {steps} steps <= {limit:g}", drift, limit, steps)


# ---------------------------------------------------------------- barycentres

def euclidean_oracle_check(count: int = 200, seed: int = 0, limit: float = 1e-6) -> CheckResult:
    rng = np.random.default_rng(seed)
    errs = []
    for _ in range(count):
        mu = random_measure(Euclidean(int(rng.integers(1, 4))), rng)
        exact = barycentre(mu).point
        generic = barycentre(mu, method="inductive_refined", seed=int(rng.integers(1 << 31))).point
        errs.append(dist(exact, generic))
    return _worst(f"generic solver vs closed form <= {limit:g}", errs, limit, count)


def grid_oracle_check(space: Space, count: int = 50, seed: int = 0, limit: float = 2e-3) -> CheckResult:
    rng = np.random.default_rng(seed)
    if isinstance(space, Hyperboloid2):
        oracle = oracles.hyperbolic_grid_barycentre
    elif isinstance(space, MetricTree):
        oracle = oracles.tree_grid_barycentre
    else:
        raise TypeError("grid oracle exists for hyperboloid2 and metric trees only")
    errs = []
    for _ in range(count):
        mu = random_measure(space, rng)
        errs.append(dist(barycentre(mu).point, space.point(oracle(mu))))
    return _worst(f"barycentre vs grid oracle <= {limit:g} [{space.key()[0]}]", errs, limit, count)


def lipschitz_sweep(space: Space, count: int = 500, seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    checks = [lipschitz_check(random_measure(space, rng), random_measure(space, rng)) for _ in range(count)]
    return CheckResult(f"barycentre map 1-Lipschitz for W2 [{space.key()[0]}]", all(c.holds for c in checks),
                       max(c.lhs - c.rhs for c in checks), count)


def variance_sweep(space: Space, count: int = 500, seed: int = 0, limit: float = -1e-8) -> CheckResult:
    rng = np.random.default_rng(seed)
    gaps = []
    for _ in range(count):
        mu = random_measure(space, rng)
        probe = space.random_points(rng, 1)[0]
        gaps.append(variance_gap(mu, probe, barycentre(mu)))
    return _worst(f"variance gap >= {limit:g} [{space.key()[0]}]", gaps, limit, count, larger_is_worse=False)


# ---------------------------------------------------------------- transport

def w2_oracle_check(space: Space, count: int = 200, seed: int = 0, limit: float = 1e-9) -> CheckResult:
    rng = np.random.default_rng(seed)
    errs = []
    for _ in range(count):
        k = int(rng.integers(1, 7))
        X, Y = space.random_coords(rng, k), space.random_coords(rng, k)
        lp = w2_distance(FiniteMeasure(space, X), FiniteMeasure(space, Y)).distance
        errs.append(abs(lp - oracles.permutation_w2(space, space.canonical(X), space.canonical(Y))))
    return _worst(f"W2 LP vs permutation oracle <= {limit:g} [{space.key()[0]}]", errs, limit, count)


def w2_metric_check(space: Space, count: int = 200, seed: int = 0, limit: float = 1e-9) -> CheckResult:
    rng = np.random.default_rng(seed)
    errs = []
    for _ in range(count):
        mu, nu, rho = (random_measure(space, rng, 8) for _ in range(3))
        d_mn = w2_distance(mu, nu).distance
        errs.append(max(
            w2_distance(mu, mu).distance,
            abs(d_mn - w2_distance(nu, mu).distance),
            d_mn - w2_distance(mu, rho).distance - w2_distance(rho, nu).distance,
            0.0 if mu == nu or d_mn > 0 else np.inf,
        ))
    return _worst(f"W2 metric axioms <= {limit:g} [{space.key()[0]}]", errs, limit, count)


def tv_bound_sweep(space: Space, count: int = 1000, seed: int = 0, support: int = 10) -> CheckResult:
    rng = np.random.default_rng(seed)
    checks = []
    for _ in range(count):
        S = space.random_coords(rng, support)
        mu = FiniteMeasure(space, S, rng.dirichlet(np.ones(support)))
        nu = FiniteMeasure(space, S, rng.dirichlet(np.ones(support)))
        checks.append(tv_to_w2_bound_check(mu, nu))
    return CheckResult(f"W2 <= sqrt(TV) diam on common supports [{space.key()[0]}]", all(c.holds for c in checks),
                       max(c.w2 - c.bound for c in checks), count)


def tv_sup_check(count: int = 50, seed: int = 0, limit: float = 1e-12) -> CheckResult:
    """TV equals the largest set discrepancy, enumerated over all subsets."""
    space = Euclidean(1)
    rng = np.random.default_rng(seed)
    errs = []
    for _ in range(count):
        k = int(rng.integers(1, 8))
        S = np.arange(k, dtype=float)[:, None]
        a, b = rng.dirichlet(np.ones(k)), rng.dirichlet(np.ones(k))
        best = max(abs(a[list(A)].sum() - b[list(A)].sum())
                   for r in range(k + 1) for A in itertools.combinations(range(k), r))
        errs.append(abs(tv_distance(FiniteMeasure(space, S, a), FiniteMeasure(space, S, b)) - best))
    return _worst(f"TV equals sup over sets <= {limit:g}", errs, limit, count)


# ---------------------------------------------------------------- suite

def run_suite(scale: float = 1.0, seed: int = 0) -> list[CheckResult]:
    """All property checks; ``scale`` multiplies every case count."""
    def n(c):
        return max(1, int(round(c * scale)))

    spaces = reference_spaces()
    out = [sheet_drift_check(seed=seed), euclidean_oracle_check(n(200), seed), tv_sup_check(n(50), seed)]
    for space in spaces.values():
        out += [cn_check(space, n(1000), seed), metric_check(space, n(1000), seed)]
    out += [grid_oracle_check(spaces["hyperboloid2"], n(50), seed),
            grid_oracle_check(spaces["tripod"], n(50), seed)]
    for space in spaces.values():
        out += [lipschitz_sweep(space, n(500), seed), variance_sweep(space, n(500), seed),
                w2_oracle_check(space, n(200), seed), w2_metric_check(space, n(200), seed),
                tv_bound_sweep(space, n(1000), seed)]
    return out
