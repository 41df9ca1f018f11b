"""Barycentres (Fréchet means) of finitely supported measures.

Three routes are available:

* ``euclidean_closed_form``: the weighted arithmetic mean.
* ``tree_exact``: on each edge the Fréchet functional is a quadratic in the
  offset, so its minimiser is a clamped weighted mean; take the best edge.
* ``inductive_refined``: a warm start from the inductive (streaming geodesic)
  mean, then gradient line search along geodesics until the norm of
  ``sum_i w_i log_x(y_i)`` drops below ``tol``. In a CAT(0) space that norm
  bounds the distance from ``x`` to the true barycentre.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DomainError
from .geometry import Euclidean, MetricTree, Product, SpacePoint, dist
from .transport import FiniteMeasure, second_moment, w2_distance

METHODS = ("euclidean_closed_form", "inductive_refined", "tree_exact")
PERTURBATION = 1e-5
MAX_INDUCTIVE = 256


@dataclass(frozen=True)
class BarycentreResult:
    point: SpacePoint
    functional_value: float
    stationarity_residual: float
    iterations: int
    method: str

    def to_dict(self) -> dict:
        return {"point": self.point.coords.tolist(), "functional_value": self.functional_value,
                "residual": self.stationarity_residual, "iterations": self.iterations,
                "method": self.method}


def _frechet(space, x, Y, w):
    return float(w @ space.dist_to(x, Y) ** 2)


def _result(mu, coords, residual, iterations, method):
    p = mu.space.point(coords)
    return BarycentreResult(p, second_moment(mu, p), float(residual), iterations, method)


def barycentre(mu: FiniteMeasure, tol: float = 1e-8, *, method: str | None = None, seed: int = 0,
               max_iter: int = 1000, inductive_steps: int | None = None) -> BarycentreResult:
    """Minimiser of ``x -> sum_i w_i d(x, atom_i)^2``.

    ``method`` forces a route; by default Euclidean spaces use the closed
    form, trees the exact edge search and everything else the generic
    solver. ``seed`` drives the resampling of the inductive warm start.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    space = mu.space
    if method is None:
        if isinstance(space, Euclidean):
            method = "euclidean_closed_form"
        elif isinstance(space, MetricTree):
            method = "tree_exact"
        elif isinstance(space, Product) and not space.smooth:
            return _product_split(mu, tol, seed, max_iter, inductive_steps)
        else:
            method = "inductive_refined"
    if method == "euclidean_closed_form":
        if not isinstance(space, Euclidean):
            raise DomainError("closed form requires a Euclidean space")
        x = mu.weights @ mu.coords
        return _result(mu, x, np.linalg.norm(mu.weights @ (mu.coords - x)), 0, method)
    if method == "tree_exact":
        if not isinstance(space, MetricTree):
            raise DomainError("tree_exact requires a metric tree")
        return _tree_barycentre(mu)
    if method == "inductive_refined":
        if not space.smooth:
            raise DomainError("generic solver needs log/exp maps on every factor")
        return _inductive_refined(mu, tol, seed, max_iter, inductive_steps)
    raise DomainError(f"unknown barycentre method {method!r}")


def inductive_mean(mu: FiniteMeasure, steps: int, seed: int = 0) -> np.ndarray:
    """Streaming mean ``b_{k+1} = geodesic(b_k, y_{k+1}, 1/(k+1))`` over resampled atoms."""
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(mu), size=max(int(steps), 1), p=mu.weights)
    space, Y = mu.space, mu.coords
    b = Y[idx[0]]
    for k, i in enumerate(idx[1:], start=1):
        b = space.geodesic(b, Y[i], 1.0 / (k + 1))
    return b


def _inductive_refined(mu, tol, seed, max_iter, inductive_steps):
    space, Y, w = mu.space, mu.coords, mu.weights
    if len(mu) == 1:
        return _result(mu, Y[0], 0.0, 0, "inductive_refined")
    if inductive_steps is None:
        inductive_steps = min(50 * len(mu) * math.ceil(1 / math.sqrt(tol)), MAX_INDUCTIVE)
    x = inductive_mean(mu, inductive_steps, seed)
    fx = _frechet(space, x, Y, w)
    for it in range(1, max_iter + 1):
        g = w @ space.log(x, Y)
        res = space.tangent_norm(x, g)
        if res <= tol:
            return _result(mu, x, res, it, "inductive_refined")
        scale = _step_scales(space, x, Y, w)
        direction = scale * g
        slope = float(np.sum(scale * g * _metric_signs(space) * g))
        t = 1.0
        while True:
            cand = space.exp(x, t * direction)
            fc = _frechet(space, cand, Y, w)
            if fc <= fx - 1e-4 * t * 2 * slope or t < 1e-12:
                break
            if fc <= fx + 1e-14 * (1 + fx):
                # F is flat to roundoff here; judge the step by the gradient instead
                if space.tangent_norm(cand, w @ space.log(cand, Y)) < res:
                    break
            t *= 0.5
        x, fx = cand, fc
    g = w @ space.log(x, Y)
    best = _result(mu, x, space.tangent_norm(x, g), max_iter, "inductive_refined")
    raise ConvergenceError(f"residual {best.stationarity_residual:.3e} above tol {tol:.1e}", best)


def _step_scales(space, x, Y, w):
    """Per-coordinate step preconditioner for the gradient iteration.

    For a hyperbolic factor, ``1 / sum_i w_i d_i coth d_i`` inverts an upper
    bound on the Hessian of F/2 (curvature -1); flat factors take step 1.
    """
    if isinstance(space, Euclidean):
        return np.ones(space.ndim)
    if isinstance(space, Product):
        return np.concatenate([_step_scales(f, x[s], Y[:, s], w) for f, s in zip(space.factors, space.slices)])
    d = space.dist_to(x, Y)
    with np.errstate(invalid="ignore", divide="ignore"):
        dcoth = np.where(d > 1e-8, d / np.tanh(d), 1.0)
    return np.full(space.ndim, 1.0 / max(float(w @ dcoth), 1.0))


def _metric_signs(space):
    if isinstance(space, Product):
        return np.concatenate([_metric_signs(f) for f in space.factors])
    if isinstance(space, Euclidean):
        return np.ones(space.ndim)
    return np.array([-1.0, 1.0, 1.0])


def _tree_barycentre(mu: FiniteMeasure) -> BarycentreResult:
    space: MetricTree = mu.space
    sh = space.shape
    Y, w = mu.coords, mu.weights
    ey = np.rint(Y[:, 0]).astype(int)
    # distance from every vertex to every atom
    vcoords = np.stack([space.vertex_point(v).coords for v in sh.vertices])
    Dv = space.pairwise(vcoords, Y)
    best = None
    for e in range(len(sh.edges)):
        L = sh.length[e]
        du, dv = Dv[sh.u[e]], Dv[sh.v[e]]
        # atom position as a signed offset along the line through edge e
        c = np.where(du + L <= dv + 1e-12 * (1 + dv), -du, L + dv)
        c = np.where(ey == e, Y[:, 1], c)
        s = min(max(float(w @ c), 0.0), L)
        val = float(w @ (s - c) ** 2)
        if best is None or val < best[0]:
            best = (val, e, s)
    _, e, s = best
    x = space.canonical([e, s])
    return _result(mu, x, _tree_slope(space, x, Y, w), 1, "tree_exact")


def _tree_slope(space: MetricTree, x, Y, w, h: float = PERTURBATION) -> float:
    """Steepest-descent slope of F at ``x`` from forward geodesic perturbations."""
    sh = space.shape
    e, s = int(round(x[0])), x[1]
    L = sh.length[e]
    if 0.0 < s < L:
        moves = [[e, s - min(h, s)], [e, s + min(h, L - s)]]
    else:
        vert = sh.u[e] if s == 0.0 else sh.v[e]
        moves = []
        for f in range(len(sh.edges)):
            if sh.u[f] == vert:
                moves.append([f, min(h, sh.length[f])])
            elif sh.v[f] == vert:
                moves.append([f, sh.length[f] - min(h, sh.length[f])])
    f0 = _frechet(space, x, Y, w)
    slope = 0.0
    for m in moves:
        m = np.asarray(m, dtype=float)
        step = space.raw_dist(x, m)
        if step > 0:
            slope = max(slope, (f0 - _frechet(space, m, Y, w)) / step)
    return slope


def _product_split(mu, tol, seed, max_iter, inductive_steps):
    # F separates over l2 factors, so the barycentre is the tuple of factor barycentres
    space = mu.space
    parts = [barycentre(FiniteMeasure(f, mu.coords[:, s], mu.weights), tol, seed=seed,
                        max_iter=max_iter, inductive_steps=inductive_steps)
             for f, s in zip(space.factors, space.slices)]
    x = np.concatenate([p.point.coords for p in parts])
    residual = math.sqrt(sum(p.stationarity_residual ** 2 for p in parts))
    methods = {p.method for p in parts}
    method = next(m for m in ("inductive_refined", "tree_exact", "euclidean_closed_form") if m in methods)
    return _result(mu, x, residual, sum(p.iterations for p in parts), method)


def variance_gap(mu: FiniteMeasure, x: SpacePoint, bary: BarycentreResult) -> float:
    """``F_mu(x) - d(x, b(mu))^2``, which is nonnegative for the true barycentre."""
    if x.space != mu.space:
        raise DomainError("probe point outside the measure's space")
    return second_moment(mu, x) - dist(x, bary.point) ** 2


@dataclass(frozen=True)
class LipschitzCheck:
    lhs: float
    rhs: float
    holds: bool


def lipschitz_check(mu: FiniteMeasure, nu: FiniteMeasure, tol: float = 1e-8,
                    slack: float | None = None) -> LipschitzCheck:
    """Compare ``d(b(mu), b(nu))`` with ``W2(mu, nu)``.

    ``slack`` defaults to ``1e-6 * (1 + W2)``, well above the combined solver error.
    """
    if mu.space != nu.space:
        raise DomainError("measures live in different spaces")
    lhs = dist(barycentre(mu, tol).point, barycentre(nu, tol).point)
    rhs = w2_distance(mu, nu).distance
    if slack is None:
        slack = 1e-6 * (1 + rhs)
    return LipschitzCheck(lhs, rhs, lhs <= rhs + slack)
