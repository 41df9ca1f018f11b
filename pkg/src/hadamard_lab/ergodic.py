"""Empirical barycentres along orbit patches and the experiments built on them."""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .barycentre import BarycentreResult, barycentre
from .dynamics import FolnerSequence, System
from .errors import CapacityError, DomainError, PrecisionError
from .geometry import Euclidean, SpacePoint, dist
from .observables import Observable, PartitionObservable
from .transport import FiniteMeasure, coupling_from_arrays, w2_distance

MAX_PATCH = 1 << 22
MAX_QUADRATURE = 1 << 22


@dataclass(frozen=True)
class EmpiricalSpec:
    observable: Observable
    folner: FolnerSequence
    omega: object
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("n must be >= 1")
        if self.observable.system.group != self.folner.group:
            raise DomainError("observable's system and Følner sequence use different groups")


def orbit_values(spec: EmpiricalSpec) -> np.ndarray:
    """``f(T^g omega)`` for g in F_n, as raw target coordinates."""
    if spec.folner.size(spec.n) > MAX_PATCH:
        raise CapacityError(f"|F_{spec.n}| exceeds the patch cap {MAX_PATCH}")
    G = spec.folner(spec.n)
    return spec.observable.values(spec.observable.system.orbit(spec.omega, G))


def empirical_measure(spec: EmpiricalSpec) -> FiniteMeasure:
    """Uniform measure on the orbit patch, pushed forward by the observable."""
    return FiniteMeasure(spec.observable.target, orbit_values(spec))


def empirical_barycentre(spec: EmpiricalSpec, tol: float = 1e-8, seed: int = 0) -> BarycentreResult:
    return barycentre(empirical_measure(spec), tol, seed=seed)


# ---------------------------------------------------------------- references

def _quadrature_measure(obs: Observable, points, weights) -> FiniteMeasure:
    return FiniteMeasure(obs.target, obs.values(points), weights / weights.sum())


def _refine(evaluate, start: int, precision: float, max_points: int, dim: int):
    """Double the grid until two successive answers differ by less than ``precision``."""
    r = start
    prev = evaluate(r)
    while True:
        r *= 2
        if r ** dim > max_points:
            raise PrecisionError(f"quadrature did not settle to {precision:g} within {max_points} points")
        cur = evaluate(r)
        if cur[0](prev[1]) < precision:
            return cur[1], r
        prev = cur


def _start_resolution(system: System) -> tuple[int, int]:
    m = getattr(system, "m", 1)
    return (256, 1) if m == 1 else (32, m)


def pushforward_reference(obs: Observable, precision: float = 1e-6, omega=None,
                          tol: float = 1e-10) -> BarycentreResult:
    """Barycentre of the pushforward of P (conditioned on omega's component if given).

    Exact for finite systems and partition observables with known cell
    probabilities; otherwise a midpoint grid doubled until the barycentre
    moves by less than ``precision``.
    """
    system = obs.system
    if omega is None and not system.ergodic:
        raise DomainError("non-ergodic system: pass omega to pick an ergodic component")
    if isinstance(obs, PartitionObservable) and obs.cell_probs is not None and system.ergodic:
        keep = obs.cell_probs > 0
        return barycentre(FiniteMeasure(obs.target, obs.cell_values[keep], obs.cell_probs[keep]), tol)
    if system.exact_quadrature:
        pts, w = system.component(omega if omega is not None else 0)
        return barycentre(_quadrature_measure(obs, pts, w), tol)

    def evaluate(r):
        pts, w = system.component(omega, r) if omega is not None else system.quadrature(r)
        b = barycentre(_quadrature_measure(obs, pts, w), tol)
        return (lambda other: dist(b.point, other.point)), b

    start, dim = _start_resolution(system)
    return _refine(evaluate, start, precision, MAX_QUADRATURE, dim)[0]


def d2_distance(f: Observable, h: Observable, precision: float = 1e-4) -> float:
    """Root-mean-square distance between two observables on the same system."""
    if f.system is not h.system:
        raise DomainError("observables live on different systems")
    if f.target != h.target:
        raise DomainError("observables map into different spaces")
    system = f.system

    def value(pts, w):
        return float(np.sqrt(w @ _rowwise_sq(f, h, pts)))

    if system.exact_quadrature:
        return value(*system.quadrature(None))

    def evaluate(r):
        v = value(*system.quadrature(r))
        return (lambda other: abs(v - other)), v

    start, dim = _start_resolution(system)
    return _refine(evaluate, start, precision, MAX_QUADRATURE, dim)[0]


def _rowwise_sq(f: Observable, h: Observable, omegas) -> np.ndarray:
    """``d(f(omega), h(omega))^2`` per Omega point."""
    return f.target.paired(f.values(omegas), h.values(omegas)) ** 2


def finite_valued_approximation(f: Observable, target_d2: float, max_centers: int = 10_000,
                                precision: float = 1e-4, coarsen: bool = False) -> PartitionObservable:
    """Finite-valued h with ``d2_distance(f, h) < target_d2``.

    A greedy net of radius ``target_d2 / 2`` covers the image of f on a
    quadrature grid; cells are nearest-centre preimages. The radius is
    halved until the bound holds. With ``coarsen=True`` the radius is instead
    grown in steps of 1.1 for as long as the bound still holds, so d2 lands
    just under ``target_d2``.
    """
    if target_d2 <= 0:
        raise DomainError("target_d2 must be positive")
    if isinstance(f, PartitionObservable):
        return f
    system, space = f.system, f.target
    start, dim = _start_resolution(system)
    res = start * 8 if dim == 1 else start
    pts, qw = system.quadrature(res)
    image = np.unique(f.values(pts), axis=0)

    def build(radius):
        centers = _greedy_net(space, image, radius, max_centers)

        def cell_of(om):
            V = f.values(om)
            out = np.empty(len(V), dtype=np.int64)
            for i in range(0, len(V), 2048):
                out[i:i + 2048] = np.argmin(space.pairwise(V[i:i + 2048], centers), axis=1)
            return out

        h = PartitionObservable(system, space, cell_of, centers, None, "finite_approximation",
                                {"target_d2": float(target_d2), "radius": float(radius)})
        h.cell_probs = np.bincount(cell_of(pts), weights=qw, minlength=len(centers))
        return h, d2_distance(f, h, precision)

    radius = target_d2 / 2
    h, d = build(radius)
    while d >= target_d2:
        radius /= 2
        h, d = build(radius)
    while coarsen and len(h.cell_values) > 1:
        h2, d2 = build(radius * 1.1)
        if d2 >= target_d2:
            break
        h, radius = h2, radius * 1.1
    return h


def _greedy_net(space, image, radius, max_centers):
    covered = np.zeros(len(image), dtype=bool)
    centers = []
    for i in range(len(image)):
        if covered[i]:
            continue
        centers.append(image[i])
        if len(centers) > max_centers:
            raise CapacityError(f"net needs more than {max_centers} centres")
        covered |= space.dist_to(image[i], image) < radius
    return np.array(centers)


# ---------------------------------------------------------------- convergence

@dataclass(frozen=True)
class ConvergenceRecord:
    omega_id: int
    n: int
    barycentre: SpacePoint
    dist_to_reference: float
    wall_time: float


@dataclass
class ConvergenceResult:
    records: list[ConvergenceRecord]
    final_quarter_max: dict[int, float]
    tolerance: float
    passed: bool
    references: dict = field(default_factory=dict)

    @property
    def max_final_quarter_dist(self) -> float:
        return max(self.final_quarter_max.values())


def cell_seed(seed: int, omega_id: int, n: int) -> int:
    return int(np.random.SeedSequence([seed, omega_id, n]).generate_state(1)[0])


def convergence_experiment(obs: Observable, folner: FolnerSequence, *, seed: int = 0, omega_count: int = 20,
                           schedule=None, K: int = 14, tolerance: float = 0.01, precision: float = 1e-5,
                           threads: int = 1, omegas=None, tol: float = 1e-8) -> ConvergenceResult:
    """Track ``d(b(nu_{f,F_n}(omega)), fbar(omega))`` along an n-schedule.

    ``fbar(omega)`` is the barycentre of f's pushforward on omega's ergodic
    component. The pass criterion looks at the final quarter of the schedule.
    """
    system = obs.system
    if omegas is None:
        omegas = system.sample(seed, omega_count)
    schedule = list(schedule) if schedule is not None else [2 ** k for k in range(K + 1)]
    refs = {}
    for om in omegas:
        key = system.component_key(om)
        if key not in refs:
            refs[key] = pushforward_reference(obs, precision, None if system.ergodic else om)

    def run(item):
        i, om = item
        ref = refs[system.component_key(om)].point
        out = []
        for n in schedule:
            t0 = time.perf_counter()
            b = empirical_barycentre(EmpiricalSpec(obs, folner, om, n), tol, cell_seed(seed, i, n))
            out.append(ConvergenceRecord(i, n, b.point, dist(b.point, ref), time.perf_counter() - t0))
        return out

    items = list(enumerate(omegas))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(run, items))
    else:
        chunks = [run(it) for it in items]
    records = sorted((r for c in chunks for r in c), key=lambda r: (r.omega_id, r.n))
    tail = sorted(schedule)[-max(1, math.ceil(len(schedule) / 4)):]
    fq = {i: max(r.dist_to_reference for r in records if r.omega_id == i and r.n in tail)
          for i in range(len(omegas))}
    return ConvergenceResult(records, fq, tolerance, all(v < tolerance for v in fq.values()), refs)


# ---------------------------------------------------------------- maximal inequality

@dataclass
class MaximalEstimate:
    alphas: np.ndarray
    tail_probs: np.ndarray
    horizon: int
    l1_norm: float
    d2: float
    fitted_c: float
    sups: np.ndarray  # per omega, running sup over n <= N (shape omegas x N)
    scalar_alphas: np.ndarray
    scalar_tails: np.ndarray
    scalar_fitted_c: float
    audit_cells: int = 0
    lemma_violations: int = 0
    coupling_violations: int = 0

    def bound(self) -> np.ndarray:
        if self.d2 == 0:
            return np.zeros_like(self.alphas)
        return self.fitted_c * self.d2 ** 2 / self.alphas ** 2

    def to_dict(self) -> dict:
        return {"alphas": self.alphas.tolist(), "tail_probs": self.tail_probs.tolist(),
                "bound": self.bound().tolist(), "horizon": self.horizon, "l1_norm": self.l1_norm,
                "d2": self.d2, "fitted_c": self.fitted_c, "scalar_alphas": self.scalar_alphas.tolist(),
                "scalar_tails": self.scalar_tails.tolist(), "scalar_fitted_c": self.scalar_fitted_c,
                "audit_cells": self.audit_cells, "lemma_violations": self.lemma_violations,
                "coupling_violations": self.coupling_violations}


ALPHA_FACTORS = np.geomspace(0.25, 4.0, 8)


def _tails(values: np.ndarray, alphas: np.ndarray) -> np.ndarray:
    return np.array([np.mean(values > a) for a in alphas])


def _fit(tails, alphas, scale, power):
    if scale == 0:
        return 0.0
    return float(np.max(tails * alphas ** power) / scale)


def _is_interval(folner: FolnerSequence) -> bool:
    return folner.box is not None and folner.group.dim == 1 and folner.to_dict().get("family") == "interval"


def maximal_experiment(f: Observable, h: Observable, folner: FolnerSequence, *, seed: int = 0,
                       omega_count: int = 500, horizon: int = 1024, alphas=None, scalar_alphas=None,
                       audit_omegas: int = 5, audit_max_n: int = 256, precision: float = 1e-4,
                       omegas=None, tol: float = 1e-8) -> MaximalEstimate:
    """Empirical tails of ``sup_{n<=N} d(b(nu_{f,F_n}), b(nu_{h,F_n}))`` over sampled omega.

    Also fits the constant for the scalar maximal function of
    ``F = d(f, h)^2`` and audits, on a subset of cells, that the barycentre
    distance is below W2 and W2^2 below the cost of the orbit coupling.
    """
    if f.system is not h.system or f.target != h.target:
        raise DomainError("f and h must share system and target")
    system, space = f.system, f.target
    if omegas is None:
        omegas = system.sample(seed, omega_count)
    d2 = d2_distance(f, h, precision)
    l1 = d2 ** 2
    fast = isinstance(space, Euclidean) and _is_interval(folner)
    sups = np.zeros((len(omegas), horizon))
    msup = np.zeros(len(omegas))
    counts = np.arange(1, horizon + 1)
    for i, om in enumerate(omegas):
        if fast:
            G = folner(horizon)
            orb = system.orbit(om, G)
            X, Y = f.values(orb), h.values(orb)
            bf = np.cumsum(X, axis=0) / counts[:, None]
            bh = np.cumsum(Y, axis=0) / counts[:, None]
            d = np.linalg.norm(bf - bh, axis=1)
            F = np.sum((X - Y) ** 2, axis=1)
            MF = np.cumsum(F) / counts
        else:
            d = np.empty(horizon)
            MF = np.empty(horizon)
            for n in range(1, horizon + 1):
                orb = system.orbit(om, folner(n))
                bf = barycentre(FiniteMeasure(space, f.values(orb)), tol).point
                bh = barycentre(FiniteMeasure(space, h.values(orb)), tol).point
                d[n - 1] = dist(bf, bh)
                MF[n - 1] = np.mean(_rowwise_sq(f, h, orb))
        sups[i] = np.maximum.accumulate(d)
        msup[i] = MF.max()
    alphas = np.asarray(alphas, dtype=float) if alphas is not None else (
        ALPHA_FACTORS * d2 if d2 > 0 else ALPHA_FACTORS.copy())
    scalar_alphas = np.asarray(scalar_alphas, dtype=float) if scalar_alphas is not None else (
        ALPHA_FACTORS * l1 if l1 > 0 else ALPHA_FACTORS.copy())
    tails = _tails(sups[:, -1], alphas)
    stails = _tails(msup, scalar_alphas)
    est = MaximalEstimate(alphas, tails, horizon, l1, d2, _fit(tails, alphas, l1, 2), sups,
                          scalar_alphas, stails, _fit(stails, scalar_alphas, l1, 1))
    _audit(est, f, h, folner, omegas[:audit_omegas], min(audit_max_n, horizon), tol)
    return est


def _audit(est, f, h, folner, omegas, max_n, tol):
    space, system = f.target, f.system
    ns = [2 ** k for k in range(int(math.log2(max_n)) + 1)]
    for om in omegas:
        for n in ns:
            orb = system.orbit(om, folner(n))
            X, Y = f.values(orb), h.values(orb)
            w = np.full(len(X), 1.0 / len(X))
            nu_f, nu_h = FiniteMeasure(space, X, w), FiniteMeasure(space, Y, w)
            lhs = dist(barycentre(nu_f, tol).point, barycentre(nu_h, tol).point)
            w2 = w2_distance(nu_f, nu_h).distance
            cost = coupling_from_arrays(space, X, Y, w).cost()
            est.audit_cells += 1
            est.lemma_violations += lhs > w2 + 1e-6 * (1 + w2)
            est.coupling_violations += w2 ** 2 > cost + 1e-9
