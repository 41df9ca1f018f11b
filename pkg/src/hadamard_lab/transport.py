"""Finitely supported probability measures and Wasserstein-2 transport."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .errors import CapacityError, DomainError
from .geometry import Space, SpacePoint, space_from_dict

MAX_SUPPORT = 512
WEIGHT_TOL = 1e-9


def _merge(space: Space, coords: np.ndarray, weights: np.ndarray):
    coords = space.canonical(np.asarray(coords, dtype=float).reshape(-1, space.ndim))
    uniq, inverse = np.unique(coords, axis=0, return_inverse=True)
    merged = np.bincount(inverse.ravel(), weights=weights, minlength=len(uniq))
    return uniq, merged, inverse.ravel()


class FiniteMeasure:
    """Probability measure with finitely many atoms.

    Atoms are canonicalised and duplicates merged on construction, so two
    measures are equal exactly when their supports and weights agree.
    """

    def __init__(self, space: Space, atoms, weights=None):
        self.space = space
        if len(atoms) and isinstance(atoms[0], SpacePoint):
            if any(a.space != space for a in atoms):
                raise DomainError("atom outside the measure's space")
            atoms = np.stack([a.coords for a in atoms])
        atoms = np.asarray(atoms, dtype=float).reshape(-1, space.ndim)
        if len(atoms) == 0:
            raise DomainError("a probability measure needs at least one atom")
        if weights is None:
            weights = np.full(len(atoms), 1.0 / len(atoms))
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (len(atoms),):
            raise DomainError("atoms and weights differ in length")
        if np.any(~(weights > 0)):
            raise DomainError("weights must be positive")
        total = weights.sum()
        if abs(total - 1.0) > WEIGHT_TOL:
            raise DomainError(f"weights sum to {total!r}, not 1")
        coords, w, _ = _merge(space, atoms, weights / total)
        coords.setflags(write=False)
        w.setflags(write=False)
        self.coords = coords
        self.weights = w

    @classmethod
    def dirac(cls, p: SpacePoint) -> "FiniteMeasure":
        return cls(p.space, [p], [1.0])

    @property
    def atoms(self) -> list[SpacePoint]:
        return [SpacePoint(self.space, c) for c in self.coords]

    def __len__(self):
        return len(self.weights)

    def __eq__(self, other):
        return (isinstance(other, FiniteMeasure) and self.space == other.space
                and np.array_equal(self.coords, other.coords)
                and np.array_equal(self.weights, other.weights))

    def __repr__(self):
        return f"FiniteMeasure({self.space.key()[0]}, {len(self)} atoms)"

    def to_dict(self) -> dict:
        return {"space": self.space.to_dict(), "atoms": self.coords.tolist(),
                "weights": self.weights.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "FiniteMeasure":
        for key in ("space", "atoms"):
            if key not in d:
                raise DomainError(f"measure is missing field {key!r}")
        space = space_from_dict(d["space"])
        return cls(space, np.asarray(d["atoms"], dtype=float), d.get("weights"))


def _check_same(mu: FiniteMeasure, nu: FiniteMeasure):
    if mu.space != nu.space:
        raise DomainError("measures live in different spaces")


def second_moment(mu: FiniteMeasure, x: SpacePoint) -> float:
    """Fréchet functional ``sum_i w_i d(atom_i, x)^2``."""
    if x.space != mu.space:
        raise DomainError("point outside the measure's space")
    return float(mu.weights @ mu.space.dist_to(x.coords, mu.coords) ** 2)


def _common_support(mu: FiniteMeasure, nu: FiniteMeasure):
    both = np.concatenate([mu.coords, nu.coords])
    support, inverse = np.unique(both, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    wm = np.bincount(inverse[:len(mu)], weights=mu.weights, minlength=len(support))
    wn = np.bincount(inverse[len(mu):], weights=nu.weights, minlength=len(support))
    return support, wm, wn


def tv_distance(mu: FiniteMeasure, nu: FiniteMeasure) -> float:
    """Total variation as ``sup_A |mu(A) - nu(A)|``, a number in [0, 1]."""
    _check_same(mu, nu)
    _, wm, wn = _common_support(mu, nu)
    return float(min(1.0, 0.5 * np.abs(wm - wn).sum()))


@dataclass(frozen=True)
class Coupling:
    row_measure: FiniteMeasure
    col_measure: FiniteMeasure
    matrix: np.ndarray

    def cost(self) -> float:
        """``sum_ij matrix_ij d(row_i, col_j)^2``."""
        D = self.row_measure.space.pairwise(self.row_measure.coords, self.col_measure.coords)
        return float(np.sum(self.matrix * D ** 2))

    def marginal_error(self) -> float:
        return float(max(np.abs(self.matrix.sum(axis=1) - self.row_measure.weights).max(),
                         np.abs(self.matrix.sum(axis=0) - self.col_measure.weights).max()))


@dataclass(frozen=True)
class W2Result:
    distance: float
    coupling: Coupling


def _transport_lp(a: np.ndarray, b: np.ndarray, C: np.ndarray) -> np.ndarray:
    m, n = C.shape
    rows = sparse.kron(sparse.eye(m), np.ones((1, n)))
    cols = sparse.kron(np.ones((1, m)), sparse.eye(n))
    A_eq = sparse.vstack([rows, cols]).tocsr()
    res = linprog(C.ravel(), A_eq=A_eq, b_eq=np.r_[a, b], bounds=(0, None), method="highs-ds",
                  options={"primal_feasibility_tolerance": 1e-10,
                           "dual_feasibility_tolerance": 1e-10})
    if res.status != 0:
        raise RuntimeError(f"transport LP failed: {res.message}")
    return np.maximum(res.x.reshape(m, n), 0.0)


def w2_distance(mu: FiniteMeasure, nu: FiniteMeasure, max_support: int = MAX_SUPPORT) -> W2Result:
    """Exact W2 by solving the transport linear program with squared-distance cost."""
    _check_same(mu, nu)
    if len(mu) > max_support or len(nu) > max_support:
        raise CapacityError(f"support sizes {len(mu)}x{len(nu)} exceed cap {max_support}")
    C = mu.space.pairwise(mu.coords, nu.coords) ** 2
    if len(mu) == 1 or len(nu) == 1:
        P = np.outer(mu.weights, nu.weights)
    else:
        P = _transport_lp(mu.weights, nu.weights, C)
    coupling = Coupling(mu, nu, P)
    return W2Result(float(np.sqrt(max(np.sum(P * C), 0.0))), coupling)


def orbit_coupling(pairs: Sequence[tuple[SpacePoint, SpacePoint]], weights: Sequence[float]) -> Coupling:
    """Coupling putting mass ``weights[i]`` on ``pairs[i]``."""
    if len(pairs) != len(weights) or not pairs:
        raise DomainError("pairs and weights must be nonempty and of equal length")
    space = pairs[0][0].space
    if any(p.space != space or q.space != space for p, q in pairs):
        raise DomainError("pairs must share one space")
    X = np.stack([p.coords for p, _ in pairs])
    Y = np.stack([q.coords for _, q in pairs])
    return coupling_from_arrays(space, X, Y, np.asarray(weights, dtype=float))


def coupling_from_arrays(space: Space, X: np.ndarray, Y: np.ndarray, weights: np.ndarray) -> Coupling:
    """Array form of :func:`orbit_coupling`."""
    row = FiniteMeasure(space, X, weights)
    col = FiniteMeasure(space, Y, weights)
    _, _, ri = _merge(space, X, weights)
    _, _, ci = _merge(space, Y, weights)
    M = np.zeros((len(row), len(col)))
    np.add.at(M, (ri, ci), weights / weights.sum())
    return Coupling(row, col, M)


@dataclass(frozen=True)
class BoundCheck:
    w2: float
    bound: float
    holds: bool


def tv_to_w2_bound_check(mu: FiniteMeasure, nu: FiniteMeasure) -> BoundCheck:
    """Compare W2 with sqrt(TV) times the diameter of the union support."""
    _check_same(mu, nu)
    support, _, _ = _common_support(mu, nu)
    diam = float(mu.space.pairwise(support, support).max())
    w2 = w2_distance(mu, nu).distance
    bound = float(np.sqrt(tv_distance(mu, nu)) * diam)
    return BoundCheck(w2, bound, w2 <= bound + 1e-9)
