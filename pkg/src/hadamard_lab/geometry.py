"""Concrete complete separable CAT(0) spaces.

Every space stores a point as a flat float vector (its "raw coordinates"),
so batches of points are plain ``(k, D)`` arrays:

* ``Euclidean(dim)``: the vector itself.
* ``Hyperboloid2()``: ``(x0, x1, x2)`` on the upper sheet ``x0^2 - x1^2 - x2^2 = 1``.
* ``MetricTree(shape)``: ``(edge_id, offset)`` with the offset measured from the
  edge's first endpoint.
* ``Product(factors)``: concatenation of the factor coordinates.

User-facing code works with :class:`SpacePoint`, which pairs raw coordinates
with the space they live in.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

from .errors import DomainError

SHEET_TOL = 1e-12
SNAP_TOL = 1e-12


class Space:
    """Base class. Subclasses implement the batched raw-coordinate methods."""

    ndim: int
    smooth = False

    def key(self):
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def __eq__(self, other):
        return isinstance(other, Space) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"{type(self).__name__}({self.to_dict()!r})"

    # raw-coordinate interface
    def canonical(self, coords: np.ndarray) -> np.ndarray:
        """Canonicalise a single point or a ``(k, D)`` batch."""
        return np.asarray(coords, dtype=float)

    def dist_to(self, x: np.ndarray, Y: np.ndarray) -> np.ndarray:
        """Distances from one point ``x`` to each row of ``Y``."""
        raise NotImplementedError

    def pairwise(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        return np.stack([self.dist_to(x, Y) for x in X]) if len(X) else np.zeros((0, len(Y)))

    def paired(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        """Row-by-row distances ``d(X[i], Y[i])``."""
        return self.dist_to(X, Y)

    def raw_dist(self, a: np.ndarray, b: np.ndarray) -> float:
        return float(self.dist_to(a, b[None, :])[0])

    def geodesic(self, a: np.ndarray, b: np.ndarray, t: float) -> np.ndarray:
        raise NotImplementedError

    def random_coords(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError

    # convenience
    def point(self, coords) -> "SpacePoint":
        c = self.canonical(np.asarray(coords, dtype=float).reshape(self.ndim))
        c.setflags(write=False)
        return SpacePoint(self, c)

    def random_points(self, rng: np.random.Generator, size: int) -> list["SpacePoint"]:
        return [self.point(c) for c in self.random_coords(rng, size)]


class Euclidean(Space):
    smooth = True

    def __init__(self, dim: int):
        if int(dim) < 1:
            raise DomainError(f"euclidean dim must be >= 1, got {dim}")
        self.dim = int(dim)
        self.ndim = self.dim

    def key(self):
        return ("euclidean", self.dim)

    def to_dict(self):
        return {"kind": "euclidean", "dim": self.dim}

    def dist_to(self, x, Y):
        return np.linalg.norm(np.asarray(Y) - x, axis=-1)

    def pairwise(self, X, Y):
        return np.linalg.norm(X[:, None, :] - Y[None, :, :], axis=-1)

    def geodesic(self, a, b, t):
        return (1.0 - t) * a + t * b

    def log(self, x, Y):
        return Y - x

    def exp(self, x, v):
        return x + v

    def tangent_norm(self, x, v):
        return float(np.linalg.norm(v))

    def random_coords(self, rng, size, scale=10.0):
        return rng.uniform(-scale, scale, size=(size, self.dim))


def minkowski(a, b):
    """Lorentzian product ``-a0 b0 + a1 b1 + a2 b2`` along the last axis."""
    return -a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] + a[..., 2] * b[..., 2]


class Hyperboloid2(Space):
    """Hyperbolic plane of curvature -1 in the hyperboloid model."""

    smooth = True
    ndim = 3

    def key(self):
        return ("hyperboloid2",)

    def to_dict(self):
        return {"kind": "hyperboloid2"}

    def canonical(self, coords):
        c = np.array(coords, dtype=float)
        c[..., 0] = np.sqrt(1.0 + c[..., 1] ** 2 + c[..., 2] ** 2)
        return c

    def dist_to(self, x, Y):
        Y = np.asarray(Y)
        B = -minkowski(x, Y)
        diff = Y - x
        q = np.maximum(minkowski(diff, diff), 0.0)
        # arccosh is ill-conditioned near 1; use the half-chord form there
        near = 2.0 * np.arcsinh(np.sqrt(q) / 2.0)
        far = np.arccosh(np.maximum(B, 1.0))
        return np.where(B < 2.0, near, far)

    def pairwise(self, X, Y):
        return self.dist_to(X[:, None, :], Y[None, :, :])

    def geodesic(self, a, b, t):
        d = self.raw_dist(a, b)
        if d < 1e-15:
            return self.canonical((1.0 - t) * a + t * b)
        s = np.sinh(d)
        return self.canonical((np.sinh((1.0 - t) * d) * a + np.sinh(t * d) * b) / s)

    def log(self, x, Y):
        d = self.dist_to(x, Y)
        B = np.maximum(-minkowski(x, Y), 1.0)
        u = Y - B[:, None] * x
        with np.errstate(invalid="ignore", divide="ignore"):
            coef = np.where(d > 1e-8, d / np.sinh(d), 1.0)
        return coef[:, None] * u

    def exp(self, x, v):
        v = v + minkowski(x, v) * x
        n = np.sqrt(max(float(minkowski(v, v)), 0.0))
        if n < 1e-300:
            return self.canonical(x)
        return self.canonical(np.cosh(n) * x + (np.sinh(n) / n) * v)

    def tangent_norm(self, x, v):
        return float(np.sqrt(max(float(minkowski(v, v)), 0.0)))

    def from_polar(self, r, theta):
        r = np.asarray(r, dtype=float)
        theta = np.asarray(theta, dtype=float)
        return np.stack([np.cosh(r), np.sinh(r) * np.cos(theta), np.sinh(r) * np.sin(theta)], axis=-1)

    def random_coords(self, rng, size, radius=3.0):
        return self.from_polar(rng.uniform(0.0, radius, size), rng.uniform(0.0, 2 * np.pi, size))


class TreeShape:
    """A finite metric tree given by weighted edges ``(u, v, length)``.

    Edge ids are positions in the edge list; vertex ids are arbitrary
    hashable labels (ints in practice).
    """

    def __init__(self, edges: Sequence[tuple]):
        edges = [(u, v, float(length)) for u, v, length in edges]
        if not edges:
            raise DomainError("tree needs at least one edge")
        if any(not np.isfinite(length) or length <= 0 for _, _, length in edges):
            raise DomainError("tree edge lengths must be positive")
        self.edges = tuple(edges)
        self.vertices = tuple(sorted({u for u, _, _ in edges} | {v for _, v, _ in edges}))
        index = {v: i for i, v in enumerate(self.vertices)}
        nv = len(self.vertices)
        if nv != len(edges) + 1:
            raise DomainError("edge list does not form a tree (|V| != |E| + 1)")
        self.u = np.array([index[u] for u, _, _ in edges])
        self.v = np.array([index[v] for _, v, _ in edges])
        if np.any(self.u == self.v):
            raise DomainError("tree edges may not be loops")
        self.length = np.array([length for _, _, length in edges])
        adj = csr_matrix((np.r_[self.length, self.length], (np.r_[self.u, self.v], np.r_[self.v, self.u])),
                         shape=(nv, nv))
        ncomp, _ = connected_components(adj, directed=False)
        if ncomp != 1:
            raise DomainError("edge list does not form a tree (disconnected)")
        self.vdist, self.pred = shortest_path(adj, directed=False, return_predecessors=True)
        self.edge_of = {}
        for e, (a, b) in enumerate(zip(self.u, self.v)):
            self.edge_of[(a, b)] = e
            self.edge_of[(b, a)] = e
        # canonical edge for each vertex: lowest-id incident edge
        self.home_edge = np.full(nv, len(edges))
        for e in range(len(edges)):
            for w in (self.u[e], self.v[e]):
                self.home_edge[w] = min(self.home_edge[w], e)
        self.index = index

    @classmethod
    def from_text(cls, text: str) -> "TreeShape":
        """Parse ``u v length`` lines; blank lines and ``#`` comments are skipped."""
        edges = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise DomainError(f"line {lineno}: expected 'u v length', got {line!r}")
            edges.append((_vertex_label(parts[0]), _vertex_label(parts[1]), float(parts[2])))
        return cls(edges)

    def to_text(self) -> str:
        return "".join(f"{u} {v} {length!r}\n" for u, v, length in self.edges)

    def vertex_path(self, a: int, b: int) -> list[int]:
        """Vertex indices on the path from ``a`` to ``b`` inclusive."""
        path = [b]
        while path[-1] != a:
            path.append(int(self.pred[a, path[-1]]))
        return path[::-1]


def _vertex_label(s):
    try:
        return int(s)
    except ValueError:
        return s


def tripod(lengths=(1.0, 1.0, 1.0)) -> TreeShape:
    """Star with centre 0 and leaves 1, 2, 3."""
    return TreeShape([(0, i + 1, length) for i, length in enumerate(lengths)])


class MetricTree(Space):
    ndim = 2

    def __init__(self, shape: TreeShape):
        self.shape = shape

    def key(self):
        return ("metric_tree", self.shape.edges)

    def to_dict(self):
        return {"kind": "metric_tree", "edges": [list(e) for e in self.shape.edges]}

    def canonical(self, coords):
        c = np.array(coords, dtype=float)
        flat = c.reshape(-1, 2)
        sh = self.shape
        e = np.rint(flat[:, 0]).astype(int)
        if np.any((e < 0) | (e >= len(sh.edges))):
            raise DomainError("tree point refers to an unknown edge")
        L = sh.length[e]
        s = np.clip(flat[:, 1], 0.0, L)
        at_u = s <= SNAP_TOL
        at_v = s >= L - SNAP_TOL
        vert = np.where(at_u, sh.u[e], sh.v[e])
        snap = at_u | at_v
        home = sh.home_edge[vert]
        home_off = np.where(sh.u[home] == vert, 0.0, sh.length[home])
        flat = np.stack([np.where(snap, home, e), np.where(snap, home_off, s)], axis=1).astype(float)
        return flat.reshape(c.shape)

    def vertex_point(self, label) -> "SpacePoint":
        w = self.shape.index[label]
        e = self.shape.home_edge[w]
        return self.point([e, 0.0 if self.shape.u[e] == w else self.shape.length[e]])

    def _ends(self, P):
        sh = self.shape
        e = np.rint(P[..., 0]).astype(int)
        s = P[..., 1]
        return e, s, sh.u[e], sh.v[e], s, sh.length[e] - s

    def _dist(self, P, Q):
        sh = self.shape
        ep, sp, up, vp, dpu, dpv = self._ends(P)
        eq, sq, uq, vq, dqu, dqv = self._ends(Q)
        D = sh.vdist
        cand = np.minimum.reduce([
            dpu + D[up, uq] + dqu,
            dpu + D[up, vq] + dqv,
            dpv + D[vp, uq] + dqu,
            dpv + D[vp, vq] + dqv,
        ])
        return np.where(ep == eq, np.abs(sp - sq), cand)

    def dist_to(self, x, Y):
        x = np.asarray(x)
        return self._dist(x[None, :] if x.ndim == 1 else x, np.asarray(Y))

    def pairwise(self, X, Y):
        return self._dist(X[:, None, :], Y[None, :, :])

    def geodesic(self, a, b, t):
        sh = self.shape
        ea, sa = int(round(a[0])), a[1]
        eb, sb = int(round(b[0])), b[1]
        if ea == eb:
            return self.canonical([ea, (1.0 - t) * sa + t * sb])
        r = t * self.raw_dist(a, b)
        best = None
        for pa, da in ((sh.u[ea], sa), (sh.v[ea], sh.length[ea] - sa)):
            for pb, db in ((sh.u[eb], sb), (sh.v[eb], sh.length[eb] - sb)):
                total = da + sh.vdist[pa, pb] + db
                if best is None or total < best[0]:
                    best = (total, pa, da, pb)
        _, pa, da, pb = best
        if r <= da:
            return self.canonical([ea, sa - r if pa == sh.u[ea] else sa + r])
        r -= da
        path = sh.vertex_path(pa, pb)
        for p, q in zip(path[:-1], path[1:]):
            e = sh.edge_of[(p, q)]
            le = sh.length[e]
            if r <= le:
                return self.canonical([e, r if p == sh.u[e] else le - r])
            r -= le
        return self.canonical([eb, r if pb == sh.u[eb] else sh.length[eb] - r])

    def random_coords(self, rng, size):
        e = rng.integers(0, len(self.shape.edges), size)
        return self.canonical(np.stack([e, rng.uniform(0.0, 1.0, size) * self.shape.length[e]], axis=1))


class Product(Space):
    """l2 product of factor spaces."""

    def __init__(self, factors: Sequence[Space]):
        factors = list(factors)
        if len(factors) < 2:
            raise DomainError("product needs at least two factors")
        self.factors = tuple(factors)
        self.ndim = sum(f.ndim for f in factors)
        bounds = np.cumsum([0] + [f.ndim for f in factors])
        self.slices = tuple(slice(a, b) for a, b in zip(bounds[:-1], bounds[1:]))
        self.smooth = all(f.smooth for f in factors)

    def key(self):
        return ("product", tuple(f.key() for f in self.factors))

    def to_dict(self):
        return {"kind": "product", "factors": [f.to_dict() for f in self.factors]}

    def _join(self, parts):
        return np.concatenate(parts, axis=-1)

    def canonical(self, coords):
        c = np.asarray(coords, dtype=float)
        return self._join([f.canonical(c[..., s]) for f, s in zip(self.factors, self.slices)])

    def dist_to(self, x, Y):
        Y = np.asarray(Y)
        sq = sum(f.dist_to(x[s], Y[:, s]) ** 2 for f, s in zip(self.factors, self.slices))
        return np.sqrt(sq)

    def paired(self, X, Y):
        return np.sqrt(sum(f.paired(X[:, s], Y[:, s]) ** 2 for f, s in zip(self.factors, self.slices)))

    def pairwise(self, X, Y):
        sq = sum(f.pairwise(X[:, s], Y[:, s]) ** 2 for f, s in zip(self.factors, self.slices))
        return np.sqrt(sq)

    def geodesic(self, a, b, t):
        return self._join([f.geodesic(a[s], b[s], t) for f, s in zip(self.factors, self.slices)])

    def log(self, x, Y):
        return self._join([f.log(x[s], Y[:, s]) for f, s in zip(self.factors, self.slices)])

    def exp(self, x, v):
        return self._join([f.exp(x[s], v[s]) for f, s in zip(self.factors, self.slices)])

    def tangent_norm(self, x, v):
        return float(np.sqrt(sum(f.tangent_norm(x[s], v[s]) ** 2 for f, s in zip(self.factors, self.slices))))

    def random_coords(self, rng, size):
        return self._join([f.random_coords(rng, size) for f in self.factors])


def space_from_dict(d: dict) -> Space:
    kind = d.get("kind")
    if kind == "euclidean":
        return Euclidean(d["dim"])
    if kind == "hyperboloid2":
        return Hyperboloid2()
    if kind == "metric_tree":
        edges = d["edges"]
        if isinstance(edges, str):
            return MetricTree(TreeShape.from_text(edges))
        return MetricTree(TreeShape([tuple(e) for e in edges]))
    if kind == "product":
        return Product([space_from_dict(f) for f in d["factors"]])
    raise DomainError(f"unknown space kind {kind!r}")


@dataclass(frozen=True, eq=False)
class SpacePoint:
    space: Space
    coords: np.ndarray

    def __eq__(self, other):
        return (isinstance(other, SpacePoint) and self.space == other.space
                and np.array_equal(self.coords, other.coords))

    def __hash__(self):
        return hash((self.space, self.coords.tobytes()))

    def __repr__(self):
        return f"SpacePoint({self.space.key()[0]}, {self.coords.tolist()})"


def _same_space(*points: SpacePoint) -> Space:
    space = points[0].space
    for p in points[1:]:
        if p.space != space:
            raise DomainError("points live in different spaces")
    return space


def dist(a: SpacePoint, b: SpacePoint) -> float:
    space = _same_space(a, b)
    return space.raw_dist(a.coords, b.coords)


def geodesic_point(a: SpacePoint, b: SpacePoint, t: float) -> SpacePoint:
    """Point at fraction ``t`` of the way along the geodesic from ``a`` to ``b``."""
    space = _same_space(a, b)
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"geodesic parameter must lie in [0, 1], got {t}")
    if t == 0.0:
        return a
    if t == 1.0:
        return b
    return space.point(space.geodesic(a.coords, b.coords, t))


def cn_inequality_residual(x: SpacePoint, y: SpacePoint, z: SpacePoint) -> float:
    """Bruhat-Tits CN residual; nonpositive (up to roundoff) in a CAT(0) space."""
    _same_space(x, y, z)
    m = geodesic_point(y, z, 0.5)
    return dist(x, m) ** 2 - 0.5 * dist(x, y) ** 2 - 0.5 * dist(x, z) ** 2 + 0.25 * dist(y, z) ** 2


def diameter(points: Sequence[SpacePoint]) -> float:
    if len(points) == 0:
        raise DomainError("diameter of an empty set")
    space = _same_space(*points)
    X = np.stack([p.coords for p in points])
    return float(space.pairwise(X, X).max())
