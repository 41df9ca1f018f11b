"""Discrete amenable groups, Følner sequences and measure-preserving actions.

Group elements are int64 vectors; a set of elements is a ``(m, d)`` array
with distinct rows. Haar measure is counting measure throughout.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import CapacityError, DomainError

MAX_PRODUCTS = 20_000_000


# ---------------------------------------------------------------- groups

class Group:
    dim: int
    lattice = False  # abelian, elements are unbounded integer vectors

    def identity(self) -> np.ndarray:
        return np.zeros(self.dim, dtype=np.int64)

    def element(self, g) -> np.ndarray:
        g = np.atleast_1d(np.asarray(g, dtype=np.int64))
        if g.shape != (self.dim,):
            raise DomainError(f"expected a group element with {self.dim} coordinates, got {g.tolist()}")
        return self.reduce(g)

    def reduce(self, a):
        return a

    def mul(self, a, b):
        raise NotImplementedError

    def inv(self, a):
        raise NotImplementedError

    def generators(self) -> list[np.ndarray]:
        eye = np.eye(self.dim, dtype=np.int64)
        return [self.reduce(row) for row in eye]

    def __eq__(self, other):
        return isinstance(other, Group) and self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(str(self.to_dict()))

    def __repr__(self):
        return f"{type(self).__name__}({self.to_dict()})"


class IntegerLattice(Group):
    """Z^d under addition; ``IntegerLattice(1)`` is the integers."""

    lattice = True

    def __init__(self, d: int = 1):
        if int(d) < 1:
            raise DomainError("lattice dimension must be >= 1")
        self.dim = int(d)

    def mul(self, a, b):
        return a + b

    def inv(self, a):
        return -a

    def to_dict(self):
        return {"kind": "integers"} if self.dim == 1 else {"kind": "integer_lattice", "d": self.dim}


def Integers() -> IntegerLattice:
    return IntegerLattice(1)


class Cyclic(Group):
    dim = 1

    def __init__(self, N: int):
        if int(N) < 1:
            raise DomainError("cyclic order must be >= 1")
        self.N = int(N)

    def reduce(self, a):
        return np.mod(a, self.N)

    def mul(self, a, b):
        return np.mod(a + b, self.N)

    def inv(self, a):
        return np.mod(-a, self.N)

    def to_dict(self):
        return {"kind": "cyclic", "N": self.N}


class HeisenbergZ(Group):
    """Integer Heisenberg group; ``(a, b, c)`` is the matrix [[1, a, c], [0, 1, b], [0, 0, 1]]."""

    dim = 3

    def mul(self, x, y):
        x, y = np.broadcast_arrays(x, y)
        out = x + y
        out[..., 2] += x[..., 0] * y[..., 1]
        return out

    def inv(self, x):
        out = -np.asarray(x)
        out[..., 2] += x[..., 0] * x[..., 1]
        return out

    def to_dict(self):
        return {"kind": "heisenberg_Z"}


def group_from_dict(d: dict) -> Group:
    kind = d.get("kind")
    if kind == "integers":
        return Integers()
    if kind == "integer_lattice":
        return IntegerLattice(d["d"])
    if kind == "cyclic":
        return Cyclic(d["N"])
    if kind == "heisenberg_Z":
        return HeisenbergZ()
    raise DomainError(f"unknown group kind {kind!r}")


# ---------------------------------------------------------------- element sets

def _rows_view(A: np.ndarray) -> np.ndarray:
    A = np.ascontiguousarray(A, dtype=np.int64)
    return A.view(np.dtype((np.void, A.dtype.itemsize * A.shape[1]))).ravel()


def count_distinct(A: np.ndarray) -> int:
    return len(np.unique(_rows_view(A)))


def is_subset(A: np.ndarray, B: np.ndarray) -> bool:
    return bool(np.isin(_rows_view(A), _rows_view(B)).all())


# ---------------------------------------------------------------- Følner sequences

@dataclass(frozen=True)
class FolnerSequence:
    """Indexed family ``n -> F_n`` (n >= 1) of finite nonempty element sets.

    ``box`` optionally describes ``F_n`` as ``prod_i [lo_i, hi_i)`` in a
    lattice group, which enables closed-form set arithmetic.
    """

    group: Group
    sets: Callable[[int], np.ndarray]
    description: str
    box: Callable[[int], tuple[np.ndarray, np.ndarray]] | None = None
    spec: dict = field(default_factory=dict)

    def __call__(self, n: int) -> np.ndarray:
        if n < 1:
            raise DomainError("Følner index starts at 1")
        return self.sets(n)

    def size(self, n: int) -> int:
        if self.box is not None:
            lo, hi = self.box(n)
            return int(np.prod(hi - lo))
        return len(self(n))

    def to_dict(self) -> dict:
        return dict(self.spec)


def _box_elements(lo, hi):
    axes = [np.arange(a, b, dtype=np.int64) for a, b in zip(lo, hi)]
    grid = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grid], axis=1)


def box_sequence(group: Group, side: Callable[[int], int] = lambda n: n, description: str = "box") -> FolnerSequence:
    """``F_n = [0, side(n))^d`` in a lattice group (``interval`` when d = 1)."""
    if isinstance(group, Cyclic):
        N = group.N
        return FolnerSequence(group, lambda n: np.arange(min(side(n), N), dtype=np.int64)[:, None],
                              description, None, {"family": "interval"})
    if not group.lattice:
        raise DomainError("box sequences need Z^d or a cyclic group")

    def box(n):
        s = int(side(n))
        return np.zeros(group.dim, dtype=np.int64), np.full(group.dim, s, dtype=np.int64)

    family = "interval" if group.dim == 1 else "box"
    return FolnerSequence(group, lambda n: _box_elements(*box(n)), description, box, {"family": family})


def interval_sequence() -> FolnerSequence:
    return box_sequence(Integers(), description="interval [0, n)")


def heisenberg_boxes() -> FolnerSequence:
    g = HeisenbergZ()
    return FolnerSequence(g, lambda n: _box_elements([0, 0, 0], [n, n, n * n]), "[0,n)x[0,n)x[0,n^2)",
                          None, {"family": "box"})


def custom_sequence(group: Group, sets: Sequence, description: str = "custom") -> FolnerSequence:
    arrays = []
    for i, s in enumerate(sets, 1):
        a = np.asarray(s, dtype=np.int64).reshape(len(s), -1) if len(s) else np.zeros((0, group.dim), np.int64)
        if a.shape[0] == 0:
            raise DomainError(f"F_{i} is empty")
        if a.shape[1] != group.dim:
            raise DomainError(f"F_{i} has elements of the wrong dimension")
        a = group.reduce(a)
        if count_distinct(a) != len(a):
            raise DomainError(f"F_{i} lists an element twice")
        arrays.append(a)

    def get(n):
        if n > len(arrays):
            raise DomainError(f"custom sequence defines only {len(arrays)} sets, asked for F_{n}")
        return arrays[n - 1]

    spec = {"family": "custom", "sets": [a.tolist() if group.dim > 1 else a.ravel().tolist() for a in arrays]}
    return FolnerSequence(group, get, description, None, spec)


def shrinking_sequence(length: int = 64) -> FolnerSequence:
    """Intervals that collapse to a point every other index; not tempered."""
    sets = [list(range(1 if n % 2 == 0 else 10 * n)) for n in range(1, length + 1)]
    return custom_sequence(Integers(), sets, "shrinking intervals")


def folner_from_dict(group: Group, d: dict) -> FolnerSequence:
    family = d.get("family")
    if family in ("interval", "box"):
        if isinstance(group, HeisenbergZ):
            return heisenberg_boxes()
        return box_sequence(group, description=family)
    if family == "custom":
        return custom_sequence(group, d["sets"])
    if family == "shrinking":
        return shrinking_sequence(int(d.get("length", 64)))
    raise DomainError(f"unknown Følner family {family!r}")


def folner_defect(seq: FolnerSequence, g, n: int) -> float:
    """``|g F_n  symmetric-difference  F_n| / |F_n|``."""
    group = seq.group
    g = group.element(g)
    if seq.box is not None:
        lo, hi = seq.box(n)
        overlap = np.prod(np.maximum(np.minimum(hi, hi + g) - np.maximum(lo, lo + g), 0))
        size = np.prod(hi - lo)
        return float(2 * (size - overlap) / size)
    F = seq(n)
    gF = group.mul(g[None, :], F)
    union = count_distinct(np.concatenate([F, gF]))
    return float(2 * (union - len(F)) / len(F))


def _product_set(group, A, B):
    if len(A) * len(B) > MAX_PRODUCTS:
        raise CapacityError(f"product set of {len(A)} x {len(B)} elements exceeds cap {MAX_PRODUCTS}")
    return group.mul(group.inv(A)[:, None, :], B[None, :, :]).reshape(-1, group.dim)


def _contains(seq: FolnerSequence, big: int, small: int) -> bool:
    if seq.box is not None:
        (lo_s, hi_s), (lo_b, hi_b) = seq.box(small), seq.box(big)
        return bool(np.all(lo_b <= lo_s) and np.all(hi_s <= hi_b))
    return is_subset(seq(small), seq(big))


def _shulman(seq: FolnerSequence, n: int, nested: bool) -> float:
    """Ratio at index n; ``nested`` asserts F_1 <= ... <= F_{n-1}."""
    group = seq.group
    if n == 1:
        return 0.0
    if nested:
        # the union over k < n is attained at k = n-1
        if seq.box is not None and group.lattice:
            (a, b), (c, d) = seq.box(n - 1), seq.box(n)
            return float(np.prod(d - a + b - c - 1) / np.prod(d - c))
        return count_distinct(_product_set(group, seq(n - 1), seq(n))) / len(seq(n))
    Fn = seq(n)
    total = sum(seq.size(k) for k in range(1, n)) * len(Fn)
    if total > MAX_PRODUCTS:
        raise CapacityError(f"Shulman union needs {total} products, cap is {MAX_PRODUCTS}")
    parts = [_product_set(group, seq(k), Fn) for k in range(1, n)]
    return count_distinct(np.concatenate(parts)) / len(Fn)


def shulman_ratio(seq: FolnerSequence, n: int) -> float:
    """``|U_{k<n} F_k^{-1} F_n| / |F_n|`` by exact set arithmetic."""
    if n < 1:
        raise DomainError("Følner index starts at 1")
    nested = all(_contains(seq, k + 1, k) for k in range(1, n - 1))
    return _shulman(seq, n, nested)


@dataclass(frozen=True)
class TemperedReport:
    max_ratio: float
    argmax: int
    is_tempered: bool
    bound: float
    horizon: int

    def to_dict(self):
        return {"max_ratio": self.max_ratio, "argmax": self.argmax, "is_tempered": self.is_tempered,
                "bound": self.bound, "horizon": self.horizon}


def tempered_report(seq: FolnerSequence, N: int, C: float = 2.0) -> TemperedReport:
    """Largest Shulman ratio over ``1 <= n <= N`` and whether it stays below ``C``."""
    if N < 1:
        raise DomainError("horizon must be >= 1")
    nested = True
    best, arg = 0.0, 1
    for n in range(1, N + 1):
        if n >= 3 and nested:
            nested = _contains(seq, n - 1, n - 2)
        r = _shulman(seq, n, nested)
        if r > best:
            best, arg = r, n
    return TemperedReport(best, arg, best <= C, float(C), N)


# ---------------------------------------------------------------- systems

def philox(seed: int) -> np.random.Generator:
    """Counter-based generator; output depends only on the seed."""
    return np.random.Generator(np.random.Philox(key=int(seed)))


class System:
    """Probability-preserving action of ``group`` on a sampleable space Omega."""

    group: Group
    label: str
    ergodic = True

    def act(self, g, omega):
        return self.orbit(omega, self.group.element(g)[None, :])[0]

    def orbit(self, omega, G: np.ndarray) -> np.ndarray:
        """``T^g omega`` for every row ``g`` of ``G``."""
        raise NotImplementedError

    def sample(self, seed: int, count: int) -> np.ndarray:
        raise NotImplementedError

    def component(self, omega, resolution: int):
        """Quadrature ``(points, weights)`` for P conditioned on omega's ergodic component."""
        raise NotImplementedError

    def component_key(self, omega):
        """Label shared by all points of one ergodic component."""
        return 0

    def quadrature(self, resolution: int):
        """Quadrature ``(points, weights)`` for P itself."""
        return self.component(None, resolution)

    exact_quadrature = False


class TorusRotation(System):
    """``T^g w = w + sum_i g_i alpha_i  (mod 1)`` on the m-torus with Lebesgue measure."""

    def __init__(self, group: Group, rotations, label: str = "torus_rotation"):
        if not group.lattice:
            raise DomainError("torus rotations are actions of Z^d")
        A = np.atleast_2d(np.asarray(rotations, dtype=float))
        if A.shape[0] != group.dim:
            raise DomainError(f"need one rotation vector per group generator ({group.dim})")
        self.group, self.rotations, self.label = group, A, label
        self.m = A.shape[1]

    def orbit(self, omega, G):
        # recomputed from scratch per element: no accumulated roundoff
        return np.mod(np.asarray(omega, dtype=float)[None, :] + G.astype(float) @ self.rotations, 1.0)

    def sample(self, seed, count):
        return philox(seed).random((count, self.m))

    def component(self, omega, resolution):
        axes = [(np.arange(resolution) + 0.5) / resolution] * self.m
        grid = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
        return grid, np.full(len(grid), 1.0 / len(grid))

    def to_dict(self):
        return {"kind": "torus_rotation", "rotations": self.rotations.tolist()}


class FinitePermutation(System):
    """Z^d or Z/N acting on ``{0..M-1}`` by commuting weight-preserving permutations."""

    def __init__(self, group: Group, permutations, weights=None, label: str = "finite_permutation"):
        perms = [np.asarray(p, dtype=np.int64) for p in permutations]
        if len(perms) != group.dim or not (group.lattice or isinstance(group, Cyclic)):
            raise DomainError("need one permutation per generator of Z^d or Z/N")
        M = len(perms[0])
        for p in perms:
            if sorted(p.tolist()) != list(range(M)):
                raise DomainError("generator is not a permutation")
        w = np.full(M, 1.0 / M) if weights is None else np.asarray(weights, dtype=float)
        if w.shape != (M,) or np.any(w <= 0) or abs(w.sum() - 1) > 1e-12:
            raise DomainError("weights must be a positive probability vector on the states")
        for p in perms:
            if not np.allclose(w[p], w, rtol=0, atol=1e-15):
                raise DomainError("permutation does not preserve the weights")
        for p in perms:
            for q in perms:
                if not np.array_equal(p[q], q[p]):
                    raise DomainError("generator permutations must commute")
        self.group, self.perms, self.weights, self.label, self.M = group, perms, w, label, M
        # cycle tables: position of each state in its cycle, and the cycle listing
        self._cycles = []
        for p in perms:
            cyc_id, pos, cycles = np.empty(M, np.int64), np.empty(M, np.int64), []
            seen = np.zeros(M, bool)
            for s in range(M):
                if seen[s]:
                    continue
                c = [s]
                seen[s] = True
                while not seen[p[c[-1]]]:
                    c.append(int(p[c[-1]]))
                    seen[c[-1]] = True
                for i, t in enumerate(c):
                    cyc_id[t], pos[t] = len(cycles), i
                cycles.append(np.array(c))
            if isinstance(group, Cyclic) and any(group.N % len(c) for c in cycles):
                raise DomainError("permutation order does not divide N")
            self._cycles.append((cyc_id, pos, cycles))

    def _power(self, i, states, k):
        cyc_id, pos, cycles = self._cycles[i]
        out = np.empty_like(states)
        for j in np.unique(cyc_id[states]):
            sel = cyc_id[states] == j
            c = cycles[j]
            out[sel] = c[np.mod(pos[states[sel]] + k[sel], len(c))]
        return out

    def orbit(self, omega, G):
        states = np.full(len(G), int(omega), dtype=np.int64)
        for i in range(self.group.dim):
            states = self._power(i, states, G[:, i])
        return states

    def sample(self, seed, count):
        return philox(seed).choice(self.M, size=count, p=self.weights)

    def component(self, omega, resolution=None):
        reached = {int(omega)}
        frontier = [int(omega)]
        while frontier:
            s = frontier.pop()
            for p in self.perms:
                t = int(p[s])
                if t not in reached:
                    reached.add(t)
                    frontier.append(t)
        pts = np.array(sorted(reached), dtype=np.int64)
        w = self.weights[pts]
        return pts, w / w.sum()

    exact_quadrature = True

    @property
    def ergodic(self):
        return len(self.component(0)[0]) == self.M

    def component_key(self, omega):
        return int(self.component(omega)[0][0])

    def quadrature(self, resolution=None):
        return np.arange(self.M, dtype=np.int64), self.weights

    def to_dict(self):
        return {"kind": "finite_permutation", "permutations": [p.tolist() for p in self.perms],
                "weights": self.weights.tolist()}


def cyclic_rotation(N: int, group: Group | None = None) -> FinitePermutation:
    """Rotation ``s -> s + 1 mod N`` of N equally weighted states."""
    return FinitePermutation(group or Cyclic(N), [np.roll(np.arange(N), -1)])


class TwoComponent(System):
    """Disjoint union of two circle rotations, each invariant piece of mass 1/2.

    Omega points are ``(component, x)`` with component in {0, 1}.
    """

    ergodic = False

    def __init__(self, rotations=(0.6180339887498949, 0.41421356237309503), label: str = "two_component"):
        self.group = Integers()
        self.alphas = np.asarray(rotations, dtype=float)
        if self.alphas.shape != (2,):
            raise DomainError("two_component needs exactly two rotation numbers")
        self.label = label

    def orbit(self, omega, G):
        c, x = int(omega[0]), float(omega[1])
        xs = np.mod(x + G[:, 0].astype(float) * self.alphas[c], 1.0)
        return np.stack([np.full(len(G), float(c)), xs], axis=1)

    def sample(self, seed, count):
        rng = philox(seed)
        return np.stack([rng.integers(0, 2, count).astype(float), rng.random(count)], axis=1)

    def component(self, omega, resolution):
        xs = (np.arange(resolution) + 0.5) / resolution
        return np.stack([np.full(resolution, float(int(omega[0]))), xs], axis=1), np.full(resolution, 1.0 / resolution)

    def component_key(self, omega):
        return int(omega[0])

    def quadrature(self, resolution):
        a, wa = self.component((0, 0.0), resolution)
        b, wb = self.component((1, 0.0), resolution)
        return np.concatenate([a, b]), np.concatenate([wa, wb]) / 2

    def to_dict(self):
        return {"kind": "two_component", "rotations": self.alphas.tolist()}


def _splitmix64(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        x = x + np.uint64(0x9E3779B97F4A7C15)
        x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return x ^ (x >> np.uint64(31))


class PseudorandomShift(System):
    """Demonstration-only Bernoulli(1/2) shift driven by a hash of (key, position).

    Omega points are ``(key, offset)``; coordinate i is the low bit of
    ``splitmix64(key * 2^32 + offset + i)``. Not an exact model of the
    infinite product space, so it is kept out of acceptance checks.
    """

    def __init__(self, label: str = "pseudorandom_shift"):
        self.group = Integers()
        self.label = label

    def orbit(self, omega, G):
        key, off = int(omega[0]), int(omega[1])
        return np.stack([np.full(len(G), key, np.int64), off + G[:, 0]], axis=1)

    def bits(self, omegas: np.ndarray, i: int = 0) -> np.ndarray:
        o = np.atleast_2d(omegas).astype(np.uint64)
        return (_splitmix64((o[:, 0] << np.uint64(32)) + o[:, 1] + np.uint64(i)) & np.uint64(1)).astype(np.int64)

    def sample(self, seed, count):
        keys = philox(seed).integers(0, 2 ** 31, count)
        return np.stack([keys, np.zeros(count, np.int64)], axis=1)

    def to_dict(self):
        return {"kind": "pseudorandom_shift"}


def system_from_dict(d: dict, group: Group | None = None, allow_pseudorandom: bool = False) -> System:
    kind = d.get("kind")
    if group is None:
        group = group_from_dict(d.get("group", {"kind": "integers"}))
    if kind == "torus_rotation":
        return TorusRotation(group, d["rotations"])
    if kind == "finite_permutation":
        if "permutations" in d:
            return FinitePermutation(group, d["permutations"], d.get("weights"))
        return cyclic_rotation(int(d["states"]), group)
    if kind == "two_component":
        if group != Integers():
            raise DomainError("two_component is an action of the integers")
        return TwoComponent(d.get("rotations", (0.6180339887498949, 0.41421356237309503)))
    if kind == "pseudorandom_shift":
        if not allow_pseudorandom:
            raise DomainError("pseudorandom_shift is a demo system; enable allow_pseudorandom")
        return PseudorandomShift()
    raise DomainError(f"unknown system kind {kind!r}")
