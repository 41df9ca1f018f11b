"""Measurable maps from a system's Omega into a CAT(0) target space."""
from __future__ import annotations

import numpy as np

from .dynamics import FinitePermutation, PseudorandomShift, System, TorusRotation, TwoComponent
from .errors import DomainError
from .geometry import Euclidean, Hyperboloid2, MetricTree, Space, space_from_dict, tripod

TAU = 2 * np.pi


class Observable:
    """Closed-form map ``omega -> f(omega)`` evaluated on batches of Omega points."""

    is_partition = False

    def __init__(self, system: System, target: Space, fn, kind: str = "closed_form", params=None):
        self.system = system
        self.target = target
        self._fn = fn
        self.kind = kind
        self.params = dict(params or {})

    def values(self, omegas) -> np.ndarray:
        """Raw target coordinates, one row per Omega point."""
        return self.target.canonical(np.asarray(self._fn(omegas), dtype=float).reshape(-1, self.target.ndim))

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.params}

    def __repr__(self):
        return f"Observable({self.kind}, target={self.target.key()[0]})"


class PartitionObservable(Observable):
    """Finite-valued map: ``omega`` in cell ``i`` is sent to ``cell_values[i]``.

    ``cell_probs`` holds P(A_i) when it is known exactly.
    """

    is_partition = True

    def __init__(self, system, target, cell_of, cell_values, cell_probs=None, kind="partition", params=None):
        values = target.canonical(np.asarray(cell_values, dtype=float).reshape(-1, target.ndim))
        super().__init__(system, target, lambda om: values[cell_of(om)], kind, params)
        self.cell_of = cell_of
        self.cell_values = values
        self.cell_probs = None if cell_probs is None else np.asarray(cell_probs, dtype=float)


def _phase(system: System, omegas, mode: str = "first") -> np.ndarray:
    om = np.atleast_2d(np.asarray(omegas, dtype=float))
    if isinstance(system, TwoComponent):
        return om[:, 1]
    if isinstance(system, TorusRotation):
        if mode == "sum":
            return np.mod(om.sum(axis=1), 1.0)
        return om[:, int(mode) if mode != "first" else 0]
    raise DomainError("parametric observables need a torus-based system")


def circle(system, center=(0.0, 0.0), radius=1.0, phase="first") -> Observable:
    """Unit-speed loop ``center + radius (cos 2 pi t, sin 2 pi t)`` in the plane."""
    c = np.asarray(center, dtype=float)

    def fn(om):
        t = _phase(system, om, phase)
        return c + radius * np.stack([np.cos(TAU * t), np.sin(TAU * t)], axis=1)

    return Observable(system, Euclidean(2), fn, "circle",
                      {"center": c.tolist(), "radius": float(radius), "phase": phase})


def component_circles(system: TwoComponent, centers=((0.0, 0.0), (3.0, 0.0)), radii=(1.0, 0.5)) -> Observable:
    """On a two-component system, a different circle on each invariant piece."""
    C = np.asarray(centers, dtype=float)
    R = np.asarray(radii, dtype=float)

    def fn(om):
        om = np.atleast_2d(om)
        comp = om[:, 0].astype(int)
        t = om[:, 1]
        return C[comp] + R[comp][:, None] * np.stack([np.cos(TAU * t), np.sin(TAU * t)], axis=1)

    return Observable(system, Euclidean(2), fn, "component_circles",
                      {"centers": C.tolist(), "radii": R.tolist()})


def hyperbolic_loop(system, r0=1.0, r1=0.5, phase="first") -> Observable:
    """Closed loop in the hyperbolic plane with polar radius ``r0 + r1 cos 2 pi t``."""
    H = Hyperboloid2()

    def fn(om):
        t = _phase(system, om, phase)
        return H.from_polar(r0 + r1 * np.cos(TAU * t), TAU * t)

    return Observable(system, H, fn, "hyperbolic_loop", {"r0": float(r0), "r1": float(r1), "phase": phase})


def tripod_path(system, amplitudes=(1.0, 0.6, 0.3), lengths=(1.0, 1.0, 1.0), phase="first") -> Observable:
    """Out-and-back excursions along the three legs of a tripod in turn."""
    T = MetricTree(tripod(lengths))
    amp = np.asarray(amplitudes, dtype=float)
    if np.any(amp > np.asarray(lengths)) or np.any(amp < 0):
        raise DomainError("amplitudes must lie within the leg lengths")

    def fn(om):
        t = 3 * _phase(system, om, phase)
        leg = np.minimum(np.floor(t).astype(int), 2)
        return np.stack([leg, amp[leg] * np.sin(np.pi * (t - leg))], axis=1)

    return Observable(system, T, fn, "tripod_path",
                      {"amplitudes": amp.tolist(), "lengths": list(map(float, lengths)), "phase": phase})


def constant(system, target: Space, value) -> Observable:
    v = target.canonical(np.asarray(value, dtype=float).reshape(target.ndim))
    return PartitionObservable(system, target, lambda om: np.zeros(_batch_len(om), dtype=int), [v], [1.0],
                               "constant", {"value": v.tolist()})


def _batch_len(om) -> int:
    om = np.asarray(om)
    return 1 if om.ndim == 0 else len(om)


def table(system: FinitePermutation, target: Space, values) -> PartitionObservable:
    """Finite system with one target value per state; cells are the states."""
    values = np.asarray(values, dtype=float).reshape(system.M, target.ndim)
    return PartitionObservable(system, target, lambda om: np.asarray(om, dtype=np.int64), values,
                               system.weights, "table", {"values": values.tolist()})


def coordinate_bit(system: PseudorandomShift, target: Space, values) -> PartitionObservable:
    """Demo observable on the pseudorandom shift: value chosen by coordinate 0."""
    return PartitionObservable(system, target, lambda om: system.bits(om, 0), values, [0.5, 0.5],
                               "coordinate_bit", {"values": np.asarray(values, float).tolist()})


def observable_from_dict(system: System, d: dict, space: Space | None = None) -> Observable:
    kind = d.get("kind")
    p = {k: v for k, v in d.items() if k != "kind"}
    if kind == "circle":
        obs = circle(system, **p)
    elif kind == "component_circles":
        obs = component_circles(system, **p)
    elif kind == "hyperbolic_loop":
        obs = hyperbolic_loop(system, **p)
    elif kind == "tripod_path":
        obs = tripod_path(system, **p)
    elif kind in ("constant", "table", "coordinate_bit"):
        target = space_from_dict(p["space"]) if "space" in p else space
        if target is None:
            raise DomainError(f"{kind} observable needs a target space")
        if kind == "constant":
            obs = constant(system, target, p["value"])
        elif kind == "table":
            obs = table(system, target, p["values"])
        else:
            obs = coordinate_bit(system, target, p["values"])
    else:
        raise DomainError(f"unknown observable kind {kind!r}")
    if space is not None and obs.target != space:
        raise DomainError(f"observable {kind!r} maps into {obs.target.key()[0]}, config says {space.key()[0]}")
    return obs
