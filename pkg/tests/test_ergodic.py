import math

import numpy as np
import pytest

from hadamard_lab.dynamics import (Cyclic, IntegerLattice, Integers, TorusRotation, box_sequence, custom_sequence,
                                   cyclic_rotation, interval_sequence)
from hadamard_lab.errors import DomainError
from hadamard_lab.ergodic import (EmpiricalSpec, convergence_experiment, d2_distance, empirical_barycentre,
                                  empirical_measure, finite_valued_approximation, maximal_experiment,
                                  pushforward_reference)
from hadamard_lab.geometry import Euclidean, Hyperboloid2, dist
from hadamard_lab.observables import circle, constant, hyperbolic_loop, table, tripod_path
from hadamard_lab.transport import FiniteMeasure

GOLDEN = 0.6180339887498949
ROT = TorusRotation(Integers(), [[GOLDEN]])
E2 = Euclidean(2)
H = Hyperboloid2()


def test_single_element_patch_is_dirac():
    f = circle(ROT)
    om = np.array([0.3])
    mu = empirical_measure(EmpiricalSpec(f, interval_sequence(), om, 1))
    assert mu == FiniteMeasure(E2, f.values(om))


def test_full_cyclic_patch():
    s = cyclic_rotation(4, Cyclic(4))
    f = table(s, E2, [[0, 0], [1, 0], [0, 1], [1, 1]])
    mu = empirical_measure(EmpiricalSpec(f, box_sequence(Cyclic(4)), 2, 4))
    assert len(mu) == 4
    np.testing.assert_allclose(mu.weights, 0.25)


def test_constant_observable():
    c = constant(ROT, H, H.from_polar(1.0, 1.0))
    for n in (1, 7, 100):
        spec = EmpiricalSpec(c, interval_sequence(), np.array([0.1]), n)
        assert len(empirical_measure(spec)) == 1
        assert dist(empirical_barycentre(spec).point, H.point(c.cell_values[0])) < 1e-12


def test_euclidean_barycentre_is_orbit_average():
    f = circle(ROT)
    rng = np.random.default_rng(0)
    for om in ROT.sample(1, 5):
        for n in rng.integers(1, 5000, 4):
            t = np.mod(om[0] + GOLDEN * np.arange(n), 1.0)
            avg = np.stack([np.cos(2 * np.pi * t), np.sin(2 * np.pi * t)], axis=1).mean(axis=0)
            b = empirical_barycentre(EmpiricalSpec(f, interval_sequence(), om, int(n))).point.coords
            np.testing.assert_allclose(b, avg, atol=1e-10)


def test_cyclic_full_period_equals_pushforward():
    vals = [H.from_polar(r, th) for r, th in [(0, 0), (1, 0), (1, 2), (2, 4), (0.5, 1), (1.5, 5)]]
    for group, seq in ((Cyclic(6), box_sequence(Cyclic(6))), (Integers(), interval_sequence())):
        f = table(cyclic_rotation(6, group), H, vals)
        ref = pushforward_reference(f)
        for om in range(6):
            mu = empirical_measure(EmpiricalSpec(f, seq, om, 6))
            assert mu == FiniteMeasure(H, f.cell_values)
            b = empirical_barycentre(EmpiricalSpec(f, seq, om, 6)).point
            assert dist(b, ref.point) < 1e-8


def test_group_mismatch_rejected():
    with pytest.raises(DomainError):
        EmpiricalSpec(circle(ROT), box_sequence(IntegerLattice(2)), np.array([0.0]), 3)


def test_partition_reference():
    s = cyclic_rotation(3)
    f = table(s, E2, [[0, 0], [3, 0], [0, 3]])
    np.testing.assert_allclose(pushforward_reference(f).point.coords, [1, 1], atol=1e-12)


def test_circle_reference_is_origin():
    assert np.linalg.norm(pushforward_reference(circle(ROT), 1e-6).point.coords) < 1e-8


def test_hyperbolic_reference_settles():
    f = hyperbolic_loop(ROT)
    coarse = pushforward_reference(f, 1e-4).point
    fine = pushforward_reference(f, 1e-7).point
    assert dist(coarse, fine) < 1e-4


def test_d2_basics():
    f = circle(ROT)
    assert d2_distance(f, f) == 0
    a, b = constant(ROT, E2, [0, 0]), constant(ROT, E2, [3, 4])
    assert d2_distance(a, b) == pytest.approx(5.0)


def test_d2_triangle_on_partition_observables():
    s = cyclic_rotation(8)
    rng = np.random.default_rng(3)
    for _ in range(50):
        f, g, h = (table(s, H, H.random_coords(rng, 8)) for _ in range(3))
        assert d2_distance(f, h) <= d2_distance(f, g) + d2_distance(g, h) + 1e-9


def test_approximation_of_finite_valued_is_identity():
    s = cyclic_rotation(5)
    f = table(s, E2, np.arange(10.0).reshape(5, 2))
    assert finite_valued_approximation(f, 0.3) is f


def test_circle_approximation_net_size():
    h = finite_valued_approximation(circle(ROT), 0.1)
    assert len(h.cell_values) <= math.ceil(2 * math.pi / 0.05)
    assert d2_distance(circle(ROT), h) < 0.1


def test_approximation_improves_with_target():
    f = tripod_path(ROT)
    d = [d2_distance(f, finite_valued_approximation(f, t)) for t in (0.8, 0.4, 0.2, 0.1, 0.05)]
    assert all(b < a for a, b in zip(d, d[1:]))


def test_convergence_threads_identical():
    f = hyperbolic_loop(ROT)
    a = convergence_experiment(f, interval_sequence(), seed=2, omega_count=4, K=8, threads=1)
    b = convergence_experiment(f, interval_sequence(), seed=2, omega_count=4, K=8, threads=4)
    assert [(r.omega_id, r.n, r.barycentre, r.dist_to_reference) for r in a.records] == \
           [(r.omega_id, r.n, r.barycentre, r.dist_to_reference) for r in b.records]


def test_maximal_identical_observables():
    f = circle(ROT)
    est = maximal_experiment(f, f, interval_sequence(), omega_count=20, horizon=64, audit_omegas=1, audit_max_n=16)
    assert est.fitted_c == 0 and np.all(est.sups == 0)
    assert est.lemma_violations == 0 and est.coupling_violations == 0


def test_maximal_generic_path_matches_fast_path():
    f = circle(ROT)
    h = finite_valued_approximation(f, 0.5)
    fast = maximal_experiment(f, h, interval_sequence(), omega_count=5, horizon=32, audit_omegas=0)
    # the same intervals listed as a custom family take the generic per-n loop
    listed = custom_sequence(Integers(), [range(n) for n in range(1, 33)])
    slow = maximal_experiment(f, h, listed, omega_count=5, horizon=32, audit_omegas=0)
    np.testing.assert_allclose(fast.sups, slow.sups, atol=1e-9)


def test_maximal_sups_nondecreasing():
    f = hyperbolic_loop(ROT)
    h = finite_valued_approximation(f, 0.5)
    est = maximal_experiment(f, h, interval_sequence(), omega_count=5, horizon=40, audit_omegas=1, audit_max_n=8)
    assert np.all(np.diff(est.sups, axis=1) >= 0)
    assert est.lemma_violations == 0 and est.coupling_violations == 0
