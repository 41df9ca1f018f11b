import math

import numpy as np
import pytest

from hadamard_lab.barycentre import barycentre, inductive_mean, lipschitz_check, variance_gap
from hadamard_lab.errors import DomainError
from hadamard_lab.geometry import Euclidean, Hyperboloid2, MetricTree, Product, TreeShape, dist, geodesic_point, tripod
from hadamard_lab.oracles import hyperbolic_grid_barycentre, tree_grid_barycentre
from hadamard_lab.transport import FiniteMeasure

H = Hyperboloid2()
T = MetricTree(tripod())
E2 = Euclidean(2)


def test_euclidean_weighted_mean():
    res = barycentre(FiniteMeasure(E2, [[0, 0], [4, 0]], [0.25, 0.75]))
    np.testing.assert_allclose(res.point.coords, [3, 0])
    assert res.method == "euclidean_closed_form"
    assert res.functional_value == pytest.approx(0.25 * 9 + 0.75 * 1)


def test_tripod_leaves_give_centre():
    mu = FiniteMeasure(T, [T.vertex_point(v).coords for v in (1, 2, 3)])
    res = barycentre(mu)
    assert res.method == "tree_exact"
    assert dist(res.point, T.vertex_point(0)) < 1e-12


def test_hyperboloid_two_atoms_midpoint():
    a, b = H.point(H.from_polar(1.5, 0.2)), H.point(H.from_polar(0.7, 2.5))
    res = barycentre(FiniteMeasure(H, [a, b]))
    assert res.method == "inductive_refined"
    assert dist(res.point, geodesic_point(a, b, 0.5)) < 1e-8


def test_hyperboloid_asymmetric_three_atoms_vs_grid():
    mu = FiniteMeasure(H, [H.from_polar(1.0, 0.0), H.from_polar(2.0, 2.0), H.from_polar(0.5, 4.0)], [0.5, 0.3, 0.2])
    res = barycentre(mu)
    assert dist(res.point, H.point(hyperbolic_grid_barycentre(mu))) < 2e-3
    assert res.stationarity_residual <= 1e-8


def test_tree_against_grid():
    shape = TreeShape([(0, 1, 1.0), (1, 2, 0.5), (1, 3, 2.0), (0, 4, 1.5), (4, 5, 0.7)])
    M = MetricTree(shape)
    rng = np.random.default_rng(4)
    for _ in range(10):
        mu = FiniteMeasure(M, M.random_coords(rng, 6), rng.dirichlet(np.ones(6)))
        assert dist(barycentre(mu).point, M.point(tree_grid_barycentre(mu))) < 2e-3


def test_generic_solver_on_euclidean_agrees():
    rng = np.random.default_rng(9)
    mu = FiniteMeasure(E2, rng.uniform(-10, 10, (12, 2)), rng.dirichlet(np.ones(12)))
    a = barycentre(mu).point
    b = barycentre(mu, method="inductive_refined").point
    assert dist(a, b) < 1e-6


def test_product_with_tree_factor():
    P = Product([E2, T])
    rng = np.random.default_rng(10)
    mu = FiniteMeasure(P, P.random_coords(rng, 5))
    res = barycentre(mu)
    e_part = barycentre(FiniteMeasure(E2, mu.coords[:, :2], mu.weights)).point.coords
    t_part = barycentre(FiniteMeasure(T, mu.coords[:, 2:], mu.weights)).point.coords
    np.testing.assert_allclose(res.point.coords, np.r_[e_part, t_part], atol=1e-10)


def test_unknown_method():
    with pytest.raises(DomainError):
        barycentre(FiniteMeasure(E2, [[0, 0]]), method="newton")


def test_result_serialises():
    d = barycentre(FiniteMeasure(E2, [[0, 0], [2, 0]])).to_dict()
    assert set(d) == {"point", "functional_value", "residual", "iterations", "method"}
    assert d["point"] == [1.0, 0.0]


def test_inductive_mean_converges_slowly_toward_barycentre():
    mu = FiniteMeasure(H, [H.from_polar(1.0, 0.0), H.from_polar(1.0, 2.1), H.from_polar(1.0, 4.2)])
    exact = barycentre(mu).point
    far = dist(H.point(inductive_mean(mu, 10, seed=1)), exact)
    near = dist(H.point(inductive_mean(mu, 5000, seed=1)), exact)
    assert near < far


def test_variance_gap_cases():
    mu = FiniteMeasure(H, [H.from_polar(1.0, 0.0), H.from_polar(2.0, 1.0)])
    b = barycentre(mu)
    assert variance_gap(mu, b.point, b) == pytest.approx(b.functional_value, abs=1e-12)
    assert b.functional_value > 0
    y = H.point(H.from_polar(0.3, 0.3))
    dirac = FiniteMeasure.dirac(y)
    x = H.point(H.from_polar(1.7, 2.0))
    assert variance_gap(dirac, x, barycentre(dirac)) == pytest.approx(0.0, abs=1e-12)


def test_lipschitz_cases():
    mu = FiniteMeasure(T, T.random_coords(np.random.default_rng(1), 5))
    chk = lipschitz_check(mu, mu)
    assert chk.holds and chk.lhs == pytest.approx(0, abs=1e-12) and chk.rhs == pytest.approx(0, abs=1e-9)
    x, y = H.point(H.from_polar(1.0, 0.0)), H.point(H.from_polar(1.0, math.pi / 2))
    chk = lipschitz_check(FiniteMeasure.dirac(x), FiniteMeasure.dirac(y))
    assert chk.holds and chk.lhs == pytest.approx(dist(x, y)) and chk.rhs == pytest.approx(dist(x, y))


def test_large_measure_is_fast():
    rng = np.random.default_rng(2)
    mu = FiniteMeasure(H, H.random_coords(rng, 4096))
    assert barycentre(mu).stationarity_residual <= 1e-8
