import numpy as np
import pytest

from hadamard_lab.errors import CapacityError, DomainError
from hadamard_lab.geometry import Euclidean, Hyperboloid2, MetricTree, tripod
from hadamard_lab.oracles import permutation_w2
from hadamard_lab.transport import (FiniteMeasure, orbit_coupling, second_moment, tv_distance,
                                    tv_to_w2_bound_check, w2_distance)

E2 = Euclidean(2)


def m(points, weights=None, space=E2):
    return FiniteMeasure(space, np.asarray(points, float), weights)


def test_measure_validation():
    with pytest.raises(DomainError):
        m([[0, 0]], [0.5])
    with pytest.raises(DomainError):
        m([[0, 0], [1, 0]], [1.0, 0.0])
    with pytest.raises(DomainError):
        m([])


def test_duplicate_atoms_merge():
    mu = m([[1, 0], [0, 0], [1, 0]], [0.25, 0.5, 0.25])
    assert len(mu) == 2
    assert mu == m([[0, 0], [1, 0]])


def test_measure_dict_round_trip():
    mu = m([[0, 0], [2, 1]], [0.3, 0.7])
    assert FiniteMeasure.from_dict(mu.to_dict()) == mu


def test_second_moment():
    x = E2.point([1, 0])
    assert second_moment(FiniteMeasure.dirac(x), x) == 0
    mu = m([[0, 0], [2, 0]], [0.5, 0.5])
    assert second_moment(mu, x) == pytest.approx(1.0)
    assert second_moment(mu, E2.point([0, 0])) == pytest.approx(2.0)


def test_tv_distance():
    x, y = [[0, 0]], [[1, 0]]
    assert tv_distance(m(x), m(x)) == 0
    assert tv_distance(m(x), m(y)) == 1
    assert tv_distance(m(x + y, [0.5, 0.5]), m(x + y, [0.25, 0.75])) == pytest.approx(0.25)


def test_w2_diracs_and_identity():
    assert w2_distance(m([[0, 0]]), m([[3, 4]])).distance == pytest.approx(5.0)
    mu = m([[0, 0], [1, 2], [3, 1]], [0.2, 0.3, 0.5])
    assert w2_distance(mu, mu).distance == pytest.approx(0.0, abs=1e-9)


def test_w2_matches_permutations_three_atoms():
    rng = np.random.default_rng(5)
    for _ in range(30):
        X, Y = rng.normal(size=(3, 2)), rng.normal(size=(3, 2))
        lp = w2_distance(m(X), m(Y)).distance
        assert lp == pytest.approx(permutation_w2(E2, X, Y), abs=1e-9)


def test_w2_coupling_is_optimal_and_feasible():
    rng = np.random.default_rng(6)
    mu = m(rng.normal(size=(5, 2)), rng.dirichlet(np.ones(5)))
    nu = m(rng.normal(size=(7, 2)), rng.dirichlet(np.ones(7)))
    res = w2_distance(mu, nu)
    assert res.coupling.marginal_error() < 1e-9
    assert res.coupling.cost() == pytest.approx(res.distance ** 2, abs=1e-12)


def test_w2_on_tree_and_hyperboloid_symmetric():
    rng = np.random.default_rng(7)
    for space in (Hyperboloid2(), MetricTree(tripod())):
        mu = FiniteMeasure(space, space.random_coords(rng, 4))
        nu = FiniteMeasure(space, space.random_coords(rng, 6))
        assert w2_distance(mu, nu).distance == pytest.approx(w2_distance(nu, mu).distance, abs=1e-9)


def test_w2_capacity():
    X = np.arange(20, dtype=float).reshape(10, 2)
    with pytest.raises(CapacityError):
        w2_distance(m(X), m(X + 1), max_support=5)


def test_orbit_coupling_costs():
    p = E2.point
    assert orbit_coupling([(p([0, 0]), p([0, 0]))], [1.0]).cost() == 0
    c = orbit_coupling([(p([0, 0]), p([1, 0])), (p([2, 0]), p([2, 0]))], [0.5, 0.5])
    assert c.cost() == pytest.approx(0.5)
    assert c.marginal_error() < 1e-15


def test_orbit_coupling_upper_bounds_w2():
    rng = np.random.default_rng(8)
    X, Y = rng.normal(size=(6, 2)), rng.normal(size=(6, 2))
    c = orbit_coupling([(E2.point(x), E2.point(y)) for x, y in zip(X, Y)], np.full(6, 1 / 6))
    assert w2_distance(m(X), m(Y)).distance ** 2 <= c.cost() + 1e-12


def test_tv_bound_cases():
    mu = m([[0, 0], [1, 1]])
    chk = tv_to_w2_bound_check(mu, mu)
    assert (chk.w2, chk.bound, chk.holds) == (pytest.approx(0, abs=1e-9), 0.0, True)
    chk = tv_to_w2_bound_check(m([[0, 0]]), m([[3, 4]]))
    assert chk.w2 == pytest.approx(5.0) and chk.bound == pytest.approx(5.0) and chk.holds
