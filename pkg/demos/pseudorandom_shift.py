"""Demonstration only: a hashed Bernoulli shift driving a two-valued observable.

The shift is not an exact model of the infinite product space, so nothing in
the test suite depends on it. The barycentre of the two tripod leaves with
weights 1/2 is the centre vertex; orbit barycentres should drift towards it.

Run: python demos/pseudorandom_shift.py
"""
from hadamard_lab import MetricTree, dist, empirical_barycentre, EmpiricalSpec, interval_sequence, tripod
from hadamard_lab.dynamics import system_from_dict
from hadamard_lab.observables import coordinate_bit

T = MetricTree(tripod())
shift = system_from_dict({"kind": "pseudorandom_shift"}, allow_pseudorandom=True)
f = coordinate_bit(shift, T, [T.vertex_point(1).coords, T.vertex_point(2).coords])
centre = T.vertex_point(0)

for om in shift.sample(seed=1, count=3):
    ds = [dist(empirical_barycentre(EmpiricalSpec(f, interval_sequence(), om, 4 ** k)).point, centre)
          for k in range(1, 9)]
    print(" ".join(f"{d:.4f}" for d in ds))
