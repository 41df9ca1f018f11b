"""Orbit barycentres of a golden-ratio rotation settling on the pushforward barycentre.

The observable draws a closed loop in the hyperbolic plane. Along the orbit
of omega, the barycentre of the first n values approaches the barycentre of
the loop's uniform measure, which is not the "average" of anything in the
naive sense.

Run: python demos/ergodic_averages.py
"""
import numpy as np

from hadamard_lab import (EmpiricalSpec, Integers, TorusRotation, dist, empirical_barycentre, hyperbolic_loop,
                          interval_sequence, pushforward_reference)

golden = (np.sqrt(5) - 1) / 2
system = TorusRotation(Integers(), [[golden]])
f = hyperbolic_loop(system, r0=1.0, r1=0.5)
F = interval_sequence()

ref = pushforward_reference(f, precision=1e-6).point
print("reference barycentre:", np.round(ref.coords, 6))

omegas = system.sample(seed=3, count=4)
print("      n  " + "  ".join(f"omega={om[0]:.3f}" for om in omegas))
for k in range(0, 15, 2):
    n = 2 ** k
    row = [dist(empirical_barycentre(EmpiricalSpec(f, F, om, n)).point, ref) for om in omegas]
    print(f"{n:7d}  " + "  ".join(f"{d:11.2e}" for d in row))
