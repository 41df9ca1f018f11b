"""Tails of the maximal barycentre deviation against the c d2^2 / alpha^2 bound.

h is a finite-valued approximation of f (the unit circle). For each omega we
track sup_{n <= N} d(b(nu_f), b(nu_h)) and compare the empirical tail with
the fitted bound.

Run: python demos/maximal_tails.py
"""
import numpy as np

from hadamard_lab import (Integers, TorusRotation, circle, d2_distance, finite_valued_approximation,
                          interval_sequence, maximal_experiment)

system = TorusRotation(Integers(), [[(np.sqrt(5) - 1) / 2]])
f = circle(system)
h = finite_valued_approximation(f, 0.5, coarsen=True)
print(f"h takes {len(h.cell_values)} values, d2(f, h) = {d2_distance(f, h):.4f}")

est = maximal_experiment(f, h, interval_sequence(), seed=0, omega_count=300, horizon=512)
print(f"fitted c = {est.fitted_c:.3f} (scalar maximal function: {est.scalar_fitted_c:.3f})")
print("   alpha   tail   bound")
for a, t, b in zip(est.alphas, est.tail_probs, est.bound()):
    print(f"{a:8.4f} {t:6.3f} {min(b, 99):7.3f}")
print(f"audited {est.audit_cells} cells: {est.lemma_violations} Lemma and "
      f"{est.coupling_violations} coupling violations")
