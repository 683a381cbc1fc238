"""Find the threshold resonance of the cubic linearization and compare it with the exact one.

Run: python demos/threshold_resonance.py
"""
import numpy as np

from matschro import analyze_threshold, build_power_nls_potential, make_grid
from matschro.identities import exact_resonance

grid = make_grid(20.0, 1024)

for sigma in (1.0, 2.0):
    res, fp = analyze_threshold(build_power_nls_potential(grid, sigma))
    print(f"sigma = {sigma:g}: {res.cls.kind}, rank {res.cls.rank}, gap ratio {res.cls.singular_gap:.3g}")

# the cubic case is irregular; its resonance should be (tanh^2, -sech^2)
res, fp = analyze_threshold(build_power_nls_potential(grid, 1.0))
rd = res.resonance
err = np.max(np.abs(rd.psi.values - exact_resonance(grid.x)))
print(f"sup |Psi - (tanh^2, -sech^2)| = {err:.2e}")
print(f"c0 = {rd.c0.real:.8f}, |c1| = {abs(rd.c1):.1e}, |c2+-| <= {max(abs(rd.c2_plus), abs(rd.c2_minus)):.1e}")
print(f"eta = {rd.eta:.8f} (5/24 = {5 / 24:.8f}), d = {rd.d:.6f}")

# Psi1 tends to c0 at both ends; a bounded, non-decaying solution at energy mu
left, right = rd.psi.values[0, 0], rd.psi.values[0, -1]
print(f"Psi1 at the box ends: {left.real:.8f}, {right.real:.8f}")
