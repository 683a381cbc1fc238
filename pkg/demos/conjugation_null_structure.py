"""Conjugation operator and the null structure of the quadratic source.

Shows that Dt intertwines H1 with H0, kills the generalized kernel, and that
the Fourier transform of G_31 vanishes at xi = +-1.

Run: python demos/conjugation_null_structure.py
"""
import numpy as np

from matschro import build_H, build_power_nls_potential, make_grid
from matschro.identities import g31_closed_form, g31_fields
from matschro.projection import conjugation_identity_residual, conjugation_kills_kernel, generalized_kernel_cubic

grid = make_grid(40.0, 1024)
H1 = build_H(build_power_nls_potential(grid, 1.0))
print(f"sup |Dt H1 f - H0 Dt f| / sup |H0 Dt f| over 8 probes: {conjugation_identity_residual(H1):.2e}")
kills = conjugation_kills_kernel(generalized_kernel_cubic(grid))
print("sup |Dt eta_j|:", ", ".join(f"{k:.1e}" for k in kills))

fine = make_grid(40.0, 4096)
G31, G12, _ = g31_fields(fine)
xi = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
num = fine.fourier_at(np.asarray(G31, dtype=complex), xi)
print("\n  xi    quadrature G31^         closed form")
for k, a, b in zip(xi, num, g31_closed_form(xi)):
    print(f"{k:5.1f}  {a.imag:+.10f}i  {b.imag:+.10f}i")
print(f"\nsup |G31 - G12| = {float(np.max(np.abs(G31 - G12))):.1e}")
