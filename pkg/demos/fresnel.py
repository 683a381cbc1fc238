"""The cutoff Fresnel integral G_t(r) against its stationary-phase asymptote.

Run: python demos/fresnel.py
"""
import numpy as np

from matschro import gt_integral
from matschro.evolution import fresnel_constant, gt_asymptote, gt_asymptotic_error

print("    t      r     |G_t(r)|    |asymptote|   scaled error")
for t in (2.0, 10.0, 40.0):
    for r in (0.0, 5.0, 20.0):
        g = gt_integral(t, r)
        print(f"{t:5.1f}  {r:5.1f}   {abs(g):.6f}    {abs(gt_asymptote(t, r)):.6f}     "
              f"{gt_asymptotic_error(t, r):.3e}")

ts = np.geomspace(1, 100, 12)
rs = np.linspace(0, 50, 11)
print(f"\nsup of scaled error over the sweep: {fresnel_constant(ts, rs):.5f} "
      f"(refined quadrature: {fresnel_constant(ts, rs, refine=2):.5f})")
