"""Quasipotential from the origin along the positive x-axis of prnot,
compared with twice the running maximum of the exact density potential."""
import numpy as np

from limitmeasure import Ball, get_system, quasipotential, shell_quasipotential
from limitmeasure.corpus import prnot_potential

spec = get_system("prnot")
print(f"{'r':>6} {'V(O,(r,0))':>12} {'2 max U':>10}")
for r in (0.5, 0.8, 1.0, 1.2, np.sqrt(2.0)):
    v = quasipotential(spec, np.zeros(2), np.array([r, 0.0]))
    oracle = 2.0 * max(prnot_potential(s) for s in np.linspace(0.0, r, 2001))
    print(f"{r:6.3f} {v:12.5f} {oracle:10.5f}")

inward = shell_quasipotential(spec, Ball((0, 0), 1.0), 0.2, 0.1, direction="inward")
outward = shell_quasipotential(spec, Ball((0, 0), 1.0), 0.1, 0.2, direction="outward")
print(f"shell r=1.2 -> r=1.1: {inward:.5f}  (2 dU = {2 * (prnot_potential(1.1) - prnot_potential(1.2)):.5f})")
print(f"shell r=1.1 -> r=1.2: {outward:.2e}")
