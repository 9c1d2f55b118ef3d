"""Mass of small-noise runs near prnot's outer cycle and the fitted exponential rate."""
import numpy as np

from limitmeasure import CircleShell, concentration_scan, get_system

spec = get_system("prnot")
fit = concentration_scan(spec, CircleShell((0, 0), np.sqrt(2.0), 0.1),
                         [0.55, 0.5, 0.45, 0.4, 0.35], dt=1e-3, n_steps=5_000_000,
                         x0=(0.0, 0.0), box=[(-2, 2), (-2, 2)], bins_per_axis=80)
for e, m, se in zip(fit.epsilons, fit.masses, fit.std_errors):
    print(f"eps={e:.2f}  mass={m:.5f} +- {se:.5f}")
print(f"kappa_hat={fit.kappa_hat:.4f}  R^2={fit.r_squared:.4f}")
