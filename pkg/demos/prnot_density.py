"""Occupation histogram of prnot at eps = 0.5 against the exact stationary density."""
import sys

from limitmeasure import SimConfig, compare_to_density, export_csv, get_system, occupation_histogram

n_steps = int(float(sys.argv[1])) if len(sys.argv) > 1 else 5_000_000
spec = get_system("prnot")
cfg = SimConfig(epsilon=0.5, dt=1e-3, n_steps=n_steps, x0=(0.0, 0.0), seed=1)
hist = occupation_histogram(spec, cfg, [(-2, 2), (-2, 2)], 80)
cmp = compare_to_density(hist, spec.metadata.exact_density_potential, cfg.epsilon)
print(f"kept steps        {hist.n_samples}")
print(f"total variation   {cmp.tv_distance:.4f}")
print(f"log-weight slope  {cmp.log_slope:.3f}  (expected {cmp.expected_slope:g})")
print(f"R^2               {cmp.r_squared:.4f}")
export_csv(hist, "prnot_histogram.csv")
