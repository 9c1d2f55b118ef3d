"""Acceptance gate: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py`` (lines appear in the terminal
summary) or ``python tests/test_acceptance.py``.
"""
import sys

import numpy as np
import pytest

from limitmeasure.action import Path, action, action_and_gradient, flow_path, lif_path
from limitmeasure.corpus import get_system
from limitmeasure.flow import classify_region, euler_integrate
from limitmeasure.montecarlo import (SimConfig, compare_to_density, concentration_scan,
                                     density_quadrature, em_simulate, fit_decay,
                                     histogram_from_weights, occupation_histogram, region_mass)
from limitmeasure.quasipotential import pr_probe, quasipotential, shell_quasipotential
from limitmeasure.regions import Annulus, Ball, CircleShell

RESULTS = {}
O = np.zeros(2)
BOX = [(-2.0, 2.0), (-2.0, 2.0)]
SQRT2 = np.sqrt(2.0)


def _record(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} | {detail}"
    RESULTS[n] = line
    return ok, line


def criterion_1():
    pr = get_system("prnot")
    cfg = SimConfig(0.5, 1e-3, 21_000_000, (0.0, 0.0), seed=1, burn_in=1_000_000)
    h = occupation_histogram(pr, cfg, BOX, 80)
    c = compare_to_density(h, pr.metadata.exact_density_potential, 0.5)
    ok = c.tv_distance <= 0.15 and abs(c.log_slope / -8.0 - 1) <= 0.10 and c.r_squared >= 0.95
    return _record(1, ok, f"tv={c.tv_distance:.4f} (<=0.15) slope={c.log_slope:.3f} "
                          f"(-8 +-10%) R2={c.r_squared:.4f} (>=0.95)")


def criterion_2():
    pr = get_system("prnot")
    v1 = quasipotential(pr, O, np.array([1.0, 0.0]))
    v2 = quasipotential(pr, O, np.array([SQRT2, 0.0]))
    ok1 = abs(v1 / (5 / 6) - 1) <= 0.10
    ok2 = abs(v2 / (2 / 3) - 1) <= 0.10
    return _record(2, ok1 and ok2, f"V(O,(1,0))={v1:.4f} (5/6 +-10%: {'ok' if ok1 else 'no'}) "
                                   f"V(O,(sqrt2,0))={v2:.4f} (2/3 +-10%: {'ok' if ok2 else 'no'})")


def criterion_3():
    pr = get_system("prnot")
    inward = shell_quasipotential(pr, Ball(O, 1.0), 0.2, 0.1, direction="inward")
    outward = shell_quasipotential(pr, Ball(O, 1.0), 0.1, 0.2, direction="outward")
    ok = abs(inward / 0.0494 - 1) <= 0.20 and outward <= 1e-3
    return _record(3, ok, f"inward={inward:.5f} (0.0494 +-20%) outward={outward:.2e} (<=1e-3)")


def criterion_4():
    pr = get_system("prnot")
    eps = [0.55, 0.5, 0.45, 0.4, 0.35]
    region = CircleShell(O, SQRT2, 0.1)
    fit = concentration_scan(pr, region, eps, 1e-3, 21_000_000, (0.0, 0.0), BOX, 80,
                             master_seed=4, burn_in=1_000_000)
    U = pr.metadata.exact_density_potential
    exact = [region_mass(histogram_from_weights(density_quadrature(U, e, BOX, 80), BOX), region)
             for e in eps]
    kappa_exact = fit_decay(eps, exact).kappa_hat
    ok = 0.45 <= fit.kappa_hat <= 0.75 and fit.r_squared >= 0.9
    return _record(4, ok, f"kappa_hat={fit.kappa_hat:.4f} ([0.45,0.75]) R2={fit.r_squared:.4f} "
                          f"(>=0.9); same fit on exact-density masses gives {kappa_exact:.4f}")


def criterion_5():
    c1 = get_system("closed_orbit_v1")
    h = occupation_histogram(c1, SimConfig(0.15, 1e-2, 4_000_000, (2.0, 0.0), seed=5),
                             [(-3.0, 3.0), (-3.0, 3.0)], 60)
    ring = region_mass(h, Annulus(O, 1.8, 2.2))
    core = region_mass(h, Ball(O, 0.9))
    disk = classify_region(c1, Ball(O, 1.0), 0.1, 64, 100.0, 1e-2).label
    circle = classify_region(c1, CircleShell(O, 2.0, 0.05), 0.1, 64, 50.0, 1e-2).label
    ok = ring >= 0.9 and core <= 0.01 and disk == "repeller" and circle == "attractor"
    return _record(5, ok, f"annulus mass={ring:.5f} (>=0.9) ball mass={core:.5f} (<=0.01) "
                          f"disk={disk} circle={circle}")


def criterion_6():
    tc = get_system("two_cycles")
    from limitmeasure.corpus import TWO_CYCLE_X
    h = occupation_histogram(tc, SimConfig(0.2, 1e-3, 20_000_000, (TWO_CYCLE_X, 0.0), seed=6),
                             [(-2.5, 2.5), (-2.5, 2.5)], 100)
    shells = [region_mass(h, lr.region) for lr in tc.metadata.invariant_regions
              if lr.label == "attractor"]
    dw = get_system("gradient_dw2")
    h2 = occupation_histogram(dw, SimConfig(0.15, 1e-2, 40_000_000, (0.5, 0.5), seed=6),
                              [(-0.5, 1.5), (-0.5, 1.5)], 100)
    balls = [region_mass(h2, Ball(lr.region.center, 0.2)) for lr in dw.metadata.invariant_regions
             if lr.label == "attractor"]
    ok = (len(shells) == 2 and all(abs(m - 0.5) <= 0.1 for m in shells)
          and len(balls) == 4 and all(abs(m - 0.25) <= 0.1 for m in balls))
    return _record(6, ok, "two_cycles shells=" + ",".join(f"{m:.3f}" for m in shells)
                   + " (0.5 +-0.1) dw2 balls=" + ",".join(f"{m:.3f}" for m in balls)
                   + " (0.25 +-0.1)")


def criterion_7():
    pr, c1 = get_system("prnot"), get_system("closed_orbit_v1")
    rng = np.random.default_rng(7)
    checks = {}
    t = np.concatenate([[0.0], np.cumsum(rng.uniform(0.01, 0.2, 40))])
    P = rng.uniform(-1.5, 1.5, (41, 2))
    whole = action(pr, Path(t, P)).value
    worst = max(abs(sum(action(pr, q).value for q in Path(t, P).split(k)) - whole) / whole
                for k in range(1, 40))
    checks["additivity"] = worst <= 1e-12
    x = np.array([3.0, 0.0])
    fine = action(c1, flow_path(c1, x, 2.0, dt=1e-3)).value
    coarse = action(c1, flow_path(c1, x, 2.0, dt=2e-3)).value
    checks["flow_zero"] = fine <= 1e-5 and coarse >= 3.0 * fine
    scaled = pr.with_diffusion(3.0 * np.eye(2))
    checks["a_scaling"] = abs(action(scaled, Path(t, P)).value * 3.0 - whole) <= 1e-12 * whole
    a, b, c = np.array([0.2, -0.3]), np.array([1.1, 0.4]), np.array([-0.6, 1.0])
    checks["triangle"] = (quasipotential(pr, a, c)
                          <= quasipotential(pr, a, b) + quasipotential(pr, b, c) + 0.05)
    tg = np.linspace(0.0, 2.0, 21)
    Pg = lif_path(np.array([-0.8, 0.1]), np.array([0.9, -0.5]), 20).points
    Pg = Pg + 0.1 * rng.standard_normal(Pg.shape)
    _, g = action_and_gradient(pr, tg, Pg)
    fd = np.zeros_like(Pg)
    for k in range(Pg.shape[0]):
        for j in range(2):
            E = np.zeros_like(Pg)
            E[k, j] = 1e-6
            fd[k, j] = (action(pr, Path(tg, Pg + E)).value
                        - action(pr, Path(tg, Pg - E)).value) / 2e-6
    checks["gradient"] = np.linalg.norm(g - fd) <= 1e-4 * np.linalg.norm(fd)
    cfg0 = SimConfig(0.0, 1e-3, 10_000, (0.4, 0.1))
    checks["eps0_euler"] = np.array_equal(em_simulate(pr, cfg0),
                                          euler_integrate(pr, np.array([0.4, 0.1]), 10_000, 1e-3))
    cfg = SimConfig(0.5, 1e-3, 1000, (0.0, 0.0), seed=9)
    checks["seed_determinism"] = np.array_equal(em_simulate(pr, cfg), em_simulate(pr, cfg))
    ok = all(checks.values())
    return _record(7, ok, " ".join(f"{k}={'ok' if v else 'no'}" for k, v in checks.items()))


def criterion_8():
    c1, pr = get_system("closed_orbit_v1"), get_system("prnot")
    w1 = pr_probe(c1, Ball(O, 1.0), 0.05, case="zero_V_exit", x0=(1.0, 0.0), z0=(1.05, 0.0))
    w2 = pr_probe(pr, CircleShell(O, 1.0, 0.0), 0.05, case="transitive")
    w3 = pr_probe(pr, Ball(O, 1.0), 0.1)
    ok = (w1.found and w1.action_value < 0.05 and w2.found and w2.action_value < 0.05
          and not w3.found)
    fmt = lambda w: f"found={w.found} action={w.action_value:.4f}" if w.found else "found=False"
    return _record(8, ok, f"closed_v1 disk {fmt(w1)}; prnot cycle {fmt(w2)}; prnot disk {fmt(w3)}")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8]


@pytest.mark.slow
@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{i + 1}" for i in range(8)])
def test_criterion(criterion):
    ok, line = criterion()
    print(line)
    assert ok, line


if __name__ == "__main__":
    failed = 0
    for crit in CRITERIA:
        ok, line = crit()
        print(line, flush=True)
        failed += not ok
    sys.exit(1 if failed else 0)
