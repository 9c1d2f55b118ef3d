import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from limitmeasure.flow import euler_integrate
from limitmeasure.montecarlo import (SimConfig, compare_to_density, concentration_scan,
                                     density_quadrature, em_simulate, em_stream, fit_decay,
                                     histogram_from_weights, occupation_histogram, region_mass)
from limitmeasure.regions import Annulus, Ball, CircleShell

BOX = [(-2.0, 2.0), (-2.0, 2.0)]


def test_zero_noise_is_explicit_euler(prnot):
    cfg = SimConfig(0.0, 1e-3, 5000, (0.3, -0.2), seed=4)
    np.testing.assert_array_equal(em_simulate(prnot, cfg),
                                  euler_integrate(prnot, np.array([0.3, -0.2]), 5000, 1e-3))


def test_seed_determinism(prnot):
    cfg = SimConfig(0.5, 1e-3, 1000, (0.0, 0.0), seed=17)
    a, b = em_simulate(prnot, cfg), em_simulate(prnot, cfg)
    np.testing.assert_array_equal(a, b)
    c = em_simulate(prnot, SimConfig(0.5, 1e-3, 1000, (0.0, 0.0), seed=18))
    assert not np.array_equal(a, c)


def test_stream_windows_agree(prnot):
    cfg = SimConfig(0.5, 1e-3, 200_000, (0.0, 0.0), seed=1)
    whole = em_simulate(prnot, cfg)
    start = 150_001
    parts = np.vstack([s for _, s in em_stream(prnot, cfg, start=start)])
    np.testing.assert_array_equal(parts, whole[start + 1:])


@settings(max_examples=25, deadline=None)
@given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5), st.integers(0, 2**32), st.integers(1, 40))
def test_histogram_normalization(prnot, x, y, seed, bins):
    cfg = SimConfig(0.5, 1e-3, 4000, (x, y), seed=seed, burn_in=100)
    h = occupation_histogram(prnot, cfg, [(-1.0, 1.0), (-1.0, 1.0)], bins, n_batches=4)
    assert h.n_samples == cfg.n_kept
    assert h.weights.sum() + h.out_of_box_mass == pytest.approx(1.0, abs=1e-12)
    assert region_mass(h, Ball((0, 0), 100.0)) == pytest.approx(1.0 - h.out_of_box_mass,
                                                                abs=1e-12)
    assert region_mass(h, Ball((10.0, 10.0), 0.5)) == 0.0


@pytest.mark.slow
def test_ou_stationary_variance(linear):
    cfg = SimConfig(1.0, 1e-3, 10_000_000, (0.0, 0.0), seed=3)
    var = np.zeros(2)
    n = 0
    for _, s in em_stream(linear, cfg, start=cfg.burn_in):
        var += np.sum(s ** 2, axis=0)
        n += len(s)
    np.testing.assert_allclose(var / n, 0.5, rtol=0.05)


@pytest.fixture(scope="module")
def prnot_hist(prnot):
    cfg = SimConfig(0.5, 1e-3, 6_000_000, (0.0, 0.0), seed=11)
    return occupation_histogram(prnot, cfg, BOX, 80)


def test_ball_mass_matches_quadrature(prnot, prnot_hist):
    U = prnot.metadata.exact_density_potential
    exact = histogram_from_weights(density_quadrature(U, 0.5, BOX, 80), BOX)
    reg = Ball((0, 0), 0.3)
    assert region_mass(prnot_hist, reg) == pytest.approx(region_mass(exact, reg), rel=0.25)


def test_self_comparison_is_exact(prnot):
    U = prnot.metadata.exact_density_potential
    for eps in (0.4, 0.5):
        h = histogram_from_weights(density_quadrature(U, eps, BOX, 80), BOX, n_samples=10**9)
        cmp = compare_to_density(h, U, eps)
        assert cmp.tv_distance < 1e-12
        assert cmp.log_slope == pytest.approx(-2.0 / eps ** 2, rel=1e-9)
        assert cmp.r_squared == pytest.approx(1.0, abs=1e-9)


@pytest.mark.slow
def test_prnot_slope_at_smaller_noise(prnot):
    cfg = SimConfig(0.4, 1e-3, 20_000_000, (0.0, 0.0), seed=5, burn_in=1_000_000)
    h = occupation_histogram(prnot, cfg, BOX, 80)
    cmp = compare_to_density(h, prnot.metadata.exact_density_potential, 0.4)
    assert cmp.log_slope == pytest.approx(-12.5, rel=0.10)


def test_seed_independence(prnot):
    regions = (Ball((0, 0), 0.3), CircleShell((0, 0), np.sqrt(2.0), 0.1), Annulus((0, 0), 0.5, 1.0))
    hs = [occupation_histogram(prnot, SimConfig(0.5, 1e-3, 2_000_000, (0.0, 0.0), seed=s), BOX, 40)
          for s in (101, 202)]
    for reg in regions:
        (m1, s1), (m2, s2) = (region_mass(h, reg, return_se=True) for h in hs)
        assert abs(m1 - m2) <= 3.0 * np.hypot(s1, s2)


def test_zero_noise_concentrates_on_attractor(closed_v1):
    box = [(-3.0, 3.0), (-3.0, 3.0)]
    bins = 60
    cfg = SimConfig(0.0, 1e-2, 20_000, (3.0, 0.0), burn_in=5_000)
    h = occupation_histogram(closed_v1, cfg, box, bins)
    delta = 2.0 * np.hypot(6.0 / bins, 6.0 / bins)
    half = 0.5 * np.hypot(6.0 / bins, 6.0 / bins)
    r = np.linalg.norm(h.centers, axis=-1)
    near = np.abs(r - 2.0) <= delta + half
    assert h.weights[near].sum() == pytest.approx(1.0, abs=1e-12)


def test_closed_v1_mass_on_cycle(closed_v1):
    cfg = SimConfig(0.15, 1e-2, 2_000_000, (2.0, 0.0), seed=2)
    h = occupation_histogram(closed_v1, cfg, [(-3.0, 3.0), (-3.0, 3.0)], 60)
    assert region_mass(h, Annulus((0, 0), 1.8, 2.2)) >= 0.9


@pytest.mark.slow
def test_two_cycles_symmetric_masses(two_cycles):
    from limitmeasure.corpus import TWO_CYCLE_X
    cfg = SimConfig(0.2, 1e-3, 10_000_000, (TWO_CYCLE_X, 0.0), seed=8)
    h = occupation_histogram(two_cycles, cfg, [(-2.5, 2.5), (-2.5, 2.5)], 100)
    cycles = [lr.region for lr in two_cycles.metadata.invariant_regions
              if lr.label == "attractor"]
    assert len(cycles) == 2
    (m1, s1), (m2, s2) = (region_mass(h, c, return_se=True) for c in cycles)
    assert abs(m1 - m2) <= 3.0 * np.hypot(s1, s2)


def test_histogram_determinism(prnot):
    cfg = SimConfig(0.5, 1e-3, 300_000, (0.0, 0.0), seed=21)
    a = occupation_histogram(prnot, cfg, BOX, 30)
    b = occupation_histogram(prnot, cfg, BOX, 30)
    np.testing.assert_array_equal(a.batch_counts, b.batch_counts)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.1, 3.0), st.floats(-3.0, 0.0))
def test_fit_decay_recovers_exact_rate(kappa, c):
    eps = np.array([0.55, 0.5, 0.45, 0.4, 0.35])
    fit = fit_decay(eps, np.exp(c - kappa / eps ** 2))
    assert fit.kappa_hat == pytest.approx(kappa, rel=1e-9)
    assert fit.intercept == pytest.approx(c, abs=1e-9)
    assert not fit.lower_confidence


def test_fit_decay_floors_zero_masses():
    fit = fit_decay([0.5, 0.4, 0.3], [1e-3, 1e-5, 0.0], n_samples=10**6)
    assert fit.floored == (False, False, True)
    assert fit.lower_confidence
    assert np.isfinite(fit.kappa_hat)


def test_scan_determinism(prnot):
    args = (prnot, Ball((0, 0), 0.3), [0.6, 0.5, 0.45], 1e-3, 200_000, (0.0, 0.0), BOX, 20)
    a = concentration_scan(*args, master_seed=4)
    b = concentration_scan(*args, master_seed=4)
    assert a.masses == b.masses and a.kappa_hat == b.kappa_hat


@pytest.mark.slow
def test_repeller_mass_decays(closed_v1):
    fit = concentration_scan(closed_v1, Ball((0, 0), 0.3), [0.8, 0.7, 0.6, 0.5, 0.45], 1e-2,
                             4_000_000, (2.0, 0.0), [(-3.0, 3.0), (-3.0, 3.0)], 60)
    assert fit.kappa_hat > 0 and fit.r_squared >= 0.8


@pytest.mark.slow
def test_attractor_mass_does_not_decay(closed_v1):
    fit = concentration_scan(closed_v1, Annulus((0, 0), 1.7, 2.3), [0.5, 0.45, 0.4, 0.35, 0.3],
                             1e-2, 2_000_000, (2.0, 0.0), [(-3.0, 3.0), (-3.0, 3.0)], 60)
    assert abs(fit.kappa_hat) <= 0.05


def test_invalid_config():
    with pytest.raises(ValueError):
        SimConfig(-0.1, 1e-3, 10, (0.0, 0.0))
    with pytest.raises(ValueError):
        SimConfig(0.1, 0.0, 10, (0.0, 0.0))
