import numpy as np
import pytest

from limitmeasure.corpus import builtin_corpus
from limitmeasure.flow import (classify_region, euler_integrate, integrate_ode,
                               omega_limit_estimate, reverse_integrate)
from limitmeasure.errors import EscapeError


def test_linear_decay(linear):
    tr = integrate_ode(linear, np.array([1.0, 0.0]), 1.0, dt=1e-3)
    np.testing.assert_allclose(tr.final, [np.exp(-1.0), 0.0], atol=1e-6)
    assert tr.duration == pytest.approx(1.0)


def test_equilibrium_is_fixed(two_cycles):
    tr = integrate_ode(two_cycles, np.array([1.0, 0.0]), 5.0)
    np.testing.assert_allclose(tr.final, [1.0, 0.0], atol=1e-9)
    np.testing.assert_allclose(reverse_integrate(two_cycles, np.array([1.0, 0.0]), 5.0).final,
                               [1.0, 0.0], atol=1e-9)


def test_closed_v1_settles_on_circle(closed_v1):
    tr = integrate_ode(closed_v1, np.array([3.0, 0.0]), 50.0)
    assert abs(np.linalg.norm(tr.final) - 2.0) < 0.01


def test_reverse_linear(linear):
    tr = reverse_integrate(linear, np.array([0.1, 0.0]), 3.0, dt=1e-3)
    assert np.linalg.norm(tr.final) == pytest.approx(0.1 * np.exp(3.0), rel=1e-8)


def test_reverse_closed_v1_inside_disk(closed_v1):
    # the drift is a pure rotation on the unit disk, so the backward orbit keeps its radius
    tr = reverse_integrate(closed_v1, np.array([0.5, 0.0]), 50.0)
    np.testing.assert_allclose(np.linalg.norm(tr.states, axis=1), 0.5, atol=1e-8)


def test_omega_limit_on_circle(closed_v1):
    cloud = omega_limit_estimate(closed_v1, np.array([3.0, 0.0]), 200.0, 0.1)
    assert np.all(np.abs(np.linalg.norm(cloud, axis=1) - 2.0) < 0.02)


def test_omega_limit_dw2(dw2):
    cloud = omega_limit_estimate(dw2, np.array([0.9, 0.9]), 50.0, 0.1)
    assert np.all(np.linalg.norm(cloud - [1.0, 1.0], axis=1) < 1e-3)


def test_omega_limit_equilibrium(two_cycles):
    cloud = omega_limit_estimate(two_cycles, np.array([1.0, 0.0]), 10.0, 0.1)
    np.testing.assert_allclose(cloud, np.tile([1.0, 0.0], (len(cloud), 1)), atol=1e-12)


@pytest.mark.parametrize("spec", [s for s in builtin_corpus() if s.dim == 2],
                         ids=lambda s: s.name)
def test_semigroup(spec):
    rng = np.random.default_rng(7)
    for _ in range(10):
        x = rng.uniform(-1.0, 1.0, 2) * min(1.0, spec.safe_radius / 3)
        whole = integrate_ode(spec, x, 2.0, dt=1e-4).final
        half = integrate_ode(spec, integrate_ode(spec, x, 1.0, dt=1e-4).final, 1.0, dt=1e-4).final
        np.testing.assert_allclose(whole, half, atol=1e-8)


def test_reverse_then_forward_returns(dw2):
    rng = np.random.default_rng(3)
    for x in rng.uniform(0.2, 0.8, (5, 2)):
        back = reverse_integrate(dw2, x, 1.0, dt=1e-4).final
        np.testing.assert_allclose(integrate_ode(dw2, back, 1.0, dt=1e-4).final, x, atol=1e-6)


def test_euler_is_explicit_euler(linear):
    states = euler_integrate(linear, np.array([1.0, 2.0]), 10, 0.1)
    np.testing.assert_allclose(states[-1], 0.9 ** 10 * np.array([1.0, 2.0]), rtol=1e-14)


def test_escape_raises(linear):
    from limitmeasure.systems import make_system
    grow = make_system("grow", 2, lambda x: x, 5.0)
    with pytest.raises(EscapeError):
        integrate_ode(grow, np.array([1.0, 0.0]), 10.0)


LABELED = [(s, lr) for s in builtin_corpus() for lr in s.metadata.invariant_regions
           if lr.hint is not None]


@pytest.mark.slow
@pytest.mark.parametrize("spec,lr", LABELED,
                         ids=[f"{s.name}:{lr.note or lr.label}" for s, lr in LABELED])
def test_classify_reproduces_labels(spec, lr):
    h = lr.hint
    c = classify_region(spec, lr.region, h.shell_delta, h.n_samples, h.escape_T, h.dt)
    assert c.label == lr.label, c.diagnostic
