import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from limitmeasure.corpus import builtin_corpus, get_system
from limitmeasure.errors import InvalidSystemError
from limitmeasure.flow import integrate_ode
from limitmeasure.systems import (check_system, eval_inverse_quadform, hamiltonian_system,
                                  make_system, catalog_text)

CORPUS = builtin_corpus()


def test_corpus_names_unique_and_lookup():
    names = [s.name for s in CORPUS]
    assert len(names) == len(set(names))
    for n in names:
        assert get_system(n) is get_system(n)
    with pytest.raises(KeyError):
        get_system("no_such_system")


def test_prnot_potential_zero_at_origin(prnot):
    U = prnot.metadata.exact_density_potential
    assert U(np.zeros(2)) == 0.0


def test_closed_v1_circle_is_attractor(closed_v1):
    labels = [(type(r.region).__name__, r.region.radius, r.label)
              for r in closed_v1.metadata.invariant_regions]
    assert ("CircleShell", 2.0, "attractor") in labels


def test_dw2_drift_vanishes_at_center(dw2):
    np.testing.assert_array_equal(dw2.b(np.array([0.5, 0.5])), np.zeros(2))


@pytest.mark.parametrize("spec", CORPUS, ids=lambda s: s.name)
def test_random_points_spd_and_finite(spec):
    X = check_system(spec, n_points=100, seed=1)
    assert np.all(np.isfinite(spec.drift_many(X)))


@pytest.mark.parametrize("spec", CORPUS, ids=lambda s: s.name)
def test_listed_equilibria_are_equilibria(spec):
    for p in spec.metadata.equilibria:
        assert np.linalg.norm(spec.b(np.asarray(p, dtype=float))) < 1e-12


def _H(x):
    return 0.5 * (x[0] ** 2 + x[1] ** 2)


def _gH(x):
    return np.array([x[0], x[1]])


def _zero(h):
    return 0.0


@pytest.fixture(scope="module")
def rotation():
    return hamiltonian_system(_H, _gH, _zero, "rotation")


def test_hamiltonian_rotation_drift(rotation):
    np.testing.assert_allclose(rotation.b(np.array([1.0, 0.0])), [0.0, -1.0], atol=1e-15)


def test_two_cycles_equilibria(two_cycles):
    for p in ((1.0, 0.0), (-1.0, 0.0), (0.0, 0.0)):
        assert np.linalg.norm(two_cycles.b(np.array(p))) < 1e-12


def test_hamiltonian_flow_conserves_H(rotation):
    tr = integrate_ode(rotation, np.array([1.0, 0.5]), 10.0, dt=1e-3)
    H = np.array([_H(s) for s in tr.states])
    assert np.max(np.abs(H - H[0])) < 1e-6


def test_bad_gradient_rejected():
    with pytest.raises(InvalidSystemError):
        hamiltonian_system(_H, lambda x: np.array([x[1], x[0]]), _zero, "bad")


def test_quadform_examples(linear):
    assert eval_inverse_quadform(linear, np.zeros(2), np.array([3.0, 4.0])) == pytest.approx(25.0)
    assert eval_inverse_quadform(linear, np.zeros(2), np.zeros(2)) == 0.0
    scaled = linear.with_diffusion(np.diag([4.0, 1.0]))
    assert eval_inverse_quadform(scaled, np.zeros(2), np.array([2.0, 0.0])) == pytest.approx(1.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=2, max_size=2),
       st.floats(0.1, 10.0), st.floats(-0.9, 0.9))
def test_quadform_nonnegative_and_scales(v, d, rho):
    base = make_system("lin_q", 2, lambda x: -x, 10.0)
    a = np.array([[d, rho * np.sqrt(d)], [rho * np.sqrt(d), 1.0]])
    spec = base.with_diffusion(a)
    v = np.array(v)
    q = eval_inverse_quadform(spec, np.zeros(2), v)
    assert q >= 0.0
    np.testing.assert_allclose(q, v @ np.linalg.solve(a, v), rtol=1e-9, atol=1e-12)


def test_non_spd_diffusion_rejected(linear):
    with pytest.raises(InvalidSystemError):
        linear.with_diffusion(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_catalog_lists_every_system():
    text = catalog_text(CORPUS)
    for s in CORPUS:
        assert f"[{s.name}]" in text
