import numpy as np
import pytest

from limitmeasure.action import Path, action, lif_path
from limitmeasure.corpus import builtin_corpus, get_system, prnot_potential
from limitmeasure.flow import integrate_ode
from limitmeasure.quasipotential import (chain_zero_action_path, hamiltonian_drift_path,
                                         is_equivalent, minimize_action, quasipotential,
                                         refine_result, shell_quasipotential)
from limitmeasure.regions import Ball

O = np.zeros(2)
SLACK = 0.05


@pytest.fixture(scope="module")
def prnot_values(prnot):
    r1 = np.array([1.0, 0.0])
    r2 = np.array([np.sqrt(2.0), 0.0])
    return {"O1": quasipotential(prnot, O, r1), "O2": quasipotential(prnot, O, r2),
            "12": quasipotential(prnot, r1, r2)}


def test_flow_reachable_target_is_free(closed_v1):
    x = np.array([3.0, 0.0])
    y = integrate_ode(closed_v1, x, 2.0, dt=1e-3).final
    assert minimize_action(closed_v1, x, y).value <= 1e-4


def test_prnot_origin_to_unit_circle(prnot_values):
    assert prnot_values["O1"] == pytest.approx(5.0 / 6.0, rel=0.10)


def test_triangle_inequality_prnot(prnot_values):
    v = prnot_values
    assert v["O2"] <= v["O1"] + v["12"] + SLACK


def _exact_V_from_origin(r):
    # the cheapest path from O climbs U monotonically, so V = 2 max U along the ray
    grid = np.linspace(0.0, r, 2001)
    return 2.0 * max(prnot_potential(s) for s in grid)


@pytest.mark.slow
@pytest.mark.parametrize("r", [0.5, 1.0, 1.2, np.sqrt(2.0)])
def test_prnot_ray_matches_potential(prnot, r):
    v = quasipotential(prnot, O, np.array([r, 0.0]))
    assert v == pytest.approx(_exact_V_from_origin(r), rel=0.10)


def test_value_below_lif_action(prnot):
    rng = np.random.default_rng(5)
    for _ in range(3):
        x, y = rng.uniform(-1.2, 1.2, (2, 2))
        v = quasipotential(prnot, x, y)
        assert v <= action(prnot, lif_path(x, y, 200)).value + 1e-12


@pytest.mark.slow
def test_triangle_random_triples(prnot):
    rng = np.random.default_rng(9)
    for _ in range(10):
        x, y, z = rng.uniform(-1.3, 1.3, (3, 2))
        vxz = quasipotential(prnot, x, z)
        assert vxz <= quasipotential(prnot, x, y) + quasipotential(prnot, y, z) + 2 * SLACK


@pytest.mark.slow
def test_flow_images_cost_nothing():
    rng = np.random.default_rng(2)
    systems = [s for s in builtin_corpus() if s.dim == 2]
    for k in range(10):
        spec = systems[rng.integers(len(systems))]
        x = rng.uniform(-1.0, 1.0, 2)
        y = integrate_ode(spec, x, 1.0, dt=1e-3).final
        assert quasipotential(spec, x, y, n_segments=200) < 1e-3, spec.name


@pytest.mark.slow
def test_refinement_does_not_increase_value(prnot):
    res = minimize_action(prnot, O, np.array([0.8, 0.3]), n_segments=50)
    finer = refine_result(prnot, res)
    assert finer.n_segments == 100
    assert finer.value <= res.value + 1e-6


def test_equivalent_points_on_orbit(closed_v1):
    assert is_equivalent(closed_v1, np.array([2.0, 0.0]), np.array([-2.0, 0.0]))


@pytest.mark.slow
def test_equivalent_annulus(closed_v2):
    assert is_equivalent(closed_v2, np.array([1.2, 0.0]), np.array([1.8, 0.0]))


@pytest.mark.slow
def test_not_equivalent_across_shells(closed_v1):
    assert quasipotential(closed_v1, np.array([2.0, 0.0]), np.array([0.5, 0.0])) > 0.05
    assert not is_equivalent(closed_v1, np.array([0.5, 0.0]), np.array([2.0, 0.0]))


def test_shell_closed_v1_positive(closed_v1):
    v = shell_quasipotential(closed_v1, Ball(O, 1.0), 0.2, 0.1, direction="inward")
    assert v > 0.005


@pytest.mark.parametrize("lam", [-0.1, -0.01])
def test_hamiltonian_path_endpoints_and_monotone_H(closed_v2, lam):
    x, y = np.array([1.8, 0.0]), np.array([1.2, 0.0])
    p = hamiltonian_drift_path(closed_v2, x, y, lam)
    assert np.linalg.norm(p.start - x) <= 1e-8 and np.linalg.norm(p.end - y) <= 1e-8
    H = closed_v2.hamiltonian[0]
    hs = np.array([H(q) for q in p.points])
    k = int(np.argmax(hs >= H(y) - 1e-12))
    assert k > 0
    assert np.all(np.diff(hs[: k + 1]) > -1e-10)


def test_hamiltonian_path_action_scales_with_lambda(closed_v2):
    x, y = np.array([1.8, 0.0]), np.array([1.2, 0.0])
    H = closed_v2.hamiltonian[0]
    C = abs(H(y) - H(x))
    big = action(closed_v2, hamiltonian_drift_path(closed_v2, x, y, -0.1)).value
    small = action(closed_v2, hamiltonian_drift_path(closed_v2, x, y, -0.01)).value
    assert small < big
    assert big <= C * 0.1 and small <= C * 0.01


def test_hamiltonian_path_rejects_wrong_sign(closed_v2):
    with pytest.raises(ValueError):
        hamiltonian_drift_path(closed_v2, np.array([1.8, 0.0]), np.array([1.2, 0.0]), 0.1)


def test_chain_dw2_saddle_to_minimum(dw2):
    p = chain_zero_action_path(dw2, [((1.0, 0.5), (1.0, 0.6)), ((1.0, 1.0), None)])
    np.testing.assert_allclose(p.start, [1.0, 0.5], atol=1e-12)
    assert np.linalg.norm(p.end - [1.0, 1.0]) < 0.05
    assert action(dw2, p).value < 0.01


@pytest.mark.slow
def test_chain_saddle_node_homoclinic():
    sn = get_system("saddle_node_1")
    x = np.array([np.cos(2.0), np.sin(2.0)])
    p = chain_zero_action_path(sn, [(x, x), ((-1.0, 0.0), None)], dt=1e-3, back_T=0.0,
                               fwd_T=2e4)
    assert action(sn, p).value < 1e-4


def test_chain_single_waypoint(dw2):
    p = chain_zero_action_path(dw2, [((1.0, 1.0), None)])
    assert action(dw2, p).value == 0.0
    np.testing.assert_array_equal(p.start, [1.0, 1.0])
