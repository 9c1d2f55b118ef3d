"""Built-in example systems with their known dynamics.

Every entry uses identity diffusion.  Drifts, Hamiltonians and potentials
are numba-compiled pointwise functions so that integration, action
evaluation and simulation run in compiled loops.
"""
import numpy as np
from numba import njit
from scipy.integrate import cumulative_simpson

from .regions import Annulus, Ball, CircleShell, Sublevel
from .systems import (ClassifyHint, CycleMass, KnownStructure, LabeledRegion,
                      LimitMeasureDescriptor, PointMass, gradient_system,
                      hamiltonian_system, make_system)

SQRT2 = np.sqrt(2.0)


@njit
def _tabulate(fn, grid):
    out = np.empty(grid.shape[0])
    for i in range(grid.shape[0]):
        out[i] = fn(grid[i])
    return out


def _antiderivative(fn, lo, hi, n=40001):
    """Compiled ``s -> int_lo^s fn`` by Simpson tables and linear lookup."""
    grid = np.linspace(lo, hi, n)
    vals = _tabulate(fn, grid)
    table = np.concatenate([[0.0], cumulative_simpson(vals, x=grid)])

    @njit
    def prim(s):
        return np.interp(s, grid, table)

    return prim


# --- circular systems: x' = (-x2, x1) + x f(|x|^2) -----------------------

@njit(cache=True)
def _f_closed_v1(s):
    if s <= 1.0:
        return 0.0
    return 2.0 * (s - 1.0) ** 3 * (4.0 - s) / (1.0 + s ** 3)


@njit(cache=True)
def _f_closed_v2(s):
    if s < 1.0:
        return -2.0 * (1.0 - s) ** 3
    if s <= 4.0:
        return 0.0
    return -2.0 * (s - 4.0) ** 3 / (1.0 + s * s)


@njit(cache=True)
def _h_radial(x):
    return -0.5 * (x[0] * x[0] + x[1] * x[1])


@njit(cache=True)
def _gh_radial(x):
    return np.array([-x[0], -x[1]])


@njit(cache=True)
def _F_closed_v1(h):
    return _f_closed_v1(-2.0 * h)


@njit(cache=True)
def _F_closed_v2(h):
    return _f_closed_v2(-2.0 * h)


def _radial_potential(f, s_max):
    # grad U = -x f(|x|^2)  =>  U = -(1/2) int_0^s f
    prim = _antiderivative(f, 0.0, s_max)

    @njit
    def U(x):
        return -0.5 * prim(x[0] * x[0] + x[1] * x[1])

    return U


def _closed_orbit_v1():
    U = _radial_potential(_f_closed_v1, 64.0)
    md = KnownStructure(
        invariant_regions=(
            LabeledRegion(Ball((0, 0), 1.0), "repeller", "unit disk",
                          ClassifyHint(shell_delta=0.1, escape_T=100.0)),
            LabeledRegion(Ball((0, 0), 1.0), "equivalent_class", "unit disk, f = 0 on [0,1]", None),
            LabeledRegion(CircleShell((0, 0), 2.0, 0.05), "attractor", "circle r=2",
                          ClassifyHint(shell_delta=0.1, escape_T=50.0)),
        ),
        expected_limit=LimitMeasureDescriptor((CycleMass((2.0, 0.0), 1.0, "circle r=2"),)),
        equilibria=((0.0, 0.0),),
        exact_density_potential=U,
        density_source="U = -(1/2) int_0^{|x|^2} f",
        equations="x1' = -x2 + x1 f(r^2)\nx2' = x1 + x2 f(r^2)\n"
                  "f(s) = 0 on [0,1], 2(s-1)^3(4-s)/(1+s^3) for s > 1",
    )
    return hamiltonian_system(_h_radial, _gh_radial, _F_closed_v1, "closed_orbit_v1",
                              safe_radius=4.0, metadata=md)


def _closed_orbit_v2():
    U = _radial_potential(_f_closed_v2, 64.0)
    md = KnownStructure(
        invariant_regions=(
            LabeledRegion(Ball((0, 0), 0.0), "attractor", "origin",
                          ClassifyHint(shell_delta=0.3, escape_T=200.0, dt=0.02)),
            LabeledRegion(Annulus((0, 0), 1.0, 2.0), "equivalent_class",
                          "annulus 1 <= r <= 2 of periodic orbits", None),
        ),
        expected_limit=LimitMeasureDescriptor((PointMass((0.0, 0.0), 1.0),)),
        equilibria=((0.0, 0.0),),
        exact_density_potential=U,
        density_source="U = -(1/2) int_0^{|x|^2} f",
        equations="x1' = -x2 + x1 f(r^2)\nx2' = x1 + x2 f(r^2)\n"
                  "f(s) = -2(1-s)^3 on [0,1), 0 on [1,4], -2(s-4)^3/(1+s^2) for s > 4",
    )
    return hamiltonian_system(_h_radial, _gh_radial, _F_closed_v2, "closed_orbit_v2",
                              safe_radius=4.0, metadata=md)


@njit(cache=True)
def _f_accumulation(s):
    u = 1.0 - s
    if u == 0.0:
        return 0.0
    return u ** 5 * np.sin(1.0 / u) ** 2


@njit(cache=True)
def _drift_accumulation(x):
    f = _f_accumulation(x[0] * x[0] + x[1] * x[1])
    return np.array([-x[1] + x[0] * f, x[0] + x[1] * f])


def _accumulation():
    r_in = np.sqrt(1.0 - 1.0 / np.pi)
    r_out = np.sqrt(1.0 + 1.0 / np.pi)
    U = _radial_potential(_f_accumulation, 32.0)
    md = KnownStructure(
        invariant_regions=(
            LabeledRegion(Ball((0, 0), 0.0), "repeller", "origin", ClassifyHint(escape_T=50.0)),
            LabeledRegion(Annulus((0, 0), r_in, r_out), "attractor",
                          "region between the first semistable cycles on either side of S",
                          ClassifyHint(shell_delta=0.05, escape_T=200.0)),
            LabeledRegion(CircleShell((0, 0), 1.0), "equivalent_class", "unit circle S", None),
            LabeledRegion(CircleShell((0, 0), r_in), "saddle_chain_element",
                          "semistable cycle r^2 = 1 - 1/pi", None),
            LabeledRegion(CircleShell((0, 0), r_out), "saddle_chain_element",
                          "semistable cycle r^2 = 1 + 1/pi", None),
        ),
        expected_limit=LimitMeasureDescriptor((CycleMass((1.0, 0.0), 1.0, "unit circle"),)),
        equilibria=((0.0, 0.0),),
        exact_density_potential=U,
        density_source="U = -(1/2) int_0^{|x|^2} f",
        equations="x1' = -x2 + x1 f(r^2)\nx2' = x1 + x2 f(r^2)\nf(s) = (1-s)^5 sin^2(1/(1-s))",
        notes="semistable cycles r^2 = 1 - 1/(n pi), n = +-1, +-2, ... accumulate on S",
    )
    return make_system("accumulation", 2, _drift_accumulation, 2.0 * r_out, md)


# --- figure-eight family: x' = (dH/dx2, -dH/dx1) - F(H) grad H ----------

@njit(cache=True)
def _h_duffing(x):
    return 0.5 * x[1] * x[1] + 0.25 * x[0] ** 4 - 0.5 * x[0] * x[0]


@njit(cache=True)
def _gh_duffing(x):
    return np.array([x[0] ** 3 - x[0], x[1]])


@njit(cache=True)
def _F_positive_part(s):
    # shared branch for s >= 0: zeros at 1/n, smooth C1 ramp to 1 on (1,2)
    if s <= 0.0:
        return 0.0
    if s <= 1.0:
        return s ** 5 * np.sin(np.pi / s) ** 2
    if s < 2.0:
        u = s - 1.0
        return u * u * (3.0 - 2.0 * u)
    return 1.0


@njit(cache=True)
def _F_eight_1(s):
    if s < 0.0:
        return -abs(s) ** 3
    return _F_positive_part(s)


@njit(cache=True)
def _F_eight_2(s):
    if s < 0.0:
        return abs(s) ** 3
    return _F_positive_part(s)


@njit(cache=True)
def _bump(u):
    if u <= 0.0 or u >= 1.0:
        return 0.0
    return np.exp(4.0 - 1.0 / (u * (1.0 - u)))


@njit(cache=True)
def _G(s):
    # Zero exactly on I_n = [1/(2n), 1/(2n-1)], positive on the gaps and on (1, inf).
    if s <= 0.0:
        return 0.0
    if s > 1.0:
        return np.exp(-1.0 / (s - 1.0))
    q = 1.0 / s
    u = q - 2.0 * np.floor(0.5 * q)
    if u >= 1.0:
        return 0.0
    return np.exp(-1.0 / s) * _bump(u)


@njit(cache=True)
def _F_eight_g(s):
    if s < 0.0:
        return -abs(s) ** 3
    return _G(s)


@njit(cache=True)
def _h_level_1(x):
    return abs(_h_duffing(x) - 1.0)


@njit(cache=True)
def _h_level_0(x):
    return abs(_h_duffing(x))


@njit(cache=True)
def _h_band_g1(x):
    return abs(_h_duffing(x) - 0.75)


def _duffing_potential(F):
    prim = _antiderivative(F, -0.25, 80.0, n=160001)

    @njit
    def U(x):
        return prim(_h_duffing(x))

    return U


_EIGHT_EQ = "x' = (x2, -(x1^3 - x1)) - F(H) (x1^3 - x1, x2),  H = x2^2/2 + x1^4/4 - x1^2/2"
_EIGHT_HINT = ClassifyHint(shell_delta=0.1, escape_T=400.0, dt=0.05)


def _figure_eight(i):
    r_out = np.sqrt(1.0 + np.sqrt(5.0))  # H = 1 on the x1 axis
    F = _F_eight_1 if i == 1 else _F_eight_2
    if i == 1:
        regions = (
            LabeledRegion(Ball((1, 0), 0.0), "repeller", "(1,0)", _EIGHT_HINT),
            LabeledRegion(Ball((-1, 0), 0.0), "repeller", "(-1,0)", _EIGHT_HINT),
            LabeledRegion(Sublevel(_h_duffing, 0.5, center=(0.0, 0.0), bound=4.0, name="H"),
                          "attractor", "H <= 1/2", ClassifyHint(shell_delta=0.1, escape_T=100.0)),
            LabeledRegion(Sublevel(_h_level_1, 0.0, center=None, bound=4.0, name="|H-1|"),
                          "saddle_chain_element", "semistable cycle H = 1", None),
        )
        limit = LimitMeasureDescriptor((PointMass((0.0, 0.0), 1.0),))
    else:
        regions = (
            LabeledRegion(Ball((1, 0), 0.0), "attractor", "(1,0)", _EIGHT_HINT),
            LabeledRegion(Ball((-1, 0), 0.0), "attractor", "(-1,0)", _EIGHT_HINT),
            LabeledRegion(Sublevel(_h_level_0, 0.0, center=None, bound=4.0, name="|H|"),
                          "saddle_chain_element", "figure-eight H = 0", None),
        )
        limit = LimitMeasureDescriptor((PointMass((1.0, 0.0)), PointMass((-1.0, 0.0))),
                                       note="weights unspecified, sum 1")
    md = KnownStructure(
        invariant_regions=regions,
        expected_limit=limit,
        equilibria=((0.0, 0.0), (1.0, 0.0), (-1.0, 0.0)),
        exact_density_potential=_duffing_potential(F),
        density_source="U = int_{-1/4}^{H} F",
        equations=_EIGHT_EQ + f"\nF(s) = {'-' if i == 1 else ''}|s|^3 on [-1/4,0), "
                  "s^5 sin^2(pi/s) on [0,1], 3u^2-2u^3 (u=s-1) on (1,2), 1 on [2,inf)",
    )
    return hamiltonian_system(_h_duffing, _gh_duffing, F, f"figure_eight_{i}",
                              safe_radius=2.0 * r_out, metadata=md)


def _figure_eight_g():
    r_out = np.sqrt(1.0 + np.sqrt(5.0))
    md = KnownStructure(
        invariant_regions=(
            LabeledRegion(Ball((1, 0), 0.0), "repeller", "(1,0)", _EIGHT_HINT),
            LabeledRegion(Ball((-1, 0), 0.0), "repeller", "(-1,0)", _EIGHT_HINT),
            LabeledRegion(Sublevel(_h_band_g1, 0.25, center=None, bound=4.0, name="|H-3/4|"),
                          "equivalent_class", "annulus 1/2 <= H <= 1 of periodic orbits", None),
        ),
        expected_limit=LimitMeasureDescriptor((PointMass((0.0, 0.0), 1.0),)),
        equilibria=((0.0, 0.0), (1.0, 0.0), (-1.0, 0.0)),
        exact_density_potential=_duffing_potential(_F_eight_g),
        density_source="U = int_{-1/4}^{H} F",
        equations=_EIGHT_EQ + "\nF(s) = -|s|^3 on [-1/4,0), G(s) for s >= 0",
        notes="G(s) = exp(-1/s) bump(1/s - 2n) between the bands, 0 on I_n = [1/(2n), 1/(2n-1)], "
              "exp(-1/(s-1)) for s > 1; bump(u) = exp(4 - 1/(u(1-u))) on (0,1)",
    )
    return hamiltonian_system(_h_duffing, _gh_duffing, _F_eight_g, "figure_eight_g",
                              safe_radius=2.0 * r_out, metadata=md)


# --- saddle-node systems ----------------------------------------------------

@njit(cache=True)
def _drift_saddle_node_1(x):
    g = 1.0 - x[0] * x[0] - x[1] * x[1]
    return np.array([x[0] * g - x[1] * (1.0 + x[0]), x[0] * (1.0 + x[0]) + x[1] * g])


@njit(cache=True)
def _drift_saddle_node_2(x):
    s = x[0] * x[0] + x[1] * x[1]
    g = s * (1.0 - s)
    return np.array([x[0] * g - 2.0 * x[1] ** 3, x[1] * g + 2.0 * x[0] * x[1] ** 2])


@njit(cache=True)
def _drift_kifer(x):
    s = x[0] * x[0] + x[1] * x[1]
    g = s * (1.0 - s)
    w = np.sqrt(s) - x[0]
    return np.array([x[0] * g - x[0] * x[1] * w, x[1] * g + x[0] * x[0] * w])


_ALG_REPELLER = ClassifyHint(shell_delta=0.3, escape_T=300.0, dt=0.05)


def _saddle_node_1():
    md = KnownStructure(
        invariant_regions=(
            LabeledRegion(Ball((0, 0), 0.0), "repeller", "origin", ClassifyHint(escape_T=50.0)),
            LabeledRegion(CircleShell((0, 0), 1.0), "attractor",
                          "unit circle: saddle-node Q with its homoclinic orbit",
                          ClassifyHint(escape_T=50.0)),
        ),
        expected_limit=LimitMeasureDescriptor((PointMass((-1.0, 0.0), 1.0),)),
        equilibria=((0.0, 0.0), (-1.0, 0.0)),
        equations="x1' = x1(1-r^2) - x2(1+x1)\nx2' = x1(1+x1) + x2(1-r^2)",
    )
    return make_system("saddle_node_1", 2, _drift_saddle_node_1, 2.0, md)


def _saddle_node_2():
    md = KnownStructure(
        invariant_regions=(
            LabeledRegion(Ball((0, 0), 0.0), "repeller", "origin", _ALG_REPELLER),
            LabeledRegion(CircleShell((0, 0), 1.0), "attractor",
                          "unit circle: saddle-nodes (+-1,0) and two connecting orbits",
                          ClassifyHint(escape_T=50.0)),
        ),
        expected_limit=LimitMeasureDescriptor((PointMass((1.0, 0.0)), PointMass((-1.0, 0.0))),
                                              note="weights unspecified, sum 1"),
        equilibria=((0.0, 0.0), (1.0, 0.0), (-1.0, 0.0)),
        equations="x1' = x1 r^2 (1-r^2) - 2 x2^3\nx2' = x2 r^2 (1-r^2) + 2 x1 x2^2",
    )
    return make_system("saddle_node_2", 2, _drift_saddle_node_2, 2.0, md)


def _kifer():
    md = KnownStructure(
        invariant_regions=(
            LabeledRegion(Ball((0, 0), 0.0), "repeller", "origin", _ALG_REPELLER),
            LabeledRegion(CircleShell((0, 0), 1.0), "attractor", "unit circle",
                          ClassifyHint(escape_T=50.0)),
        ),
        expected_limit=LimitMeasureDescriptor((PointMass((0.0, 1.0), 1.0),),
                                              note="stable node B"),
        equilibria=((0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (0.0, -1.0)),
        equations="x1' = x1 r^2 (1-r^2) - x1 x2 (r - x1)\nx2' = x2 r^2 (1-r^2) + x1^2 (r - x1)",
        notes="A(1,0) saddle-node, B(0,1) stable node, C(0,-1) saddle, O repeller",
    )
    return make_system("kifer", 2, _drift_kifer, 2.0, md)


# --- van der Pol variational equation ----------------------------------------

VDP_DETUNING = 0.45
VDP_FORCING = 0.45


@njit(cache=True)
def _drift_vdp(x):
    q = x[0] * x[0] + x[1] * x[1]
    return np.array([x[0] - VDP_DETUNING * x[1] - x[0] * q,
                     VDP_DETUNING * x[0] + x[1] - x[1] * q - VDP_FORCING])


def _vdp_equilibria(sig, gam):
    # With rho = u^2 + v^2: rho((1 - rho)^2 + sig^2) = gam^2.
    out = []
    for rho in np.roots([1.0, -2.0, 1.0 + sig * sig, -gam * gam]):
        if abs(rho.imag) > 1e-10:
            continue
        rho = rho.real
        det = (1.0 - rho) ** 2 + sig * sig
        p = np.array([sig * gam / det, (1.0 - rho) * gam / det])
        J = np.array([[1 - 3 * p[0] ** 2 - p[1] ** 2, -sig - 2 * p[0] * p[1]],
                      [sig - 2 * p[0] * p[1], 1 - p[0] ** 2 - 3 * p[1] ** 2]])
        # One Newton step removes root-finding residue.
        p = p - np.linalg.solve(J, _drift_vdp(p))
        out.append((p, np.linalg.eigvals(J)))
    out.sort(key=lambda e: (e[0][0], e[0][1]))
    return out


def _van_der_pol():
    eqs = _vdp_equilibria(VDP_DETUNING, VDP_FORCING)
    regions = []
    for p, ev in eqs:
        if np.all(ev.real < 0):
            regions.append(LabeledRegion(Ball(tuple(p), 0.0), "attractor", "sink",
                                         ClassifyHint(shell_delta=0.05, escape_T=150.0)))
        elif np.all(ev.real > 0):
            regions.append(LabeledRegion(Ball(tuple(p), 0.0), "repeller", "source",
                                         ClassifyHint(shell_delta=0.05, escape_T=50.0)))
    md = KnownStructure(
        invariant_regions=tuple(regions),
        expected_limit=LimitMeasureDescriptor(
            note="depends on the phase-portrait diagram of the chosen parameters"),
        equilibria=tuple(tuple(p) for p, _ in eqs),
        equations=f"u' = u - sigma v - u(u^2+v^2)\nv' = sigma u + v - v(u^2+v^2) - gamma\n"
                  f"sigma = {VDP_DETUNING}, gamma = {VDP_FORCING}",
    )
    return make_system("van_der_pol_variational", 2, _drift_vdp, 3.0, md)


# --- cooperative irreducible 3D system --------------------------------------

@njit(cache=True)
def _drift_cooperative(x):
    return np.array([-x[0] + x[2] / (1.0 + abs(x[2])), x[0] - x[1], x[1] - 0.5 * x[2]])


def _cooperative_3d():
    p = (0.5, 0.5, 1.0)
    m = (-0.5, -0.5, -1.0)
    hint = ClassifyHint(shell_delta=0.1, escape_T=150.0, n_samples=64)
    md = KnownStructure(
        invariant_regions=(
            LabeledRegion(Ball(p, 0.0), "attractor", "P+", hint),
            LabeledRegion(Ball(m, 0.0), "attractor", "P-", hint),
            LabeledRegion(Ball((0, 0, 0), 0.0), "saddle_chain_element", "saddle O", None),
        ),
        expected_limit=LimitMeasureDescriptor((PointMass(m, 0.5), PointMass(p, 0.5))),
        equilibria=((0.0, 0.0, 0.0), p, m),
        equations="x1' = -x1 + x3/(1+|x3|)\nx2' = x1 - x2\nx3' = x2 - x3/2",
        notes="nonzero equilibria solved from b = 0: +-(1/2, 1/2, 1)",
    )
    return make_system("cooperative_3d", 3, _drift_cooperative, 2.0 * np.linalg.norm(p), md)


# --- two attracting cycles ----------------------------------------------------

@njit(cache=True)
def _F_two_cycles(h):
    return h + 0.125


@njit(cache=True)
def _band_right(x):
    if x[0] <= 0.0:
        return 1e3
    return abs(_h_duffing(x) + 0.125)


@njit(cache=True)
def _band_left(x):
    if x[0] >= 0.0:
        return 1e3
    return abs(_h_duffing(x) + 0.125)


@njit(cache=True)
def _U_two_cycles(x):
    q = _h_duffing(x) + 0.125
    return 0.5 * q * q


TWO_CYCLE_X = np.sqrt(1.0 + 1.0 / np.sqrt(2.0))  # H = -1/8 on the positive x1 axis


def _two_cycles():
    hint = ClassifyHint(shell_delta=0.1, escape_T=150.0, dt=0.02)
    md = KnownStructure(
        invariant_regions=(
            LabeledRegion(Ball((1, 0), 0.0), "repeller", "P+", hint),
            LabeledRegion(Ball((-1, 0), 0.0), "repeller", "P-", hint),
            LabeledRegion(Sublevel(_band_right, 0.25, center=None, bound=3.0, name="|H+1/8| (x1>0)"),
                          "attractor", "band around the cycle in x1 > 0", None),
            LabeledRegion(Sublevel(_band_left, 0.25, center=None, bound=3.0, name="|H+1/8| (x1<0)"),
                          "attractor", "band around the cycle in x1 < 0", None),
            LabeledRegion(Ball((0, 0), 0.0), "saddle_chain_element", "saddle O", None),
        ),
        expected_limit=LimitMeasureDescriptor((
            CycleMass((TWO_CYCLE_X, 0.0), 0.5, "H = -1/8, x1 > 0"),
            CycleMass((-TWO_CYCLE_X, 0.0), 0.5, "H = -1/8, x1 < 0"))),
        equilibria=((0.0, 0.0), (1.0, 0.0), (-1.0, 0.0)),
        exact_density_potential=_U_two_cycles,
        density_source="U = (H + 1/8)^2 / 2",
        equations=_EIGHT_EQ + "\nF(s) = s + 1/8",
        notes="cycle seeds on the x1 axis at +-sqrt(1 + 1/sqrt(2))",
    )
    return hamiltonian_system(_h_duffing, _gh_duffing, _F_two_cycles, "two_cycles",
                              safe_radius=2.0 * TWO_CYCLE_X, metadata=md)


# --- counterexample with explicit stationary density ------------------------

@njit(cache=True)
def _drift_prnot(x):
    s = x[0] * x[0] + x[1] * x[1]
    g = (s - 1.0) * (s - 2.0)
    return np.array([x[1] - x[0] * g, -x[0] - x[1] * g])


@njit(cache=True)
def _U_prnot(x):
    s = x[0] * x[0] + x[1] * x[1]
    return s ** 3 / 6.0 - 0.75 * s * s + s


def prnot_potential(r):
    """Radial profile of the counterexample potential."""
    s = np.asarray(r, dtype=float) ** 2
    return s ** 3 / 6.0 - 0.75 * s * s + s


def _prnot():
    md = KnownStructure(
        invariant_regions=(
            LabeledRegion(Ball((0, 0), 0.0), "attractor", "stable focus O", ClassifyHint(escape_T=30.0)),
            LabeledRegion(Ball((0, 0), 1.0), "repeller", "closed unit disk",
                          ClassifyHint(escape_T=30.0)),
            LabeledRegion(CircleShell((0, 0), 1.0, 0.05), "repeller", "unstable cycle r=1",
                          ClassifyHint(escape_T=30.0)),
            LabeledRegion(CircleShell((0, 0), SQRT2, 0.05), "attractor", "stable cycle r=sqrt(2)",
                          ClassifyHint(escape_T=30.0)),
        ),
        expected_limit=LimitMeasureDescriptor((PointMass((0.0, 0.0), 1.0),)),
        equilibria=((0.0, 0.0),),
        exact_density_potential=_U_prnot,
        density_source="U = s^3/6 - 3 s^2/4 + s, s = r^2",
        equations="x' = y - x(r^2-1)(r^2-2)\ny' = -x - y(r^2-1)(r^2-2)",
    )
    return make_system("prnot", 2, _drift_prnot, 2.0 * SQRT2, md)


# --- gradient double well ---------------------------------------------------

@njit(cache=True)
def _F_dw2(x):
    return x[0] ** 2 * (x[0] - 1.0) ** 2 + x[1] ** 2 * (x[1] - 1.0) ** 2


@njit(cache=True)
def _grad_F_dw2(x):
    return np.array([2.0 * x[0] * (x[0] - 1.0) * (2.0 * x[0] - 1.0),
                     2.0 * x[1] * (x[1] - 1.0) * (2.0 * x[1] - 1.0)])


DW2_MINIMA = ((0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0))
DW2_SADDLES = ((0.0, 0.5), (0.5, 0.0), (0.5, 1.0), (1.0, 0.5))


def _gradient_dw2():
    regions = [LabeledRegion(Ball(m, 0.0), "attractor", f"minimum {m}", ClassifyHint(escape_T=30.0))
               for m in DW2_MINIMA]
    regions += [LabeledRegion(Ball(p, 0.0), "saddle_chain_element", f"saddle {p}", None)
                for p in DW2_SADDLES]
    regions.append(LabeledRegion(Ball((0.5, 0.5), 0.0), "repeller", "maximum (1/2,1/2)",
                                 ClassifyHint(escape_T=30.0)))
    md = KnownStructure(
        invariant_regions=tuple(regions),
        expected_limit=LimitMeasureDescriptor(tuple(PointMass(m, 0.25) for m in DW2_MINIMA)),
        equilibria=DW2_MINIMA + DW2_SADDLES + ((0.5, 0.5),),
        exact_density_potential=_F_dw2,
        density_source="U = F",
        equations="x' = -grad F,  F = x1^2 (x1-1)^2 + x2^2 (x2-1)^2",
    )
    return gradient_system(_F_dw2, _grad_F_dw2, "gradient_dw2", 2,
                           safe_radius=2.0 * SQRT2, metadata=md)


_BUILDERS = (_closed_orbit_v1, _closed_orbit_v2, _accumulation,
             lambda: _figure_eight(1), lambda: _figure_eight(2), _figure_eight_g,
             _saddle_node_1, _saddle_node_2, _kifer, _van_der_pol, _cooperative_3d,
             _two_cycles, _prnot, _gradient_dw2)

_CACHE = {}


def builtin_corpus():
    """All example systems, in a fixed order."""
    if not _CACHE:
        for build in _BUILDERS:
            spec = build()
            _CACHE[spec.name] = spec
    return list(_CACHE.values())


def get_system(name):
    builtin_corpus()
    try:
        return _CACHE[name]
    except KeyError:
        raise KeyError(f"unknown system {name!r}; known: {', '.join(_CACHE)}") from None
