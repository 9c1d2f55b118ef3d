"""Deterministic flow of ``x' = b(x)``: integration, tails and region classification."""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._numerics import is_jitted, rk4
from ._parallel import ordered_map
from .errors import EscapeError

DEFAULT_DT = 1e-2


@dataclass(frozen=True)
class Trajectory:
    """Fixed-step solution: ``states[k]`` approximates the flow at ``times[k]``."""

    times: np.ndarray
    states: np.ndarray
    dt: float

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise ValueError("times and states differ in length")

    @property
    def final(self):
        return self.states[-1]

    @property
    def duration(self):
        return float(self.times[-1])

    def __len__(self):
        return len(self.times)


def _grid(T, dt):
    if not T > 0 or not dt > 0:
        raise ValueError("T and dt must be positive")
    n = max(1, int(np.ceil(T / dt - 1e-9)))
    last = T - (n - 1) * dt
    times = np.arange(n + 1, dtype=float) * dt
    times[-1] = T
    return n, last, times


def _check_start(spec, x0):
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (spec.dim,):
        raise ValueError(f"start point must have shape ({spec.dim},)")
    if not x0 @ x0 <= spec.safe_radius ** 2:
        raise EscapeError(f"{spec.name}: start {x0.tolist()} outside the safe radius", step=0, time=0.0)
    return x0


def _integrate(spec, x0, T, dt, sign):
    x0 = _check_start(spec, x0)
    n, last, times = _grid(float(T), float(dt))
    states, esc = rk4(spec.drift, x0, n, dt, last, sign, spec.safe_radius ** 2)
    if esc >= 0:
        direction = "forward" if sign > 0 else "backward"
        raise EscapeError(f"{spec.name}: {direction} trajectory from {x0.tolist()} left the safe "
                          f"radius {spec.safe_radius:g} at t={times[esc]:.6g}",
                          step=esc, time=float(times[esc]))
    return Trajectory(times, states, float(dt))


def integrate_ode(spec, x0, T, dt=DEFAULT_DT):
    """Classical RK4 with fixed step ``dt``; the last step is shortened to land on ``T``.

    Raises
    ------
    EscapeError
        If a state leaves the safe radius; carries the escape step and time.
    """
    return _integrate(spec, x0, T, dt, 1.0)


def reverse_integrate(spec, x0, T, dt=DEFAULT_DT):
    """Backward flow, integrating ``-b`` forward in time over ``[0, T]``."""
    return _integrate(spec, x0, T, dt, -1.0)


def euler_integrate(spec, x0, n_steps, dt):
    """Explicit Euler ``x + b(x) dt``; the zero-noise reference for Euler-Maruyama."""
    x = _check_start(spec, x0).copy()
    out = np.empty((n_steps + 1, spec.dim))
    out[0] = x
    for k in range(n_steps):
        x = x + spec.drift(x) * dt
        out[k + 1] = x
    return out


def omega_limit_estimate(spec, x0, horizon, tail_fraction=0.1, dt=DEFAULT_DT):
    """Trailing ``tail_fraction`` of a trajectory of length ``horizon``.

    A point cloud standing in for the omega-limit set of ``x0``; how long
    ``horizon`` must be is up to the caller.
    """
    if not 0.0 < tail_fraction < 1.0:
        raise ValueError("tail_fraction must lie in (0, 1)")
    tr = integrate_ode(spec, x0, horizon, dt)
    k = max(1, int(np.ceil(tail_fraction * len(tr))))
    return tr.states[-k:]


def alpha_limit_estimate(spec, x0, horizon, tail_fraction=0.1, dt=DEFAULT_DT):
    """Backward-time counterpart of :func:`omega_limit_estimate`."""
    if not 0.0 < tail_fraction < 1.0:
        raise ValueError("tail_fraction must lie in (0, 1)")
    tr = reverse_integrate(spec, x0, horizon, dt)
    k = max(1, int(np.ceil(tail_fraction * len(tr))))
    return tr.states[-k:]


@dataclass(frozen=True)
class RegionClassification:
    """Empirical label of a region from its delta-shell.

    ``forward_escape_time`` (``backward_escape_time``) is the time after
    which every sampled shell orbit stays within ``shell_delta/4`` of the
    region, or ``None`` if some orbit never settled.
    """

    label: str
    forward_escape_time: Optional[float]
    backward_escape_time: Optional[float]
    samples_used: int
    diagnostic: str = ""
    empirical: bool = True


def _settle_time(spec, region, x0, T, dt, sign, tol, n_check=2000):
    """Last time the orbit is farther than ``tol`` from the region, or ``None``."""
    try:
        tr = _integrate(spec, x0, T, dt, sign)
    except EscapeError as exc:
        return None, f"escape at t={exc.time:.4g} from {np.round(x0, 6).tolist()}"
    stride = max(1, len(tr) // n_check)
    idx = np.arange(0, len(tr), stride)
    if idx[-1] != len(tr) - 1:
        idx = np.append(idx, len(tr) - 1)
    d = region.distance(tr.states[idx])
    outside = np.nonzero(d > tol)[0]
    if len(outside) == 0:
        return 0.0, ""
    last = outside[-1]
    if last == len(idx) - 1:
        return None, (f"orbit from {np.round(x0, 6).tolist()} ends at distance {d[-1]:.3g} "
                      f"> {tol:.3g}")
    t_settle = tr.times[idx[last + 1]]
    # "Stays": the orbit must have been inside for at least the last tenth of the window.
    if t_settle > 0.9 * T:
        return None, f"orbit from {np.round(x0, 6).tolist()} settles only at t={t_settle:.4g}"
    return float(t_settle), ""


def classify_region(spec, region, shell_delta=0.1, n_samples=64, escape_T=50.0, dt=DEFAULT_DT,
                    workers=None):
    """Label a region attractor, repeller or inconclusive from shell orbits.

    Points of the boundary of the open ``shell_delta``-neighborhood are
    integrated forward (attractor test) and backward (repeller test) for
    ``escape_T``.  A direction passes when every orbit enters and stays
    within ``shell_delta/4`` of the region.  A finite sample cannot certify
    uniform convergence, so the label is empirical.
    """
    if not shell_delta > 0:
        raise ValueError("shell_delta must be positive")
    pts = region.shell_points(shell_delta, n_samples)
    if spec.dim == 1 or len(pts) == 0:
        raise ValueError("region has no shell points")
    tol = 0.25 * shell_delta

    def run(sign):
        res = ordered_map(lambda p: _settle_time(spec, region, p, escape_T, dt, sign, tol), pts,
                          workers=workers if is_jitted(spec.drift) else 1)
        times = [t for t, _ in res]
        notes = [m for _, m in res if m]
        if any(t is None for t in times):
            return None, notes[0]
        return max(times), ""

    t_fwd, why_fwd = run(1.0)
    t_bwd, why_bwd = run(-1.0)
    if t_fwd is not None and t_bwd is None:
        label, diag = "attractor", ""
    elif t_bwd is not None and t_fwd is None:
        label, diag = "repeller", ""
    elif t_fwd is None and t_bwd is None:
        label, diag = "inconclusive", f"forward: {why_fwd}; backward: {why_bwd}"
    else:
        label, diag = "inconclusive", "shell orbits settle in both time directions"
    return RegionClassification(label, t_fwd, t_bwd, len(pts), diag)
