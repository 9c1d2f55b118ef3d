"""Quasipotential estimates and constructive low-action paths.

``V(x, y)`` is approximated by minimizing the discrete action over the
interior nodes of a path with fixed endpoints, for each duration of a grid,
followed by a bracketed search over the duration.  The remaining functions
build explicit paths: escapes across shells, slow drifts through annuli of
periodic orbits, chains along heteroclinic connections, and escape probes
from invariant sets.
"""
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.optimize import minimize, minimize_scalar
from numba import njit

from ._numerics import is_jitted
from ._parallel import ordered_map
from .action import (Path, action, action_and_gradient, chain, lif_path, link)
from .errors import EscapeError, LimitCheckError
from .flow import DEFAULT_DT, integrate_ode, reverse_integrate

DEFAULT_T_GRID = (1.0, 2.0, 4.0, 8.0, 16.0)
DEFAULT_SEGMENTS = 200
EQUIVALENCE_TOL = 0.02
EQUIVALENCE_T_GRID = (1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0)
SHELL_T_GRID = (0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0)


@dataclass(frozen=True)
class OptimizerOptions:
    """Knobs for the path optimizer.

    ``conv_window`` and ``conv_rtol`` define convergence: the action fell by
    less than ``conv_rtol`` (relative) over the last ``conv_window``
    iterations.  Relative decreases are measured against
    ``max(value, conv_floor)`` so that zero-action problems terminate.
    """

    maxiter: int = 4000
    gtol: float = 1e-9
    conv_window: int = 10
    conv_rtol: float = 1e-6
    conv_floor: float = 1e-6
    flow_dt: float = 1e-2
    penalty: float = 1e3
    refine_points: int = 9
    refine_evals: int = 12
    workers: Optional[int] = None


DEFAULT_OPTIONS = OptimizerOptions()


@dataclass(frozen=True)
class QuasipotentialResult:
    value: float
    path: Path
    T_used: float
    n_segments: int
    optimizer_iters: int
    converged: bool
    start: str = "lif"

    def __float__(self):
        return float(self.value)


# --- fixed-duration optimization -----------------------------------------

def _objective(spec, times, x, y, penalty):
    R2 = spec.safe_radius ** 2
    n = len(times)
    r = len(x)

    def fun(z):
        P = np.empty((n, r))
        P[0], P[-1] = x, y
        P[1:-1] = z.reshape(n - 2, r)
        v, g = action_and_gradient(spec, times, P)
        g = g[1:-1]
        q = np.einsum("ij,ij->i", P[1:-1], P[1:-1])
        over = np.maximum(q - R2, 0.0)
        if np.any(over > 0):
            v += penalty * float(np.sum(over ** 2))
            g = g + (4.0 * penalty * over)[:, None] * P[1:-1]
        if not np.isfinite(v):
            return 1e300, np.zeros(z.shape)
        return v, g.ravel()

    return fun


def _optimize_fixed(spec, x, y, init, opts):
    """Minimize the action over interior nodes of ``init`` (a Path from x to y)."""
    times = init.times
    if init.n_segments < 2:
        return init, float(action(spec, init).value), 0, True
    fun = _objective(spec, times, x, y, opts.penalty)
    hist = []
    state = {"converged": False}
    w = opts.conv_window

    def cb(intermediate_result):
        hist.append(float(intermediate_result.fun))
        if len(hist) > w:
            drop = hist[-w - 1] - hist[-1]
            if drop <= opts.conv_rtol * max(abs(hist[-1]), opts.conv_floor):
                state["converged"] = True
                raise StopIteration

    res = minimize(fun, init.points[1:-1].ravel(), jac=True, method="L-BFGS-B", callback=cb,
                   options=dict(maxiter=opts.maxiter, maxcor=30, gtol=opts.gtol, ftol=1e-15))
    P = np.empty_like(init.points)
    P[0], P[-1] = x, y
    P[1:-1] = res.x.reshape(-1, len(x))
    path = Path(times, P)
    inside = bool(np.all(np.einsum("ij,ij->i", P, P) <= spec.safe_radius ** 2))
    if not inside:
        return path, np.inf, int(res.nit), False
    converged = state["converged"] or (res.success and res.nit < w + 1)
    return path, float(action(spec, path).value), int(res.nit), bool(converged)


def _flow_assisted_init(spec, x, y, T, n, dt):
    """Follow the flow from ``x`` to its closest approach to ``y``, then go straight."""
    h = min(dt, T / n)
    try:
        tr = integrate_ode(spec, x, T, h)
    except EscapeError as exc:
        if exc.step is None or exc.step < 2:
            return lif_path(x, y, n).reparametrize(T)
        tr = integrate_ode(spec, x, (exc.step - 1) * h, h)
    usable = tr.times < 0.95 * T
    d = np.linalg.norm(tr.states[usable] - y, axis=1)
    k = int(np.argmin(d))
    if k == 0:
        return lif_path(x, y, n).reparametrize(T)
    t = np.append(tr.times[: k + 1], T)
    p = np.vstack([tr.states[: k + 1], y])
    base = Path(t, p)
    grid = np.linspace(0.0, T, n + 1)
    pts = base(grid)
    pts[0], pts[-1] = x, y
    return Path(grid, pts)


def _check_endpoints(spec, x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != (spec.dim,) or y.shape != (spec.dim,):
        raise ValueError(f"endpoints must have shape ({spec.dim},)")
    if np.array_equal(x, y):
        raise ValueError("endpoints must differ")
    R2 = spec.safe_radius ** 2
    for p in (x, y):
        if not p @ p <= R2:
            raise EscapeError(f"{spec.name}: endpoint {p.tolist()} outside the safe radius")
    return x, y


def _best(results):
    ok = [r for r in results if np.isfinite(r[0].value)]
    if not ok:
        return None
    return min(ok, key=lambda e: (e[0].value, e[0].T_used, e[1]))[0]


def minimize_action(spec, x, y, n_segments=DEFAULT_SEGMENTS, T_grid=DEFAULT_T_GRID, opts=None):
    """Best discrete path from ``x`` to ``y`` over a grid of durations.

    For every ``T`` two starts are optimized: the straight line traversed
    in time ``T`` and a flow-assisted start (flow from ``x`` to its closest
    approach to ``y``, then straight).  L-BFGS works on the interior nodes
    with the exact gradient of the discrete action.

    Returns
    -------
    QuasipotentialResult
        Lowest action found; ties go to the smaller ``T``.

    Raises
    ------
    EscapeError
        If every start diverged outside the safe radius.
    """
    opts = opts or DEFAULT_OPTIONS
    x, y = _check_endpoints(spec, x, y)
    if len(T_grid) == 0:
        raise ValueError("T_grid must be nonempty")
    jobs = []
    for T in T_grid:
        jobs.append((float(T), "lif"))
        jobs.append((float(T), "flow"))

    def run(job):
        T, kind = job
        if kind == "lif":
            init = lif_path(x, y, n_segments).reparametrize(T)
        else:
            init = _flow_assisted_init(spec, x, y, T, n_segments, opts.flow_dt)
        path, val, it, conv = _optimize_fixed(spec, x, y, init, opts)
        return QuasipotentialResult(val, path, T, n_segments, it, conv, kind)

    results = ordered_map(run, jobs, opts.workers)
    best = _best([(r, i) for i, r in enumerate(results)])
    if best is None:
        raise EscapeError(f"{spec.name}: every start from {x.tolist()} to {y.tolist()} left the "
                          "safe radius")
    return best


def _warm(spec, x, y, incumbent, T, opts):
    init = incumbent.path.reparametrize(T)
    path, val, it, conv = _optimize_fixed(spec, x, y, init, opts)
    return QuasipotentialResult(val, path, float(T), incumbent.n_segments, it, conv, "warm")


def _refine_T(evaluate, result, opts):
    """Scan ``T`` over ``[T*/2, 3T*/2]`` then polish inside the best bracket.

    ``evaluate(T, incumbent)`` re-optimizes at duration ``T`` warm-started
    from ``incumbent``.
    """
    T0 = result.T_used
    scan = np.geomspace(0.5 * T0, 1.5 * T0, opts.refine_points)
    best = result
    tried = {T0: result}
    for T in scan:
        if T in tried:
            continue
        r = evaluate(float(T), best)
        tried[T] = r
        if r.value < best.value:
            best = r
    Ts = np.array(sorted(tried))
    k = int(np.searchsorted(Ts, best.T_used))
    lo = Ts[max(k - 1, 0)]
    hi = Ts[min(k + 1, len(Ts) - 1)]
    if hi > lo:
        holder = {"best": best}

        def f(T):
            r = evaluate(float(T), holder["best"])
            if r.value < holder["best"].value:
                holder["best"] = r
            return r.value

        minimize_scalar(f, bounds=(lo, hi), method="bounded",
                        options=dict(maxiter=opts.refine_evals, xatol=1e-3 * best.T_used))
        best = holder["best"]
    return best


def refine_duration(spec, x, y, result, opts=None):
    """Search ``T`` in ``[T*/2, 3T*/2]`` with warm starts from the incumbent path.

    A log-spaced scan locates the best bracket; a bounded scalar search then
    polishes ``T`` inside it.
    """
    opts = opts or DEFAULT_OPTIONS
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return _refine_T(lambda T, inc: _warm(spec, x, y, inc, T, opts), result, opts)


def refine_result(spec, result, opts=None):
    """Double the node count and re-optimize from the incumbent at the same ``T``."""
    opts = opts or DEFAULT_OPTIONS
    x, y = result.path.start, result.path.end
    init = result.path.refine()
    path, val, it, conv = _optimize_fixed(spec, x, y, init, opts)
    return QuasipotentialResult(val, path, result.T_used, init.n_segments, it, conv, "refined")


def quasipotential(spec, x, y, n_segments=DEFAULT_SEGMENTS, T_grid=DEFAULT_T_GRID, refine=True,
                   opts=None, return_result=False):
    """Estimate ``V(x, y)``.

    Defaults: ``T`` in {1, 2, 4, 8, 16}, 200 segments, then the best ``T`` is
    refined within +-50%.  Returns the value, or the full
    :class:`QuasipotentialResult` when ``return_result`` is set.
    """
    res = minimize_action(spec, x, y, n_segments, T_grid, opts)
    if refine:
        res = refine_duration(spec, x, y, res, opts)
    return res if return_result else res.value


def is_equivalent(spec, x, y, tol=EQUIVALENCE_TOL, T_grid=EQUIVALENCE_T_GRID, **kwargs):
    """True when both ``V(x, y)`` and ``V(y, x)`` fall below ``tol``.

    The default duration grid runs to longer ``T`` than :func:`quasipotential`:
    near-zero action between distinct orbits usually means a slow drift
    across many revolutions.
    """
    if quasipotential(spec, x, y, T_grid=T_grid, **kwargs) >= tol:
        return False
    return quasipotential(spec, y, x, T_grid=T_grid, **kwargs) < tol


# --- shells around invariant sets -------------------------------------------

@dataclass(frozen=True)
class ShellResult:
    value: float
    result: QuasipotentialResult
    start_index: int
    target_angle: Optional[float]
    pairs_screened: int


def _angular_curve(region, delta, point):
    """``theta -> shell point`` if ``point`` lies on the angular parametrization, else None."""
    try:
        c = np.asarray(getattr(region, "center", None), dtype=float)
        theta = float(np.arctan2(point[1] - c[1], point[0] - c[0]))
        on = np.linalg.norm(region.shell_point(delta, theta) - point) < 1e-9
    except (NotImplementedError, TypeError, ValueError, IndexError):
        return None, None
    if not on:
        return None, None
    return (lambda t: region.shell_point(delta, t)), theta


def _optimize_free_ends(spec, curve_a, curve_b, init, theta_a, theta_b, opts, h=1e-7):
    """Like :func:`_optimize_fixed`, with each endpoint sliding along its curve.

    ``curve_a`` / ``curve_b`` map an angle to a point; ``None`` pins that end.
    Returns ``(path, value, iters, converged, theta_a, theta_b)``.
    """
    times = init.times
    n, r = init.points.shape
    R2 = spec.safe_radius ** 2
    free = [c is not None for c in (curve_a, curve_b)]
    n_free = sum(free)
    x_fix, y_fix = init.points[0], init.points[-1]

    def unpack(z):
        P = np.empty((n, r))
        P[1:-1] = z[: (n - 2) * r].reshape(n - 2, r)
        k = (n - 2) * r
        ta = tb = None
        if free[0]:
            ta = z[k]
            k += 1
        if free[1]:
            tb = z[k]
        P[0] = curve_a(ta) if free[0] else x_fix
        P[-1] = curve_b(tb) if free[1] else y_fix
        return P, ta, tb

    def fun(z):
        P, ta, tb = unpack(z)
        v, g = action_and_gradient(spec, times, P)
        q = np.einsum("ij,ij->i", P[1:-1], P[1:-1])
        over = np.maximum(q - R2, 0.0)
        gi = g[1:-1]
        if np.any(over > 0):
            v += opts.penalty * float(np.sum(over ** 2))
            gi = gi + (4.0 * opts.penalty * over)[:, None] * P[1:-1]
        if not np.isfinite(v):
            return 1e300, np.zeros(z.shape)
        extra = []
        if free[0]:
            extra.append(g[0] @ (curve_a(ta + h) - curve_a(ta - h)) / (2.0 * h))
        if free[1]:
            extra.append(g[-1] @ (curve_b(tb + h) - curve_b(tb - h)) / (2.0 * h))
        return v, np.concatenate([gi.ravel(), extra])

    z0 = np.concatenate([init.points[1:-1].ravel(),
                         [t for t, f in zip((theta_a, theta_b), free) if f]])
    hist = []
    state = {"converged": False}
    w = opts.conv_window

    def cb(intermediate_result):
        hist.append(float(intermediate_result.fun))
        if len(hist) > w:
            drop = hist[-w - 1] - hist[-1]
            if drop <= opts.conv_rtol * max(abs(hist[-1]), opts.conv_floor):
                state["converged"] = True
                raise StopIteration

    res = minimize(fun, z0, jac=True, method="L-BFGS-B", callback=cb,
                   options=dict(maxiter=opts.maxiter, maxcor=30, gtol=opts.gtol, ftol=1e-15))
    P, ta, tb = unpack(res.x)
    path = Path(times, P)
    ta = theta_a if ta is None else float(ta)
    tb = theta_b if tb is None else float(tb)
    if not np.all(np.einsum("ij,ij->i", P, P) <= R2):
        return path, np.inf, int(res.nit), False, ta, tb
    converged = state["converged"] or (res.success and res.nit < w + 1)
    return path, float(action(spec, path).value), int(res.nit), bool(converged), ta, tb


def _flow_to_shell(spec, region, x, delta, T, n_segments, dt):
    """Flow from ``x`` up to its first crossing of the ``delta``-shell, resampled; else None."""
    try:
        tr = integrate_ode(spec, x, T, min(dt, 1e-3))
    except EscapeError as exc:
        if exc.step is None or exc.step < 2:
            return None
        tr = integrate_ode(spec, x, (exc.step - 1) * min(dt, 1e-3), min(dt, 1e-3))
    g = region.distance(tr.states) - delta
    cross = np.nonzero(np.sign(g[1:]) != np.sign(g[0]))[0]
    if len(cross) == 0:
        return None
    k = int(cross[0]) + 1
    # linear interpolation of the crossing
    w = g[k - 1] / (g[k - 1] - g[k])
    t_end = tr.times[k - 1] + w * (tr.times[k] - tr.times[k - 1])
    base = Path(np.append(tr.times[:k], t_end),
                np.vstack([tr.states[:k], tr.states[k - 1] + w * (tr.states[k] - tr.states[k - 1])]))
    return base.resample(n_segments)


def shell_quasipotential(spec, region, delta_outer, delta_inner, n_boundary_samples=32,
                         direction="inward", nearest=8, n_polish=3, screen_segments=16,
                         screen_T_grid=(0.125, 0.5, 2.0), n_segments=100, T_grid=SHELL_T_GRID,
                         opts=None, return_result=False):
    """Minimum quasipotential between two delta-shells of ``region``.

    ``direction='inward'`` goes from the shell at the larger delta to the one
    at the smaller delta, ``'outward'`` the reverse.  Every start sample is
    paired with its ``nearest`` target samples and all pairs are screened
    with coarse straight-line starts over ``screen_T_grid``.  The best ``n_polish`` pairs are re-optimized at full
    resolution over ``T_grid``, which reaches down to short crossings since
    shells are close together.  For planar regions with an angular
    parametrization both endpoints are then released to slide along their
    shells, and the duration is searched again.
    """
    if direction not in ("inward", "outward"):
        raise ValueError("direction must be 'inward' or 'outward'")
    d_hi, d_lo = max(delta_outer, delta_inner), min(delta_outer, delta_inner)
    if not d_lo > 0 or d_hi == d_lo:
        raise ValueError("need two distinct positive shell widths")
    d_from, d_to = (d_hi, d_lo) if direction == "inward" else (d_lo, d_hi)
    opts = opts or DEFAULT_OPTIONS
    A = region.shell_points(d_from, n_boundary_samples)
    B = region.shell_points(d_to, n_boundary_samples)
    pairs = []
    for i, a in enumerate(A):
        order = np.argsort(np.linalg.norm(B - a, axis=1), kind="stable")[:nearest]
        pairs.extend((i, int(j)) for j in order)

    def screen(pair):
        i, j = pair
        try:
            vals = [_optimize_fixed(spec, A[i], B[j],
                                    lif_path(A[i], B[j], screen_segments).reparametrize(T), opts)[1]
                    for T in screen_T_grid]
        except EscapeError:
            return np.inf
        return min(vals)

    scores = np.array(ordered_map(screen, pairs, opts.workers))
    top = [int(k) for k in np.argsort(scores, kind="stable")[:n_polish] if np.isfinite(scores[k])]
    if not top:
        raise EscapeError(f"{spec.name}: every shell path left the safe radius")

    def full(k):
        i, j = pairs[k]
        r = minimize_action(spec, A[i], B[j], n_segments, T_grid, opts)
        r = refine_duration(spec, A[i], B[j], r, opts)
        if spec.dim != 2:
            return r, None
        ca, ta = _angular_curve(region, d_from, A[i])
        cb, tb = _angular_curve(region, d_to, B[j])
        if ca is None and cb is None:
            return r, None
        thetas = {}

        def evaluate(T, incumbent):
            ta0, tb0 = thetas.get(incumbent.T_used, (ta, tb))
            out = _optimize_free_ends(spec, ca, cb, incumbent.path.reparametrize(T), ta0, tb0, opts)
            path, val, it, conv, ta1, tb1 = out
            thetas[float(T)] = (ta1, tb1)
            return QuasipotentialResult(val, path, float(T), incumbent.n_segments, it, conv, "free")

        r = evaluate(r.T_used, r)
        ride = _flow_to_shell(spec, region, A[i], d_to, max(T_grid), n_segments, opts.flow_dt)
        if ride is not None and cb is not None:
            pr = QuasipotentialResult(np.inf, ride, ride.duration, n_segments, 0, False, "flow")
            thetas[pr.T_used] = (ta, float(np.arctan2(*(ride.end - np.asarray(region.center))[::-1])))
            alt = evaluate(pr.T_used, pr)
            if alt.value < r.value:
                r = alt
        r = _refine_T(evaluate, r, opts)
        return r, thetas[r.T_used][1]

    finals = ordered_map(full, top, opts.workers)
    kbest = min(range(len(finals)), key=lambda m: (finals[m][0].value, m))
    best, theta_best = finals[kbest]
    i_best = pairs[top[kbest]][0]
    out = ShellResult(best.value, best, i_best, theta_best, len(pairs))
    return out if return_result else out.value


# --- slow drift across an annulus of periodic orbits ------------------------

@njit
def _aux_rhs(H, grad_H, lam, x):
    g = grad_H(x)
    return np.array([g[1] - lam * g[0], -g[0] - lam * g[1]])


@njit
def _aux_step(H, grad_H, lam, x, h):
    k1 = _aux_rhs(H, grad_H, lam, x)
    k2 = _aux_rhs(H, grad_H, lam, x + 0.5 * h * k1)
    k3 = _aux_rhs(H, grad_H, lam, x + 0.5 * h * k2)
    k4 = _aux_rhs(H, grad_H, lam, x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@njit
def _aux_until_level(H, grad_H, lam, x0, level, dt, n_max, out):
    """RK4 on ``x' = (dH/dx2, -dH/dx1) - lam grad H`` until ``H`` reaches ``level``.

    Returns the number of stored nodes (the last is on the level set up to
    bisection accuracy) and the duration of the final sub-step; the count is
    -1 if the level was not reached in ``n_max`` steps.
    """
    x = x0.copy()
    out[0] = x
    s0 = H(x) - level
    for k in range(n_max):
        xn = _aux_step(H, grad_H, lam, x, dt)
        sn = H(xn) - level
        if sn == 0.0 or (sn > 0.0) != (s0 > 0.0):
            lo, hi = 0.0, dt
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                xm = _aux_step(H, grad_H, lam, x, mid)
                sm = H(xm) - level
                if (sm > 0.0) == (s0 > 0.0) and sm != 0.0:
                    lo = mid
                else:
                    hi = mid
                if hi - lo < 1e-15:
                    break
            out[k + 1] = _aux_step(H, grad_H, lam, x, hi)
            return k + 2, hi
        x = xn
        out[k + 1] = x
    return -1, dt


def _aux_until_level_py(H, grad_H, lam, x0, level, dt, n_max, out):
    def rhs(x):
        g = np.asarray(grad_H(x), dtype=float)
        return np.array([g[1] - lam * g[0], -g[0] - lam * g[1]])

    def step(x, h):
        k1 = rhs(x)
        k2 = rhs(x + 0.5 * h * k1)
        k3 = rhs(x + 0.5 * h * k2)
        k4 = rhs(x + h * k3)
        return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    x = x0.copy()
    out[0] = x
    s0 = H(x) - level
    for k in range(n_max):
        xn = step(x, dt)
        sn = H(xn) - level
        if sn == 0.0 or (sn > 0.0) != (s0 > 0.0):
            lo, hi = 0.0, dt
            while hi - lo >= 1e-15:
                mid = 0.5 * (lo + hi)
                sm = H(step(x, mid)) - level
                if (sm > 0.0) == (s0 > 0.0) and sm != 0.0:
                    lo = mid
                else:
                    hi = mid
            out[k + 1] = step(x, hi)
            return k + 2, hi
        x = xn
        out[k + 1] = x
    return -1, dt


def _closest_approach(spec, z, y, dt, T_cap):
    """Flow from ``z`` to the point of its orbit nearest ``y``, polished within one step."""
    tr = integrate_ode(spec, z, T_cap, dt)
    d = np.linalg.norm(tr.states - y, axis=1)
    # first local minimum that is a genuine near-return
    scale = max(dt * float(np.max(np.linalg.norm(spec.drift_many(tr.states[::50]), axis=1))), 1e-12)
    cand = np.nonzero(d <= 2.0 * scale)[0]
    k = int(cand[0]) if len(cand) else int(np.argmin(d))
    while k + 1 < len(d) and d[k + 1] < d[k]:
        k += 1
    k0 = max(k - 1, 0)
    base = tr.states[k0]

    def dist(tau):
        if tau <= 0:
            return float(np.linalg.norm(base - y))
        return float(np.linalg.norm(integrate_ode(spec, base, tau, tau).final - y))

    r = minimize_scalar(dist, bounds=(0.0, 2.0 * dt), method="bounded", options=dict(xatol=1e-12))
    tau = float(r.x)
    head = Path(tr.times[: k0 + 1], tr.states[: k0 + 1]) if k0 > 0 else None
    if tau > 0:
        tail = integrate_ode(spec, base, tau, tau)
        seg = Path(tail.times, tail.states)
        head = seg if head is None else link(head, seg)
    return head


def hamiltonian_drift_path(spec, x, y, lam, dt=1e-2, T_cap=1e4, n_levels=64):
    """Path from ``x`` to ``y`` across an annulus where ``F(H) = 0``.

    The auxiliary field ``(dH/dx2, -dH/dx1) - lam grad H`` moves ``H``
    monotonically (``dH/dt = -lam |grad H|^2``) until the level ``H(y)``;
    the true flow then carries the point along that orbit to its closest
    approach to ``y`` and a straight bridge lands exactly on ``y``.  The
    action of the auxiliary leg is at most ``|lam| |H(y) - H(x)| / 2``.

    Raises
    ------
    ValueError
        If ``spec`` is not Hamiltonian, ``F`` is not zero between the two
        levels, or the level is not reached within ``T_cap``.
    """
    if spec.hamiltonian is None:
        raise ValueError(f"{spec.name} was not built by hamiltonian_system")
    H, grad_H, F = spec.hamiltonian
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    hx, hy = float(H(x)), float(H(y))
    for h in np.linspace(min(hx, hy), max(hx, hy), n_levels):
        if F(h) != 0.0:
            raise ValueError(f"F({h:.6g}) = {F(h):.3g} is not zero between H(x) and H(y)")
    if hx == hy:
        aux = None
        z = x
    else:
        if (hy - hx) * (-lam) <= 0:
            raise ValueError("lambda has the wrong sign: H must move from H(x) toward H(y)")
        n_max = int(np.ceil(T_cap / dt))
        out = np.empty((n_max + 2, 2))
        kern = _aux_until_level if is_jitted(H) and is_jitted(grad_H) else _aux_until_level_py
        m, tail = kern(H, grad_H, float(lam), x, hy, float(dt), n_max, out)
        if m < 0:
            raise ValueError(f"level H={hy:.6g} not reached within T={T_cap:g} (lambda={lam})")
        seg_t = np.arange(m, dtype=float) * dt
        seg_t[-1] = seg_t[-2] + tail
        aux = Path(seg_t, out[:m])
        z = out[m - 1]
    gap = float(np.linalg.norm(z - y))
    if gap == 0.0:
        return aux if aux is not None else Path([0.0, dt], [x, x])
    flow_leg = _closest_approach(spec, z, y, dt, T_cap=min(T_cap, 200.0))
    pieces = [p for p in (aux, flow_leg) if p is not None]
    cur = pieces[0] if pieces else None
    for p in pieces[1:]:
        cur = link(cur, p)
    end = cur.end if cur is not None else z
    if np.linalg.norm(end - y) > 0:
        bridge = lif_path(end, y, 1)
        cur = bridge if cur is None else link(cur, bridge)
    return cur


# --- zero-action chains along connecting orbits ------------------------------

_SNAP = 1e-9


def chain_zero_action_path(spec, waypoints, dt=DEFAULT_DT, back_T=20.0, fwd_T=50.0,
                           limit_tol=0.05):
    """Chain of straight bridges and flow segments through ``waypoints``.

    ``waypoints`` is a sequence of ``(y_i, x_i)``: ``y_i`` a point near the
    i-th invariant set and ``x_i`` a seed on an orbit running from it to the
    next set (``None`` for the last entry).  For each seed the path bridges
    from ``y_i`` to ``Psi_{-back_T}(x_i)``, follows the flow to
    ``Psi_{fwd_T}(x_i)`` and bridges to ``y_{i+1}``.  Both orbit ends must lie
    within ``limit_tol`` of their waypoints.

    A single waypoint gives a constant two-node path of duration ``dt``
    (zero action at an equilibrium).

    Raises
    ------
    LimitCheckError
        Naming the first seed whose orbit ends miss their waypoints.
    """
    wps = [(np.asarray(y, dtype=float), None if s is None else np.asarray(s, dtype=float))
           for y, s in waypoints]
    if not wps:
        raise ValueError("need at least one waypoint")
    if len(wps) == 1:
        y = wps[0][0]
        return Path([0.0, dt], [y, y])
    pieces = []
    cur = wps[0][0]
    for i in range(len(wps) - 1):
        y_next = wps[i + 1][0]
        seed = wps[i][1]
        if seed is None:
            raise ValueError(f"waypoint {i} needs a connecting-orbit seed")
        a = reverse_integrate(spec, seed, back_T, dt).final if back_T > 0 else seed
        if np.linalg.norm(a - wps[i][0]) > limit_tol:
            raise LimitCheckError(f"seed {seed.tolist()}: backward orbit ends at {np.round(a, 6).tolist()}, "
                                  f"farther than {limit_tol} from waypoint {wps[i][0].tolist()}")
        leg = integrate_ode(spec, a, back_T + fwd_T, dt)
        c = leg.final
        if np.linalg.norm(c - y_next) > limit_tol:
            raise LimitCheckError(f"seed {seed.tolist()}: forward orbit ends at {np.round(c, 6).tolist()}, "
                                  f"farther than {limit_tol} from waypoint {y_next.tolist()}")
        states = leg.states.copy()
        # gaps below the snap size are closed by moving the end node instead of bridging
        if np.linalg.norm(a - cur) > _SNAP:
            pieces.append(lif_path(cur, a, 1))
        else:
            states[0] = cur
        if np.linalg.norm(y_next - c) > _SNAP:
            pieces += [Path(leg.times, states), lif_path(c, y_next, 1)]
        else:
            states[-1] = y_next
            pieces.append(Path(leg.times, states))
        cur = y_next
    return chain(pieces)


# --- escape probes ----------------------------------------------------------------

@dataclass(frozen=True)
class PRWitness:
    """Outcome of an escape probe from an invariant set.

    ``found`` means every probed start admits a path of action below
    ``eta`` that leaves the ``delta``-neighborhood; the stored path is the
    most expensive of those (or a failing one when ``found`` is false).
    """

    start: np.ndarray
    path: Optional[Path]
    exit_point: Optional[np.ndarray]
    eta: float
    found: bool
    case: str = ""
    action_value: float = np.inf
    delta: float = 0.1
    starts_tried: int = 0
    details: dict = field(default_factory=dict)


def _local_constant(spec, region, radius, n=400):
    """Bound ``L`` for straight bridges near ``region``: ``(1 + max|b|)^2 lam_max(a^-1) / 2``."""
    pts = region.shell_points(0.0, n // 2) if radius > 0 else region.sample_points(n // 2)
    pts = np.vstack([pts, region.shell_points(radius, n // 2)])
    bmax = float(np.max(np.linalg.norm(spec.drift_many(pts), axis=1)))
    A = spec.a_many(pts)
    lam = float(np.max(1.0 / np.linalg.eigvalsh(A)[:, 0]))
    return 0.5 * (1.0 + bmax) ** 2 * lam


def _exit_leg(spec, region, z, delta, T, dt):
    """Flow from ``z`` until the orbit is ``delta`` away from ``region``; ``None`` if it never is."""
    try:
        tr = integrate_ode(spec, z, T, dt)
    except EscapeError as exc:
        tr = integrate_ode(spec, z, max(exc.step - 1, 1) * dt, dt)
    d = region.distance(tr.states)
    k = np.nonzero(d >= delta)[0]
    if len(k) == 0:
        return None
    k = int(k[0])
    if k == 0:
        return Path([0.0, dt], [z, z]), z
    return Path(tr.times[: k + 1], tr.states[: k + 1]), tr.states[k]


def _first_pass(tr, y, rho):
    """First chord ``k`` of a trajectory coming within ``rho`` of ``y``, with the chord fraction."""
    P0, P1 = tr.states[:-1], tr.states[1:]
    D = P1 - P0
    den = np.einsum("ij,ij->i", D, D)
    u = np.einsum("ij,ij->i", y - P0, D) / np.where(den > 0, den, 1.0)
    u = np.clip(np.where(den > 0, u, 0.0), 0.0, 1.0)
    d = np.linalg.norm(P0 + u[:, None] * D - y, axis=1)
    hit = np.nonzero(d <= rho)[0]
    if len(hit) == 0:
        return None
    k = int(hit[0])
    return k, float(u[k])


def _probe_transitive(spec, region, eta, starts, delta, orbit_T, dt, n_exit):
    L = _local_constant(spec, region, eta)
    rho = eta / (4.0 * (L + 1.0))
    # exit gates: a point rho outside the set whose forward orbit leaves the delta-neighborhood
    outer = region.shell_points(rho, n_exit)
    on = region.shell_points(0.0, n_exit)
    gate = None
    for zh, yh in zip(outer, on):
        ex = _exit_leg(spec, region, zh, delta, orbit_T, dt)
        if ex is not None:
            gate = (yh, zh, ex)
            break
    if gate is None:
        return [dict(ok=False, why="no exit gate found")] * len(starts), rho
    yh, zh, (exit_path, exit_pt) = gate
    outs = []
    for x in starts:
        try:
            tr = integrate_ode(spec, x, orbit_T, dt)
        except EscapeError:
            outs.append(dict(ok=False, why="orbit escaped"))
            continue
        hit = _first_pass(tr, yh, rho)
        if hit is None:
            outs.append(dict(ok=False, why=f"orbit did not return within {rho:.3g} of the gate "
                                            f"in T={orbit_T:g}"))
            continue
        k, u = hit
        at = tr.states[k] + u * (tr.states[k + 1] - tr.states[k])
        t_at = tr.times[k] + u * (tr.times[k + 1] - tr.times[k])
        if t_at > 0:
            t = np.append(tr.times[: k + 1], t_at) if u > 0 else tr.times[: k + 1]
            p = np.vstack([tr.states[: k + 1], at]) if u > 0 else tr.states[: k + 1]
            ride = Path(t, p)
        else:
            ride = None
        hop = lif_path(at, zh, 1)
        parts = [p for p in (ride, hop, exit_path) if p is not None]
        path = chain(parts)
        outs.append(dict(ok=True, path=path, exit=exit_pt, ride_T=float(t_at)))
    return outs, rho


def _probe_zero_v(spec, region, eta, starts, delta, x0, z0, T_grid, n_segments, orbit_T, dt, opts):
    x0 = np.asarray(x0, dtype=float)
    z0 = np.asarray(z0, dtype=float)
    ex = _exit_leg(spec, region, z0, delta, orbit_T, dt)
    if ex is None:
        return [dict(ok=False, why="flow from z0 does not leave the neighborhood")] * len(starts)
    exit_path, exit_pt = ex
    second = quasipotential(spec, x0, z0, n_segments, T_grid, opts=opts, return_result=True)
    outs = []
    for x in starts:
        parts = []
        if np.linalg.norm(x - x0) > 0:
            straight = lif_path(x, x0, n_segments)
            if action(spec, straight).value < 0.25 * eta:
                parts.append(straight)
            else:
                parts.append(quasipotential(spec, x, x0, n_segments, T_grid, opts=opts,
                                            return_result=True).path)
        parts += [second.path, exit_path]
        outs.append(dict(ok=True, path=chain(parts), exit=exit_pt))
    return outs


def _probe_lebesgue(spec, region, eta, starts, delta, exterior, orbit_T, dt):
    ext = np.atleast_2d(np.asarray(exterior, dtype=float))
    outs = []
    for x in starts:
        best = None
        for z in ext:
            if np.linalg.norm(z - x) == 0:
                continue
            hop = lif_path(x, z, 1)
            ex = _exit_leg(spec, region, z, delta, orbit_T, dt)
            if ex is None:
                continue
            p = link(hop, ex[0])
            v = action(spec, p).value
            if best is None or v < best[0]:
                best = (v, p, ex[1])
        if best is None:
            outs.append(dict(ok=False, why="no exterior target leads out of the neighborhood"))
        else:
            outs.append(dict(ok=True, path=best[1], exit=best[2]))
    return outs


def pr_probe(spec, region, eta, case="auto", n_starts=32, delta=0.1, x0=None, z0=None,
             exterior=None, orbit_T=100.0, dt=DEFAULT_DT, T_grid=(4.0, 8.0, 16.0, 32.0, 64.0),
             n_segments=100, n_exit=64, opts=None):
    """Look for cheap escape paths out of the ``delta``-neighborhood of ``region``.

    Cases
    -----
    lebesgue_zero
        Straight hop from each start to the cheapest of the caller's
        ``exterior`` points, then the flow out.
    transitive
        Ride the flow inside the set until the orbit passes within ``rho``
        of an exit gate, hop ``rho`` outward, and follow the flow out.
        ``rho = eta / (4 (L + 1))`` with ``L`` from the drift and diffusion
        near the set.  The orbit is followed for at most ``orbit_T``.
    zero_V_exit
        Optimized path to ``x0`` (or a straight one when cheap), optimized
        path from ``x0`` to ``z0``, then the flow out.
    auto
        Tries the applicable cases in that order and keeps the first success.

    Up to ``n_starts`` points of the region are probed; the probe succeeds
    only if all of them escape with action below ``eta``.
    """
    cases = ("lebesgue_zero", "transitive", "zero_V_exit")
    if case == "auto":
        todo = []
        if exterior is not None and region.has_zero_measure:
            todo.append("lebesgue_zero")
        todo.append("transitive")
        if x0 is not None and z0 is not None:
            todo.append("zero_V_exit")
    elif case in cases:
        todo = [case]
    else:
        raise ValueError(f"unknown case {case!r}")
    opts = opts or DEFAULT_OPTIONS
    starts = np.atleast_2d(region.sample_points(n_starts))[:n_starts]
    last = None
    for c in todo:
        extra = {}
        if c == "lebesgue_zero":
            if exterior is None:
                raise ValueError("lebesgue_zero needs exterior target points")
            outs = _probe_lebesgue(spec, region, eta, starts, delta, exterior, orbit_T, dt)
        elif c == "transitive":
            outs, rho = _probe_transitive(spec, region, eta, starts, delta, orbit_T, dt, n_exit)
            extra["rho"] = rho
            extra["orbit_T"] = orbit_T
        else:
            if x0 is None or z0 is None:
                raise ValueError("zero_V_exit needs x0 and z0")
            outs = _probe_zero_v(spec, region, eta, starts, delta, x0, z0, T_grid, n_segments,
                                 orbit_T, dt, opts)
        witness = _summarize(spec, region, eta, c, starts, outs, delta, extra)
        if witness.found:
            return witness
        last = witness
    return last


def _summarize(spec, region, eta, case, starts, outs, delta, extra):
    vals = []
    for o in outs:
        if o["ok"]:
            v = action(spec, o["path"]).value
            o["value"] = v
            o["ok"] = v < eta and region.distance(o["exit"])[0] >= delta * (1 - 1e-12)
            if not o["ok"] and "why" not in o:
                o["why"] = f"action {v:.4g} >= eta {eta:g}"
        vals.append(o.get("value", np.inf))
    vals = np.array(vals)
    fails = [i for i, o in enumerate(outs) if not o["ok"]]
    found = not fails
    i = int(np.argmax(vals)) if found else fails[0]
    o = outs[i]
    details = dict(extra)
    details["failures"] = len(fails)
    if fails:
        details["reason"] = o.get("why", "")
    if "ride_T" in o:
        details["ride_T"] = o["ride_T"]
    return PRWitness(starts[i], o.get("path"), o.get("exit"), float(eta), found, case,
                     float(o.get("value", np.inf)), float(delta), len(starts), details)
