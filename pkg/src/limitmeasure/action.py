"""Discrete Freidlin-Wentzell action on piecewise-linear paths.

For nodes ``t_0 < ... < t_N`` and points ``p_0, ..., p_N`` the action is

    S = sum_k  dt_k / 2 * (v_k - b(m_k))^T a(m_k)^{-1} (v_k - b(m_k)),

with chord velocity ``v_k = (p_{k+1} - p_k) / dt_k`` and midpoint
``m_k = (p_k + p_{k+1}) / 2``.  The rule is exact on segments where the
drift is constant and second-order accurate otherwise.
"""
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from ._numerics import action_grad_const, is_jitted
from .errors import EscapeError, InvalidSystemError
from .flow import DEFAULT_DT, integrate_ode

QUADRATURE = "midpoint"


@dataclass(frozen=True)
class Path:
    """Nodes of a piecewise-linear curve; ``times`` strictly increasing from 0."""

    times: np.ndarray
    points: np.ndarray

    def __post_init__(self):
        t = np.array(self.times, dtype=float)
        p = np.array(self.points, dtype=float)
        if p.ndim != 2 or t.ndim != 1 or len(t) != len(p):
            raise ValueError("need times of shape (n,) and points of shape (n, r)")
        if len(t) < 2:
            raise ValueError("a path needs at least two nodes")
        if not np.all(np.diff(t) > 0):
            raise ValueError("path times must be strictly increasing")
        t.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "points", p)

    @property
    def start(self):
        return self.points[0]

    @property
    def end(self):
        return self.points[-1]

    @property
    def duration(self):
        return float(self.times[-1] - self.times[0])

    @property
    def n_segments(self):
        return len(self.times) - 1

    @property
    def dim(self):
        return self.points.shape[1]

    def __call__(self, t):
        """Linear interpolation at time(s) ``t``; a scalar ``t`` gives one point."""
        scalar = np.ndim(t) == 0
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.column_stack([np.interp(t, self.times, self.points[:, j]) for j in range(self.dim)])
        return out[0] if scalar else out

    def split(self, k):
        """Sub-paths on nodes ``[0..k]`` and ``[k..N]`` (second one re-timed from 0)."""
        if not 0 < k < self.n_segments:
            raise ValueError("split index must be an interior node")
        a = Path(self.times[: k + 1], self.points[: k + 1])
        b = Path(self.times[k:] - self.times[k], self.points[k:])
        return a, b

    def reparametrize(self, T):
        """Same curve traversed over duration ``T`` with proportionally scaled times."""
        return Path(self.times * (T / self.duration), self.points)

    def refine(self):
        """Insert segment midpoints; the curve and its timing are unchanged."""
        n = self.n_segments
        t = np.empty(2 * n + 1)
        p = np.empty((2 * n + 1, self.dim))
        t[0::2], p[0::2] = self.times, self.points
        t[1::2] = 0.5 * (self.times[:-1] + self.times[1:])
        p[1::2] = 0.5 * (self.points[:-1] + self.points[1:])
        return Path(t, p)

    def resample(self, n_segments):
        """Uniform-in-time resampling to ``n_segments`` segments."""
        t = np.linspace(0.0, self.times[-1], n_segments + 1)
        p = self(t)
        p[0], p[-1] = self.points[0], self.points[-1]
        return Path(t, p)

    @classmethod
    def from_trajectory(cls, traj):
        return cls(traj.times, traj.states)


@dataclass(frozen=True)
class ActionValue:
    value: float
    quadrature: str = QUADRATURE
    n_segments: int = 0

    def __post_init__(self):
        if not self.value >= 0:
            raise ValueError("action values are nonnegative")

    def __float__(self):
        return float(self.value)


def _check_inside(spec, points):
    r2 = np.einsum("ij,ij->i", points, points)
    bad = np.nonzero(~(r2 <= spec.safe_radius ** 2))[0]
    if len(bad):
        k = int(bad[0])
        raise EscapeError(f"{spec.name}: path node {k} at {points[k].tolist()} is outside the "
                          f"safe radius {spec.safe_radius:g}", step=k)


def _cholesky(spec, A):
    try:
        return np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise InvalidSystemError(f"{spec.name}: diffusion matrix is not SPD along the path") from exc


def _weighted(spec, R, M):
    """``W = a(M)^{-1} R`` and ``q = R . W`` row by row, via Cholesky solves."""
    if spec.constant_a is not None:
        L = _cholesky(spec, spec.constant_a)
        Y = solve_triangular(L, R.T, lower=True)
        W = solve_triangular(L.T, Y, lower=False).T
        return W, np.einsum("ij,ij->i", Y.T, Y.T)
    L = _cholesky(spec, spec.a_many(M))
    Y = np.linalg.solve(L, R[:, :, None])
    W = np.linalg.solve(np.swapaxes(L, 1, 2), Y)[:, :, 0]
    return W, np.einsum("ij,ij->i", Y[:, :, 0], Y[:, :, 0])


def _pieces(spec, times, points):
    dt = np.diff(times)
    V = np.diff(points, axis=0) / dt[:, None]
    M = 0.5 * (points[:-1] + points[1:])
    R = V - spec.drift_many(M)
    return dt, M, R


def segment_actions(spec, path):
    """Per-segment contributions ``dt_k/2 * |v_k - b(m_k)|^2_{a^{-1}}``."""
    _check_inside(spec, path.points)
    dt, M, R = _pieces(spec, path.times, path.points)
    _, q = _weighted(spec, R, M)
    return 0.5 * dt * q


def action(spec, path):
    """Midpoint-rule action of ``path`` under ``spec``.

    Raises
    ------
    EscapeError
        If a node lies outside the safe radius.
    InvalidSystemError
        If the diffusion matrix fails to factor.
    """
    c = segment_actions(spec, path)
    return ActionValue(float(np.sum(c)), QUADRATURE, path.n_segments)


def action_and_gradient(spec, times, points, fd_step=1e-6):
    """Action and its gradient with respect to every node.

    The quadratic form is differentiated exactly; the drift Jacobian (and
    the derivative of ``a`` when it varies) comes from central differences
    at the segment midpoints.  No safe-radius check: callers that explore
    freely (optimizers) handle that themselves.
    """
    if spec.constant_a is not None and is_jitted(spec.drift):
        L = _cholesky(spec, spec.constant_a)
        v, g = action_grad_const(spec.drift, np.ascontiguousarray(times, dtype=float),
                                 np.ascontiguousarray(points, dtype=float), L, fd_step)
        return float(v), g
    dt, M, R = _pieces(spec, times, points)
    W, q = _weighted(spec, R, M)
    value = float(np.sum(0.5 * dt * q))
    n, r = M.shape
    JtW = np.empty((n, r))
    a_term = np.zeros((n, r))
    h = fd_step * np.maximum(1.0, np.abs(M))
    for j in range(r):
        E = np.zeros((n, r))
        E[:, j] = h[:, j]
        dB = (spec.drift_many(M + E) - spec.drift_many(M - E)) / (2.0 * h[:, j])[:, None]
        JtW[:, j] = np.einsum("ij,ij->i", dB, W)
        if spec.constant_a is None:
            dA = (spec.a_many(M + E) - spec.a_many(M - E)) / (2.0 * h[:, j])[:, None, None]
            a_term[:, j] = -0.25 * dt * np.einsum("ni,nij,nj->n", W, dA, W)
    common = -0.5 * dt[:, None] * JtW + a_term
    grad = np.zeros_like(points)
    grad[1:] += W + common
    grad[:-1] += -W + common
    return value, grad


def lif_path(x, y, n_segments=200):
    """Unit-speed straight path from ``x`` to ``y`` (duration ``|y - x|``)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    T = float(np.linalg.norm(y - x))
    if T == 0.0:
        raise ValueError("LIF needs distinct endpoints")
    if n_segments < 1:
        raise ValueError("n_segments must be at least 1")
    t = np.linspace(0.0, T, n_segments + 1)
    p = x + (t / T)[:, None] * (y - x)
    p[0], p[-1] = x, y
    return Path(t, p)


def lif_constant(spec, x, y, n_segments=200):
    """Empirical Lipschitz factor ``L`` with ``action(LIF) <= L |x - y|``.

    ``L`` is the largest per-segment value of ``|v - b|^2_{a^{-1}} / 2`` for
    the unit-speed velocity ``v``.
    """
    p = lif_path(x, y, n_segments)
    dt, M, R = _pieces(spec, p.times, p.points)
    _, q = _weighted(spec, R, M)
    return float(np.max(0.5 * q))


def link(p1, p2, tol=1e-9):
    """Concatenation ``p1 * p2``; a LIF bridge spans a gap ``0 < gap <= tol``.

    Raises
    ------
    ValueError
        If the endpoints are farther apart than ``tol``.
    """
    gap = float(np.linalg.norm(p1.end - p2.start))
    if gap > tol:
        raise ValueError(f"link gap {gap:.3g} exceeds tolerance {tol:.3g}")
    T1 = p1.times[-1]
    if gap == 0.0:
        t = np.concatenate([p1.times, T1 + p2.times[1:]])
        p = np.vstack([p1.points, p2.points[1:]])
    else:
        t = np.concatenate([p1.times, T1 + gap + p2.times])
        p = np.vstack([p1.points, p2.points])
    return Path(t, p)


def chain(paths, tol=1e-9):
    out = paths[0]
    for p in paths[1:]:
        out = link(out, p, tol)
    return out


def extend_by_flow(spec, path, extra_T, dt=DEFAULT_DT):
    """Append the flow from ``path.end`` for ``extra_T``; zero action up to discretization."""
    if not extra_T > 0:
        raise ValueError("extra_T must be positive")
    tr = integrate_ode(spec, path.end, extra_T, dt)
    return link(path, Path.from_trajectory(tr))


def flow_path(spec, x, T, dt=DEFAULT_DT):
    return Path.from_trajectory(integrate_ode(spec, x, T, dt))
