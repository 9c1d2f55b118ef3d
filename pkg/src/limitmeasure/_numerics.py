"""Low-level loops shared by the flow, action and Monte Carlo modules.

Field functions in this package are *pointwise*: a drift takes a point of
shape ``(r,)`` and returns an array of shape ``(r,)``; scalar fields return a
float; diffusion matrices return ``(r, r)``.  When such a function is a numba
dispatcher the loops below run compiled, otherwise they fall back to plain
Python with identical arithmetic.

Kernels that take a jitted function as an argument are compiled once per
process and per function: numba's disk cache does not hit for such
signatures, so they are not cached.
"""
import numpy as np
from numba import njit
from numba.core.registry import CPUDispatcher


def is_jitted(fn):
    return isinstance(fn, CPUDispatcher)


@njit(nogil=True)
def _apply_vector_nb(fn, X):
    out = np.empty_like(X)
    for i in range(X.shape[0]):
        out[i] = fn(X[i])
    return out


@njit(nogil=True)
def _apply_scalar_nb(fn, X):
    out = np.empty(X.shape[0])
    for i in range(X.shape[0]):
        out[i] = fn(X[i])
    return out


@njit(nogil=True)
def _apply_matrix_nb(fn, X):
    r = X.shape[1]
    out = np.empty((X.shape[0], r, r))
    for i in range(X.shape[0]):
        out[i] = fn(X[i])
    return out


def apply_vector(fn, X):
    """Evaluate a pointwise vector field on the rows of ``X``."""
    X = np.ascontiguousarray(X, dtype=float)
    if is_jitted(fn):
        return _apply_vector_nb(fn, X)
    return np.array([np.asarray(fn(x), dtype=float) for x in X]).reshape(X.shape)


def apply_scalar(fn, X):
    X = np.ascontiguousarray(X, dtype=float)
    if is_jitted(fn):
        return _apply_scalar_nb(fn, X)
    return np.array([float(fn(x)) for x in X])


def apply_matrix(fn, X):
    X = np.ascontiguousarray(X, dtype=float)
    if is_jitted(fn):
        return _apply_matrix_nb(fn, X)
    r = X.shape[1]
    return np.array([np.asarray(fn(x), dtype=float) for x in X]).reshape(X.shape[0], r, r)


# --- fixed-step RK4 -------------------------------------------------------

@njit(nogil=True)
def _rk4_nb(fn, x0, n_steps, dt, last_dt, sign, safe_r2, out):
    x = x0.copy()
    out[0] = x
    for k in range(n_steps):
        h = dt if k < n_steps - 1 else last_dt
        k1 = sign * fn(x)
        k2 = sign * fn(x + 0.5 * h * k1)
        k3 = sign * fn(x + 0.5 * h * k2)
        k4 = sign * fn(x + h * k3)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[k + 1] = x
        s = 0.0
        for i in range(x.shape[0]):
            s += x[i] * x[i]
        if not s <= safe_r2:
            return k + 1
    return -1


def _rk4_py(fn, x0, n_steps, dt, last_dt, sign, safe_r2, out):
    x = x0.copy()
    out[0] = x
    for k in range(n_steps):
        h = dt if k < n_steps - 1 else last_dt
        k1 = sign * np.asarray(fn(x), dtype=float)
        k2 = sign * np.asarray(fn(x + 0.5 * h * k1), dtype=float)
        k3 = sign * np.asarray(fn(x + 0.5 * h * k2), dtype=float)
        k4 = sign * np.asarray(fn(x + h * k3), dtype=float)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[k + 1] = x
        if not x @ x <= safe_r2:
            return k + 1
    return -1


def rk4(fn, x0, n_steps, dt, last_dt, sign, safe_r2):
    """Run ``n_steps`` RK4 steps; returns ``(states, escape_index)`` (-1 if none)."""
    x0 = np.ascontiguousarray(x0, dtype=float)
    out = np.empty((n_steps + 1, x0.shape[0]))
    kern = _rk4_nb if is_jitted(fn) else _rk4_py
    esc = kern(fn, x0, n_steps, float(dt), float(last_dt), float(sign), float(safe_r2), out)
    return out, int(esc)


# --- Euler-Maruyama --------------------------------------------------------

@njit(nogil=True)
def _em_const_nb(fn, x, xi, dt, scale, sigma, identity, safe_r2, out):
    r = x.shape[0]
    noise = np.empty(r)
    for k in range(xi.shape[0]):
        b = fn(x)
        if identity:
            for i in range(r):
                noise[i] = scale * xi[k, i]
        else:
            for i in range(r):
                acc = 0.0
                for j in range(r):
                    acc += sigma[i, j] * xi[k, j]
                noise[i] = scale * acc
        s = 0.0
        for i in range(r):
            x[i] = (x[i] + b[i] * dt) + noise[i]
            s += x[i] * x[i]
        out[k] = x
        if not s <= safe_r2:
            return k
    return -1


@njit(nogil=True)
def _em_var_nb(fn, a_fn, x, xi, dt, scale, safe_r2, out):
    r = x.shape[0]
    for k in range(xi.shape[0]):
        b = fn(x)
        w, v = np.linalg.eigh(a_fn(x))
        sig = v @ np.diag(np.sqrt(np.maximum(w, 0.0))) @ v.T
        noise = scale * (sig @ xi[k])
        s = 0.0
        for i in range(r):
            x[i] = (x[i] + b[i] * dt) + noise[i]
            s += x[i] * x[i]
        out[k] = x
        if not s <= safe_r2:
            return k
    return -1


def symmetric_sqrt(a):
    w, v = np.linalg.eigh(a)
    return (v * np.sqrt(np.maximum(w, 0.0))) @ v.T


def _em_py(fn, a_fn, sigma, x, xi, dt, scale, safe_r2, out):
    for k in range(xi.shape[0]):
        b = np.asarray(fn(x), dtype=float)
        sig = sigma if sigma is not None else symmetric_sqrt(np.asarray(a_fn(x), dtype=float))
        noise = scale * (sig @ xi[k])
        x[:] = (x + b * dt) + noise
        out[k] = x
        if not x @ x <= safe_r2:
            return k
    return -1


def em_chunk(fn, a_fn, sigma, x, xi, dt, eps, safe_r2):
    """Advance ``x`` in place over the rows of ``xi``; returns ``(states, escape)``.

    ``sigma`` is a constant diffusion factor or ``None`` when ``a`` varies in
    space (then the symmetric root of ``a_fn(x)`` is taken at every step).
    """
    out = np.empty_like(xi)
    scale = float(eps) * np.sqrt(dt)
    if is_jitted(fn) and (sigma is not None or is_jitted(a_fn)):
        if sigma is not None:
            identity = bool(np.array_equal(sigma, np.eye(len(x))))
            esc = _em_const_nb(fn, x, xi, float(dt), scale, np.ascontiguousarray(sigma),
                               identity, float(safe_r2), out)
        else:
            esc = _em_var_nb(fn, a_fn, x, xi, float(dt), scale, float(safe_r2), out)
    else:
        esc = _em_py(fn, a_fn, sigma, x, xi, float(dt), scale, float(safe_r2), out)
    return out, int(esc)


# --- discrete action with constant diffusion ----------------------------------

@njit(nogil=True, cache=True)
def _chol_solve(L, v, y, w):
    # L y = v, then L^T w = y
    r = v.shape[0]
    for i in range(r):
        acc = v[i]
        for j in range(i):
            acc -= L[i, j] * y[j]
        y[i] = acc / L[i, i]
    for i in range(r - 1, -1, -1):
        acc = y[i]
        for j in range(i + 1, r):
            acc -= L[j, i] * w[j]
        w[i] = acc / L[i, i]


@njit(nogil=True)
def action_grad_const(fn, times, P, L, rel_h):
    """Midpoint action and node gradient for constant ``a = L L^T``.

    The drift Jacobian enters through central differences with step
    ``rel_h * max(1, |m_j|)``; everything else is exact.
    """
    n = P.shape[0] - 1
    r = P.shape[1]
    grad = np.zeros((n + 1, r))
    y = np.empty(r)
    w = np.empty(r)
    res = np.empty(r)
    total = 0.0
    for k in range(n):
        dt = times[k + 1] - times[k]
        m = 0.5 * (P[k] + P[k + 1])
        b = fn(m)
        for i in range(r):
            res[i] = (P[k + 1, i] - P[k, i]) / dt - b[i]
        _chol_solve(L, res, y, w)
        q = 0.0
        for i in range(r):
            q += y[i] * y[i]
        total += 0.5 * dt * q
        for j in range(r):
            h = rel_h * max(1.0, abs(m[j]))
            mp = m.copy()
            mm = m.copy()
            mp[j] += h
            mm[j] -= h
            bp = fn(mp)
            bm = fn(mm)
            jtw = 0.0
            for i in range(r):
                jtw += (bp[i] - bm[i]) / (2.0 * h) * w[i]
            c = -0.5 * dt * jtw
            grad[k + 1, j] += w[j] + c
            grad[k, j] += -w[j] + c
    return total, grad
