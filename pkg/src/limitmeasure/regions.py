"""Composable set descriptors with membership and distance queries.

Every region answers ``contains`` and ``distance`` on arrays of points of
shape ``(n, r)``; ``distance`` is zero exactly on the closure of the region.
Regions also know how to sample points on the boundary of their open
``delta``-neighborhood, which is what shell tests and escape probes need.
"""
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.stats import qmc

from ._numerics import apply_scalar


def _rows(X):
    X = np.asarray(X, dtype=float)
    return X[None, :] if X.ndim == 1 else X


def _unit_directions(dim, n, offset=0.0):
    """Evenly spread unit vectors; equally spaced angles in the plane."""
    if dim == 1:
        return np.array([[1.0], [-1.0]])[: max(n, 1)]
    if dim == 2:
        theta = 2.0 * np.pi * (np.arange(n) + offset) / n
        return np.column_stack([np.cos(theta), np.sin(theta)])
    if dim == 3:
        # Fibonacci lattice on the sphere.
        k = np.arange(n) + 0.5
        z = 1.0 - 2.0 * k / n
        phi = np.pi * (1.0 + 5.0 ** 0.5) * k
        rho = np.sqrt(1.0 - z * z)
        return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])
    from scipy.special import ndtri
    u = qmc.Halton(d=dim, scramble=False).random(n + 1)[1:]
    g = ndtri(np.clip(u, 1e-12, 1 - 1e-12))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


class Region:
    """Base class; concrete regions implement the query methods."""

    dim: int

    def contains(self, X):
        return self.distance(X) <= 0.0

    def distance(self, X):  # pragma: no cover - abstract
        raise NotImplementedError

    def shell_points(self, delta, n):
        """Points of ``∂(R)_delta``, the boundary of the open delta-neighborhood."""
        raise NotImplementedError

    def sample_points(self, n):
        """Low-discrepancy points of the region itself (probe start points)."""
        raise NotImplementedError

    def shell_point(self, delta, theta):
        """Planar parametrization of ``∂(R)_delta`` by polar angle (radial regions only)."""
        raise NotImplementedError(f"{type(self).__name__} has no angular parametrization")

    @property
    def has_zero_measure(self):
        return False

    @property
    def bounding_radius(self):
        raise NotImplementedError


@dataclass(frozen=True)
class Ball(Region):
    center: Tuple[float, ...]
    radius: float

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self):
        return len(self.center)

    def distance(self, X):
        d = np.linalg.norm(_rows(X) - np.asarray(self.center), axis=1)
        return np.maximum(d - self.radius, 0.0)

    def shell_points(self, delta, n):
        return np.asarray(self.center) + (self.radius + delta) * _unit_directions(self.dim, n)

    def shell_point(self, delta, theta):
        return np.asarray(self.center) + (self.radius + delta) * np.array([np.cos(theta), np.sin(theta)])

    def sample_points(self, n):
        c = np.asarray(self.center)
        if self.radius == 0.0:
            return c[None, :].copy()
        # Center plus concentric rings of equal-area spacing.
        n_rings = max(1, int(round(np.sqrt(n / 2.0))))
        pts = [c]
        remaining = n - 1
        weights = np.arange(1, n_rings + 1, dtype=float)
        counts = np.maximum(1, np.round(remaining * weights / weights.sum()).astype(int))
        for j, m in enumerate(counts, start=1):
            rad = self.radius * j / n_rings
            pts.extend(c + rad * _unit_directions(self.dim, int(m), offset=0.5 * (j % 2)))
        return np.array(pts)[:n]

    @property
    def has_zero_measure(self):
        return self.radius == 0.0

    @property
    def bounding_radius(self):
        return float(np.linalg.norm(self.center)) + self.radius


@dataclass(frozen=True)
class Annulus(Region):
    center: Tuple[float, ...]
    r_in: float
    r_out: float

    def __post_init__(self):
        if not 0.0 <= self.r_in <= self.r_out:
            raise ValueError("need 0 <= r_in <= r_out")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "r_in", float(self.r_in))
        object.__setattr__(self, "r_out", float(self.r_out))

    @property
    def dim(self):
        return len(self.center)

    def distance(self, X):
        d = np.linalg.norm(_rows(X) - np.asarray(self.center), axis=1)
        return np.maximum.reduce([self.r_in - d, d - self.r_out, np.zeros_like(d)])

    def shell_points(self, delta, n):
        c = np.asarray(self.center)
        outer = c + (self.r_out + delta) * _unit_directions(self.dim, n)
        if self.r_in - delta <= 0.0:
            return outer
        inner = c + (self.r_in - delta) * _unit_directions(self.dim, n)
        return np.vstack([outer, inner])

    def shell_point(self, delta, theta):
        return np.asarray(self.center) + (self.r_out + delta) * np.array([np.cos(theta), np.sin(theta)])

    def sample_points(self, n):
        c = np.asarray(self.center)
        n_rings = max(1, int(round(np.sqrt(n / 4.0))))
        radii = np.linspace(self.r_in, self.r_out, n_rings + 1) if self.r_out > self.r_in else [self.r_in]
        per = max(1, n // len(radii))
        pts = [c + rad * _unit_directions(self.dim, per, offset=0.5 * (j % 2))
               for j, rad in enumerate(radii)]
        return np.vstack(pts)[:n]

    @property
    def has_zero_measure(self):
        return self.r_in == self.r_out

    @property
    def bounding_radius(self):
        return float(np.linalg.norm(self.center)) + self.r_out


@dataclass(frozen=True)
class CircleShell(Region):
    """Points within ``half_width`` of the sphere ``|x - center| = radius``."""

    center: Tuple[float, ...]
    radius: float
    half_width: float = 0.0

    def __post_init__(self):
        if self.radius < 0 or self.half_width < 0:
            raise ValueError("radius and half_width must be nonnegative")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "half_width", float(self.half_width))

    @property
    def dim(self):
        return len(self.center)

    def distance(self, X):
        d = np.linalg.norm(_rows(X) - np.asarray(self.center), axis=1)
        return np.maximum(np.abs(d - self.radius) - self.half_width, 0.0)

    def shell_points(self, delta, n):
        c = np.asarray(self.center)
        u = _unit_directions(self.dim, n)
        outer = c + (self.radius + self.half_width + delta) * u
        r_in = self.radius - self.half_width - delta
        if r_in <= 0.0:
            return outer
        return np.vstack([outer, c + r_in * u])

    def shell_point(self, delta, theta):
        rad = self.radius + self.half_width + delta
        return np.asarray(self.center) + rad * np.array([np.cos(theta), np.sin(theta)])

    def sample_points(self, n):
        c = np.asarray(self.center)
        if self.half_width == 0.0:
            return c + self.radius * _unit_directions(self.dim, n)
        radii = [self.radius - self.half_width, self.radius, self.radius + self.half_width]
        per = max(1, n // 3)
        return np.vstack([c + rad * _unit_directions(self.dim, per) for rad in radii])[:n]

    @property
    def has_zero_measure(self):
        return self.half_width == 0.0

    @property
    def bounding_radius(self):
        return float(np.linalg.norm(self.center)) + self.radius + self.half_width


@dataclass(frozen=True)
class Sublevel(Region):
    """``{x : field(x) <= level}`` for a pointwise scalar field.

    Distances are first-order estimates ``(field - level) / |grad field|``,
    exact for affine fields and accurate near regular level sets.  Shell
    sampling walks rays from ``center`` and so assumes the set is star-shaped
    about it.
    """

    field: Callable
    level: float
    dim: int = 2
    center: Optional[Tuple[float, ...]] = None
    bound: float = 10.0
    name: str = ""

    def _values(self, X):
        return apply_scalar(self.field, _rows(X))

    def _grad_norm(self, X, h=1e-6):
        X = _rows(X)
        g = np.zeros(len(X))
        for j in range(X.shape[1]):
            e = np.zeros(X.shape[1])
            e[j] = h
            g += ((self._values(X + e) - self._values(X - e)) / (2 * h)) ** 2
        return np.sqrt(g)

    def contains(self, X):
        return self._values(X) <= self.level

    def distance(self, X):
        X = _rows(X)
        excess = self._values(X) - self.level
        out = np.zeros(len(X))
        pos = excess > 0
        if np.any(pos):
            with np.errstate(invalid="ignore", divide="ignore"):
                est = excess[pos] / self._grad_norm(X[pos])
            out[pos] = np.where(np.isfinite(est), est, np.inf)
        return out

    def _boundary_on_ray(self, c, u):
        lo, hi = 0.0, self.bound
        if self._values(c + hi * u)[0] <= self.level:
            return hi
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if self._values(c + mid * u)[0] <= self.level:
                lo = mid
            else:
                hi = mid
        return lo

    def shell_points(self, delta, n):
        if self.center is None:
            raise ValueError("Sublevel.shell_points needs a center")
        c = np.asarray(self.center, dtype=float)
        pts = []
        for u in _unit_directions(self.dim, n):
            p = c + self._boundary_on_ray(c, u) * u
            # March outward along the ray until the distance estimate reaches delta.
            t_lo, t_hi = 0.0, 4.0 * delta + 1e-12
            while self.distance(p + t_hi * u)[0] < delta and t_hi < self.bound:
                t_hi *= 2.0
            for _ in range(50):
                t = 0.5 * (t_lo + t_hi)
                if self.distance(p + t * u)[0] < delta:
                    t_lo = t
                else:
                    t_hi = t
            pts.append(p + t_hi * u)
        return np.array(pts)

    def sample_points(self, n):
        if self.center is None:
            raise ValueError("Sublevel.sample_points needs a center")
        c = np.asarray(self.center, dtype=float)
        pts = [c]
        for u in _unit_directions(self.dim, max(1, (n - 1) // 2)):
            rb = self._boundary_on_ray(c, u)
            pts.extend([c + 0.5 * rb * u, c + rb * u])
        return np.array(pts)[:n]

    @property
    def bounding_radius(self):
        return self.bound


@dataclass(frozen=True)
class Union(Region):
    parts: Tuple[Region, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not self.parts:
            raise ValueError("Union needs at least one part")
        object.__setattr__(self, "parts", tuple(self.parts))

    @property
    def dim(self):
        return self.parts[0].dim

    def contains(self, X):
        return np.logical_or.reduce([p.contains(X) for p in self.parts])

    def distance(self, X):
        return np.minimum.reduce([p.distance(X) for p in self.parts])

    def shell_points(self, delta, n):
        per = max(1, n // len(self.parts))
        pts = np.vstack([p.shell_points(delta, per) for p in self.parts])
        # Keep only points whose distance to the whole union is (about) delta.
        return pts[self.distance(pts) >= delta * (1 - 1e-9) - 1e-12]

    def sample_points(self, n):
        per = max(1, n // len(self.parts))
        return np.vstack([p.sample_points(per) for p in self.parts])[:n]

    @property
    def has_zero_measure(self):
        return all(p.has_zero_measure for p in self.parts)

    @property
    def bounding_radius(self):
        return max(p.bounding_radius for p in self.parts)


def describe(region):
    """Plain-text rendering used by the corpus catalog and reports."""
    if isinstance(region, Ball):
        return f"Ball(center={region.center}, radius={region.radius:g})"
    if isinstance(region, Annulus):
        return f"Annulus(center={region.center}, r_in={region.r_in:g}, r_out={region.r_out:g})"
    if isinstance(region, CircleShell):
        return (f"CircleShell(center={region.center}, radius={region.radius:.6g}, "
                f"half_width={region.half_width:g})")
    if isinstance(region, Sublevel):
        return f"Sublevel({region.name or 'field'} <= {region.level:g})"
    if isinstance(region, Union):
        return "Union(" + ", ".join(describe(p) for p in region.parts) + ")"
    return repr(region)
