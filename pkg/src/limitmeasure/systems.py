"""System specifications for small-noise SDEs ``dX = b(X)dt + eps*sigma(X)dW``.

A :class:`SystemSpec` bundles the drift ``b``, the diffusion matrix
``a = sigma sigma^T``, a safe radius and what is known about the
unperturbed dynamics (labeled invariant regions, equilibria, the expected
limit measure).  Fields are pointwise functions; numba-compiled fields run
through compiled loops everywhere else in the package.
"""
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np
from numba import njit

from ._numerics import apply_matrix, apply_vector, is_jitted
from .errors import InvalidSystemError
from .regions import Region

LABELS = ("attractor", "repeller", "equivalent_class", "saddle_chain_element")


@dataclass(frozen=True)
class ClassifyHint:
    """Parameters under which ``classify_region`` reproduces a label."""

    shell_delta: float = 0.1
    escape_T: float = 50.0
    dt: float = 1e-2
    n_samples: int = 64


@dataclass(frozen=True)
class LabeledRegion:
    """A declared invariant set; ``hint=None`` marks it as not numerically classifiable."""

    region: Region
    label: str
    note: str = ""
    hint: Optional[ClassifyHint] = ClassifyHint()

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"unknown label {self.label!r}")


@dataclass(frozen=True)
class PointMass:
    point: Tuple[float, ...]
    weight: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "point", tuple(float(v) for v in self.point))


@dataclass(frozen=True)
class CycleMass:
    """Time average along the periodic orbit through ``seed``."""

    seed: Tuple[float, ...]
    weight: Optional[float] = None
    description: str = ""

    def __post_init__(self):
        object.__setattr__(self, "seed", tuple(float(v) for v in self.seed))


@dataclass(frozen=True)
class LimitMeasureDescriptor:
    components: Tuple = ()
    note: str = ""

    def __post_init__(self):
        ws = [c.weight for c in self.components]
        if ws and all(w is not None for w in ws) and abs(sum(ws) - 1.0) > 1e-12:
            raise ValueError("limit-measure weights must sum to 1")

    @property
    def is_unknown(self):
        return not self.components

    def describe(self):
        if self.is_unknown:
            return "unknown" + (f" ({self.note})" if self.note else "")
        parts = []
        for c in self.components:
            w = "?" if c.weight is None else f"{c.weight:g}"
            if isinstance(c, PointMass):
                parts.append(f"{w}*delta{tuple(round(v, 6) for v in c.point)}")
            else:
                parts.append(f"{w}*orbit_average{tuple(round(v, 6) for v in c.seed)}"
                             + (f"[{c.description}]" if c.description else ""))
        out = " + ".join(parts)
        return out + (f" ({self.note})" if self.note else "")


UNKNOWN_LIMIT = LimitMeasureDescriptor()


@dataclass(frozen=True)
class KnownStructure:
    invariant_regions: Tuple[LabeledRegion, ...] = ()
    expected_limit: LimitMeasureDescriptor = UNKNOWN_LIMIT
    equilibria: Tuple[Tuple[float, ...], ...] = ()
    exact_density_potential: Optional[Callable] = None
    density_source: str = ""
    equations: str = ""
    notes: str = ""


@njit(cache=True)
def _identity2(x):
    return np.eye(x.shape[0])


@dataclass(frozen=True)
class SystemSpec:
    """Immutable description of one SDE family.

    Parameters
    ----------
    name : str
        Identifier used by the corpus and the command line.
    dim : int
        State dimension ``r``.
    drift : callable
        Pointwise drift ``b(x)``, ``(r,) -> (r,)``.
    diffusion_a : callable
        Pointwise diffusion matrix ``a(x)``, ``(r,) -> (r, r)``, symmetric
        positive definite.
    safe_radius : float
        States with ``|x|`` beyond this abort integration and simulation.
    metadata : KnownStructure
    constant_a : ndarray, optional
        Set when ``a`` does not depend on ``x``; enables the fast paths.
    hamiltonian : tuple, optional
        ``(H, grad_H, F)`` for systems built by :func:`hamiltonian_system`.
    """

    name: str
    dim: int
    drift: Callable
    diffusion_a: Callable
    safe_radius: float
    metadata: KnownStructure = KnownStructure()
    constant_a: Optional[np.ndarray] = None
    hamiltonian: Optional[tuple] = None

    def __post_init__(self):
        if self.dim < 1:
            raise InvalidSystemError("dim must be positive")
        if self.constant_a is not None:
            a = np.array(self.constant_a, dtype=float)
            a.setflags(write=False)
            object.__setattr__(self, "constant_a", a)
            try:
                np.linalg.cholesky(a)
            except np.linalg.LinAlgError as exc:
                raise InvalidSystemError(f"{self.name}: constant diffusion matrix is not SPD") from exc

    # -- evaluation --------------------------------------------------------

    def b(self, x):
        return np.asarray(self.drift(np.asarray(x, dtype=float)), dtype=float)

    def a(self, x):
        if self.constant_a is not None:
            return self.constant_a
        return np.asarray(self.diffusion_a(np.asarray(x, dtype=float)), dtype=float)

    def drift_many(self, X):
        return apply_vector(self.drift, X)

    def a_many(self, X):
        X = np.asarray(X, dtype=float)
        if self.constant_a is not None:
            return np.broadcast_to(self.constant_a, (len(X), self.dim, self.dim))
        return apply_matrix(self.diffusion_a, X)

    def sigma(self):
        """Constant symmetric square root of ``a``, or ``None`` if ``a`` varies."""
        if self.constant_a is None:
            return None
        from ._numerics import symmetric_sqrt
        return symmetric_sqrt(self.constant_a)

    def in_safe_ball(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.einsum("ij,ij->i", X, X) <= self.safe_radius ** 2

    @property
    def compiled(self):
        return is_jitted(self.drift)

    def with_diffusion(self, a, name=None):
        """Copy of this system with a constant diffusion matrix ``a``."""
        a = np.array(a, dtype=float)

        @njit
        def diff(x):
            return a.copy()

        return SystemSpec(name or self.name, self.dim, self.drift, diff, self.safe_radius,
                          self.metadata, constant_a=a, hamiltonian=self.hamiltonian)


def identity_diffusion(dim):
    return _identity2, np.eye(dim)


def make_system(name, dim, drift, safe_radius, metadata=None, diffusion_a=None):
    """Build a :class:`SystemSpec`, defaulting to identity diffusion."""
    if diffusion_a is None:
        diff, const = identity_diffusion(dim)
    elif callable(diffusion_a):
        diff, const = diffusion_a, None
    else:
        const = np.array(diffusion_a, dtype=float)

        @njit
        def diff(x):
            return const.copy()

    return SystemSpec(name, dim, drift, diff, float(safe_radius), metadata or KnownStructure(),
                      constant_a=const)


def check_system(spec, n_points=100, seed=0):
    """Check SPD diffusion and finite drift at random points of the safe ball.

    Raises
    ------
    InvalidSystemError
        On the first violating point.
    """
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((n_points, spec.dim))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    rad = spec.safe_radius * rng.random(n_points) ** (1.0 / spec.dim)
    X = u * rad[:, None]
    B = spec.drift_many(X)
    if not np.all(np.isfinite(B)):
        raise InvalidSystemError(f"{spec.name}: non-finite drift inside the safe ball")
    A = spec.a_many(X)
    if not np.allclose(A, np.swapaxes(A, 1, 2)):
        raise InvalidSystemError(f"{spec.name}: diffusion matrix is not symmetric")
    try:
        np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise InvalidSystemError(f"{spec.name}: diffusion matrix is not SPD") from exc
    return X


def eval_inverse_quadform(spec, x, v):
    """Return ``v^T a(x)^{-1} v`` via a Cholesky solve.

    Raises
    ------
    InvalidSystemError
        If ``a(x)`` is not symmetric positive definite.
    """
    v = np.asarray(v, dtype=float)
    a = spec.a(x)
    try:
        L = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise InvalidSystemError(f"{spec.name}: a(x) is not SPD at x={x}") from exc
    y = np.linalg.solve(L, v)
    return float(y @ y)


def _check_gradient(H, grad_H, radius, n_points=16, rtol=1e-4, seed=12345):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-radius, radius, size=(n_points, 2))
    h = 1e-6
    for x in pts:
        g = np.asarray(grad_H(x), dtype=float)
        fd = np.empty(2)
        for j in range(2):
            e = np.zeros(2)
            e[j] = h * max(1.0, abs(x[j]))
            fd[j] = (H(x + e) - H(x - e)) / (2 * e[j])
        scale = max(np.linalg.norm(fd), np.linalg.norm(g), 1e-8)
        if np.linalg.norm(g - fd) / scale > rtol:
            raise InvalidSystemError(
                f"grad_H inconsistent with H at x={x.tolist()}: analytic {g.tolist()}, "
                f"finite differences {fd.tolist()}")


def _hamiltonian_drift(H, grad_H, F):
    if is_jitted(H) and is_jitted(grad_H) and is_jitted(F):
        @njit
        def drift(x):
            g = grad_H(x)
            f = F(H(x))
            return np.array([g[1] - f * g[0], -g[0] - f * g[1]])
    else:
        def drift(x):
            g = np.asarray(grad_H(x), dtype=float)
            f = float(F(float(H(x))))
            return np.array([g[1] - f * g[0], -g[0] - f * g[1]])
    return drift


def hamiltonian_system(H, grad_H, F, name, safe_radius=10.0, metadata=None, check_radius=None):
    """Planar system ``x' = (dH/dx2, -dH/dx1) - F(H(x)) grad H(x)``.

    ``grad_H`` is spot-checked against central differences of ``H`` at 16
    random points (relative error below 1e-4).  Diffusion is the identity.

    Raises
    ------
    InvalidSystemError
        When ``grad_H`` does not match ``H``.
    """
    _check_gradient(H, grad_H, check_radius or min(safe_radius, 2.0))
    drift = _hamiltonian_drift(H, grad_H, F)
    spec = make_system(name, 2, drift, safe_radius, metadata)
    return SystemSpec(spec.name, 2, drift, spec.diffusion_a, spec.safe_radius, spec.metadata,
                      constant_a=spec.constant_a, hamiltonian=(H, grad_H, F))


def gradient_system(F, grad_F, name, dim, safe_radius=10.0, metadata=None):
    """``x' = -grad F(x)`` with identity diffusion."""
    if is_jitted(grad_F):
        @njit
        def drift(x):
            return -grad_F(x)
    else:
        def drift(x):
            return -np.asarray(grad_F(x), dtype=float)
    return make_system(name, dim, drift, safe_radius, metadata)


def catalog_text(systems):
    """Plain-text catalog: name, equations, labeled regions, expected limit."""
    from .regions import describe
    lines = []
    for s in systems:
        md = s.metadata
        lines.append(f"[{s.name}]")
        lines.append(f"  dimension: {s.dim}")
        lines.append(f"  safe_radius: {s.safe_radius:g}")
        if md.equations:
            for eq in md.equations.strip().splitlines():
                lines.append(f"  equation: {eq.strip()}")
        lines.append("  diffusion: identity" if s.constant_a is not None
                     and np.array_equal(s.constant_a, np.eye(s.dim)) else "  diffusion: custom")
        for p in md.equilibria:
            lines.append(f"  equilibrium: {tuple(round(v, 9) for v in p)}")
        for lr in md.invariant_regions:
            note = f"  # {lr.note}" if lr.note else ""
            lines.append(f"  region: {lr.label}: {describe(lr.region)}{note}")
        lines.append(f"  expected_limit: {md.expected_limit.describe()}")
        if md.exact_density_potential is not None:
            lines.append(f"  exact_density: p ~ exp(-2U/eps^2), U from {md.density_source}")
        if md.notes:
            lines.append(f"  notes: {md.notes}")
        lines.append("")
    return "\n".join(lines)
