"""Small-noise Euler-Maruyama simulation and stationary-measure estimates.

The scheme is

    X_{k+1} = X_k + b(X_k) dt + eps sigma(X_k) sqrt(dt) xi_k,

with ``sigma`` the symmetric square root of ``a``.  The normal vector
``xi_k`` depends only on ``(seed, k)``: steps are grouped in blocks of
``CHUNK`` and block ``c`` draws from a Philox stream whose counter starts
at ``c``.  Any split of the work therefore sees the same noise.
"""
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from numpy.random import Generator, Philox, SeedSequence
from scipy import stats

from ._numerics import apply_scalar, em_chunk
from ._parallel import ordered_map
from .errors import EscapeError

CHUNK = 1 << 16


@dataclass(frozen=True)
class SimConfig:
    """One Euler-Maruyama run.

    ``burn_in`` defaults to 5% of ``n_steps``.  States ``X_{burn_in+1}``
    through ``X_{n_steps}`` are the ones that enter occupation estimates.
    """

    epsilon: float
    dt: float
    n_steps: int
    x0: Tuple[float, ...]
    seed: int = 0
    burn_in: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "x0", tuple(float(c) for c in self.x0))
        if self.burn_in is None:
            object.__setattr__(self, "burn_in", int(self.n_steps) // 20)
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.epsilon >= 0:
            raise ValueError("epsilon must be nonnegative")
        if not 0 <= self.burn_in < self.n_steps:
            raise ValueError("need 0 <= burn_in < n_steps")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def n_kept(self):
        return self.n_steps - self.burn_in


def noise_block(seed, chunk, n, dim):
    """Standard normals for steps ``chunk*CHUNK ... chunk*CHUNK + n - 1``."""
    gen = Generator(Philox(key=int(seed), counter=[0, 0, 0, int(chunk)]))
    return gen.standard_normal((n, dim))


def em_stream(spec, config, start=0, stop=None):
    """Yield ``(k0, states)`` blocks, ``states[i]`` being ``X_{k0+i}``, for ``k0 >= 1``.

    Covers steps ``start+1 .. stop`` (``stop`` defaults to ``n_steps``),
    starting from ``X_0 = config.x0``; earlier steps are simulated but not
    yielded.

    Raises
    ------
    EscapeError
        With the index of the first state outside the safe radius.
    """
    stop = config.n_steps if stop is None else stop
    x = np.array(config.x0, dtype=float)
    if x.shape != (spec.dim,):
        raise ValueError(f"x0 must have shape ({spec.dim},)")
    if not x @ x <= spec.safe_radius ** 2:
        raise EscapeError(f"{spec.name}: x0 {list(config.x0)} outside the safe radius", step=0,
                          time=0.0)
    sigma = spec.sigma()
    r2 = spec.safe_radius ** 2
    k = 0
    while k < stop:
        chunk = k // CHUNK
        n = min(CHUNK, stop - k)
        if config.epsilon == 0.0:
            xi = np.zeros((n, spec.dim))
        else:
            xi = noise_block(config.seed, chunk, n, spec.dim)
        states, esc = em_chunk(spec.drift, spec.diffusion_a, sigma, x, xi, config.dt,
                               config.epsilon, r2)
        if esc >= 0:
            step = k + esc + 1
            raise EscapeError(f"{spec.name}: Euler-Maruyama state {step} left the safe radius "
                              f"{spec.safe_radius:g} (eps={config.epsilon:g}, dt={config.dt:g})",
                              step=step, time=step * config.dt)
        if k + n > start:
            lo = max(0, start - k)
            yield k + 1 + lo, states[lo:]
        k += n


def em_simulate(spec, config):
    """Whole trajectory ``X_0 .. X_{n_steps}`` as an array of shape ``(n_steps + 1, dim)``."""
    out = np.empty((config.n_steps + 1, spec.dim))
    out[0] = config.x0
    for k0, states in em_stream(spec, config):
        out[k0:k0 + len(states)] = states
    return out


# --- occupation histograms ---------------------------------------------------

def _box(box, dim):
    box = np.array(box, dtype=float).reshape(-1, 2)
    if box.shape != (dim, 2) or not np.all(box[:, 1] > box[:, 0]):
        raise ValueError(f"box must be {dim} pairs (lo, hi) with lo < hi")
    return box


def _bins(bins_per_axis, dim):
    b = np.broadcast_to(np.asarray(bins_per_axis, dtype=int), (dim,)).copy()
    if np.any(b < 1):
        raise ValueError("bins_per_axis must be positive")
    return b


@dataclass(frozen=True)
class OccupationHistogram:
    """Time-average of one trajectory over a rectangular grid.

    ``batch_counts[m, j]`` counts the kept states of batch ``m`` in flat bin
    ``j`` (row-major over axes); batches are consecutive, equal blocks of the
    kept steps and feed batch-means error bars.
    """

    box: np.ndarray
    bins_per_axis: np.ndarray
    batch_counts: np.ndarray
    batch_sizes: np.ndarray
    config: Optional[SimConfig] = None

    @property
    def n_samples(self):
        return int(self.batch_sizes.sum())

    @property
    def counts(self):
        return self.batch_counts.sum(axis=0).reshape(tuple(self.bins_per_axis))

    @property
    def weights(self):
        return self.counts / self.n_samples

    @property
    def out_of_box_mass(self):
        return (self.n_samples - self.batch_counts.sum()) / self.n_samples

    @property
    def edges(self):
        return [np.linspace(lo, hi, n + 1) for (lo, hi), n in zip(self.box, self.bins_per_axis)]

    @property
    def centers(self):
        """Bin centers, shape ``(*bins_per_axis, dim)``."""
        mids = [0.5 * (e[:-1] + e[1:]) for e in self.edges]
        return np.stack(np.meshgrid(*mids, indexing="ij"), axis=-1)


def _flat_bins(X, box, bins):
    width = (box[:, 1] - box[:, 0]) / bins
    idx = np.floor((X - box[:, 0]) / width).astype(np.int64)
    # the upper box face belongs to the last bin
    on_top = X == box[:, 1]
    idx = np.where(on_top, bins - 1, idx)
    inside = np.all((idx >= 0) & (idx < bins), axis=1)
    flat = np.ravel_multi_index(tuple(idx[inside].T), tuple(bins))
    return flat


def occupation_histogram(spec, config, box, bins_per_axis, n_batches=20):
    """Occupation histogram of the kept states of one Euler-Maruyama run.

    Raises
    ------
    EscapeError
        If the trajectory leaves the safe radius; nothing is returned.
    """
    box = _box(box, spec.dim)
    bins = _bins(bins_per_axis, spec.dim)
    n_bins = int(np.prod(bins))
    n = config.n_kept
    if not 1 <= n_batches <= n:
        raise ValueError("need 1 <= n_batches <= kept steps")
    # batch m holds kept steps [bounds[m], bounds[m+1]) counted from burn_in + 1
    bounds = config.burn_in + 1 + (np.arange(n_batches + 1) * n) // n_batches
    counts = np.zeros((n_batches, n_bins), dtype=np.int64)
    for k0, states in em_stream(spec, config, start=config.burn_in):
        steps = k0 + np.arange(len(states))
        m = np.searchsorted(bounds, steps, side="right") - 1
        for b in np.unique(m):
            sel = m == b
            counts[b] += np.bincount(_flat_bins(states[sel], box, bins), minlength=n_bins)
    return OccupationHistogram(box, bins, counts, np.diff(bounds), config)


def _bin_mask(hist, region):
    pts = hist.centers.reshape(-1, hist.box.shape[0])
    return region.contains(pts)


def region_mass(hist, region, return_se=False):
    """Total weight of the bins whose centers lie in ``region``.

    With ``return_se`` also returns the batch-means standard error.
    """
    mask = _bin_mask(hist, region)
    mass = float(hist.batch_counts[:, mask].sum()) / hist.n_samples
    if not return_se:
        return mass
    per = hist.batch_counts[:, mask].sum(axis=1) / hist.batch_sizes
    m = len(per)
    se = float(np.std(per, ddof=1) / np.sqrt(m)) if m > 1 else float("nan")
    return mass, se


# --- exact densities -----------------------------------------------------------

def _bin_nodes(box, bins, order):
    """Gauss-Legendre nodes of every bin, shape ``(n_bins, order**dim, dim)``, and weights."""
    g, w = np.polynomial.legendre.leggauss(order)
    dim = len(bins)
    width = (box[:, 1] - box[:, 0]) / bins
    local = np.stack(np.meshgrid(*([g] * dim), indexing="ij"), axis=-1).reshape(-1, dim)
    lw = np.prod(np.stack(np.meshgrid(*([w] * dim), indexing="ij"), axis=-1).reshape(-1, dim),
                 axis=1) / 2.0 ** dim
    lows = np.stack(np.meshgrid(*[box[i, 0] + width[i] * np.arange(bins[i]) for i in range(dim)],
                                indexing="ij"), axis=-1).reshape(-1, dim)
    nodes = lows[:, None, :] + width * (0.5 * (local + 1.0))[None, :, :]
    return nodes, lw


def _log_bin_means(U, epsilon, box, bins, order):
    """``log`` of the bin average of ``exp(-2U/eps^2)``, up to a common constant."""
    nodes, lw = _bin_nodes(box, bins, order)
    n_bins, q, dim = nodes.shape
    u = apply_scalar(U, nodes.reshape(-1, dim)).reshape(n_bins, q)
    e = -2.0 * u / epsilon ** 2
    top = e.max()
    return np.log(np.exp(e - top) @ lw) + top


def density_quadrature(U, epsilon, box, bins_per_axis, order=4):
    """Bin masses of the density ``C exp(-2U/eps^2)`` normalized over ``box``."""
    box = np.array(box, dtype=float).reshape(-1, 2)
    bins = _bins(bins_per_axis, box.shape[0])
    lm = _log_bin_means(U, epsilon, box, bins, order)
    p = np.exp(lm - lm.max())
    return (p / p.sum()).reshape(tuple(bins))


@dataclass(frozen=True)
class DensityComparison:
    """Histogram against ``exp(-2U/eps^2)``.

    ``log_slope`` regresses log bin weight on the effective bin potential
    ``-(eps^2/2) log(mean_bin exp(-2U/eps^2))``, which is linear with slope
    exactly ``-2/eps^2`` for the exact bin masses.
    """

    tv_distance: float
    log_slope: float
    r_squared: float
    intercept: float
    expected_slope: float
    bins_used: int


def compare_to_density(hist, U, epsilon, order=4, min_count=10):
    """Total variation and log-weight regression against the density of ``U``."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    q = density_quadrature(U, epsilon, hist.box, hist.bins_per_axis, order).ravel()
    w = hist.weights.ravel()
    tv = 0.5 * float(np.abs(w - q).sum())
    u_eff = -0.5 * epsilon ** 2 * _log_bin_means(U, epsilon, hist.box, hist.bins_per_axis, order)
    keep = w > min_count / hist.n_samples
    if keep.sum() < 3:
        return DensityComparison(tv, float("nan"), float("nan"), float("nan"), -2.0 / epsilon ** 2,
                                 int(keep.sum()))
    fit = stats.linregress(u_eff[keep], np.log(w[keep]))
    return DensityComparison(tv, float(fit.slope), float(fit.rvalue ** 2), float(fit.intercept),
                             -2.0 / epsilon ** 2, int(keep.sum()))


def histogram_from_weights(weights, box, n_samples=1, config=None):
    """Wrap given bin masses as a histogram (for comparisons against oracles)."""
    weights = np.asarray(weights, dtype=float)
    box = np.array(box, dtype=float).reshape(-1, 2)
    bins = np.array(weights.shape)
    counts = (weights.ravel() * n_samples)[None, :]
    return OccupationHistogram(box, bins, counts, np.array([n_samples]), config)


# --- decay fits ------------------------------------------------------------------

@dataclass(frozen=True)
class DecayFit:
    """Fit of ``log m = c - kappa / eps^2`` to region masses.

    ``floored[i]`` marks a zero-count region replaced by one pseudo-count.
    """

    epsilons: Tuple[float, ...]
    masses: Tuple[float, ...]
    log_masses: Tuple[float, ...]
    kappa_hat: float
    intercept: float
    r_squared: float
    floored: Tuple[bool, ...] = ()
    std_errors: Tuple[float, ...] = ()
    seeds: Tuple[int, ...] = field(default=(), repr=False)

    def __post_init__(self):
        if len(self.epsilons) != len(self.log_masses) or len(self.epsilons) < 3:
            raise ValueError("a decay fit needs at least three (eps, log mass) pairs")

    @property
    def lower_confidence(self):
        return any(self.floored)


def fit_decay(epsilons, masses, n_samples=None):
    """Least-squares ``log m`` against ``1/eps^2``; zero masses take a one-count floor."""
    eps = np.asarray(epsilons, dtype=float)
    m = np.asarray(masses, dtype=float)
    if len(eps) < 3 or np.any(eps <= 0):
        raise ValueError("need at least three positive epsilons")
    n = np.broadcast_to(np.asarray(n_samples if n_samples is not None else np.inf, dtype=float),
                        m.shape)
    floored = m <= 0
    if np.any(floored & ~np.isfinite(n)):
        raise ValueError("zero mass needs n_samples for the one-count floor")
    m = np.where(floored, 1.0 / n, m)
    logm = np.log(m)
    fit = stats.linregress(1.0 / eps ** 2, logm)
    return DecayFit(tuple(eps.tolist()), tuple(m.tolist()), tuple(logm.tolist()), float(-fit.slope),
                    float(fit.intercept), float(fit.rvalue ** 2), tuple(bool(f) for f in floored))


def derived_seeds(master_seed, n):
    """Independent 64-bit seeds, one per job, from a master seed."""
    return [int(SeedSequence([int(master_seed), i]).generate_state(1, np.uint64)[0]) for i in range(n)]


def concentration_scan(spec, region, epsilons, dt, n_steps, x0, box, bins_per_axis,
                       master_seed=0, burn_in=None, n_batches=20, workers=None):
    """Region mass at each ``eps`` and the fitted decay rate ``kappa_hat``.

    Each ``eps`` gets its own seed from ``master_seed``; runs go in parallel
    and results are assembled in input order.

    Raises
    ------
    EscapeError
        Naming the ``eps`` whose run left the safe radius.
    """
    eps = [float(e) for e in epsilons]
    if len(eps) < 3 or min(eps) <= 0:
        raise ValueError("need at least three positive epsilons")
    seeds = derived_seeds(master_seed, len(eps))

    def run(i):
        cfg = SimConfig(eps[i], dt, n_steps, x0, seeds[i], burn_in)
        try:
            h = occupation_histogram(spec, cfg, box, bins_per_axis, n_batches)
        except EscapeError as exc:
            raise EscapeError(f"eps={eps[i]:g}: {exc}", step=exc.step, time=exc.time) from exc
        return region_mass(h, region, return_se=True), h.n_samples

    res = ordered_map(run, range(len(eps)), workers)
    masses = [m for (m, _), _ in res]
    ses = [s for (_, s), _ in res]
    fit = fit_decay(eps, masses, [n for _, n in res])
    return DecayFit(fit.epsilons, fit.masses, fit.log_masses, fit.kappa_hat, fit.intercept,
                    fit.r_squared, fit.floored, tuple(ses), tuple(seeds))
