"""CSV writers for paths, histograms, decay fits and query results.

Floats are written with ``repr`` so that every value reads back exactly.
"""
import csv
import io

import numpy as np


def fmt(v):
    """Round-trip decimal rendering of a scalar."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if v is None:
        return ""
    return str(v)


def _render(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def path_csv(path):
    """``t,x_1..x_r``, one row per node."""
    header = ["t"] + [f"x_{i + 1}" for i in range(path.dim)]
    rows = ([t] + list(p) for t, p in zip(path.times, path.points))
    return _render(header, rows)


def histogram_csv(hist):
    """``bin_1..bin_r,center_1..center_r,weight``, one row per bin in row-major order."""
    dim = len(hist.bins_per_axis)
    header = ([f"bin_{i + 1}" for i in range(dim)] + [f"center_{i + 1}" for i in range(dim)]
              + ["weight"])
    centers = hist.centers.reshape(-1, dim)
    weights = hist.weights.ravel()
    idx = np.indices(tuple(hist.bins_per_axis)).reshape(dim, -1).T
    rows = (list(i) + list(c) + [w] for i, c, w in zip(idx, centers, weights))
    return _render(header, rows)


def decay_csv(fit):
    """``epsilon,mass,log_mass`` rows and a final ``kappa_hat=..,intercept=..,r_squared=..`` row."""
    text = _render(["epsilon", "mass", "log_mass"],
                   zip(fit.epsilons, fit.masses, fit.log_masses))
    summary = (f"kappa_hat={fmt(fit.kappa_hat)},intercept={fmt(fit.intercept)},"
               f"r_squared={fmt(fit.r_squared)}\n")
    return text + summary


def table_csv(header, rows):
    return _render(header, rows)


def write_text(target, text):
    """Write ``text`` to an open file or a filesystem path."""
    if hasattr(target, "write"):
        target.write(text)
        return
    with open(target, "w", newline="") as f:
        f.write(text)


def export_csv(artifact, target):
    """Write a Path, OccupationHistogram or DecayFit with its CSV schema."""
    from .action import Path
    from .montecarlo import DecayFit, OccupationHistogram
    if isinstance(artifact, Path):
        text = path_csv(artifact)
    elif isinstance(artifact, OccupationHistogram):
        text = histogram_csv(artifact)
    elif isinstance(artifact, DecayFit):
        text = decay_csv(artifact)
    else:
        raise TypeError(f"no CSV schema for {type(artifact).__name__}")
    write_text(target, text)
