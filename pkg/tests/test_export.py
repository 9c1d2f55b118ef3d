import csv
import io

import numpy as np
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from limitmeasure.action import Path
from limitmeasure.export import export_csv
from limitmeasure.montecarlo import fit_decay, histogram_from_weights


def _rows(text):
    return list(csv.reader(io.StringIO(text)))


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, (12, 2), elements=st.floats(-1e6, 1e6)))
def test_path_csv_round_trip(points):
    p = Path(np.cumsum(np.r_[0.0, np.full(11, 0.1)]), points)
    buf = io.StringIO()
    export_csv(p, buf)
    rows = _rows(buf.getvalue())
    assert rows[0] == ["t", "x_1", "x_2"]
    assert len(rows) == 1 + len(points)
    back = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    np.testing.assert_array_equal(back, points)


def test_histogram_csv_rows(tmp_path):
    w = np.random.default_rng(0).random((80, 80))
    h = histogram_from_weights(w / w.sum(), [(-2, 2), (-2, 2)])
    target = tmp_path / "h.csv"
    export_csv(h, str(target))
    rows = _rows(target.read_text())
    assert rows[0] == ["bin_1", "bin_2", "center_1", "center_2", "weight"]
    assert len(rows) == 6401
    assert rows[1][:2] == ["0", "0"] and rows[2][:2] == ["0", "1"]
    assert float(rows[1][4]) == h.weights[0, 0]


def test_decay_csv_rows():
    eps = np.array([0.55, 0.5, 0.45, 0.4, 0.35])
    fit = fit_decay(eps, np.exp(-0.6 / eps ** 2))
    buf = io.StringIO()
    export_csv(fit, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "epsilon,mass,log_mass"
    assert len(lines) == 7
    assert lines[-1].startswith("kappa_hat=") and "r_squared=" in lines[-1]
