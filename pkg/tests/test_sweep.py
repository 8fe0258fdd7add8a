import csv
import math

import numpy as np
import pytest

from ejmtele.teleport import InputState, success_probability
from ejmtele.tooling.sweep import COLUMNS, SweepConfig, csv_text, extremes_text, sweep, uniform_grid

S2, S3 = math.sqrt(2), math.sqrt(3)
ZETA_FINE = uniform_grid(0, 2 * math.pi, 630)  # step 2pi/629 < 0.01


def test_config_validation():
    with pytest.raises(ValueError):
        SweepConfig((), (0.0,))
    with pytest.raises(ValueError):
        SweepConfig((2.0,), (0.0,))
    with pytest.raises(ValueError):
        SweepConfig((0.0,), (7.0,))
    with pytest.raises(ValueError):
        SweepConfig((0.0,), (0.0,), branch="21")
    with pytest.raises(ValueError):
        SweepConfig((0.0,), (0.0,), shots=0)


def test_grid_step():
    assert max(np.diff(ZETA_FINE)) <= 0.01
    assert ZETA_FINE[0] == 0 and ZETA_FINE[-1] == 2 * math.pi
    assert uniform_grid(0.3, 1.0, 1) == (0.3,)


def test_theta_zero_extremes():
    res = sweep(SweepConfig((0.0,), ZETA_FINE))
    lo = min(r.p_analytic for r in res.rows)
    hi = max(r.p_analytic for r in res.rows)
    assert abs(lo - (2 - S3) / (2 + S2)) <= 1e-3
    assert abs(hi - (2 - S3) / (2 - S2)) <= 1e-3
    assert lo == pytest.approx(0.078482, abs=1e-3)
    assert hi == pytest.approx(0.457419, abs=1e-3)
    for e in res.extremes():
        assert abs(e.p_min - (2 - S3) / (2 + S2)) <= 1e-3
        assert abs(e.p_max - (2 - S3) / (2 - S2)) <= 1e-3


def test_half_pi_all_exactly_one():
    res = sweep(SweepConfig((math.pi / 2,), ZETA_FINE))
    assert all(r.p_analytic == 1.0 for r in res.rows)


def test_rows_ordered_and_complete():
    thetas, zetas = (0.0, 0.5, 1.2), (0.0, 1.0, 3.0)
    res = sweep(SweepConfig(thetas, zetas, xi=0.4))
    keys = [(r.theta, r.zeta, r.branch) for r in res.rows]
    assert keys == [(t, z, k) for t in thetas for z in zetas for k in ("00", "01", "10", "11")]
    for r in res.rows:
        assert r.p_analytic == success_probability(InputState.from_angles(r.zeta, 0.4), r.theta, r.branch)


def test_branch_filter():
    res = sweep(SweepConfig((0.1,), (0.0, 1.0), branch="10"))
    assert {r.branch for r in res.rows} == {"10"}


def test_csv_schema(tmp_path):
    path = tmp_path / "out.csv"
    res = sweep(SweepConfig((0.0, 0.7), (0.0, 2.0), output_path=path))
    raw = path.read_bytes()
    assert b"\r" not in raw
    rows = list(csv.reader(raw.decode("utf-8").splitlines()))
    assert tuple(rows[0]) == COLUMNS
    assert len(rows) == 1 + len(res.rows)
    for row, r in zip(rows[1:], res.rows):
        assert float(row[3]) == r.p_analytic  # exact round trip
        mantissa = row[3].split("e")[0].replace("-", "").replace(".", "")
        assert len(mantissa) >= 12
        assert row[4] == "" and row[5] == ""


def test_empirical_columns_and_determinism():
    cfg = SweepConfig((0.3,), (1.0,), shots=3000, seed=5)
    a = csv_text(sweep(cfg))
    b = csv_text(sweep(cfg))
    assert a == b
    for r in sweep(cfg).rows:
        assert r.p_empirical is not None
        assert abs(r.p_empirical - r.p_analytic) <= 5 * max(r.stderr, 1e-3)


def test_threaded_matches_serial():
    thetas = tuple(np.linspace(0, math.pi / 2, 6))
    serial = sweep(SweepConfig(thetas, (0.0, 2.5), shots=50, seed=9))
    threaded = sweep(SweepConfig(thetas, (0.0, 2.5), shots=50, seed=9, workers=4))
    assert csv_text(serial) == csv_text(threaded)


def test_extremes_text_rows():
    res = sweep(SweepConfig((0.0, 0.5), (0.0, 1.0, 2.0)))
    lines = extremes_text(res).splitlines()
    assert lines[0].startswith("theta,branch,p_min")
    assert len(lines) == 1 + 2 * 4


def test_unwritable_path(tmp_path):
    with pytest.raises(OSError):
        sweep(SweepConfig((0.0,), (0.0,), output_path=tmp_path / "missing" / "x.csv"))
