import math

import pytest

from raredetect import io as rio
from raredetect.io import SweepRow


def row(beta=0.75, r=0.5, **kw):
    base = dict(family="chimeric", beta=beta, r=r, param="const", side="boundary", label="Detectable")
    base.update(kw)
    return SweepRow(**base)


def test_single_row_two_lines(tmp_path):
    path = tmp_path / "a.csv"
    rio.write_csv([row()], path)
    assert len(path.read_text().splitlines()) == 2


def test_byte_identical(tmp_path):
    rows = [row(0.6, 0.1), row(0.55, 0.3, hc_power=0.25, llr_power=1 / 3, reps=100, seed=4)]
    rio.write_csv(rows, tmp_path / "a.csv")
    rio.write_csv(list(reversed(rows)), tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_round_trip(tmp_path):
    rows = [row(0.6, 0.1 + 1e-17), row(0.7, 0.3, hc_power=0.1 + 0.2, llr_power=math.pi / 4, reps=1000, seed=7)]
    path = tmp_path / "a.csv"
    rio.write_csv(rows, path)
    back = rio.read_csv(path)
    assert back == sorted(rows, key=lambda q: (q.beta, q.r))
    assert rio.rows_to_csv_text(back) == path.read_text()


def test_row_validation():
    with pytest.raises(ValueError):
        row(label="Maybe")
    with pytest.raises(ValueError):
        row(hc_power=1.5)


def test_fmt():
    assert rio.fmt(None) == ""
    assert rio.fmt(3) == "3"
    assert float(rio.fmt(0.1)) == 0.1
    assert rio.fmt(0.1) == "0.10000000000000001"


def test_svg_chimeric_endpoints():
    curve = rio.boundary_curve("chimeric")
    assert curve[0] == (0.5, 0.0) and curve[-1] == (1.0, 1.0)
    text = rio.svg_phase_text([row()], curve, "chimeric const")
    assert text.startswith("<?xml") and 'width="640"' in text and 'height="480"' in text
    poly = [ln for ln in text.splitlines() if ln.startswith("<polyline")][0]
    pts = poly.split('points="')[1].split('"')[0].split()
    # first point at the lower-left corner of the plot area, last at the upper-right
    x0, y0 = map(float, pts[0].split(","))
    x1, y1 = map(float, pts[-1].split(","))
    assert (x0, y0) == (70.0, 420.0)
    assert (x1, y1) == (470.0, 40.0)
    assert "#e0a400" in text


def test_svg_needs_rows():
    with pytest.raises(ValueError):
        rio.svg_phase_text([], rio.boundary_curve("chimeric"))


def test_boundary_curve_families():
    assert all(r == 0.0 for _, r in rio.boundary_curve("powerlaw", 0.9) if _ < 0.9)
    assert rio.boundary_curve("normal-dense")[0][1] == pytest.approx(0.495)
    with pytest.raises(ValueError):
        rio.boundary_curve("other")


def test_parse_config():
    cfg = rio.parse_config("# comment\nseed = 5\n\nlog-exponent = 0.25  # trailing\nfamily=normal\n")
    assert cfg == {"seed": "5", "log_exponent": "0.25", "family": "normal"}
    with pytest.raises(ValueError):
        rio.parse_config("just words")


def test_write_table(tmp_path):
    rio.write_table(tmp_path / "t.csv", ("x", "y"), ([1.0, 2.0], [0.5, 1.0]))
    assert (tmp_path / "t.csv").read_text() == "x,y\n1,0.5\n2,1\n"
