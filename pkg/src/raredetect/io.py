"""CSV and SVG output for sweeps, and the flat ``key = value`` config format."""
from __future__ import annotations

import csv
import io as _io
from dataclasses import dataclass, fields
from xml.sax.saxutils import escape

import numpy as np

from . import detectability as det

COLUMNS = ("family", "beta", "r", "param", "side", "label", "hc_power", "llr_power", "reps", "seed")
LABEL_COLOURS = {
    "Undetectable": "#3b6fb6",
    "Detectable": "#e0a400",
    "CompletelyDetectable": "#c0392b",
}


@dataclass(frozen=True)
class SweepRow:
    family: str
    beta: float
    r: float
    param: str
    side: str
    label: str
    hc_power: float | None = None
    llr_power: float | None = None
    reps: int | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.label not in LABEL_COLOURS:
            raise ValueError(f"unknown region label {self.label!r}")
        for p in (self.hc_power, self.llr_power):
            if p is not None and not 0.0 <= p <= 1.0:
                raise ValueError("powers must lie in [0, 1]")


def fmt(x):
    """17 significant digits for floats, empty string for missing values."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def rows_to_csv_text(rows):
    rows = sorted(rows, key=lambda row: (row.beta, row.r))
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
    w.writerow(COLUMNS)
    for row in rows:
        w.writerow([fmt(getattr(row, c)) for c in COLUMNS])
    return buf.getvalue()


def write_csv(rows, path):
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(rows_to_csv_text(rows))


def read_csv(path):
    """Inverse of :func:`write_csv`."""
    conv = {f.name: f.type for f in fields(SweepRow)}
    out = []
    with open(path, encoding="utf-8", newline="") as f:
        for rec in csv.DictReader(f):
            kw = {}
            for c in COLUMNS:
                v = rec[c]
                t = str(conv[c])
                if v == "":
                    kw[c] = None
                elif t.startswith("float"):
                    kw[c] = float(v)
                elif t.startswith("int"):
                    kw[c] = int(v)
                else:
                    kw[c] = v
            out.append(SweepRow(**kw))
    return out


def write_table(path, header, columns):
    """Plain numeric CSV (used for ECDF dumps)."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for rec in zip(*columns):
            w.writerow([fmt(v) for v in rec])


# -- boundary curves and SVG ------------------------------------------------

def boundary_curve(family, param=None, points=101):
    """Polyline ``[(beta, rho(beta))]`` for a family.

    ``family`` is ``chimeric``, ``powerlaw`` (param = a), ``normal``
    (param = sigma0) or ``normal-dense``.
    """
    if family == "chimeric":
        b = np.linspace(0.5, 1.0, points)
        return [(float(x), float(2 * x - 1)) for x in b]
    if family == "powerlaw":
        b = np.linspace(0.5, 1.0, points)[1:-1]
        return [(float(x), det.boundary_powerlaw(float(x), float(param))) for x in b]
    if family == "normal":
        b = np.linspace(0.5, 1.0, points)[1:-1]
        return [(float(x), det.boundary_normal_sparse(float(x), float(param or 1.0))) for x in b]
    if family == "normal-dense":
        b = np.linspace(0.0, 0.5, points)[1:-1]
        return [(float(x), det.boundary_normal_dense(float(x))) for x in b]
    raise ValueError(f"unknown family {family!r}")


def svg_phase_text(rows, curve, title=""):
    if not rows:
        raise ValueError("need at least one row to draw")
    width, height = 640, 480
    left, right, top, bottom = 70, 170, 40, 60
    pw, ph = width - left - right, height - top - bottom
    bx = [p[0] for p in curve] + [r.beta for r in rows]
    ry = [p[1] for p in curve] + [r.r for r in rows]
    x0, x1 = min(bx), max(bx)
    y0, y1 = 0.0, max(max(ry), 1e-9)
    if x1 == x0:
        x1 = x0 + 1.0

    def sx(b):
        return left + (b - x0) / (x1 - x0) * pw

    def sy(r):
        return top + ph - (r - y0) / (y1 - y0) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    if title:
        out.append(f'<text x="{left}" y="24" font-family="sans-serif" font-size="14">{escape(title)}</text>')
    for k in range(6):
        b = x0 + k * (x1 - x0) / 5
        r = y0 + k * (y1 - y0) / 5
        out.append(f'<text x="{sx(b):.2f}" y="{top + ph + 18}" font-family="sans-serif" font-size="11" '
                   f'text-anchor="middle">{b:.2f}</text>')
        out.append(f'<text x="{left - 8}" y="{sy(r) + 4:.2f}" font-family="sans-serif" font-size="11" '
                   f'text-anchor="end">{r:.2f}</text>')
    out.append(f'<text x="{left + pw / 2:.2f}" y="{height - 16}" font-family="sans-serif" font-size="13" '
               'text-anchor="middle">beta</text>')
    out.append(f'<text x="18" y="{top + ph / 2:.2f}" font-family="sans-serif" font-size="13" '
               f'transform="rotate(-90 18 {top + ph / 2:.2f})" text-anchor="middle">r</text>')
    pts = " ".join(f"{sx(b):.2f},{sy(r):.2f}" for b, r in curve)
    out.append(f'<polyline points="{pts}" fill="none" stroke="black" stroke-width="2"/>')
    for row in sorted(rows, key=lambda q: (q.beta, q.r)):
        out.append(f'<circle cx="{sx(row.beta):.2f}" cy="{sy(row.r):.2f}" r="5" '
                   f'fill="{LABEL_COLOURS[row.label]}" stroke="black" stroke-width="0.5"/>')
    ly = top + 10
    for name, colour in LABEL_COLOURS.items():
        out.append(f'<circle cx="{left + pw + 20}" cy="{ly}" r="5" fill="{colour}"/>')
        out.append(f'<text x="{left + pw + 30}" y="{ly + 4}" font-family="sans-serif" font-size="11">{name}</text>')
        ly += 20
    out.append(f'<line x1="{left + pw + 14}" y1="{ly}" x2="{left + pw + 26}" y2="{ly}" stroke="black" '
               'stroke-width="2"/>')
    out.append(f'<text x="{left + pw + 30}" y="{ly + 4}" font-family="sans-serif" font-size="11">boundary</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg_phase(rows, curve, path, title=""):
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(svg_phase_text(rows, curve, title))


# -- config -----------------------------------------------------------------

def parse_config(text):
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ValueError(f"config line {lineno}: expected key = value")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def load_config(path):
    with open(path, encoding="utf-8") as f:
        return parse_config(f.read())
