"""Shape functions: probability densities on (0, 1) used to build chimeric signals.

A shape function ``h`` is blown up onto the shrinking window ``(0, kappa)``
to give the signal density ``h(u / kappa) / kappa``.  Four kinds are
supported: constant, power law ``(1 - a) x**(-a)``, the linear density ``2x``
and a piecewise-linear table.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import integrate

QUAD_TOL = 1e-10


def _quad(f, lo, hi, points=None):
    if hi <= lo:
        return 0.0
    kw = {"epsabs": QUAD_TOL, "epsrel": QUAD_TOL, "limit": 500}
    if points is not None:
        pts = [p for p in points if lo < p < hi]
        if pts:
            kw["points"] = pts
    val, _ = integrate.quad(f, lo, hi, **kw)
    return val


@dataclass(frozen=True)
class ShapeFunction:
    """Density ``h`` on (0, 1).

    Build instances with :meth:`constant`, :meth:`power_law`,
    :meth:`linear2x` or :meth:`tabulated`.
    """

    kind: str
    exponent: float = 0.0
    grid: tuple = field(default=(), repr=False)
    values: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if self.kind not in ("constant", "powerlaw", "linear2x", "tabulated"):
            raise ValueError(f"unknown shape kind {self.kind!r}")
        if self.kind == "powerlaw" and not 0.0 <= self.exponent < 1.0:
            raise ValueError("power-law exponent must lie in [0, 1)")
        if self.kind == "tabulated":
            g = np.asarray(self.grid, dtype=float)
            v = np.asarray(self.values, dtype=float)
            if g.ndim != 1 or g.size < 2 or g.size != v.size:
                raise ValueError("tabulated shape needs matching grid and values")
            if g[0] != 0.0 or g[-1] != 1.0 or np.any(np.diff(g) <= 0):
                raise ValueError("tabulated grid must increase from 0 to 1")
            if np.any(v < 0):
                raise ValueError("shape function must be nonnegative")
            if abs(np.trapezoid(v, g) - 1.0) > 1e-9:
                raise ValueError("tabulated shape must integrate to 1 (use ShapeFunction.tabulated)")

    # constructors -----------------------------------------------------
    @classmethod
    def constant(cls):
        return cls("constant")

    @classmethod
    def power_law(cls, a):
        if a == 0:
            return cls("constant")
        return cls("powerlaw", exponent=float(a))

    @classmethod
    def linear2x(cls):
        return cls("linear2x")

    @classmethod
    def tabulated(cls, grid, values):
        """Piecewise-linear shape through ``(grid, values)``, renormalised to mass 1."""
        g = np.asarray(grid, dtype=float)
        v = np.asarray(values, dtype=float)
        mass = np.trapezoid(v, g)
        if not mass > 0:
            raise ValueError("tabulated shape has no mass")
        return cls("tabulated", grid=tuple(g), values=tuple(v / mass))

    @classmethod
    def from_tag(cls, tag):
        """Parse ``const``, ``linear2x`` or ``powerlaw:<a>``."""
        tag = tag.strip().lower()
        if tag in ("const", "constant", "1"):
            return cls.constant()
        if tag in ("linear2x", "2x", "linear"):
            return cls.linear2x()
        if tag.startswith("powerlaw"):
            _, _, a = tag.partition(":")
            return cls.power_law(float(a or 0.5))
        raise ValueError(f"unknown shape tag {tag!r}")

    @property
    def tag(self):
        if self.kind == "constant":
            return "const"
        if self.kind == "powerlaw":
            return f"powerlaw:{self.exponent:g}"
        return self.kind

    # evaluation -------------------------------------------------------
    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        inside = (u > 0) & (u < 1)
        if self.kind == "constant":
            out = np.ones_like(u)
        elif self.kind == "linear2x":
            out = 2.0 * u
        elif self.kind == "powerlaw":
            a = self.exponent
            with np.errstate(divide="ignore"):
                out = (1 - a) * np.where(u > 0, u, 1.0) ** (-a)
        else:
            out = np.interp(u, self.grid, self.values)
        return np.where(inside, out, 0.0)

    @property
    def sup(self):
        if self.kind == "powerlaw":
            return np.inf
        if self.kind == "linear2x":
            return 2.0
        if self.kind == "constant":
            return 1.0
        return float(max(self.values))

    @property
    def monotone(self):
        """+1 nondecreasing, -1 nonincreasing, 0 otherwise."""
        if self.kind in ("constant", "linear2x"):
            return 1
        if self.kind == "powerlaw":
            return -1
        d = np.diff(self.values)
        if np.all(d >= 0):
            return 1
        if np.all(d <= 0):
            return -1
        return 0

    def cdf(self, u):
        u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
        if self.kind == "constant":
            return u
        if self.kind == "linear2x":
            return u * u
        if self.kind == "powerlaw":
            return u ** (1 - self.exponent)
        g = np.asarray(self.grid)
        v = np.asarray(self.values)
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (v[1:] + v[:-1]) * np.diff(g))])
        j = np.clip(np.searchsorted(g, u, side="right") - 1, 0, g.size - 2)
        dx = u - g[j]
        slope = (v[j + 1] - v[j]) / (g[j + 1] - g[j])
        return cum[j] + v[j] * dx + 0.5 * slope * dx * dx

    def ppf(self, q):
        """Inverse CDF; power law uses ``q**(1/(1-a))``."""
        q = np.clip(np.asarray(q, dtype=float), 0.0, 1.0)
        if self.kind == "constant":
            return q
        if self.kind == "linear2x":
            return np.sqrt(q)
        if self.kind == "powerlaw":
            return q ** (1.0 / (1 - self.exponent))
        g = np.asarray(self.grid)
        v = np.asarray(self.values)
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (v[1:] + v[:-1]) * np.diff(g))])
        j = np.clip(np.searchsorted(cum, q, side="right") - 1, 0, g.size - 2)
        rem = q - cum[j]
        slope = (v[j + 1] - v[j]) / (g[j + 1] - g[j])
        # solve v dx + slope dx^2 / 2 = rem on the cell
        with np.errstate(divide="ignore", invalid="ignore"):
            disc = np.sqrt(np.maximum(v[j] ** 2 + 2 * slope * rem, 0.0))
            quad_root = 2 * rem / (v[j] + disc)
            lin_root = np.where(v[j] > 0, rem / np.where(v[j] > 0, v[j], 1.0), 0.0)
        dx = np.where(np.abs(slope) > 1e-14, quad_root, lin_root)
        return np.clip(g[j] + np.nan_to_num(dx), 0.0, 1.0)

    # integrals --------------------------------------------------------
    def integral(self, power=1.0, lo=0.0, hi=1.0):
        """``int_lo^hi h(u)**power du`` by adaptive quadrature.

        Power laws are integrated after the substitution that flattens the
        endpoint singularity at 0.
        """
        lo, hi = max(lo, 0.0), min(hi, 1.0)
        if hi <= lo:
            return 0.0
        if self.kind == "powerlaw":
            a = self.exponent
            c = (1 - a) ** power
            e = a * power
            if e < 1:
                # u = t**m with m = 1/(1-e) turns u**(-e) du into m * dt
                m = 1.0 / (1.0 - e)
                return c * m * _quad(lambda t: 1.0, lo ** (1 - e), hi ** (1 - e))
            if lo == 0.0:
                return np.inf
            # u = exp(s)
            return c * _quad(lambda s: np.exp((1 - e) * s), np.log(lo), np.log(hi))
        pts = list(self.grid) if self.kind == "tabulated" else None
        return _quad(lambda u: float(self(u)) ** power, lo, hi, pts)

    def expect(self, f, lo=0.0, hi=1.0):
        """``int_lo^hi f(h(u)) du`` for ``f`` growing at most linearly."""
        lo, hi = max(lo, 0.0), min(hi, 1.0)
        if hi <= lo:
            return 0.0
        if self.kind == "powerlaw":
            a = self.exponent
            m = 1.0 / (1.0 - a)
            # u = t**m; h(u) du = (1-a) m dt is bounded
            return _quad(lambda t: f((1 - a) * t ** (-a * m)) * m * t ** (m - 1) if t > 0 else 0.0,
                         lo ** (1 - a), hi ** (1 - a))
        pts = list(self.grid) if self.kind == "tabulated" else None
        return _quad(lambda u: f(float(self(u))), lo, hi, pts)

    def inner(self, other, scale_self=1.0, scale_other=1.0):
        """``int_0^1 h(t * scale_self) g(t * scale_other) dt`` (shapes vanish beyond 1)."""
        top = min(1.0, 1.0 / scale_self if scale_self > 0 else np.inf,
                  1.0 / scale_other if scale_other > 0 else np.inf)
        if self.kind == "powerlaw" or other.kind == "powerlaw":
            # singularity at 0 only: split off a small neighbourhood and use the log substitution
            def g(s):
                t = np.exp(s)
                return float(self(t * scale_self) * other(t * scale_other)) * t
            cut = min(1e-3, top / 2)
            head = _quad(g, np.log(cut) - 200.0, np.log(cut))
            return head + _quad(lambda t: float(self(t * scale_self) * other(t * scale_other)), cut, top)
        pts = sorted(set(np.asarray(self.grid) / scale_self).union(np.asarray(other.grid) / scale_other)) \
            if (self.grid or other.grid) else None
        return _quad(lambda t: float(self(t * scale_self) * other(t * scale_other)), 0.0, top, pts)

    def superlevel(self, c):
        """Intervals of (0, 1) on which ``h > c``."""
        if c < 0:
            return [(0.0, 1.0)]
        if self.kind == "constant":
            return [(0.0, 1.0)] if c < 1.0 else []
        if self.kind == "linear2x":
            return [(c / 2.0, 1.0)] if c < 2.0 else []
        if self.kind == "powerlaw":
            a = self.exponent
            if c <= 0:
                return [(0.0, 1.0)]
            log_edge = (np.log1p(-a) - np.log(c)) / a
            return [(0.0, float(np.exp(min(log_edge, 0.0))))]
        g = np.asarray(self.grid)
        v = np.asarray(self.values)
        out = []
        for j in range(g.size - 1):
            x0, x1, y0, y1 = g[j], g[j + 1], v[j], v[j + 1]
            if y0 > c and y1 > c:
                seg = (x0, x1)
            elif y0 <= c and y1 <= c:
                continue
            else:
                xc = x0 + (c - y0) * (x1 - x0) / (y1 - y0)
                seg = (xc, x1) if y1 > c else (x0, xc)
            if out and abs(out[-1][1] - seg[0]) < 1e-15:
                out[-1] = (out[-1][0], seg[1])
            else:
                out.append(seg)
        return out

    def integral_above(self, c, power=1.0):
        """``int h**power 1{h > c}``."""
        return sum(self.integral(power, a, b) for a, b in self.superlevel(c))

    def integral_below(self, c, power=1.0):
        """``int h**power 1{h <= c}``."""
        total = 0.0
        prev = 0.0
        for a, b in self.superlevel(c):
            total += self.integral(power, prev, a)
            prev = b
        return total + self.integral(power, prev, 1.0)

    @cached_property
    def moments(self):
        """``(int h, int h**2, int h**2.5)``; infinite entries where the integral diverges."""
        return (self.integral(1.0), self.integral(2.0), self.integral(2.5))

    @property
    def second_moment(self):
        return self.moments[1]
