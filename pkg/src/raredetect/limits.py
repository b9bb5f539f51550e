"""Infinitely divisible limit laws of the LLR statistic.

A limit law is described by a Levy-Khintchine triple ``(gamma, sigma2, eta)``
with the truncation function ``x / (1 + x**2)``; on the alternative side it
may also put mass ``1 - exp(-M)`` at ``+inf``.  The null and alternative
laws are coupled through ``d eta_2 / d eta_1 = e**x`` and the drift
relations implemented in :func:`gamma_from_eta`.

Jump measures are concentrated on (0, inf) and come in three flavours:
a density, a finite set of atoms, or the push-forward of a shape function
under ``u -> log(h(u) + 1)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .shapes import ShapeFunction

_QUAD = {"epsabs": 1e-13, "epsrel": 1e-11, "limit": 400}
LOG_FLOOR = -120.0  # small-jump integrals start at exp(LOG_FLOOR)


def _expm1_minus_id(x):
    """``e**x - 1 - x`` without cancellation."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-2
    xs = np.where(small, x, 0.0)
    series = xs * xs * (0.5 + xs * (1 / 6 + xs * (1 / 24 + xs / 120)))
    return np.where(small, series, np.expm1(np.where(small, 0.0, x)) - x)


def _sin_minus_id(z):
    """``sin(z) - z`` without cancellation."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-2
    zs = np.where(small, z, 0.0)
    series = -zs ** 3 * (1 / 6 - zs * zs / 120 + zs ** 4 / 5040)
    return np.where(small, series, np.sin(np.where(small, 0.0, z)) - z)


# -- jump measures ----------------------------------------------------------

class LevyMeasure:
    """Interface: ``integrate(f)``, ``tail(x)``, ``tilt()`` and jump sampling."""

    finite = False

    def integrate(self, f, lo=0.0, hi=np.inf):
        raise NotImplementedError

    def tail(self, x):
        return self.integrate(lambda y: np.ones_like(y), x, np.inf)

    def tilt(self):
        """The measure ``e**x d eta``."""
        raise NotImplementedError

    def is_zero(self):
        return False


class ZeroMeasure(LevyMeasure):
    finite = True

    def integrate(self, f, lo=0.0, hi=np.inf):
        return 0.0

    def tail(self, x):
        return 0.0

    def tilt(self):
        return self

    def is_zero(self):
        return True

    def total(self):
        return 0.0

    def sample(self, count, stream):
        return np.empty(0)


@dataclass(frozen=True)
class AtomicMeasure(LevyMeasure):
    points: tuple
    weights: tuple

    finite = True

    def __post_init__(self):
        if any(p <= 0 for p in self.points) or any(w < 0 for w in self.weights):
            raise ValueError("atoms must sit on (0, inf) with nonnegative weights")

    def integrate(self, f, lo=0.0, hi=np.inf):
        return float(sum(w * float(f(np.asarray(p))) for p, w in zip(self.points, self.weights) if lo < p <= hi))

    def tail(self, x):
        return float(sum(w for p, w in zip(self.points, self.weights) if p > x))

    def tilt(self):
        return AtomicMeasure(self.points, tuple(w * math.exp(p) for p, w in zip(self.points, self.weights)))

    def total(self):
        return float(sum(self.weights))

    def sample(self, count, stream):
        w = np.asarray(self.weights, dtype=float)
        return np.asarray(self.points)[stream.choice(w.size, size=count, p=w / w.sum())]


@dataclass(frozen=True)
class ShapeLogMeasure(LevyMeasure):
    """Law of ``log(h(U) + 1)`` for ``U`` uniform, or its exponential tilt.

    The tilted measure has density ``h(u) + 1`` with respect to ``du`` before
    the push-forward.
    """

    shape: ShapeFunction
    tilted: bool = False

    finite = True

    def _w(self, u):
        return self.shape(u) + 1.0 if self.tilted else np.ones_like(u)

    def integrate(self, f, lo=0.0, hi=np.inf):
        def g(u):
            x = np.log(self.shape(u) + 1.0)
            return float(f(x) * self._w(u)) if lo < x <= hi else 0.0
        if self.shape.kind == "constant":
            return float(g(np.asarray(0.5)))
        pts = list(self.shape.grid) if self.shape.kind == "tabulated" else None
        if self.shape.kind == "powerlaw":
            # u = t**m flattens the singularity at 0
            m = 1.0 / (1.0 - self.shape.exponent)
            return integrate.quad(lambda t: g(np.asarray(t ** m)) * m * t ** (m - 1) if t > 0 else 0.0,
                                  0.0, 1.0, **_QUAD)[0]
        return integrate.quad(lambda u: g(np.asarray(u)), 0.0, 1.0, points=pts, **_QUAD)[0]

    def tilt(self):
        if self.tilted:
            raise ValueError("measure is already tilted")
        return ShapeLogMeasure(self.shape, tilted=True)

    def total(self):
        return 2.0 if self.tilted else 1.0

    def sample(self, count, stream):
        u = stream.random(count)
        if self.tilted:
            # density (h + 1) / 2 is the equal mixture of h and the uniform law
            use_h = stream.random(count) < 0.5
            u = np.where(use_h, self.shape.ppf(u), u)
        return np.log(self.shape(np.clip(u, 1e-300, 1.0 - 1e-16)) + 1.0)


class DensityMeasure(LevyMeasure):
    """Absolutely continuous measure on (0, inf) with density ``density``.

    ``tail`` and its inverse may be supplied in closed form; otherwise they
    are tabulated by quadrature on first use.
    """

    def __init__(self, density, tail=None, tail_inv=None, label=""):
        self.density = density
        self._tail = tail
        self._tail_inv = tail_inv
        self._table = None
        self.label = label

    def __repr__(self):
        return f"DensityMeasure({self.label!r})"

    def _segments(self, f, lo, hi):
        total = 0.0
        # small jumps in log scale
        if lo < 1.0:
            s_lo = LOG_FLOOR if lo <= 0 else math.log(lo)
            s_hi = math.log(min(hi, 1.0))
            edges = np.linspace(s_lo, s_hi, max(2, int((s_hi - s_lo) / 4.0) + 2))
            for a, b in zip(edges[:-1], edges[1:]):
                total += integrate.quad(lambda s: float(f(np.exp(s)) * self.density(np.exp(s)) * np.exp(s)),
                                        a, b, **_QUAD)[0]
        # large jumps: unit segments until the density is negligible
        x = max(lo, 1.0)
        width = getattr(self, "_width", 1.0)
        quiet = 0
        while x < hi and x < 800.0:
            b = min(hi, x + width)
            part = integrate.quad(lambda y: float(f(np.asarray(y)) * self.density(y)), x, b, **_QUAD)[0]
            mass = integrate.quad(lambda y: float(self.density(y)), x, b, **_QUAD)[0]
            total += part
            quiet = quiet + 1 if mass < 1e-17 else 0
            if quiet >= 3:
                break
            x = b
        return total

    def integrate(self, f, lo=0.0, hi=np.inf, width=1.0):
        self._width = width
        try:
            return self._segments(f, lo, hi)
        finally:
            self._width = 1.0

    def tail(self, x):
        if self._tail is not None:
            out = np.asarray(self._tail(x), dtype=float)
            return float(out) if out.ndim == 0 else out
        return self.integrate(lambda y: np.ones_like(y), x, np.inf)

    def _build_table(self):
        xs = np.concatenate([np.geomspace(1e-6, 1.0, 400)[:-1], np.linspace(1.0, 200.0, 1200)])
        seg = np.array([integrate.quad(lambda y: float(self.density(y)), a, b, **_QUAD)[0]
                        for a, b in zip(xs[:-1], xs[1:])])
        tail_top = self.integrate(lambda y: np.ones_like(y), xs[-1], np.inf)
        tails = np.concatenate([np.cumsum(seg[::-1])[::-1] + tail_top, [tail_top]])
        keep = tails > 1e-300
        self._table = (xs[keep], tails[keep])

    def tail_inv(self, t):
        t = np.asarray(t, dtype=float)
        if self._tail_inv is not None:
            return self._tail_inv(t)
        if self._table is None:
            self._build_table()
        xs, tails = self._table
        # tails are decreasing in x: interpolate log x against log tail
        lt = np.log(tails[::-1])
        lx = np.log(xs[::-1])
        return np.exp(np.interp(np.log(t), lt, lx))

    def tilt(self):
        base = self.density
        return DensityMeasure(lambda x: np.exp(x) * base(x), label=f"exp-tilt of {self.label}")

    def near_zero_exponent(self):
        """Local power of ``x**2 * density(x)`` as x -> 0 (integrable iff > -1)."""
        x1, x2 = 1e-40, 1e-30
        f1 = x1 * x1 * self.density(np.asarray(x1))
        f2 = x2 * x2 * self.density(np.asarray(x2))
        return math.log(f2 / f1) / math.log(x2 / x1)

    def far_decay_rate(self):
        """Exponential rate of ``e**x * density(x)`` as x -> inf (tail finite iff < 0)."""
        x1, x2 = 60.0, 80.0
        g1 = x1 + math.log(float(self.density(np.asarray(x1))))
        g2 = x2 + math.log(float(self.density(np.asarray(x2))))
        return (g2 - g1) / (x2 - x1)


# -- triples and pairs ------------------------------------------------------

@dataclass(frozen=True)
class LevyTriple:
    gamma: float
    sigma2: float
    eta: LevyMeasure = field(default_factory=ZeroMeasure)
    mass_at_inf: float = 0.0

    def __post_init__(self):
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be nonnegative")
        if self.mass_at_inf < 0:
            raise ValueError("mass at infinity must be nonnegative")

    @property
    def real_prob(self):
        """Probability that a draw is finite."""
        return math.exp(-self.mass_at_inf)

    @property
    def degenerate(self):
        return self.sigma2 == 0 and self.eta.is_zero()


@dataclass(frozen=True)
class LimitPair:
    null: LevyTriple
    alt: LevyTriple
    label: str = ""

    def side(self, side):
        if side not in ("null", "alt"):
            raise ValueError("side must be 'null' or 'alt'")
        return self.null if side == "null" else self.alt


def _check_levy(eta, null_side=True):
    if isinstance(eta, DensityMeasure):
        if eta.near_zero_exponent() <= -1.0 + 1e-6:
            raise ValueError(f"{eta.label}: int x^2 d eta diverges at 0, not a Levy measure")
        if null_side and eta.far_decay_rate() >= -1e-6:
            raise ValueError(f"{eta.label}: int e^x d eta diverges at infinity")


def gamma_from_eta(eta1, sigma2, mass_at_inf=0.0):
    """Drifts ``(gamma1, gamma2)`` of the null and alternative triples."""
    if sigma2 < 0 or mass_at_inf < 0:
        raise ValueError("sigma2 and mass_at_inf must be nonnegative")
    _check_levy(eta1)
    g1 = -mass_at_inf - 0.5 * sigma2
    g2_extra = sigma2
    if not eta1.is_zero():
        # 1 - e^x + x/(1+x^2) = -(e^x - 1 - x) - x^3/(1+x^2)
        j1 = eta1.integrate(lambda x: -_expm1_minus_id(x) - x ** 3 / (1 + x * x))
        j2 = eta1.integrate(lambda x: np.expm1(x) * x / (1 + x * x))
        if not (np.isfinite(j1) and np.isfinite(j2)):
            raise ValueError("drift integrals diverge")
        g1 += j1
        g2_extra += j2
    return g1, g1 + g2_extra


def pair_from_eta(eta1, sigma2=0.0, mass_at_inf=0.0, label=""):
    g1, g2 = gamma_from_eta(eta1, sigma2, mass_at_inf)
    eta2 = eta1.tilt()
    return LimitPair(LevyTriple(g1, sigma2, eta1), LevyTriple(g2, sigma2, eta2, mass_at_inf), label)


def gaussian_pair(sigma2):
    """``N(-s/2, s)`` under the null, ``N(s/2, s)`` under the alternative."""
    if sigma2 < 0:
        raise ValueError("sigma2 must be nonnegative")
    return LimitPair(LevyTriple(-0.5 * sigma2, sigma2), LevyTriple(0.5 * sigma2, sigma2), f"gaussian({sigma2:g})")


def uninformative_pair():
    return gaussian_pair(0.0)


def lebesgue_shift(pair, c):
    """Effect of a singular part of the signal law with total mass limit ``c``."""
    if c < 0:
        raise ValueError("c must be nonnegative")
    if c == 0:
        return pair
    if c == np.inf:
        return LimitPair(LevyTriple(-np.inf, 0.0), LevyTriple(np.inf, 0.0, mass_at_inf=np.inf), "full information")
    n, a = pair.null, pair.alt
    return LimitPair(LevyTriple(n.gamma - c, n.sigma2, n.eta, n.mass_at_inf),
                     LevyTriple(a.gamma - c, a.sigma2, a.eta, a.mass_at_inf + c),
                     f"{pair.label} shifted by {c:g}")


def triple_chimeric_boundary(K, shape):
    if not 0 < K < np.inf:
        raise ValueError("K must be positive and finite")
    m2 = shape.second_moment
    if not np.isfinite(m2):
        raise ValueError("shape function has infinite second moment")
    return gaussian_pair(K * m2)


def powerlaw_eta1(a):
    c = (1.0 - a) ** (1.0 / a)

    def density(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore", divide="ignore"):
            em = np.expm1(x)
            # e^x (e^x - 1)^(-1/a - 1) computed in logs to survive large x
            return c / a * np.exp(x - (1.0 / a + 1.0) * np.log(em))

    def tail(x):
        return c * np.expm1(np.asarray(x, dtype=float)) ** (-1.0 / a)

    def tail_inv(t):
        return np.log1p((1.0 - a) * np.asarray(t, dtype=float) ** (-a))

    return DensityMeasure(density, tail, tail_inv, label=f"powerlaw a={a:g}")


def triple_powerlaw_boundary(a):
    """Limit pair on the boundary of the power-law shape ``(1 - a) x**(-a)``."""
    if not 0.5 <= a < 1.0:
        raise ValueError("a must lie in [1/2, 1)")
    return pair_from_eta(powerlaw_eta1(a), label=f"powerlaw({a:g})")


def normal_quadratic_constants(beta, sigma0):
    from .detectability import _normal_case
    if not 0.5 < beta < 1.0 or not sigma0 > 0:
        raise ValueError("need beta in (1/2, 1) and sigma0 > 0")
    if _normal_case(beta, sigma0) not in ("II", "IV"):
        raise ValueError("(beta, sigma0) is not on the quadratic part of the boundary")
    s = math.sqrt(1.0 - beta)
    c4 = sigma0 - s
    c3 = sigma0 / c4 - s
    c2 = (sigma0 - 2.0 * s) / c4
    c1 = 2.0 * math.sqrt(math.pi) * sigma0 ** c3 * c4
    return c1, c2, c3, c4


def normal_quadratic_eta1(beta, sigma0):
    c1, c2, _, _ = normal_quadratic_constants(beta, sigma0)

    def density(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore", divide="ignore"):
            return np.exp((c2 - 3.0) * np.log(np.expm1(x)) + x) / c1

    def tail(x):
        return np.expm1(np.asarray(x, dtype=float)) ** (c2 - 2.0) / ((2.0 - c2) * c1)

    def tail_inv(t):
        return np.log1p(((2.0 - c2) * c1 * np.asarray(t, dtype=float)) ** (1.0 / (c2 - 2.0)))

    return DensityMeasure(density, tail, tail_inv, label=f"normal quadratic beta={beta:g} sigma0={sigma0:g}")


def triple_normal_quadratic(beta, sigma0):
    return pair_from_eta(normal_quadratic_eta1(beta, sigma0), label=f"normal quadratic({beta:g}, {sigma0:g})")


def triple_beta1(shape, r):
    """Chimeric limits for ``beta = 1``."""
    if not r > 0:
        raise ValueError("r must be positive")
    if r < 1:
        return uninformative_pair()
    if r > 1:
        return lebesgue_shift(uninformative_pair(), 1.0)
    if shape.kind == "constant":
        eta1 = AtomicMeasure((math.log(2.0),), (1.0,))
    else:
        eta1 = ShapeLogMeasure(shape)
    return pair_from_eta(eta1, label=f"beta=1 r=1 {shape.tag}")


def triple_normal_beta1(r):
    """Normal-shift limits for ``beta = 1``."""
    if not r > 0:
        raise ValueError("r must be positive")
    if r < 1:
        return uninformative_pair()
    return lebesgue_shift(uninformative_pair(), 0.5 if r == 1 else 1.0)


def truncate_model(model, tau):
    """The truncated model ``(mu~, eps~)`` at level ``tau``."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    return model.with_(truncation=float(tau))


def limit_pair(model):
    """Limit pair for a model sitting on one of the known boundaries.

    Raises ``ValueError`` when the model is off every boundary covered here.
    """
    from . import detectability as det
    tol = 1e-12
    if model.chimeric:
        shape = model.signal.shape
        if model.beta == 1.0:
            return triple_beta1(shape, model.r)
        if shape.kind == "powerlaw" and shape.exponent >= 0.5:
            if abs(model.r - det.boundary_powerlaw(model.beta, shape.exponent)) < tol:
                return triple_powerlaw_boundary(shape.exponent)
        elif abs(model.r - det.boundary_chimeric(model.beta)) < tol and model.log_exponent == 0:
            return triple_chimeric_boundary(1.0, shape)
        raise ValueError("chimeric model is not on a supported boundary point")
    if model.dense:
        raise ValueError("dense boundary limits are not constructed analytically")
    if model.beta == 1.0:
        return triple_normal_beta1(model.r)
    s0 = model.signal.sigma0
    if abs(model.r - det.boundary_normal_sparse(model.beta, s0)) > tol:
        raise ValueError("normal model is not on the detection boundary")
    case = det._normal_case(model.beta, s0)
    if case in ("II", "IV"):
        return triple_normal_quadratic(model.beta, s0)
    if case == "I":
        # linear part: Gaussian limit, variance from the second moment of the ratio
        from .efficiency import gamma_limit
        return gaussian_pair(gamma_limit(model, model))
    raise ValueError("case (III) has no boundary limit")


# -- characteristic function ------------------------------------------------

def cf_eval(triple, t):
    """Characteristic function of the finite part of the law of ``triple``."""
    t = float(t)
    if t == 0.0:
        return complex(1.0, 0.0)
    if not np.isfinite(triple.gamma):
        raise ValueError("degenerate infinite triple has no characteristic function")
    eta = triple.eta
    re = im = 0.0
    if not eta.is_zero():
        # cos(tx) - 1 = -2 sin^2(tx/2); sin(tx) - tx/(1+x^2) = (sin(tx) - tx) + t x^3/(1+x^2)
        f_re = lambda x: -2.0 * np.sin(0.5 * t * x) ** 2
        f_im = lambda x: _sin_minus_id(t * x) + t * x ** 3 / (1 + x * x)
        if isinstance(eta, DensityMeasure):
            width = min(1.0, math.pi / (4.0 * abs(t)))
            re = eta.integrate(f_re, width=width)
            im = eta.integrate(f_im, width=width)
        else:
            re = eta.integrate(f_re)
            im = eta.integrate(f_im)
    expo = complex(re - 0.5 * triple.sigma2 * t * t, triple.gamma * t + im)
    return complex(np.exp(expo))


def cf_side(pair, side, t):
    """CF of the side's law restricted to the real line (total mass ``exp(-M)``)."""
    tr = pair.side(side)
    return tr.real_prob * cf_eval(tr, t)


# -- sampling ---------------------------------------------------------------

@dataclass
class LimitDraws:
    """Extended-real draws: ``values`` with NaN where ``sign`` marks an infinite draw."""

    values: np.ndarray
    sign: np.ndarray

    @property
    def finite_mask(self):
        return self.sign == 0

    def finite(self):
        return self.values[self.sign == 0]

    @property
    def frac_pos_inf(self):
        return float(np.mean(self.sign > 0))

    @property
    def frac_neg_inf(self):
        return float(np.mean(self.sign < 0))

    def empirical_cf(self, t):
        """Empirical CF of the finite part, normalised by the total draw count."""
        v = self.finite()
        return complex(np.sum(np.exp(1j * t * v)) / self.values.size)


def choose_cutoff(eta, max_rate=256.0, floor=1e-4, ceiling=0.05):
    """Smallest small-jump cutoff in ``[floor, ceiling]`` with ``eta(delta, inf) <= max_rate``."""
    if eta.tail(floor) <= max_rate:
        return floor
    lo, hi = math.log(floor), math.log(ceiling)
    if eta.tail(ceiling) > max_rate:
        return ceiling
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if eta.tail(math.exp(mid)) > max_rate:
            lo = mid
        else:
            hi = mid
    return math.exp(hi)


def _jump_plan(eta, delta):
    """``(rate, big_comp, small_mean, small_var, delta)`` for the compound-Poisson split."""
    if eta.is_zero():
        return 0.0, 0.0, 0.0, 0.0, 0.0
    if eta.finite:
        rate = eta.total()
        return rate, eta.integrate(lambda x: x / (1 + x * x)), 0.0, 0.0, 0.0
    if delta is None:
        delta = choose_cutoff(eta)
    rate = eta.tail(delta)
    big_comp = eta.integrate(lambda x: x / (1 + x * x), delta, np.inf)
    small_mean = eta.integrate(lambda x: x ** 3 / (1 + x * x), 0.0, delta)
    small_var = eta.integrate(lambda x: x * x, 0.0, delta)
    return rate, big_comp, small_mean, small_var, delta


def sample_limit(pair, side, stream, size=1, delta=None, chunk=20000):
    """Draws from the null or alternative limit law of ``pair``.

    Jumps above the cutoff ``delta`` form a compound Poisson sum sampled by
    inverse tail; jumps below it are replaced by a Gaussian with matching
    mean and variance.
    """
    tr = pair.side(side)
    size = int(size)
    values = np.empty(size)
    sign = np.zeros(size, dtype=np.int8)
    if not np.isfinite(tr.gamma):
        sign[:] = 1 if tr.gamma > 0 else -1
        values[:] = np.nan
        return LimitDraws(values, sign)
    eta = tr.eta
    rate, big_comp, small_mean, small_var, d = _jump_plan(eta, delta)
    centre = tr.gamma - big_comp + small_mean
    sd = math.sqrt(tr.sigma2 + small_var)
    for start in range(0, size, chunk):
        m = min(chunk, size - start)
        x = np.full(m, centre)
        if sd > 0:
            x += sd * stream.standard_normal(m)
        if rate > 0:
            counts = stream.poisson(rate, m)
            total = int(counts.sum())
            if total:
                if eta.finite:
                    jumps = eta.sample(total, stream)
                else:
                    # tail(J) is uniform on (0, rate)
                    u = stream.random(total)
                    jumps = eta.tail_inv(rate * np.where(u > 0, u, 1e-300))
                owner = np.repeat(np.arange(m), counts)
                x += np.bincount(owner, weights=jumps, minlength=m)
        values[start:start + m] = x
    if tr.mass_at_inf > 0:
        infinite = stream.random(size) >= tr.real_prob
        sign[infinite] = 1
        values[infinite] = np.nan
    return LimitDraws(values, sign)


def levy_tail_check(eta):
    """Numerical ``int min(x^2, 1) d eta`` (raises for non-Levy densities)."""
    _check_levy(eta, null_side=False)
    return eta.integrate(lambda x: np.minimum(x * x, 1.0))
