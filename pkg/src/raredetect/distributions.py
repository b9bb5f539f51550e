"""Noise and signal families, the sparse mixture model and its samplers.

Under the null every coordinate is pure noise ``P0``; under the alternative a
coordinate is, independently with probability ``eps``, replaced by a draw from
the signal law ``mu``.  Two rowwise-identical families are provided:

* chimeric p-value signals: ``P0`` uniform on (0, 1), ``mu`` with density
  ``h(u / kappa) / kappa`` on ``(0, kappa)``, ``kappa = n**-r``, optionally
  perturbed by a table ``r(u)`` integrating to zero;
* heteroscedastic normal shifts: ``P0 = N(0, 1)``, ``mu = N(theta, sigma0**2)``
  with ``theta = sqrt(2 r log n)`` (sparse) or ``theta = n**-r`` (dense).

Random streams are plain :class:`numpy.random.Generator` objects; see
:func:`make_stream` for the counter-based construction used by the Monte
Carlo harness.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import special

from .shapes import ShapeFunction, _quad

PVALUE_FLOOR = 1e-15


class NoiseFamily(enum.Enum):
    UNIFORM = "uniform"
    NORMAL = "normal"


def make_stream(seed, *key):
    """Deterministic Philox stream for ``(seed, *key)``.

    Streams with different keys are statistically independent and do not
    depend on the order in which they are created.
    """
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class Perturbation:
    """Piecewise-linear perturbation ``r_n(u) = n**exponent * table(u)`` of a chimeric density."""

    grid: tuple
    values: tuple
    exponent: float = 0.0

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        if g.ndim != 1 or g.size < 2 or g.size != len(self.values):
            raise ValueError("perturbation needs matching grid and values")
        if g[0] != 0.0 or g[-1] != 1.0 or np.any(np.diff(g) <= 0):
            raise ValueError("perturbation grid must increase from 0 to 1")
        if abs(np.trapezoid(self.values, self.grid)) > 1e-9:
            raise ValueError("perturbation must integrate to 0")

    def scale(self, n):
        return float(n) ** self.exponent

    def __call__(self, u, n):
        return self.scale(n) * np.interp(u, self.grid, self.values)

    def l2(self, n):
        """``int_0^1 r_n**2`` (exact for the piecewise-linear table)."""
        g = np.asarray(self.grid)
        v = np.asarray(self.values)
        d = np.diff(g)
        a, b = v[:-1], v[1:]
        return self.scale(n) ** 2 * float(np.sum(d * (a * a + a * b + b * b) / 3.0))


@dataclass(frozen=True)
class Chimeric:
    shape: ShapeFunction = field(default_factory=ShapeFunction.constant)
    perturbation: Perturbation | None = None

    noise = NoiseFamily.UNIFORM


@dataclass(frozen=True)
class NormalShift:
    sigma0: float = 1.0

    noise = NoiseFamily.NORMAL

    def __post_init__(self):
        if not self.sigma0 > 0:
            raise ValueError("sigma0 must be positive")


@dataclass(frozen=True)
class DetectionModel:
    """One rowwise-identical detection scenario.

    ``eps``, ``kappa`` and ``theta`` override the parametrised values (used
    for the null model ``eps=0`` and for fixed-n checks).  ``truncation``
    replaces ``(mu, eps)`` by the pair restricted to ``{eps * ratio <= tau}``, see
    :func:`raredetect.limits.truncate_model`.
    """

    n: float
    beta: float
    r: float
    signal: Chimeric | NormalShift = field(default_factory=Chimeric)
    log_exponent: float = 0.0
    dense: bool = False
    eps: float | None = None
    kappa: float | None = None
    theta: float | None = None
    truncation: float | None = None

    def __post_init__(self):
        if self.n < 3:
            raise ValueError(f"n must be >= 3, got {self.n}")
        if self.dense and not isinstance(self.signal, NormalShift):
            raise ValueError("the dense branch is defined for the normal model only")
        if self.eps is not None and not 0.0 <= self.eps < 1.0:
            raise ValueError("eps override must lie in [0, 1)")
        if self.kappa is not None and not 0.0 < self.kappa <= 1.0:
            raise ValueError("kappa override must lie in (0, 1]")
        if self.truncation is not None and not self.truncation > 0:
            raise ValueError("truncation level must be positive")

    @property
    def noise(self):
        return self.signal.noise

    @property
    def chimeric(self):
        return isinstance(self.signal, Chimeric)

    @property
    def size(self):
        return int(round(self.n))

    def with_(self, **kw):
        return replace(self, **kw)

    def null(self):
        return replace(self, eps=0.0, truncation=None)


# -- parameters -------------------------------------------------------------

def _raw_epsilon(model):
    if model.eps is not None:
        return float(model.eps)
    n = float(model.n)
    val = n ** (-model.beta) * math.log(n) ** model.log_exponent
    if not 0.0 < val < 1.0:
        raise ValueError(f"epsilon = {val} outside (0, 1) for n={model.n}, beta={model.beta}")
    return val


def epsilon(model):
    """Signal probability ``n**-beta * (log n)**E`` (after truncation, if any)."""
    eps = _raw_epsilon(model)
    if model.truncation is None or eps == 0.0:
        return eps
    return eps * _kept_mass(model)


def kappa(model):
    if not model.chimeric:
        raise ValueError("kappa is defined for chimeric models only")
    if model.kappa is not None:
        return float(model.kappa)
    val = float(model.n) ** (-model.r)
    if not 0.0 < val < 1.0:
        raise ValueError("kappa = n**-r must lie in (0, 1); need r > 0")
    return val


def theta(model):
    if model.chimeric:
        raise ValueError("theta is defined for normal models only")
    if model.theta is not None:
        return float(model.theta)
    if model.dense:
        return float(model.n) ** (-model.r)
    return math.sqrt(2.0 * model.r * math.log(float(model.n)))


# -- density ratios ---------------------------------------------------------

def _check_support(model, y):
    y = np.asarray(y, dtype=float)
    if model.noise is NoiseFamily.UNIFORM and np.any((y <= 0) | (y >= 1)):
        raise ValueError("observation outside the noise support (0, 1)")
    if np.any(~np.isfinite(y)):
        raise ValueError("observation must be finite")
    return y


def _normal_log_ratio_coeffs(model):
    """``log dmu/dP0 (y) = A y**2 + B y + C``."""
    s2 = model.signal.sigma0 ** 2
    th = theta(model)
    return 0.5 - 0.5 / s2, th / s2, -math.log(model.signal.sigma0) - th * th / (2 * s2)


def _raw_ratio(model, y):
    if model.chimeric:
        k = kappa(model)
        out = model.signal.shape(y / k) / k * (y <= k)
        if model.signal.perturbation is not None:
            out = out + model.signal.perturbation(y, model.n)
        return out
    a, b, c = _normal_log_ratio_coeffs(model)
    return np.exp((a * y + b) * y + c)


def signal_density_ratio(model, y):
    """``dmu/dP0`` evaluated at observations ``y``."""
    y = _check_support(model, y)
    raw = _raw_ratio(model, y)
    if model.truncation is None:
        return raw
    eps = _raw_epsilon(model)
    kept = _kept_mass(model)
    if kept == 0.0:
        return np.ones_like(raw)
    return np.where(eps * raw <= model.truncation, raw / kept, 0.0)


def mixture_density_ratio(model, y):
    """``dQ/dP0 = 1 - eps + eps * dmu/dP0``."""
    eps = epsilon(model)
    if eps == 0.0:
        return np.ones_like(np.asarray(y, dtype=float))
    return 1.0 - eps + eps * signal_density_ratio(model, y)


def log_mixture_ratio(model, y):
    """``log dQ/dP0`` computed with ``log1p`` for tiny ``eps``."""
    eps = epsilon(model)
    y = np.asarray(y, dtype=float)
    if eps == 0.0:
        return np.zeros_like(y)
    return np.log1p(eps * (signal_density_ratio(model, y) - 1.0))


# -- level-set integrals ----------------------------------------------------
#
# Everything the I-sums, the truncation and the Hellinger machinery need is an
# integral of the *raw* ratio over a level set {raw > c}.  For the normal model
# log(raw) is quadratic, so the level set is a union of at most two intervals
# and every integral is a Gaussian integral.

def _normal_superlevel(model, c):
    """Intervals of y on which ``raw(y) > c``."""
    if c <= 0:
        return [(-np.inf, np.inf)]
    a, b, c0 = _normal_log_ratio_coeffs(model)
    cc = c0 - math.log(c)
    if abs(a) < 1e-15:
        if b == 0:
            return [(-np.inf, np.inf)] if cc > 0 else []
        root = -cc / b
        return [(root, np.inf)] if b > 0 else [(-np.inf, root)]
    disc = b * b - 4 * a * cc
    if disc <= 0:
        return [(-np.inf, np.inf)] if a > 0 else []
    sq = math.sqrt(disc)
    # numerically stable roots
    qq = -0.5 * (b + math.copysign(sq, b)) if b != 0 else -0.5 * sq
    r1, r2 = sorted([qq / a, cc / qq if qq != 0 else -qq / a])
    if a > 0:
        return [(-np.inf, r1), (r2, np.inf)]
    return [(r1, r2)]


def _complement(intervals, lo=-np.inf, hi=np.inf):
    out = []
    prev = lo
    for a, b in intervals:
        if a > prev:
            out.append((prev, a))
        prev = max(prev, b)
    if hi > prev:
        out.append((prev, hi))
    return out


def _norm_mass(lo, hi, mean=0.0, sd=1.0):
    """``P(lo < X <= hi)`` for ``X ~ N(mean, sd**2)`` without cancellation in the tails."""
    zl = (lo - mean) / sd
    zh = (hi - mean) / sd
    if zl >= 0:
        return float(special.ndtr(-zl) - special.ndtr(-zh))
    return float(special.ndtr(zh) - special.ndtr(zl))


def _exp_quadratic_integral(a, b, c, lo, hi):
    """``int_lo^hi exp(a y**2 + b y + c) dy``."""
    if hi <= lo:
        return 0.0
    if abs(a) < 1e-12:
        # rounding residue of a cancelled quadratic term (sigma0 = sqrt(2) and friends)
        a = 0.0
    if a < 0:
        s = math.sqrt(-0.5 / a)
        m = -b / (2 * a)
        logk = c - b * b / (4 * a) + 0.5 * math.log(2 * math.pi) + math.log(s)
        mass = _norm_mass(lo, hi, m, s)
        if mass <= 0:
            return 0.0
        return math.exp(min(logk + math.log(mass), 700.0)) if logk + math.log(mass) < 700 else np.inf
    if a == 0:
        if b == 0:
            return math.exp(c) * (hi - lo)
        if (b > 0 and hi == np.inf) or (b < 0 and lo == -np.inf):
            return np.inf
        top, bot = max(b * hi, b * lo) + c, min(b * hi, b * lo) + c
        if top > 700:
            return np.inf
        return math.exp(top) * -math.expm1(bot - top) / abs(b)
    if not (np.isfinite(lo) and np.isfinite(hi)):
        return np.inf
    m = -b / (2 * a)
    pref = c - b * b / (4 * a)
    sa = math.sqrt(a)
    val = 0.5 * math.sqrt(math.pi / a) * (special.erfi(sa * (hi - m)) - special.erfi(sa * (lo - m)))
    return float(val * math.exp(pref)) if np.isfinite(val) else np.inf


def _chimeric_plain(model):
    return model.chimeric and model.signal.perturbation is None


def _cells(model):
    """Subintervals of (0, 1) for brute-force integration of perturbed densities."""
    k = kappa(model)
    pts = {0.0, 1.0, k}
    if model.signal.perturbation is not None:
        pts.update(model.signal.perturbation.grid)
    if model.signal.shape.kind == "tabulated":
        pts.update(k * np.asarray(model.signal.shape.grid))
    pts = np.array(sorted(p for p in pts if 0.0 <= p <= 1.0))
    edges = [pts[:1]]
    for a, b in zip(pts[:-1], pts[1:]):
        edges.append(np.linspace(a, b, 65)[1:])
    return np.concatenate(edges)


def _gl_integral(model, f):
    """Composite Gauss-Legendre integral of ``f(u, raw(u))`` over (0, 1)."""
    x, w = np.polynomial.legendre.leggauss(24)
    e = _cells(model)
    a, b = e[:-1, None], e[1:, None]
    u = 0.5 * (b - a) * x + 0.5 * (a + b)
    ww = 0.5 * (b - a) * w
    raw = _raw_ratio(model, u)
    return float(np.sum(ww * f(u, raw)))


def raw_mu_above(model, c):
    """``mu(raw > c)`` for the untruncated signal law."""
    if model.chimeric:
        if _chimeric_plain(model):
            k = kappa(model)
            return model.signal.shape.integral_above(c * k)
        return _gl_integral(model, lambda u, raw: np.maximum(raw, 0.0) * (raw > c))
    s0 = model.signal.sigma0
    th = theta(model)
    return sum(_norm_mass(lo, hi, th, s0) for lo, hi in _normal_superlevel(model, c))


def raw_p_second_moment_below(model, c):
    """``E_P0[raw**2 1{raw <= c}]``."""
    if model.chimeric:
        if _chimeric_plain(model):
            k = kappa(model)
            # the noise region outside (0, kappa) has raw = 0
            return model.signal.shape.integral_below(c * k, power=2.0) / k
        return _gl_integral(model, lambda u, raw: raw * raw * (raw <= c))
    a, b, c0 = _normal_log_ratio_coeffs(model)
    a2, b2, c2 = 2 * a - 0.5, 2 * b, 2 * c0 - 0.5 * math.log(2 * math.pi)
    below = _complement(_normal_superlevel(model, c))
    return sum(_exp_quadratic_integral(a2, b2, c2, lo, hi) for lo, hi in below)


def _kept_mass(model):
    """``mu(eps * raw <= tau)`` for the truncated model."""
    eps = _raw_epsilon(model)
    if eps == 0.0:
        return 1.0
    return max(0.0, 1.0 - raw_mu_above(model.with_(truncation=None), model.truncation / eps))


def signal_mass_above(model, x):
    """``mu(eps * dmu/dP0 > x)`` for the model as given (truncation honoured)."""
    eps = epsilon(model)
    if eps == 0.0:
        return 0.0
    if model.truncation is None:
        return raw_mu_above(model, x / eps)
    kept = _kept_mass(model)
    if kept == 0.0:
        return 0.0
    eps0 = _raw_epsilon(model)
    base = model.with_(truncation=None)
    lo, hi = x / eps0, model.truncation / eps0
    if lo >= hi:
        return 0.0
    return (raw_mu_above(base, lo) - raw_mu_above(base, hi)) / kept


def p_second_moment_below(model, x):
    """``E_P0[(dmu/dP0)**2 1{eps dmu/dP0 <= x}]`` (truncation honoured)."""
    eps = epsilon(model)
    if model.truncation is None:
        return raw_p_second_moment_below(model, x / eps) if eps > 0 else raw_p_second_moment_below(model, np.inf)
    kept = _kept_mass(model)
    if kept == 0.0:
        return 1.0
    eps0 = _raw_epsilon(model)
    base = model.with_(truncation=None)
    return raw_p_second_moment_below(base, min(x, model.truncation) / eps0) / kept ** 2


# -- sampling ---------------------------------------------------------------

def sample_null(model, count, stream):
    """``count`` i.i.d. draws from the noise family."""
    if count < 1:
        raise ValueError("count must be >= 1")
    if model.noise is NoiseFamily.UNIFORM:
        u = stream.random(int(count))
        # Generator.random is on [0, 1); keep the open interval
        return np.where(u > 0, u, np.nextafter(0.0, 1.0))
    return stream.standard_normal(int(count))


def _sample_chimeric_signal(model, count, stream):
    k = kappa(model)
    shape = model.signal.shape
    pert = model.signal.perturbation
    if pert is None:
        u = shape.ppf(stream.random(count))
        return np.clip(k * u, np.nextafter(0.0, 1.0), k)
    # rejection from the envelope g + m_cell, m_cell = positive part of r bounded per table cell
    g = np.asarray(pert.grid)
    v = pert.scale(model.n) * np.asarray(pert.values)
    m = np.maximum(np.maximum(v[:-1], v[1:]), 0.0)
    cell_mass = m * np.diff(g)
    extra = float(cell_mass.sum())
    out = np.empty(0)
    while out.size < count:
        want = 2 * (count - out.size) + 16
        from_g = stream.random(want) < 1.0 / (1.0 + extra)
        y = np.empty(want)
        ng = int(from_g.sum())
        y[from_g] = np.clip(k * shape.ppf(stream.random(ng)), np.nextafter(0.0, 1.0), k)
        nr = want - ng
        if nr:
            j = stream.choice(m.size, size=nr, p=cell_mass / extra)
            y[~from_g] = g[j] + stream.random(nr) * (g[j + 1] - g[j])
        y = np.clip(y, np.nextafter(0.0, 1.0), np.nextafter(1.0, 0.0))
        j_all = np.clip(np.searchsorted(g, y, side="right") - 1, 0, m.size - 1)
        base = shape(y / k) / k * (y <= k)
        dens = base + pert(y, model.n)
        env = base + m[j_all]
        keep = stream.random(want) * env <= np.maximum(dens, 0.0)
        out = np.concatenate([out, y[keep]])
    return out[:count]


def sample_signal(model, count, stream):
    """Draws from the (possibly truncated) signal law ``mu``."""
    count = int(count)
    if count == 0:
        return np.empty(0)
    if model.truncation is not None:
        eps0 = _raw_epsilon(model)
        base = model.with_(truncation=None)
        if _kept_mass(model) == 0.0:
            return sample_null(model, count, stream)
        out = np.empty(0)
        while out.size < count:
            y = sample_signal(base, 2 * (count - out.size) + 16, stream)
            out = np.concatenate([out, y[eps0 * _raw_ratio(base, y) <= model.truncation]])
        return out[:count]
    if model.chimeric:
        return _sample_chimeric_signal(model, count, stream)
    return theta(model) + model.signal.sigma0 * stream.standard_normal(count)


def sample_alternative(model, stream):
    """One alternative sample of size n; returns ``(observations, signal_count)``."""
    n = model.size
    eps = epsilon(model)
    y = sample_null(model, n, stream)
    if eps == 0.0:
        return y, 0
    b = stream.random(n) < eps
    s = int(b.sum())
    if s:
        y[b] = sample_signal(model, s, stream)
    return y, s


def to_pvalues(model, observations):
    """Uniform noise: identity; normal noise: ``1 - Phi(y)``, clamped away from 0 and 1."""
    y = np.asarray(observations, dtype=float)
    if model.noise is NoiseFamily.UNIFORM:
        return y
    return np.clip(special.ndtr(-y), PVALUE_FLOOR, 1.0 - PVALUE_FLOOR)


def perturbation_admissible(model, n_grid=(1e3, 1e4, 1e5, 1e6, 1e7)):
    """Whether ``n eps**2 int r_n**2`` decreases toward 0 along ``n_grid``.

    Returns ``(admissible, values)`` where ``values`` are the diagnostic sums
    on the grid.
    """
    if not model.chimeric:
        raise ValueError("perturbation check needs a chimeric model")
    pert = model.signal.perturbation
    if pert is None:
        return True, np.zeros(len(n_grid))
    vals = np.array([n * _raw_epsilon(model.with_(n=n)) ** 2 * pert.l2(n) for n in n_grid])
    if np.all(vals == 0):
        return True, vals
    slope = np.polyfit(np.log(n_grid), np.log(vals), 1)[0]
    return bool(slope < -1e-3), vals
