"""Detection boundaries, I-sums, Hellinger sums and the region classifier."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from . import distributions as dist

N_GRID = (1e3, 1e4, 1e5, 1e6, 1e7)
TINY = 1e-300


class Region(enum.Enum):
    UNDETECTABLE = "Undetectable"
    DETECTABLE = "Detectable"
    COMPLETELY_DETECTABLE = "CompletelyDetectable"


@dataclass(frozen=True)
class RegionLabel:
    kind: Region
    evidence: dict = field(default_factory=dict, compare=False)

    def __str__(self):
        return self.kind.value


@dataclass(frozen=True)
class ISumReport:
    x: float
    i1: float
    i2: float
    n: float


# -- I-sums -----------------------------------------------------------------

def i_sums(model, x=1.0):
    """``I_{n,1,x}`` and ``I_{n,2,x}`` for a rowwise-identical model."""
    if not x > 0:
        raise ValueError("threshold x must be positive")
    eps = dist.epsilon(model)
    n = float(model.n)
    if eps == 0.0:
        return ISumReport(x, 0.0, 0.0, n)
    i1 = n * eps * dist.signal_mass_above(model, x)
    i2 = n * eps * eps * (dist.p_second_moment_below(model, x) - 1.0)
    return ISumReport(x, i1, i2, n)


# -- distances --------------------------------------------------------------

def _sq_root_gap(eps, raw):
    """``(sqrt(1 + eps (raw - 1)) - 1)**2`` without cancellation."""
    d = eps * (raw - 1.0)
    return d * d / (np.sqrt(1.0 + d) + 1.0) ** 2


def _normal_log_ratio(model, y):
    a, b, c = dist._normal_log_ratio_coeffs(model)
    return (a * y + b) * y + c


def hellinger_sum(model):
    """``D_n = n d^2(P0, Q_n)`` with ``d^2 = 1/2 int (sqrt dP0 - sqrt dQ)^2``."""
    eps = dist.epsilon(model)
    if eps == 0.0:
        return 0.0
    n = float(model.n)
    if model.truncation is not None:
        raise ValueError("hellinger_sum is defined for untruncated models")
    if model.chimeric:
        k = dist.kappa(model)
        if dist._chimeric_plain(model):
            outside = (1.0 - k) * float(_sq_root_gap(eps, 0.0))
            inside = k * model.signal.shape.expect(lambda h: float(_sq_root_gap(eps, h / k)))
            return 0.5 * n * (outside + inside)
        return 0.5 * n * dist._gl_integral(model, lambda u, raw: _sq_root_gap(eps, raw))
    # normal: integrate phi(y) (sqrt(m) - 1)**2 with log m computed stably
    l1e = math.log1p(-eps)
    le = math.log(eps)

    def f(y):
        lm = np.logaddexp(l1e, le + _normal_log_ratio(model, y))
        half = 0.5 * lm
        g = np.where(half > 30, half, np.log(np.abs(np.expm1(np.minimum(half, 30.0))) + 1e-320))
        return float(np.exp(2 * g - 0.5 * y * y - 0.5 * math.log(2 * math.pi)))

    th = dist.theta(model)
    s0 = model.signal.sigma0
    lo, hi = min(-40.0, th - 40 * s0), max(40.0, th + 40 * s0)
    pts = sorted({0.0, th, th - 5 * s0, th + 5 * s0, -8.0, 8.0})
    val, _ = integrate.quad(f, lo, hi, points=[p for p in pts if lo < p < hi], limit=500,
                            epsabs=0.0, epsrel=1e-10)
    return 0.5 * n * val


def total_variation(model):
    """``||P0 - mu||_TV = sup_A |P0(A) - mu(A)|`` for the (untruncated) signal law."""
    if model.truncation is not None:
        raise ValueError("total_variation is defined for untruncated models")
    if model.chimeric:
        k = dist.kappa(model)
        if dist._chimeric_plain(model):
            shape = model.signal.shape
            sets = shape.superlevel(k)
            mu_a = sum(shape.integral(1.0, a, b) for a, b in sets)
            p_a = k * sum(b - a for a, b in sets)
            return mu_a - p_a
        return 0.5 * dist._gl_integral(model, lambda u, raw: np.abs(raw - 1.0))
    th = dist.theta(model)
    s0 = model.signal.sigma0
    sets = dist._normal_superlevel(model, 1.0)
    mu_a = sum(dist._norm_mass(a, b, th, s0) for a, b in sets)
    p_a = sum(dist._norm_mass(a, b) for a, b in sets)
    return mu_a - p_a


# -- HC functional ----------------------------------------------------------

def _pert_cdf(pert, v, n):
    g = np.asarray(pert.grid)
    vals = np.asarray(pert.values)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (vals[1:] + vals[:-1]) * np.diff(g))])
    j = min(max(int(np.searchsorted(g, v, side="right")) - 1, 0), g.size - 2)
    dx = v - g[j]
    slope = (vals[j + 1] - vals[j]) / (g[j + 1] - g[j])
    return pert.scale(n) * (cum[j] + vals[j] * dx + 0.5 * slope * dx * dx)


def signal_pvalue_tails(model, v):
    """``(mu(0, v], mu(1 - v, 1))`` with the signal law expressed on the p-value scale."""
    if model.chimeric:
        k = dist.kappa(model)
        shape = model.signal.shape
        lower = float(shape.cdf(min(v / k, 1.0)))
        upper = 1.0 - float(shape.cdf(min((1.0 - v) / k, 1.0)))
        pert = model.signal.perturbation
        if pert is not None:
            lower += _pert_cdf(pert, v, model.n)
            upper -= _pert_cdf(pert, 1.0 - v, model.n)
        return lower, upper
    th = dist.theta(model)
    s0 = model.signal.sigma0
    z = special.ndtri(v)
    # p = 1 - Phi(Y), so p <= v iff Y >= -z and p > 1 - v iff Y < z
    lower = float(special.ndtr((z + th) / s0))
    upper = float(special.ndtr((z - th) / s0))
    return lower, upper


def hn_v(model, v):
    """HC detectability functional ``H_n(v)``."""
    if not 0.0 < v < 0.5:
        raise ValueError("v must lie in (0, 1/2)")
    eps = dist.epsilon(model)
    if eps == 0.0:
        return 0.0
    n = float(model.n)
    lower, upper = signal_pvalue_tails(model, v)
    return (abs(n * eps * (lower - v)) + abs(n * eps * (upper - v))) / math.sqrt(n * v)


# -- closed-form boundaries -------------------------------------------------

def boundary_chimeric(beta):
    if not 0.5 < beta <= 1.0:
        raise ValueError("beta must lie in (1/2, 1]")
    return 2.0 * beta - 1.0


def boundary_powerlaw(beta, a):
    """Boundary for ``h(x) = (1 - a) x**(-a)`` with ``a >= 1/2``."""
    if not 0.5 < beta < 1.0:
        raise ValueError("beta must lie in (1/2, 1)")
    if not 0.5 <= a < 1.0:
        raise ValueError("a must lie in [1/2, 1)")
    return max(0.0, (beta - a) / (1.0 - a))


def _normal_case(beta, sigma0):
    if sigma0 < math.sqrt(2.0):
        return "I" if beta <= 1.0 - sigma0 ** 2 / 4.0 else "II"
    return "III" if beta <= 1.0 - 1.0 / sigma0 ** 2 else "IV"


def boundary_normal_sparse(beta, sigma0):
    if not 0.5 < beta < 1.0:
        raise ValueError("beta must lie in (1/2, 1)")
    if not sigma0 > 0:
        raise ValueError("sigma0 must be positive")
    case = _normal_case(beta, sigma0)
    if case == "I":
        return (2.0 - sigma0 ** 2) * (beta - 0.5)
    if case == "III":
        return 0.0
    return (1.0 - sigma0 * math.sqrt(1.0 - beta)) ** 2


def log_exponent_E(beta, sigma0):
    """Logarithmic correction exponent in ``eps_n`` on the sparse normal boundary."""
    if not 0.5 < beta < 1.0:
        raise ValueError("beta must lie in (1/2, 1)")
    if not sigma0 > 0:
        raise ValueError("sigma0 must be positive")
    if _normal_case(beta, sigma0) == "I":
        return 0.0
    return 0.5 - math.sqrt(1.0 - beta) / (2.0 * sigma0)


def boundary_normal_dense(beta):
    if not 0.0 < beta < 0.5:
        raise ValueError("beta must lie in (0, 1/2)")
    return 0.5 - beta


def boundary(model):
    """Analytic boundary ``rho`` for the model's family, ``None`` if unknown."""
    if model.chimeric:
        shape = model.signal.shape
        if model.beta == 1.0:
            return 1.0
        if shape.kind == "powerlaw" and shape.exponent >= 0.5:
            return boundary_powerlaw(model.beta, shape.exponent)
        if shape.second_moment < np.inf:
            return boundary_chimeric(model.beta)
        return None
    if model.dense:
        return boundary_normal_dense(model.beta)
    if model.beta == 1.0:
        return 1.0
    return boundary_normal_sparse(model.beta, model.signal.sigma0)


# -- classifier -------------------------------------------------------------

def _trend(model, tau, grid):
    i1 = np.empty(len(grid))
    i2 = np.empty(len(grid))
    for j, n in enumerate(grid):
        rep = i_sums(model.with_(n=n), tau)
        i1[j], i2[j] = rep.i1, rep.i2
    size = np.maximum(np.maximum(i1, np.abs(i2)), TINY)
    slope = float(np.polyfit(np.log(grid), np.log(size), 1)[0])
    return i1, i2, size, slope


def classify_region(model, tau=1.0, grid=N_GRID, slope_tol=0.02, upper_gate=None, lower_gate=None):
    """Label the model's (beta, r) point by the growth of the I-sums along ``grid``.

    The fitted slope of ``log max(I1, |I2|)`` against ``log n`` decides:
    above ``slope_tol`` completely detectable, below ``-slope_tol``
    undetectable, otherwise detectable.  ``upper_gate`` / ``lower_gate``
    optionally also require the last value to exceed / stay below the given
    magnitudes.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    grid = np.asarray(grid, dtype=float)
    i1, i2, size, slope = _trend(model, tau, grid)
    checks = {t: _trend(model, t, grid)[3] for t in (0.5, 2.0)}
    last = size[-1]
    if slope > slope_tol and (upper_gate is None or last > upper_gate):
        kind = Region.COMPLETELY_DETECTABLE
    elif slope < -slope_tol and (lower_gate is None or last < lower_gate):
        kind = Region.UNDETECTABLE
    else:
        kind = Region.DETECTABLE
    evidence = {"n": grid.tolist(), "i1": i1.tolist(), "i2": i2.tolist(), "slope": slope,
                "tau": tau, "slope_tau_checks": checks}
    return RegionLabel(kind, evidence)
