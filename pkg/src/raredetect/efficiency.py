"""Pitman efficiency of mismatched LLR tests under Gaussian limits.

``gamma(theta_j, theta_r)`` is the limit of ``n eps_j eps_r Cov_P0(ratio_j,
ratio_r)``.  The limit is found by walking up a grid of sample sizes until
successive values agree; all arithmetic happens on the log scale so that the
grid can reach ``n = 1e300``.
"""
from __future__ import annotations

import math
import warnings

import numpy as np
from scipy import integrate, special

from . import distributions as dist

N_LADDER = tuple(10.0 ** k for k in range(3, 301))
STABLE_RTOL = 1e-4
ZERO_TOL = 1e-12


class LimitNotFound(ArithmeticError):
    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


def _log_norm_mass(lo, hi, mean=0.0, sd=1.0):
    zl = (lo - mean) / sd
    zh = (hi - mean) / sd
    if zh <= zl:
        return -np.inf
    if zl > 0:
        a, b = special.log_ndtr(-zl), special.log_ndtr(-zh)
    else:
        a, b = special.log_ndtr(zh), special.log_ndtr(zl)
    if b == -np.inf:
        return float(a)
    return float(a + np.log1p(-np.exp(b - a)))


def _log_exp_quadratic_integral(a, b, c, lo, hi):
    """``log int_lo^hi exp(a y^2 + b y + c) dy`` for ``a <= 0``."""
    if abs(a) < 1e-12:
        if hi <= lo:
            return -np.inf
        if b == 0:
            return c + math.log(hi - lo) if np.isfinite(hi - lo) else np.inf
        top, bot = max(b * hi, b * lo), min(b * hi, b * lo)
        if top == np.inf:
            return np.inf
        return c + top + math.log(-math.expm1(bot - top)) - math.log(abs(b))
    if a > 0:
        return np.inf
    s = math.sqrt(-0.5 / a)
    m = -b / (2 * a)
    logk = c - b * b / (4 * a) + 0.5 * math.log(2 * math.pi) + math.log(s)
    return logk + _log_norm_mass(lo, hi, m, s)


def _intersect(xs, ys):
    out = []
    for a, b in xs:
        for c, d in ys:
            lo, hi = max(a, c), min(b, d)
            if hi > lo:
                out.append((lo, hi))
    return out


def _normal_log_cross_moment(mj, mr):
    """``log E_P0[ratio_j ratio_r]`` for two normal-shift models (truncation honoured)."""
    parts = []
    sets = [(-np.inf, np.inf)]
    log_kept = 0.0
    for m in (mj, mr):
        if m.truncation is not None:
            eps0 = dist._raw_epsilon(m)
            kept = dist._kept_mass(m)
            if kept == 0.0:
                # truncated ratio is identically one
                parts.append(None)
                continue
            base = m.with_(truncation=None)
            sets = _intersect(sets, dist._complement(dist._normal_superlevel(base, m.truncation / eps0)))
            log_kept += math.log(kept)
        parts.append(dist._normal_log_ratio_coeffs(m.with_(truncation=None)))
    live = [p for p in parts if p is not None]
    if not live:
        return 0.0
    a = sum(p[0] for p in live) - 0.5
    b = sum(p[1] for p in live)
    c = sum(p[2] for p in live) - 0.5 * math.log(2 * math.pi)
    if len(live) == 1:
        # E[ratio] over the kept region equals the kept mass of that model
        pass
    terms = [_log_exp_quadratic_integral(a, b, c, lo, hi) for lo, hi in sets]
    terms = [t for t in terms if t > -np.inf]
    if not terms:
        return -np.inf
    return float(np.logaddexp.reduce(terms)) - log_kept


def _chimeric_log_cross_moment(mj, mr):
    """``log E_P0[ratio_j ratio_r]`` for two chimeric models."""
    if mj.truncation is not None or mr.truncation is not None:
        raise ValueError("truncated chimeric models are not supported here")
    kj, kr = dist.kappa(mj), dist.kappa(mr)
    if mj.signal.perturbation is None and mr.signal.perturbation is None:
        m = min(kj, kr)
        inner = mj.signal.shape.inner(mr.signal.shape, m / kj, m / kr)
        if inner <= 0:
            return -np.inf
        return math.log(m) - math.log(kj) - math.log(kr) + math.log(inner)
    pts = sorted({kj, kr} | set(getattr(mj.signal.perturbation, "grid", ())) |
                 set(getattr(mr.signal.perturbation, "grid", ())))
    f = lambda u: float(dist._raw_ratio(mj, np.asarray(u)) * dist._raw_ratio(mr, np.asarray(u)))
    val = integrate.quad(f, 0.0, 1.0, points=[p for p in pts if 0 < p < 1], limit=500,
                         epsabs=1e-12, epsrel=1e-10)[0]
    return math.log(val) if val > 0 else -np.inf


def gamma_at(mj, mr):
    """``n eps_j eps_r (E_P0[ratio_j ratio_r] - 1)`` at the models' common n."""
    if mj.noise is not mr.noise:
        raise ValueError("models must share the noise family")
    if mj.n != mr.n:
        raise ValueError("models must share n")
    ej, er = dist.epsilon(mj), dist.epsilon(mr)
    if ej == 0.0 or er == 0.0:
        return 0.0
    if mj.chimeric:
        log_e = _chimeric_log_cross_moment(mj, mr)
    else:
        log_e = _normal_log_cross_moment(mj, mr)
    lead = math.log(mj.n) + math.log(ej) + math.log(er)
    if log_e == -np.inf:
        return -math.exp(lead)
    if log_e > 0:
        # log(E - 1) without cancellation
        lm1 = log_e + math.log(-math.expm1(-log_e)) if log_e > 1e-300 else -np.inf
        return math.exp(min(lead + lm1, 700.0))
    return -math.exp(lead + math.log(-math.expm1(log_e))) if log_e < 0 else 0.0


def _needs_truncation(model):
    if model.chimeric or model.dense or model.truncation is not None:
        return False
    s0 = model.signal.sigma0
    return abs(model.beta - (1.0 - s0 * s0 / 4.0)) < 1e-12


def _prepare(model, tau):
    return model.with_(truncation=tau) if _needs_truncation(model) else model


def gamma_limit(mj, mr, ladder=N_LADDER, tau=1.0, return_trace=False):
    """Limit of :func:`gamma_at` along the sample-size ladder."""
    mj, mr = _prepare(mj, tau), _prepare(mr, tau)
    trace = []
    prev = None
    for n in ladder:
        try:
            val = gamma_at(mj.with_(n=n), mr.with_(n=n))
        except (ValueError, OverflowError, ZeroDivisionError) as exc:
            trace.append((n, repr(exc)))
            break
        trace.append((n, val))
        if abs(val) < ZERO_TOL:
            out = 0.0
            return (out, trace) if return_trace else out
        if prev is not None and abs(val - prev) <= STABLE_RTOL * abs(val):
            return (val, trace) if return_trace else val
        prev = val
    raise LimitNotFound("gamma did not stabilise on the sample-size ladder", trace)


def gamma_cross(mj, mr, **kw):
    return gamma_limit(mj, mr, **kw)


def gamma_matrix(m1, m2, **kw):
    g11 = gamma_limit(m1, m1, **kw)
    g22 = gamma_limit(m2, m2, **kw)
    g12 = gamma_limit(m1, m2, **kw)
    return np.array([[g11, g12], [g12, g22]])


def _clamp_are(val):
    if val < -1e-9 or val > 1 + 1e-9:
        warnings.warn(f"ARE {val} outside [0, 1]; clamped", RuntimeWarning, stacklevel=3)
    return min(max(val, 0.0), 1.0)


def are(m1, m2, **kw):
    """Pitman ARE ``gamma_12**2 / (gamma_11 gamma_22)``."""
    g = gamma_matrix(m1, m2, **kw)
    if g[0, 0] <= 0 or g[1, 1] <= 0:
        raise ValueError("degenerate gamma: the models are not in a nontrivial Gaussian regime")
    return _clamp_are(g[0, 1] ** 2 / (g[0, 0] * g[1, 1]))


def are_shapes(h1, h2):
    """Closed-form ARE for two chimeric shapes sharing ``(beta, r)``."""
    m11, m22 = h1.second_moment, h2.second_moment
    if not (np.isfinite(m11) and np.isfinite(m22)) or m11 <= 0 or m22 <= 0:
        raise ValueError("shapes need finite, positive second moments")
    return _clamp_are(h1.inner(h2) ** 2 / (m11 * m22))


def power_from_gammas(g12, g22, alpha):
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if g22 <= 0:
        raise ValueError("gamma_22 must be positive")
    return float(special.ndtr(g12 / math.sqrt(g22) + special.ndtri(alpha)))


def mismatched_power(m1, m2, alpha=0.05, **kw):
    """Asymptotic power of the LLR test built for ``m2`` when ``m1`` is true."""
    g = gamma_matrix(m1, m2, **kw)
    return power_from_gammas(g[0, 1], g[1, 1], alpha)


def diagnostics(m1, m2, alpha=0.05, **kw):
    """Gamma matrix, ARE, power and two readings of the 'wasted observations' share."""
    g = gamma_matrix(m1, m2, **kw)
    a = _clamp_are(g[0, 1] ** 2 / (g[0, 0] * g[1, 1]))
    return {
        "gamma": g,
        "are": a,
        "matched_power": power_from_gammas(g[0, 0], g[0, 0], alpha),
        "mismatched_power": power_from_gammas(g[0, 1], g[1, 1], alpha),
        # share of observations the optimal test may drop and keep the mismatched power
        "wasted_fraction_one_minus_are": 1.0 - a,
        # share of the sample the optimal test needs to match the mismatched power
        "needed_fraction_are": a,
    }
