"""Deterministic Monte Carlo harness for critical values, power and sweeps.

Replicate ``i`` of domain ``d`` (null 0, alternative 1, size 2) always uses
the stream ``make_stream(seed, d, i)``, so results do not depend on how the
replicates are scheduled over threads.
"""
from __future__ import annotations

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps

from . import detectability as det
from . import distributions as dist
from . import statistics as st

NULL, ALT, SIZE = 0, 1, 2
TESTS = ("hc", "llr")


@dataclass(frozen=True)
class ExperimentConfig:
    model: dist.DetectionModel
    test: str = "both"
    alpha: float = 0.05
    reps: int = 1000
    seed: int = 0
    threads: int = 1
    hc_max_t: float | None = None

    def __post_init__(self):
        if self.test not in ("hc", "llr", "both"):
            raise ValueError("test must be hc, llr or both")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.reps < 100:
            raise ValueError("reps must be >= 100")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    @property
    def tests(self):
        return TESTS if self.test == "both" else (self.test,)

    def digest(self):
        """Short hash of everything that determines the random outcome."""
        text = repr((self.model, self.test, self.alpha, self.reps, self.seed, self.hc_max_t))
        return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class PowerEstimate:
    test: str
    rejections: int
    reps: int
    estimate: float
    wilson_lo: float
    wilson_hi: float
    critical: float
    seed: int
    config_hash: str
    extras: dict = field(default_factory=dict, compare=False)


def wilson(k, n, level=0.95):
    """Wilson score interval for ``k`` successes in ``n`` trials."""
    ci = sps.binomtest(int(k), int(n)).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


# -- one replicate ----------------------------------------------------------

def _fast_chimeric_llr(model, side, stream, stat_model=None):
    """Exact-in-law LLR for unperturbed chimeric models.

    Only coordinates in the window ``(0, w)`` carry information, with ``w``
    the larger of the two supports; every other coordinate contributes
    ``log(1 - eps)`` of the statistic's model.  ``stat_model`` (default
    ``model``) is the model whose LLR is evaluated on data from ``model``.
    """
    stat_model = model if stat_model is None else stat_model
    n = model.size
    eps = dist.epsilon(model)
    k = dist.kappa(model)
    w = max(k, dist.kappa(stat_model))
    if side == ALT and eps > 0:
        p_hit = eps + (1.0 - eps) * w
        hits = int(stream.binomial(n, p_hit))
        is_sig = stream.random(hits) < eps / p_hit
        u = stream.random(hits)
        y = np.where(is_sig, k * model.signal.shape.ppf(u), w * u)
    else:
        hits = int(stream.binomial(n, w))
        y = w * stream.random(hits)
    y = np.clip(y, np.nextafter(0.0, 1.0), w)
    inside = st.compensated_sum(dist.log_mixture_ratio(stat_model, y)) if hits else 0.0
    return inside + (n - hits) * math.log1p(-dist.epsilon(stat_model))


def _fast_path(model):
    return model.chimeric and model.signal.perturbation is None and model.truncation is None


def one_replicate(model, tests, side, stream, hc_max_t=None):
    """Statistic values for one sample drawn under ``side``."""
    out = {}
    if tests == ("llr",) and _fast_path(model) and dist.epsilon(model) > 0:
        out["llr"] = _fast_chimeric_llr(model, side, stream)
        return out
    if side == ALT:
        y, _ = dist.sample_alternative(model, stream)
    else:
        y = dist.sample_null(model, model.size, stream)
    if "llr" in tests:
        out["llr"] = st.llr_statistic(model, y).value
    if "hc" in tests:
        out["hc"] = st.hc_statistic(dist.to_pvalues(model, y), max_t=hc_max_t).raw
    return out


def simulate_statistic(model, tests, side, reps, seed, threads=1, hc_max_t=None):
    """``{test: array of length reps}`` of statistic values under ``side``.

    ``side`` is ``NULL``/``ALT``/``SIZE`` or the strings ``null``/``alt``;
    ``SIZE`` draws null samples from a stream domain disjoint from ``NULL``.
    """
    side = {"null": NULL, "alt": ALT, "size": SIZE}.get(side, side)
    tests = tuple(tests) if not isinstance(tests, str) else ((tests,) if tests != "both" else TESTS)
    draw_side = ALT if side == ALT else NULL
    res = {t: np.empty(int(reps)) for t in tests}

    def work(i):
        vals = one_replicate(model, tests, draw_side, dist.make_stream(seed, side, i), hc_max_t)
        for t in tests:
            res[t][i] = vals[t]

    if threads == 1:
        for i in range(int(reps)):
            work(i)
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            list(ex.map(work, range(int(reps))))
    return res


def mc_critical_value(model, test, alpha, reps, seed, threads=1, hc_max_t=None, return_sample=False):
    """Empirical ``1 - alpha`` quantile (type 7) of the statistic under the null."""
    if reps < 100:
        raise ValueError("reps must be >= 100")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    sample = simulate_statistic(model, (test,), NULL, reps, seed, threads, hc_max_t)[test]
    crit = float(np.quantile(sample, 1.0 - alpha))
    return (crit, sample) if return_sample else crit


def estimate_power(config, size=False):
    """MC power of each requested test; MC critical values from the null domain.

    With ``size=True`` the empirical size is also estimated on an
    independent null domain and stored in ``extras``.
    """
    m = config.model
    tests = config.tests
    null = simulate_statistic(m, tests, NULL, config.reps, config.seed, config.threads, config.hc_max_t)
    alt = simulate_statistic(m, tests, ALT, config.reps, config.seed, config.threads, config.hc_max_t)
    sz = simulate_statistic(m, tests, SIZE, config.reps, config.seed, config.threads, config.hc_max_t) \
        if size else None
    out = {}
    for t in tests:
        crit = float(np.quantile(null[t], 1.0 - config.alpha))
        k = int(np.count_nonzero(alt[t] > crit))
        lo, hi = wilson(k, config.reps)
        extras = {"null_mean": float(np.mean(null[t])), "null_var": float(np.var(null[t], ddof=1)),
                  "alt_mean": float(np.mean(alt[t])), "alt_stats": alt[t], "null_stats": null[t]}
        if t == "hc" and m.size >= 16:
            extras["asymptotic_critical"] = st.hc_asymptotic_critical(m.size, config.alpha)
        if sz is not None:
            ks = int(np.count_nonzero(sz[t] > crit))
            extras["size"] = ks / config.reps
            extras["size_wilson99"] = wilson(ks, config.reps, 0.99)
        out[t] = PowerEstimate(t, k, config.reps, k / config.reps, lo, hi, crit, config.seed,
                               config.digest(), extras)
    return out


def mismatched_llr_power(true_model, stat_model, alpha, reps, seed, threads=1):
    """MC power of the LLR test built for ``stat_model`` when data follow ``true_model``.

    Both models must be unperturbed chimeric models with the same n.
    """
    if not (_fast_path(true_model) and _fast_path(stat_model)):
        raise ValueError("mismatched simulation needs unperturbed chimeric models")
    if true_model.size != stat_model.size:
        raise ValueError("models must share n")
    null = np.empty(int(reps))
    alt = np.empty(int(reps))

    def work(i):
        null[i] = _fast_chimeric_llr(stat_model, NULL, dist.make_stream(seed, NULL, i))
        alt[i] = _fast_chimeric_llr(true_model, ALT, dist.make_stream(seed, ALT, i), stat_model)

    if threads == 1:
        for i in range(int(reps)):
            work(i)
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            list(ex.map(work, range(int(reps))))
    crit = float(np.quantile(null, 1.0 - alpha))
    k = int(np.count_nonzero(alt > crit))
    lo, hi = wilson(k, reps)
    return PowerEstimate("llr-mismatched", k, int(reps), k / reps, lo, hi, crit, seed, "",
                         {"null_mean": float(null.mean()), "alt_mean": float(alt.mean())})


def error_sum_curve(null_stats, alt_stats, thresholds):
    """``P0(T > c) + Q(T <= c)`` on a grid of thresholds."""
    null_stats = np.sort(null_stats)
    alt_stats = np.sort(alt_stats)
    c = np.asarray(thresholds, dtype=float)
    type1 = 1.0 - np.searchsorted(null_stats, c, side="right") / null_stats.size
    type2 = np.searchsorted(alt_stats, c, side="right") / alt_stats.size
    return type1 + type2


# -- sweeps -----------------------------------------------------------------

def boundary_side(model, band=0.02):
    rho = det.boundary(model)
    if rho is None:
        return "unknown"
    if abs(model.r - rho) <= band:
        return "boundary"
    if model.dense:
        return "below" if model.r > rho else "above"
    return "above" if model.r > rho else "below"


def phase_sweep(template, betas, rs, config=None, tau=1.0):
    """One :class:`raredetect.io.SweepRow` per ``(beta, r)``.

    With a ``config`` the MC power of both tests is added (its model field
    is replaced by each grid model).
    """
    from .io import SweepRow
    rows = []
    for b in betas:
        for r in rs:
            m = template.with_(beta=float(b), r=float(r))
            label = det.classify_region(m, tau)
            hc = llr = None
            reps = seed = None
            if config is not None:
                cfg = ExperimentConfig(m.with_(n=config.model.n), config.test, config.alpha, config.reps,
                                       config.seed, config.threads, config.hc_max_t)
                est = estimate_power(cfg)
                hc = est["hc"].estimate if "hc" in est else None
                llr = est["llr"].estimate if "llr" in est else None
                reps, seed = config.reps, config.seed
            rows.append(SweepRow(family=_family_tag(m), beta=float(b), r=float(r), param=_param_tag(m),
                                 side=boundary_side(m), label=str(label), hc_power=hc, llr_power=llr,
                                 reps=reps, seed=seed))
    rows.sort(key=lambda row: (row.beta, row.r))
    return rows


def _family_tag(m):
    if m.chimeric:
        return "chimeric"
    return "normal-dense" if m.dense else "normal"


def _param_tag(m):
    return m.signal.shape.tag if m.chimeric else f"sigma0={m.signal.sigma0:g}"


# -- distribution checks ----------------------------------------------------

def ecdf_and_ks(draws, ref_cdf, ref_total=1.0):
    """One-sample KS distance between draws and a reference CDF.

    ``draws`` may be a plain array or :class:`raredetect.limits.LimitDraws`;
    infinite draws are left out of the ECDF, which then tops out at the
    finite fraction, and the reference is compared including its own mass
    deficit ``1 - ref_total``.
    """
    if hasattr(draws, "sign"):
        total = draws.values.size
        x = np.sort(draws.finite())
    else:
        x = np.sort(np.asarray(draws, dtype=float))
        total = x.size
    if total < 1:
        raise ValueError("need draws")
    d = 0.0
    if x.size:
        f = np.asarray(ref_cdf(x), dtype=float)
        # left limits matter when the reference has atoms
        f_left = np.asarray(ref_cdf(np.nextafter(x, -np.inf)), dtype=float)
        upper = np.searchsorted(x, x, side="right") / total
        lower = np.searchsorted(x, x, side="left") / total
        d = max(float(np.max(np.abs(upper - f))), float(np.max(np.abs(f_left - lower))))
    return max(d, abs(x.size / total - ref_total))


def ks_two_sample(a, b):
    return float(sps.ks_2samp(np.asarray(a), np.asarray(b)).statistic)
