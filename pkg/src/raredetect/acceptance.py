"""Acceptance checks shared by ``raredetect selftest`` and the test suite.

Each ``criterion_*`` function returns a :class:`Outcome`.  ``scale`` < 1
shrinks replication counts for smoke runs; the published tolerances only
apply at ``scale=1``.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from . import detectability as det
from . import distributions as dist
from . import efficiency as eff
from . import limits as lim
from . import montecarlo as mc
from . import statistics as st
from .shapes import ShapeFunction


@dataclass
class Outcome:
    number: int
    title: str
    passed: bool
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self):
        flag = "PASS" if self.passed else "FAIL"
        bits = ", ".join(f"{k}={_short(v)}" for k, v in self.detail.items())
        return f"[{flag}] criterion {self.number}: {self.title} ({self.seconds:.1f}s) {bits}"


def _short(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_short(x) for x in v) + "]"
    return str(v)


def _reps(n, scale):
    return max(100, int(round(n * scale)))


def _timed(fn):
    def wrapper(*args, **kw):
        t0 = time.perf_counter()
        out = fn(*args, **kw)
        out.seconds = time.perf_counter() - t0
        return out
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def chimeric(beta, r, n, shape=None):
    return dist.DetectionModel(n=n, beta=beta, r=r, signal=dist.Chimeric(shape or ShapeFunction.constant()))


def normal(beta, r, n, sigma0=1.0, E=0.0, dense=False):
    return dist.DetectionModel(n=n, beta=beta, r=r, signal=dist.NormalShift(sigma0), log_exponent=E, dense=dense)


# -- 1 ----------------------------------------------------------------------

BOUNDARY_POINTS = [
    ("chimeric beta=0.75", lambda: det.boundary_chimeric(0.75), 0.5),
    ("chimeric beta=1", lambda: det.boundary_chimeric(1.0), 1.0),
    ("chimeric beta=0.6", lambda: det.boundary_chimeric(0.6), 0.2),
    ("powerlaw beta=0.7 a=0.5", lambda: det.boundary_powerlaw(0.7, 0.5), 0.4),
    ("powerlaw beta=0.6 a=0.7", lambda: det.boundary_powerlaw(0.6, 0.7), 0.0),
    ("powerlaw beta=a=0.8", lambda: det.boundary_powerlaw(0.8, 0.8), 0.0),
    ("normal I beta=0.6 s=1", lambda: det.boundary_normal_sparse(0.6, 1.0), 0.1),
    ("normal II beta=0.9 s=1", lambda: det.boundary_normal_sparse(0.9, 1.0), (1 - math.sqrt(0.1)) ** 2),
    ("normal III beta=0.6 s=2", lambda: det.boundary_normal_sparse(0.6, 2.0), 0.0),
    ("normal IV beta=0.9 s=2", lambda: det.boundary_normal_sparse(0.9, 2.0), (1 - 2 * math.sqrt(0.1)) ** 2),
    ("dense beta=0.25", lambda: det.boundary_normal_dense(0.25), 0.25),
    ("dense beta=0.1", lambda: det.boundary_normal_dense(0.1), 0.4),
    ("E beta=0.9 s=1", lambda: det.log_exponent_E(0.9, 1.0), 0.5 - math.sqrt(0.1) / 2),
    ("E beta=0.6 s=1", lambda: det.log_exponent_E(0.6, 1.0), 0.0),
]


@_timed
def criterion_1():
    errs = {name: abs(f() - want) for name, f, want in BOUNDARY_POINTS}
    worst = max(errs.values())
    return Outcome(1, "boundary formulas", worst <= 1e-12, {"points": len(errs), "max_abs_err": worst})


# -- 2 ----------------------------------------------------------------------

def classifier_grids():
    """Regular 5x4 grids per family (points inside the 0.02 band are skipped)."""
    b5 = [0.55, 0.65, 0.75, 0.85, 0.95]
    return {
        "chimeric const": (chimeric(0.7, 0.3, 1e4), b5, [0.1, 0.35, 0.6, 0.85]),
        "chimeric 2x": (chimeric(0.7, 0.3, 1e4, ShapeFunction.linear2x()), b5, [0.1, 0.35, 0.6, 0.85]),
        "powerlaw a=0.7": (chimeric(0.7, 0.3, 1e4, ShapeFunction.power_law(0.7)), b5, [0.1, 0.35, 0.6, 0.85]),
        "normal s=1": (normal(0.7, 0.3, 1e4), b5, [0.05, 0.3, 0.55, 0.8]),
        "normal s=0.5": (normal(0.7, 0.3, 1e4, 0.5), b5, [0.15, 0.4, 0.65, 0.9]),
        "normal s=2": (normal(0.7, 0.3, 1e4, 2.0), b5, [0.05, 0.3, 0.55, 0.8]),
        "normal dense": (normal(0.2, 0.3, 1e4, dense=True), [0.05, 0.15, 0.25, 0.35, 0.45],
                         [0.05, 0.25, 0.45, 0.65]),
    }


@_timed
def criterion_2():
    expect = {"above": det.Region.COMPLETELY_DETECTABLE, "below": det.Region.UNDETECTABLE}
    total = 0
    wrong = []
    for name, (template, betas, rs) in classifier_grids().items():
        for b in betas:
            for r in rs:
                m = template.with_(beta=b, r=r)
                side = mc.boundary_side(m)
                if side not in expect:
                    continue
                total += 1
                lab = det.classify_region(m)
                if lab.kind is not expect[side]:
                    wrong.append(f"{name} ({b}, {r}) -> {lab}")
    return Outcome(2, "classifier vs analytic boundary", not wrong,
                   {"checked": total, "disagree": len(wrong), "cases": wrong[:5]})


# -- 3, 4 -------------------------------------------------------------------

@_timed
def criterion_3(scale=1.0, seed=3, threads=1):
    cfg = mc.ExperimentConfig(chimeric(0.7, 0.6, 1e5), "both", 0.05, _reps(2000, scale), seed, threads)
    est = mc.estimate_power(cfg)
    hc, llr = est["hc"].estimate, est["llr"].estimate
    return Outcome(3, "complete detection above the boundary (HC >= 0.95, LLR >= 0.99)",
                   hc >= 0.95 and llr >= 0.99, {"hc_power": hc, "llr_power": llr, "reps": cfg.reps})


@_timed
def criterion_4(scale=1.0, seed=4, threads=1):
    cfg = mc.ExperimentConfig(chimeric(0.7, 0.2, 1e5), "llr", 0.05, _reps(2000, scale), seed, threads)
    p = mc.estimate_power(cfg)["llr"].estimate
    return Outcome(4, "undetectable below the boundary (LLR in [0.02, 0.10])", 0.02 <= p <= 0.10,
                   {"llr_power": p, "reps": cfg.reps})


# -- 5, 6 -------------------------------------------------------------------

GAUSSIAN_BOUNDARY_POWER = float(special.ndtr(special.ndtri(0.05) + 1.0))


@_timed
def criterion_5(scale=1.0, seed=5, threads=1):
    cfg = mc.ExperimentConfig(chimeric(0.75, 0.5, 1e6), "llr", 0.05, _reps(5000, scale), seed, threads)
    e = mc.estimate_power(cfg)["llr"]
    mean, var = e.extras["null_mean"], e.extras["null_var"]
    ok = abs(e.estimate - GAUSSIAN_BOUNDARY_POWER) <= 0.03 and abs(mean + 0.5) <= 0.05 and abs(var - 1) <= 0.1
    return Outcome(5, "LLR Gaussian boundary power", ok,
                   {"power": e.estimate, "target": GAUSSIAN_BOUNDARY_POWER, "null_mean": mean, "null_var": var,
                    "reps": cfg.reps})


@_timed
def criterion_6(scale=1.0, seed=6, threads=1):
    out = {}
    ok = True
    for name, m in (("chimeric", chimeric(0.75, 0.5, 1e6)), ("normal", normal(0.6, 0.1, 1e6))):
        cfg = mc.ExperimentConfig(m, "both", 0.05, _reps(2000, scale), seed, threads)
        est = mc.estimate_power(cfg)
        out[f"{name}_hc"] = est["hc"].estimate
        out[f"{name}_llr"] = est["llr"].estimate
        ok &= est["hc"].estimate <= 0.08
    return Outcome(6, "HC powerless on the boundary (HC <= 0.08)", ok, out)


# -- 7 ----------------------------------------------------------------------

@_timed
def criterion_7(scale=1.0, seed=7, threads=1):
    out = {}
    ok = True
    for r, null_target, frac_target in ((1.0, -0.5, 1 - math.exp(-0.5)), (1.5, -1.0, 1 - math.exp(-1.0))):
        m = normal(1.0, r, 1e6)
        reps = _reps(2000, scale)
        null = mc.simulate_statistic(m, ("llr",), mc.NULL, reps, seed, threads)["llr"]
        alt = mc.simulate_statistic(m, ("llr",), mc.ALT, reps, seed, threads)["llr"]
        frac = float(np.mean(alt > 5.0))
        out[f"r={r:g} null_mean"] = float(null.mean())
        out[f"r={r:g} frac>5"] = frac
        ok &= abs(null.mean() - null_target) <= 0.05 and abs(frac - frac_target) <= 0.02
    return Outcome(7, "beta = 1 extremes of the normal model", ok, out)


# -- 8 ----------------------------------------------------------------------

MISMATCHED_POWER = float(special.ndtr(special.ndtri(0.05) + math.sqrt(0.75)))


@_timed
def criterion_8(scale=1.0, seed=8, threads=1):
    h1, h2 = ShapeFunction.constant(), ShapeFunction.linear2x()
    closed = eff.are_shapes(h1, h2)
    m1, m2 = chimeric(0.75, 0.5, 1e6, h1), chimeric(0.75, 0.5, 1e6, h2)
    quad = eff.are(m1, m2)
    sim = mc.mismatched_llr_power(m1, m2, 0.05, _reps(5000, scale), seed, threads)
    ok = abs(closed - 0.75) <= 1e-9 and abs(quad - 0.75) <= 1e-4 and abs(sim.estimate - MISMATCHED_POWER) <= 0.03
    return Outcome(8, "ARE and mismatched power", ok,
                   {"are_closed": closed, "are_quadrature": quad, "sim_power": sim.estimate,
                    "target": MISMATCHED_POWER, "reps": sim.reps})


# -- 9 ----------------------------------------------------------------------

CF_POINTS = (0.25, 0.5, 1.0, 2.0, 4.0)


def cf_gap(pair, draws=10**6, seed=9):
    worst = 0.0
    for k, side in enumerate(("null", "alt")):
        d = lim.sample_limit(pair, side, dist.make_stream(seed, 90 + k), draws)
        for t in CF_POINTS:
            worst = max(worst, abs(d.empirical_cf(t) - lim.cf_side(pair, side, t)))
    return worst


@_timed
def criterion_9(scale=1.0, seed=9):
    draws = max(10**4, int(10**6 * scale))
    out = {}
    ok = True
    try:
        out["powerlaw a=0.5 cf_gap"] = cf_gap(lim.triple_powerlaw_boundary(0.5), draws, seed)
        ok &= out["powerlaw a=0.5 cf_gap"] <= 0.01
    except ValueError as exc:
        out["powerlaw a=0.5"] = f"not constructible: {exc}"
        ok = False
    # reported for information only, not part of the verdict
    out["powerlaw a=0.6 cf_gap (info)"] = cf_gap(lim.triple_powerlaw_boundary(0.6), draws, seed)
    out["normal quad cf_gap"] = cf_gap(lim.triple_normal_quadratic(0.9, 1.0), draws, seed)
    ok &= out["normal quad cf_gap"] <= 0.01
    h = ShapeFunction.linear2x()
    pair = lim.triple_beta1(h, 1.0)
    xi = lim.sample_limit(pair, "null", dist.make_stream(seed, 95), draws).values
    g = dist.make_stream(seed, 96)
    counts = g.poisson(1.0, draws)
    direct = -1.0 + np.bincount(np.repeat(np.arange(draws), counts),
                                weights=np.log(h(g.random(int(counts.sum()))) + 1.0), minlength=draws)
    out["beta1 ks"] = mc.ks_two_sample(xi, direct)
    ok &= out["beta1 ks"] <= 0.01
    return Outcome(9, "limit-law machinery", ok, out)


# -- 10 ---------------------------------------------------------------------

@_timed
def criterion_10(scale=1.0, seed=10, threads=1):
    ks = []
    for n in (1e3, 1e4, 1e5, 1e6):
        m = dist.DetectionModel(n=n, beta=0.75, r=0.5, eps=0.0)
        raw = mc.simulate_statistic(m, ("hc",), mc.NULL, _reps(2000, scale), seed, threads)["hc"]
        a, b = st.hc_normalizers(m.size)
        ks.append(mc.ecdf_and_ks(a * raw - b, st.hc_limit_cdf))
    ok = all(x > y for x, y in zip(ks[:-1], ks[1:]))
    return Outcome(10, "HC null limit trend (KS strictly decreasing)", ok, {"ks": ks})


# -- 11 ---------------------------------------------------------------------

def random_models(count, seed):
    g = dist.make_stream(seed, 110)
    shapes = [ShapeFunction.constant(), ShapeFunction.linear2x(), ShapeFunction.power_law(0.3),
              ShapeFunction.power_law(0.7), ShapeFunction.tabulated([0, 0.3, 1], [2, 0.5, 1])]
    out = []
    for i in range(count):
        n = 10 ** g.uniform(3, 7)
        beta = g.uniform(0.55, 0.99)
        r = g.uniform(0.05, 1.0)
        if i % 2 == 0:
            out.append(chimeric(beta, r, n, shapes[i // 2 % len(shapes)]))
        else:
            out.append(normal(beta, g.uniform(0.05, 0.8), n, sigma0=g.uniform(0.4, 2.5)))
    return out


def hc_grid_oracle(p):
    """Brute force: the ECDF is counted directly on a grid holding a dense
    uniform mesh, the data points and their left neighbours."""
    p = np.sort(p)
    grid = np.concatenate([np.linspace(1e-7, 1 - 1e-7, 10**6), p, np.nextafter(p, 0.0)])
    grid = grid[(grid > 0) & (grid < 1)]
    f = np.searchsorted(p, grid, side="right") / p.size
    return math.sqrt(p.size) * float(np.max(np.abs(f - grid) / np.sqrt(grid * (1 - grid))))


@_timed
def criterion_11(seed=11):
    out = {}
    bad = 0
    for m in random_models(50, seed):
        d = det.hellinger_sum(m)
        eps = dist.epsilon(m)
        tv = det.total_variation(m)
        rep = det.i_sums(m, 1.0)
        slack = 1e-9 * max(1.0, abs(d))
        if not (0.5 * m.n * eps ** 2 * tv ** 2 <= d + slack and d <= m.n * eps * tv + slack):
            bad += 1
        if d > (0.5 + eps) * rep.i1 + rep.i2 + slack:
            bad += 1
    out["inequality_violations"] = bad
    worst = 0.0
    for s in range(100):
        p = dist.make_stream(seed, 111, s).random(1000)
        worst = max(worst, abs(st.hc_statistic(p).raw - hc_grid_oracle(p)))
    out["hc_oracle_max_err"] = worst
    cfg = dict(model=chimeric(0.7, 0.5, 2000), test="both", alpha=0.05, reps=200, seed=seed)
    runs = [mc.estimate_power(mc.ExperimentConfig(threads=t, **cfg)) for t in (1, 4, 16)]
    same = all(
        r[t].rejections == runs[0][t].rejections and np.array_equal(r[t].extras["alt_stats"], runs[0][t].extras["alt_stats"])
        and np.array_equal(r[t].extras["null_stats"], runs[0][t].extras["null_stats"])
        for r in runs[1:] for t in ("hc", "llr"))
    out["thread_reproducible"] = same
    return Outcome(11, "inequalities, HC oracle, reproducibility", bad == 0 and worst <= 1e-6 and same, out)


CRITERIA = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5, 6: criterion_6,
    7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10, 11: criterion_11,
}


def run(numbers=None, scale=1.0, threads=1, echo=print):
    """Run the selected criteria and return their outcomes."""
    outcomes = []
    for k in numbers or sorted(CRITERIA):
        fn = CRITERIA[k]
        kw = {}
        if k not in (1, 2, 11):
            kw["scale"] = scale
        if k not in (1, 2, 9, 11):
            kw["threads"] = threads
        res = fn(**kw)
        if echo:
            echo(res.line())
        outcomes.append(res)
    return outcomes
