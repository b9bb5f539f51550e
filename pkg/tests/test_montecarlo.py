import math

import numpy as np
import pytest
from scipy import special, stats

from raredetect import ShapeFunction, montecarlo as mc, statistics as st
from raredetect.io import SweepRow
from conftest import chim, norm


def test_config_validation():
    with pytest.raises(ValueError):
        mc.ExperimentConfig(chim(), reps=50)
    with pytest.raises(ValueError):
        mc.ExperimentConfig(chim(), test="ks")
    with pytest.raises(ValueError):
        mc.ExperimentConfig(chim(), alpha=0.0)
    assert mc.ExperimentConfig(chim()).digest() == mc.ExperimentConfig(chim()).digest()
    assert mc.ExperimentConfig(chim(), seed=1).digest() != mc.ExperimentConfig(chim(), seed=2).digest()


def test_reproducible_across_threads():
    cfg = mc.ExperimentConfig(chim(0.7, 0.5, 1e3), reps=200, seed=9)
    a = mc.estimate_power(cfg)
    b = mc.estimate_power(mc.ExperimentConfig(chim(0.7, 0.5, 1e3), reps=200, seed=9, threads=4))
    for t in ("hc", "llr"):
        assert a[t] == b[t]
        assert np.array_equal(a[t].extras["alt_stats"], b[t].extras["alt_stats"])


def test_zero_eps_llr():
    m = chim(0.75, 0.5, 1e3, eps=0.0)
    crit, sample = mc.mc_critical_value(m, "llr", 0.05, 100, 1, return_sample=True)
    assert crit == 0.0 and np.all(sample == 0.0)


def test_zero_eps_power_is_size():
    m = norm(0.75, 0.3, 1e3, eps=0.0)
    est = mc.estimate_power(mc.ExperimentConfig(m, test="hc", reps=1000, seed=3))["hc"]
    # null and alternative coincide: the rejection rate is a size estimate
    lo, hi = mc.wilson(int(0.05 * 1000), 1000, 0.99)
    assert lo <= est.estimate <= hi


def test_hc_critical_seed_stability():
    m = chim(0.75, 0.5, 1e3)
    a = mc.mc_critical_value(m, "hc", 0.05, 2000, 1)
    b = mc.mc_critical_value(m, "hc", 0.05, 2000, 2)
    assert abs(a - b) <= 0.3


def test_wilson():
    lo, hi = mc.wilson(0, 100)
    assert lo == 0.0 and 0.03 < hi < 0.04
    lo, hi = mc.wilson(50, 100)
    assert lo == pytest.approx(1 - hi)
    # Wilson centre formula as oracle
    z = special.ndtri(0.975)
    k, n = 13, 200
    p = k / n
    centre = (p + z * z / (2 * n)) / (1 + z * z / n)
    half = z / (1 + z * z / n) * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n))
    assert mc.wilson(k, n) == pytest.approx((centre - half, centre + half), rel=1e-10)


def test_fast_llr_matches_full_path():
    m = chim(0.7, 0.4, 1e4)
    fast = mc.simulate_statistic(m, ("llr",), "alt", 400, 5)["llr"]
    full = mc.simulate_statistic(m, ("llr", "hc"), "alt", 400, 5)["llr"]
    assert stats.ks_2samp(fast, full).pvalue > 0.001
    fast0 = mc.simulate_statistic(m, ("llr",), "null", 400, 6)["llr"]
    full0 = mc.simulate_statistic(m, ("llr", "hc"), "null", 400, 6)["llr"]
    assert stats.ks_2samp(fast0, full0).pvalue > 0.001


def test_mismatched_llr_power():
    m1 = chim(0.75, 0.5, 1e5)
    m2 = chim(0.75, 0.5, 1e5, ShapeFunction.linear2x())
    est = mc.mismatched_llr_power(m1, m2, 0.05, 1000, 4)
    assert est.wilson_lo <= 0.218 + 0.05 and est.estimate >= 0.12
    with pytest.raises(ValueError):
        mc.mismatched_llr_power(m1, norm(), 0.05, 100, 1)


@pytest.mark.parametrize("m", [chim(0.7, 0.4, 1e4), chim(0.7, 0.3, 1e4, ShapeFunction.power_law(0.6)),
                               norm(0.6, 0.1, 1e4), norm(0.3, 0.2, 1e4, dense=True)])
def test_size_control(m):
    est = mc.estimate_power(mc.ExperimentConfig(m, reps=5000, seed=12, threads=4), size=True)
    for t in ("hc", "llr"):
        lo, hi = mc.wilson(250, 5000, 0.99)
        assert lo <= est[t].extras["size"] <= hi


def test_hc_critical_far_from_asymptotic():
    # the full-interval HC null law converges very slowly: at desk sizes the MC critical
    # value stays well above the asymptotic one, which would give a badly oversized test
    for n in (1e3, 1e4):
        crit = mc.mc_critical_value(chim(0.75, 0.5, n), "hc", 0.05, 1000, 1)
        assert crit > st.hc_asymptotic_critical(int(n), 0.05) + 1.0


def test_error_sum_curve():
    null = np.arange(10.0)
    alt = np.arange(10.0) + 100
    c = mc.error_sum_curve(null, alt, [-1.0, 50.0, 200.0])
    assert np.allclose(c, [1.0, 0.0, 1.0])


def test_phase_sweep_labels():
    rows = mc.phase_sweep(chim(0.7, 0.4), [0.6, 0.7, 0.8], [0.05, 0.4, 0.9])
    assert len(rows) == 9 and all(isinstance(r, SweepRow) for r in rows)
    for r in rows:
        if r.side == "above":
            assert r.label == "CompletelyDetectable"
        elif r.side == "below":
            assert r.label == "Undetectable"
    assert mc.phase_sweep(chim(), [], []) == []


def test_phase_sweep_normal_case_three():
    # sigma0 = sqrt(2): the second-moment integrand loses its quadratic term
    rows = mc.phase_sweep(norm(0.6, 0.1, sigma0=math.sqrt(2)), [0.55, 0.65, 0.8], [0.05, 0.2])
    labels = {(r.beta, r.r): r.label for r in rows}
    assert labels[(0.55, 0.2)] == labels[(0.65, 0.05)] == labels[(0.8, 0.2)] == "CompletelyDetectable"
    assert labels[(0.8, 0.05)] == "Undetectable"


def test_ecdf_and_ks():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(10**5)
    assert mc.ecdf_and_ks(x, special.ndtr) <= 1.36 / math.sqrt(1e5)
    assert mc.ecdf_and_ks(np.full(10, 2.0), lambda t: (t >= 2.0).astype(float)) == 0.0
    with pytest.raises(ValueError):
        mc.ecdf_and_ks(np.array([]), special.ndtr)


def test_hc_null_law_gets_closer():
    dists = []
    for n in (1e2, 1e4):
        vals = mc.simulate_statistic(chim(0.75, 0.5, n), ("hc",), "null", 1000, 2)["hc"]
        a, b = st.hc_normalizers(int(n))
        dists.append(mc.ecdf_and_ks(a * vals - b, st.hc_limit_cdf))
    assert dists[1] < dists[0]
