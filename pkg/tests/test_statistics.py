import math

import numpy as np
import pytest
from scipy import integrate, optimize

from raredetect import make_stream, sample_null, statistics as st
from raredetect.acceptance import hc_grid_oracle
from conftest import chim, norm


def test_hc_single_pvalue():
    v = st.hc_statistic([0.5])
    assert v.raw == pytest.approx(1.0)
    assert math.isnan(v.normalized)


def test_hc_equispaced_grid_oracle():
    p = np.arange(1, 10) / 10.0
    assert st.hc_statistic(p).raw == pytest.approx(hc_grid_oracle(p), abs=1e-4)


def test_hc_random_grid_oracle():
    worst = 0.0
    for seed in range(100):
        p = make_stream(seed).random(1000)
        worst = max(worst, abs(st.hc_statistic(p).raw - hc_grid_oracle(p)))
    assert worst <= 1e-6


def test_hc_permutation_invariant(rng):
    p = rng.random(500)
    a = st.hc_statistic(p)
    b = st.hc_statistic(rng.permutation(p))
    assert a == b


def test_hc_errors():
    with pytest.raises(ValueError):
        st.hc_statistic([])
    with pytest.raises(ValueError):
        st.hc_statistic([0.2, 1.0])
    with pytest.raises(ValueError):
        st.hc_statistic([0.0, 0.3])


def test_hc_max_t(rng):
    p = rng.random(200)
    full = st.hc_statistic(p)
    part = st.hc_statistic(p, max_t=0.5)
    assert part.raw <= full.raw and part.argmax_t < 0.5


def test_normalizers():
    a, b = st.hc_normalizers(10**4)
    ll = math.log(math.log(1e4))
    assert a == pytest.approx(math.sqrt(2 * ll), rel=1e-15)
    assert a == pytest.approx(2.10735, abs=1e-4)
    # b recomputed stepwise: 2 ll + log(ll) / 2 - log(pi) / 2
    assert b == pytest.approx(2 * ll + 0.5 * math.log(ll) - 0.5 * math.log(math.pi), rel=1e-15)
    assert b == pytest.approx(4.26712, abs=1e-5)
    assert st.hc_normalizers(16)[0] == pytest.approx(1.4282, abs=1e-4)
    with pytest.raises(ValueError):
        st.hc_normalizers(15)


def test_limit_quantile_against_root_finder():
    x = st.hc_limit_quantile(0.95)
    assert x == pytest.approx(3.6633, abs=1e-4)
    root = optimize.brentq(lambda z: st.hc_limit_cdf(z) - 0.95, 0, 20, xtol=1e-14)
    assert x == pytest.approx(root, abs=1e-10)
    for alpha in (0.01, 0.05, 0.1):
        assert st.hc_limit_cdf(st.hc_limit_quantile(1 - alpha)) == pytest.approx(1 - alpha, abs=1e-12)


def test_asymptotic_critical():
    assert st.hc_asymptotic_critical(10**4, 0.05) == pytest.approx(3.7634, abs=1e-3)
    with pytest.raises(ValueError):
        st.hc_asymptotic_critical(10**4, 1.0)


def test_llr_examples():
    m = chim(0.75, 0.5, 100, eps=1e-3, kappa=0.1)
    v = st.llr_statistic(m, [0.05, 0.5])
    assert v.value == pytest.approx(math.log(1.009) + math.log(0.999), rel=1e-14)
    assert v.n_terms == 2
    y = np.random.default_rng(1).random(50)
    assert st.llr_statistic(m.with_(eps=0.0), y).value == 0.0


def test_zn_examples():
    m = chim(0.75, 0.5, 100, eps=1e-3, kappa=0.1)
    assert st.zn_statistic(m, [0.5]) == pytest.approx(-1e-3)
    assert st.zn_statistic(m.with_(eps=0.0), [0.5]) == 0.0


def test_compensated_sum(rng):
    x = np.log1p(1e-4 * (rng.random(10**6) * 3 - 1))
    assert st.compensated_sum(x) == pytest.approx(math.fsum(x), rel=1e-14)
    assert st.compensated_sum(x[:10]) == math.fsum(x[:10])


def test_zn_null_variance_on_boundary():
    m = chim(0.75, 0.5, 1e6)
    vals = [st.zn_statistic(m, sample_null(m, m.size, make_stream(3, i))) for i in range(300)]
    assert np.var(vals, ddof=1) == pytest.approx(1.0, abs=0.2)


def _normal_null_mean(n, r):
    eps, th = 1.0 / n, math.sqrt(2 * r * math.log(n))

    def f(y):
        return math.log1p(eps * math.expm1(th * y - th * th / 2)) * math.exp(-y * y / 2) / math.sqrt(2 * math.pi)
    return n * integrate.quad(f, -40, 40, points=[0, th / 2, th], limit=500, epsabs=0, epsrel=1e-12)[0]


def test_llr_normal_beta1_null_mean():
    # the limit is -1, approached logarithmically: at n = 1e6 the exact mean is about -0.81
    m = norm(1.0, 1.5, 1e6)
    vals = [st.llr_statistic(m, sample_null(m, m.size, make_stream(4, i))).value for i in range(40)]
    exact = _normal_null_mean(1e6, 1.5)
    assert exact == pytest.approx(-0.809, abs=1e-3)
    assert np.mean(vals) == pytest.approx(exact, abs=0.05)
    assert _normal_null_mean(1e12, 1.5) < _normal_null_mean(1e9, 1.5) < exact
