import cmath
import math

import numpy as np
import pytest
from scipy import integrate, stats

from raredetect import ShapeFunction, limits as lim, make_stream
from conftest import chim, norm

LOG2 = math.log(2.0)


def test_gaussian_pair():
    p = lim.gaussian_pair(1.0)
    assert p.null.gamma == -0.5 and p.alt.gamma == 0.5
    assert p.null.sigma2 == p.alt.sigma2 == 1.0
    assert lim.uninformative_pair().null.degenerate
    # N(s/2, s) / N(-s/2, s) density ratio is e^x
    x = np.linspace(-3, 3, 10)
    ratio = stats.norm.pdf(x, 0.5, 1) / stats.norm.pdf(x, -0.5, 1)
    assert np.allclose(ratio, np.exp(x), rtol=1e-12)


@pytest.mark.parametrize("shape,var", [(ShapeFunction.constant(), 1.0), (ShapeFunction.linear2x(), 4 / 3),
                                       (ShapeFunction.power_law(0.25), 0.75 ** 2 / 0.5)])
def test_chimeric_boundary_variance(shape, var):
    assert lim.triple_chimeric_boundary(1.0, shape).null.sigma2 == pytest.approx(var, rel=1e-10)


def test_powerlaw_eta_density_and_tail():
    a = 0.5
    eta = lim.powerlaw_eta1(a)
    x = np.geomspace(1e-3, 20, 15)
    assert np.allclose(eta.density(x), 0.5 * np.exp(x) * np.expm1(x) ** -3, rtol=1e-12)
    for a in (0.5, 0.6, 0.8):
        eta = lim.powerlaw_eta1(a)
        for x0 in (0.05, 0.5, 2.0):
            # the tail of eta_1 comes from dM / (e^x - 1) with M(x, inf) = ((e^x - 1)/(1 - a))^(1 - 1/a)
            m_dens = lambda y: -np.gradient([((math.expm1(y + s) / (1 - a)) ** (1 - 1 / a)) for s in (-1e-6, 1e-6)],
                                            2e-6)[0]
            direct = integrate.quad(lambda y: float(eta.density(np.asarray(y))), x0, np.inf, epsabs=0,
                                    epsrel=1e-12)[0]
            assert eta.tail(x0) == pytest.approx(direct, rel=1e-8)
            via_m = integrate.quad(lambda y: m_dens(y) / math.expm1(y), x0, 60, epsabs=0, epsrel=1e-10)[0]
            assert eta.tail(x0) == pytest.approx(via_m, rel=1e-5)
        t = np.geomspace(1e-3, 1e3, 7)
        assert np.allclose(eta.tail(eta.tail_inv(t)), t, rtol=1e-10)
        assert np.isfinite(eta.integrate(np.expm1, 0.01))


def test_powerlaw_half_is_not_levy():
    with pytest.raises(ValueError):
        lim.triple_powerlaw_boundary(0.5)
    with pytest.raises(ValueError):
        lim.levy_tail_check(lim.powerlaw_eta1(0.5))
    assert np.isfinite(lim.levy_tail_check(lim.powerlaw_eta1(0.6)))


def test_tilt_relation():
    for eta in (lim.powerlaw_eta1(0.7), lim.normal_quadratic_eta1(0.9, 1.0)):
        x = np.geomspace(1e-3, 30, 100)
        assert np.allclose(eta.tilt().density(x), np.exp(x) * eta.density(x), rtol=1e-12)
    atom = lim.AtomicMeasure((LOG2,), (1.0,))
    assert atom.tilt().weights[0] == pytest.approx(2.0)


def test_normal_quadratic_constants():
    c1, c2, c3, c4 = lim.normal_quadratic_constants(0.9, 1.0)
    s = math.sqrt(0.1)
    assert c4 == pytest.approx(1 - s, abs=1e-12)
    assert c4 == pytest.approx(0.68377, abs=1e-5)
    assert c2 == pytest.approx((1 - 2 * s) / (1 - s), rel=1e-12)
    assert c2 == pytest.approx(0.5375247, abs=1e-7)
    assert c2 > 0
    eta = lim.normal_quadratic_eta1(0.9, 1.0)
    assert np.isfinite(eta.integrate(lambda x: x * x, 0.0, 1.0))
    with pytest.raises(ValueError):
        lim.normal_quadratic_constants(0.6, 1.0)


def test_beta1_cases():
    assert lim.triple_beta1(ShapeFunction.constant(), 0.5).null.degenerate
    p = lim.triple_beta1(ShapeFunction.constant(), 2.0)
    assert p.null.gamma == -1.0 and p.null.real_prob == 1.0
    assert 1 - p.alt.real_prob == pytest.approx(1 - math.exp(-1), rel=1e-14)
    assert 1 - p.alt.real_prob == pytest.approx(0.63212, abs=1e-5)
    p = lim.triple_beta1(ShapeFunction.constant(), 1.0)
    assert isinstance(p.null.eta, lim.AtomicMeasure)
    assert p.null.eta.points == (LOG2,)
    assert lim.triple_normal_beta1(0.9).null.degenerate
    assert lim.triple_normal_beta1(1.0).alt.real_prob == pytest.approx(0.60653, abs=1e-5)
    assert 1 - lim.triple_normal_beta1(1.5).alt.real_prob == pytest.approx(0.63212, abs=1e-5)


def test_gamma_from_eta():
    zero = lim.ZeroMeasure()
    assert lim.gamma_from_eta(zero, 1.0) == (-0.5, 0.5)
    assert lim.gamma_from_eta(zero, 0.0, 1.0)[0] == -1.0
    atom = lim.AtomicMeasure((LOG2,), (1.0,))
    g1, g2 = lim.gamma_from_eta(atom, 0.0)
    assert g1 == pytest.approx(1 - 2 + LOG2 / (1 + LOG2 ** 2), rel=1e-14)
    assert g1 == pytest.approx(-0.531801, abs=1e-6)
    assert g2 == pytest.approx(g1 + LOG2 / (1 + LOG2 ** 2), rel=1e-14)


def test_cf_examples():
    g = lim.LevyTriple(0.0, 1.0)
    assert lim.cf_eval(g, 1.0) == pytest.approx(math.exp(-0.5))
    assert lim.cf_eval(g, 0.0) == 1.0
    at = lim.LevyTriple(0.0, 0.0, lim.AtomicMeasure((LOG2,), (1.0,)))
    ref = cmath.exp(cmath.exp(1j * LOG2) - 1 - 1j * LOG2 / (1 + LOG2 ** 2))
    assert lim.cf_eval(at, 1.0) == pytest.approx(ref, abs=1e-14)


def test_cf_density_against_quadrature():
    pair = lim.triple_powerlaw_boundary(0.7)
    tr = pair.null
    eta = tr.eta
    for t in (0.5, 2.0):
        f = lambda x: (math.cos(t * x) - 1) * float(eta.density(np.asarray(x)))
        g = lambda x: (math.sin(t * x) - t * x / (1 + x * x)) * float(eta.density(np.asarray(x)))
        re = integrate.quad(f, 0, 1, limit=400)[0] + integrate.quad(f, 1, 60, limit=400)[0]
        im = integrate.quad(g, 0, 1, limit=400)[0] + integrate.quad(g, 1, 60, limit=400)[0]
        ref = cmath.exp(complex(re, tr.gamma * t + im))
        assert lim.cf_eval(tr, t) == pytest.approx(ref, abs=1e-6)


def test_sample_gaussian_pair():
    d = lim.sample_limit(lim.gaussian_pair(1.0), "null", make_stream(1), 10**6)
    assert d.finite().mean() == pytest.approx(-0.5, abs=0.01)
    assert d.finite().var() == pytest.approx(1.0, abs=0.01)


def test_sample_beta1_infinity():
    d = lim.sample_limit(lim.triple_beta1(ShapeFunction.constant(), 2.0), "alt", make_stream(2), 10**5)
    assert d.frac_pos_inf == pytest.approx(1 - math.exp(-1), abs=0.005)
    assert np.all(np.isnan(d.values[d.sign != 0]))
    assert np.allclose(d.finite(), -1.0)


@pytest.mark.parametrize("pair", [lim.triple_powerlaw_boundary(0.7), lim.triple_normal_quadratic(0.9, 1.0),
                                  lim.triple_beta1(ShapeFunction.constant(), 1.0),
                                  lim.triple_beta1(ShapeFunction.linear2x(), 1.0)])
def test_sampler_matches_cf(pair):
    for side in ("null", "alt"):
        d = lim.sample_limit(pair, side, make_stream(3, side == "alt"), 2 * 10**5)
        for t in (0.25, 1.0, 4.0):
            assert abs(d.empirical_cf(t) - lim.cf_side(pair, side, t)) <= 0.01


@pytest.mark.parametrize("pair", [lim.gaussian_pair(1.3), lim.triple_beta1(ShapeFunction.linear2x(), 1.0),
                                  lim.triple_beta1(ShapeFunction.constant(), 1.0)])
def test_contiguity_relation(pair):
    d = lim.sample_limit(pair, "null", make_stream(4), 10**6)
    assert np.mean(np.exp(d.finite())) == pytest.approx(pair.alt.real_prob, abs=0.01)


@pytest.mark.parametrize("pair", [lim.triple_powerlaw_boundary(0.7), lim.triple_normal_quadratic(0.9, 1.0),
                                  lim.triple_beta1(ShapeFunction.linear2x(), 1.0)])
def test_contiguity_exponent(pair):
    # log E e^xi = gamma + sigma2/2 + int (e^x - 1 - x/(1+x^2)) d eta must vanish; the MC version
    # is useless here because e^xi has infinite variance for these heavy-tailed measures
    tr = pair.null
    j = tr.eta.integrate(lambda x: lim._expm1_minus_id(x) + x ** 3 / (1 + x * x))
    assert tr.gamma + 0.5 * tr.sigma2 + j == pytest.approx(0.0, abs=1e-8)


def test_beta1_shape_law():
    # null limit at beta = r = 1 is -1 + sum_{k <= N} log(h(U_k) + 1) with N ~ Poisson(1)
    shape = ShapeFunction.linear2x()
    pair = lim.triple_beta1(shape, 1.0)
    d = lim.sample_limit(pair, "null", make_stream(5), 10**5).finite()
    rng = make_stream(6)
    counts = rng.poisson(1.0, 10**5)
    jumps = np.log(shape(rng.random(int(counts.sum()))) + 1.0)
    direct = -1.0 + np.bincount(np.repeat(np.arange(counts.size), counts), weights=jumps, minlength=counts.size)
    assert stats.ks_2samp(d, direct).statistic <= 0.01


def test_lebesgue_shift():
    p = lim.gaussian_pair(1.0)
    assert lim.lebesgue_shift(p, 0.0) is p
    s = lim.lebesgue_shift(lim.uninformative_pair(), 1.0)
    ref = lim.triple_beta1(ShapeFunction.constant(), 2.0)
    assert s.null.gamma == ref.null.gamma and s.alt.mass_at_inf == ref.alt.mass_at_inf
    full = lim.lebesgue_shift(p, np.inf)
    assert full.alt.real_prob == 0.0 and full.null.gamma == -np.inf
    with pytest.raises(ValueError):
        lim.lebesgue_shift(p, -1.0)


def test_truncate_model():
    m = chim(0.75, 0.5, 1e4)
    assert lim.truncate_model(m, 10.0).truncation == 10.0
    with pytest.raises(ValueError):
        lim.truncate_model(m, 0.0)


def test_limit_pair_dispatch():
    assert lim.limit_pair(chim(0.75, 0.5)).null.sigma2 == pytest.approx(1.0)
    assert lim.limit_pair(norm(0.9, (1 - math.sqrt(0.1)) ** 2, sigma0=1.0)).null.eta is not None
    with pytest.raises(ValueError):
        lim.limit_pair(chim(0.75, 0.3))


def test_cutoff_bounds():
    eta = lim.powerlaw_eta1(0.7)
    d = lim.choose_cutoff(eta)
    assert 1e-4 <= d <= 0.05
    assert eta.tail(d) <= 256.0 * (1 + 1e-9)
