import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from etmrs.channel import (
    NakagamiLink,
    RadioParams,
    RayleighLink,
    Topology,
    dbm_to_watts,
    decode_failure_prob,
    nakagami_cdf,
    nakagami_pdf,
    nakagami_power_sample,
    nakagami_sf,
    path_loss_gain,
    rayleigh_amplitude_sample,
    watts_to_dbm,
)


def test_cdf_examples():
    assert nakagami_cdf(NakagamiLink(2, 1.0), 0.0) == 0.0
    assert nakagami_cdf(NakagamiLink(1, 2.0), 2.0) == pytest.approx(1 - math.exp(-1), rel=1e-14)
    assert nakagami_cdf(NakagamiLink(2, 1.0), 1.0) == pytest.approx(1 - 3 * math.exp(-2), rel=1e-14)
    assert nakagami_cdf(NakagamiLink(2, 1.0), 1.0) == pytest.approx(0.59399, abs=5e-6)


@settings(max_examples=200, deadline=None)
@given(
    m=st.floats(0.5, 8.0),
    lam=st.floats(1e-8, 1e-2),
    t=st.floats(1e-6, 30.0),
)
def test_cdf_matches_mpmath(m, lam, t):
    link = NakagamiLink(m, lam)
    x = t * lam
    ref = mpmath.gammainc(mpmath.mpf(m), 0, mpmath.mpf(m) * t, regularized=True)
    assert nakagami_cdf(link, x) == pytest.approx(float(ref), rel=1e-12, abs=1e-300)
    assert nakagami_sf(link, x) == pytest.approx(float(1 - ref), rel=1e-9, abs=1e-15)


def test_cdf_monotone_and_bounded():
    link = NakagamiLink(2.0, 3e-6)
    x = np.concatenate([[0.0], np.geomspace(1e-14, 1e-3, 2000), [np.inf]])
    F = nakagami_cdf(link, x)
    assert np.all(np.diff(F) >= 0)
    assert F[0] == 0.0 and F[-1] == 1.0


@pytest.mark.parametrize("m", [0.5, 1.0, 2.0, 3.7])
def test_pdf_is_cdf_derivative(m):
    link = NakagamiLink(m, 2.5e-6)
    x = np.linspace(0.2, 4.0, 25) * link.lam
    h = 1e-5 * link.lam
    fd = (nakagami_cdf(link, x + h) - nakagami_cdf(link, x - h)) / (2 * h)
    np.testing.assert_allclose(fd, nakagami_pdf(link, x), rtol=1e-6)


def test_path_loss_examples():
    assert path_loss_gain(20, 3) == pytest.approx(1e-3 / 8001, rel=1e-15)
    assert path_loss_gain(20, 3) == pytest.approx(1.2499e-7, rel=1e-4)
    assert path_loss_gain(5, 3) == pytest.approx(7.9365e-6, rel=1e-4)
    assert path_loss_gain(1e-9, 3) == pytest.approx(1e-3, rel=1e-12)


def test_path_loss_monotone():
    d = np.linspace(1.01, 19.9, 200)
    g = [path_loss_gain(x, 3) for x in d]
    assert np.all(np.diff(g) < 0)
    assert all(path_loss_gain(4.0, w) > path_loss_gain(4.0, w + 0.5) for w in (2, 2.5, 3, 3.5, 4, 4.5))


def test_rayleigh_sampler_moments(rng):
    g = rayleigh_amplitude_sample(RayleighLink(1.0), rng, 1_000_000)
    assert np.mean(g**2) == pytest.approx(1.0, abs=0.01)
    g4 = rayleigh_amplitude_sample(RayleighLink(4.0), rng, 1_000_000)
    assert math.sqrt(np.mean(g4**2) / np.mean(g**2)) == pytest.approx(2.0, abs=0.02)


def test_samplers_deterministic():
    a = nakagami_power_sample(NakagamiLink(2, 1.0), np.random.default_rng(5), 100)
    b = nakagami_power_sample(NakagamiLink(2, 1.0), np.random.default_rng(5), 100)
    assert np.array_equal(a, b)
    c = rayleigh_amplitude_sample(RayleighLink(1.0), np.random.default_rng(5), 100)
    d = rayleigh_amplitude_sample(RayleighLink(1.0), np.random.default_rng(5), 100)
    assert np.array_equal(c, d)


def test_nakagami_sampler(rng):
    link = NakagamiLink(2, 1.0)
    h = nakagami_power_sample(link, rng, 1_000_000)
    assert np.mean(h) == pytest.approx(1.0, abs=0.01)
    assert np.mean(h <= 1.0) == pytest.approx(0.594, abs=0.005)
    assert nakagami_power_sample(NakagamiLink(0.5, 1.0), rng, 10).shape == (10,)


def test_samplers_ks(rng):
    link = NakagamiLink(2.0, 3e-6)
    h = nakagami_power_sample(link, rng, 1_000_000)
    assert stats.kstest(h, lambda x: nakagami_cdf(link, x)).statistic < 0.002
    rl = RayleighLink(2e-7)
    g = rayleigh_amplitude_sample(rl, rng, 1_000_000)
    # |g|^2 is exponential with mean lambda
    assert stats.kstest(g**2, lambda x: 1 - np.exp(-x / rl.lam)).statistic < 0.002


def test_link_validation():
    with pytest.raises(ValueError):
        NakagamiLink(0.4, 1.0)
    with pytest.raises(ValueError):
        NakagamiLink(2, 0.0)
    with pytest.raises(ValueError):
        RayleighLink(-1.0)
    assert NakagamiLink(3.0, 1.5).b == 2.0
    assert RayleighLink(3.0).sigma2 == 1.5


def test_radio_params():
    r = RadioParams(1.0, 1e-12, 1.0)
    assert r.v == 3.0
    assert RadioParams(1.0, 1e-12, 0.5).v == 1.0
    for bad in [dict(P=-1.0), dict(N0=0.0), dict(kappa=0.0), dict(eta=1.0), dict(eta=0.0)]:
        kw = dict(P=1.0, N0=1e-12, kappa=1.0, eta=0.5) | bad
        with pytest.raises(ValueError):
            RadioParams(**kw)


def test_topology():
    t = Topology(20, [5, 7])
    (sr, rd), _ = t.links()
    assert sr.lam == path_loss_gain(5, 3) and rd.lam == path_loss_gain(15, 3) and sr.m == 2
    for bad in ([0.0], [20.0], [25.0], []):
        with pytest.raises(ValueError):
            Topology(20, bad)
    with pytest.raises(ValueError):
        Topology(20, [5], omega=6)


def test_decode_failure():
    link = NakagamiLink(2, 7.94e-6)
    tiny = decode_failure_prob(link, RadioParams(1.0, 1e-12, 1.0))
    assert tiny == pytest.approx(nakagami_cdf(link, 3e-12), rel=1e-14)
    assert tiny < 1e-10
    assert decode_failure_prob(link, RadioParams(1e12, 1e-12, 1.0)) < 1e-30
    assert decode_failure_prob(link, RadioParams(1.0, 1e-12, 1e-9)) < 1e-20
    assert decode_failure_prob(link, RadioParams(0.0, 1e-12, 1.0)) == 1.0


def test_decode_failure_vs_mc(rng):
    link = NakagamiLink(2, 7.94e-6)
    radio = RadioParams(dbm_to_watts(-5), 1e-12, 1.0)
    h = nakagami_power_sample(link, rng, 1_000_000)
    p = decode_failure_prob(link, radio)
    emp = np.mean(0.5 * np.log2(1 + radio.P * h / radio.N0) < radio.kappa)
    assert abs(emp - p) <= 3 * math.sqrt(p * (1 - p) / h.size)


def test_dbm_roundtrip():
    assert dbm_to_watts(30) == pytest.approx(1.0)
    assert dbm_to_watts(-90) == pytest.approx(1e-12)
    assert watts_to_dbm(dbm_to_watts(17.3)) == pytest.approx(17.3)
