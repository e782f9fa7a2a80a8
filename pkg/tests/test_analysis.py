import itertools
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import gammainc

from conftest import N0, eight_relay_scenario, radio_at
from etmrs.analysis import (
    DecodingSubset,
    NetworkScenario,
    Relay,
    conditional_outage,
    empty_set_probability,
    gamma_cdf_int,
    iid_outage_from_terms,
    outage_from_terms,
    solve_stationaries,
    subset_bits,
    subset_probability,
    system_outage,
    system_outage_iid,
)
from etmrs.battery import BatterySpec, RelayEnergyPolicy, StationaryDistribution
from etmrs.channel import NakagamiLink, RadioParams, RayleighLink, Topology, decode_failure_prob
from etmrs.errors import TooManyRelays


# -- hand-built scenarios ----------------------------------------------------------

RADIO = RadioParams(1.0, N0, 1.0)  # v = 3
SPEC = BatterySpec(2e-6, 2, 0.0)  # levels 0, 1, 2; chi at level 1


def _link_with_failure(pf):
    # m = 1: F(x) = 1 - exp(-x / lam); decode fails below N0 v / P
    x = RADIO.N0 * RADIO.v / RADIO.P
    return NakagamiLink(1.0, -x / math.log1p(-pf))


def _hand_scenario(pfs, sigma2=(1.0, 1.0)):
    pol = RelayEnergyPolicy.from_chi_index(SPEC, 1)
    relays = [Relay(_link_with_failure(pf), RayleighLink(2 * s2), pol) for pf, s2 in zip(pfs, sigma2)]
    return NetworkScenario(tuple(relays), RADIO, SPEC)


def _pi(p_if):
    return StationaryDistribution(np.array([1 - p_if, p_if / 2, p_if / 2]))


def test_hand_links():
    for pf in (0.2, 0.4):
        assert decode_failure_prob(_link_with_failure(pf), RADIO) == pytest.approx(pf, rel=1e-12)


def test_empty_set_examples():
    sc = _hand_scenario([0.2, 0.4])
    assert empty_set_probability(sc, [_pi(0.5), _pi(0.5)]) == pytest.approx(0.42, abs=1e-12)
    one = _hand_scenario([1e-300])
    one = NetworkScenario((Relay(NakagamiLink(1.0, 1.0), RayleighLink(1.0), one.relays[0].policy),), RADIO, SPEC)
    assert empty_set_probability(one, [_pi(1.0)]) == pytest.approx(0.0, abs=1e-11)
    assert empty_set_probability(one, [_pi(0.0)]) == 1.0


def test_subset_examples():
    sc = _hand_scenario([0.2, 0.4])
    pis = [_pi(0.5), _pi(0.5)]
    assert subset_probability(sc, pis, [0]) == pytest.approx(0.28, abs=1e-12)
    assert subset_probability(sc, pis, DecodingSubset.of(sc, 0b01)) == pytest.approx(0.28, abs=1e-12)
    assert subset_probability(sc, [_pi(0.0), _pi(0.5)], [0]) == 0.0
    sure = NetworkScenario(
        tuple(Relay(NakagamiLink(1.0, 1.0), RayleighLink(1.0), r.policy) for r in sc.relays), RADIO, SPEC
    )
    assert subset_probability(sure, [_pi(1.0), _pi(1.0)], [0, 1]) == pytest.approx(1.0, abs=1e-11)


def test_decoding_subset():
    sc = _hand_scenario([0.2, 0.4], sigma2=(1e-6, 3e-6))
    sub = DecodingSubset.of(sc, [0, 1])
    assert sub.k == 2 and sub.members == (0, 1) and sub.mask == 0b11
    w = sum(r.policy.beta * r.rd.sigma2 for r in sc.relays)
    assert sub.a == pytest.approx(N0 / (4 * w), rel=1e-15)
    for bad in (0, 0b100, [2]):
        with pytest.raises(ValueError):
            DecodingSubset.of(sc, bad)


def test_conditional_outage_examples():
    sc = _hand_scenario([0.2, 0.4])
    single = DecodingSubset.of(sc, [0])
    av = single.a * RADIO.v
    assert conditional_outage(single, RADIO) == pytest.approx(-math.expm1(-av), rel=1e-13)
    both = DecodingSubset(0b11, 2, 1.0 / RADIO.v)
    assert conditional_outage(both, RADIO) == pytest.approx(1 - 2 * math.exp(-1), rel=1e-13)
    assert conditional_outage(both, RADIO) == pytest.approx(0.26424, abs=5e-6)
    assert conditional_outage(both, RadioParams(1.0, N0, 1e-300)) == pytest.approx(0.0, abs=1e-200)


def test_conditional_outage_decreases_with_forwarding_power():
    vals = [conditional_outage(DecodingSubset(0b111, 3, N0 / (4 * w)), RADIO) for w in np.geomspace(1e-12, 1e-9, 40)]
    assert np.all(np.diff(vals) < 0)


# -- gamma CDF ------------------------------------------------------------------

def test_gamma_cdf_int_examples():
    assert gamma_cdf_int(1, 0.0) == 0.0
    assert gamma_cdf_int(2, 1.0) == pytest.approx(1 - 2 * math.exp(-1), rel=1e-14)
    assert gamma_cdf_int(3, 1e-5) == pytest.approx(1e-15 / 6, rel=1e-10)
    with pytest.raises(ValueError):
        gamma_cdf_int(0, 1.0)
    out = gamma_cdf_int(np.array([1, 2, 5]), np.array([0.5, 7.0, 2.0]))
    np.testing.assert_allclose(out, gammainc([1, 2, 5], [0.5, 7.0, 2.0]), rtol=1e-13)


@settings(max_examples=300, deadline=None)
@given(k=st.integers(1, 20), x=st.floats(1e-8, 200.0))
def test_gamma_cdf_int_matches_mpmath(k, x):
    ref = float(mpmath.gammainc(k, 0, x, regularized=True))
    assert gamma_cdf_int(k, x) == pytest.approx(ref, rel=1e-11, abs=1e-300)


# -- system outage ----------------------------------------------------------------

def test_single_relay_two_terms():
    sc = eight_relay_scenario(32.0, d=[6.0], chi=[3e-6])
    pis = solve_stationaries(sc)
    rep = system_outage(sc, pis)
    p_empty = empty_set_probability(sc, pis)
    p_one = subset_probability(sc, pis, [0])
    av = DecodingSubset.of(sc, [0]).a * sc.radio.v
    assert rep.p_out == pytest.approx(p_empty + p_one * -math.expm1(-av), rel=1e-13)
    assert rep.p_empty == pytest.approx(p_empty, rel=1e-14)


def test_zero_conditional_outage_leaves_empty_set():
    s, e = np.array([0.3, 0.6, 0.1]), np.array([0.7, 0.4, 0.9])
    rep = outage_from_terms(s, e, np.full(3, 1.0), RadioParams(1.0, N0, 1e-300))
    assert rep.p_out == pytest.approx(0.7 * 0.4 * 0.9, rel=1e-12)


def test_subset_bits():
    b = subset_bits(3)
    assert b.shape == (7, 3) and not b.flags.writeable
    np.testing.assert_array_equal(b[4], [True, False, True])  # mask 5
    with pytest.raises(TooManyRelays):
        subset_bits(21)


def test_too_many_relays():
    sc = eight_relay_scenario(30.0, d=[6.0] * 21, chi=[3e-6] * 21)
    with pytest.raises(TooManyRelays):
        system_outage(sc)


@pytest.mark.parametrize("dbm", [24.0, 30.0, 36.0, 42.0])
def test_report_invariants(dbm):
    rep = system_outage(eight_relay_scenario(dbm))
    assert abs(rep.partition_sum - 1) <= 1e-10
    recon = math.fsum([rep.p_empty] + [t.prob * t.cond for t in rep.per_subset])
    assert abs(rep.p_out - recon) <= 1e-12
    assert rep.p_empty <= rep.p_out <= 1
    assert len(rep.per_subset) == 255 and rep.method == "general"


@settings(max_examples=60, deadline=None)
@given(
    n=st.integers(1, 8),
    data=st.data(),
)
def test_partition_random_terms(n, data):
    s = np.array(data.draw(st.lists(st.floats(0, 1), min_size=n, max_size=n)))
    pf_part = np.array(data.draw(st.lists(st.floats(0, 1), min_size=n, max_size=n)))
    e = (1 - s) * pf_part + (1 - s) * (1 - pf_part)  # any split of the complement
    w = np.array(data.draw(st.lists(st.floats(1e-14, 1e-8), min_size=n, max_size=n)))
    rep = outage_from_terms(s, e, w, RADIO)
    assert abs(rep.partition_sum - 1) <= 1e-10
    assert rep.p_empty - 1e-15 <= rep.p_out <= 1


def test_brute_force_subset_loop():
    # independent loop over explicit membership tuples
    s = np.array([0.3, 0.55, 0.8])
    e = 1 - s
    w = np.array([2e-13, 5e-13, 1e-12])
    total = 0.0
    for members in itertools.product([0, 1], repeat=3):
        p = math.prod(s[u] if members[u] else e[u] for u in range(3))
        k = sum(members)
        if k == 0:
            total += p
            continue
        wsum = sum(w[u] for u in range(3) if members[u])
        x = N0 * RADIO.v / (4 * wsum)
        total += p * float(mpmath.gammainc(k, 0, x, regularized=True))
    assert outage_from_terms(s, e, w, RADIO).p_out == pytest.approx(total, rel=1e-12)


def test_outage_nonincreasing_in_power():
    grid = np.arange(14.0, 50.0, 0.5)
    vals = [system_outage(eight_relay_scenario(p, L=50)).p_out for p in grid]
    assert np.all(np.diff(vals) <= 1e-15)
    assert vals[0] > 0.99 and vals[-1] < 1e-3


@pytest.mark.parametrize("n", [1, 2, 4, 7])
def test_iid_matches_general(n):
    spec = BatterySpec(2e-5, 50, 1e-7)
    radio = radio_at(33.0)
    sc = NetworkScenario.from_topology(Topology(20.0, [6.0] * n), radio, spec, 3.2e-6)
    r = sc.relays[0]
    gen = system_outage(sc)
    iid = system_outage_iid(n, r.sr, r.rd, r.policy, radio, spec)
    assert abs(gen.p_out - iid.p_out) <= 1e-12
    assert abs(gen.p_empty - iid.p_empty) <= 1e-12
    assert iid.method == "iid" and len(iid.per_subset) == n


def test_iid_terms_binomial():
    rep = iid_outage_from_terms(3, 0.4, 0.6, 1e-12, RADIO)
    np.testing.assert_allclose([t.prob for t in rep.per_subset], [3 * 0.4 * 0.36, 3 * 0.16 * 0.6, 0.064], rtol=1e-14)
    assert rep.p_empty == pytest.approx(0.216, rel=1e-14)
