import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mmwshare import geometry, radio, units
from mmwshare.radio import BS_PATTERN, UE_PATTERN, ChannelParams, LinkClass, RateModel

CH = ChannelParams.load()
TORUS = geometry.Region()


def test_unit_round_trips():
    assert units.db_to_linear(20.0) == pytest.approx(100.0)
    assert units.linear_to_db(0.1) == pytest.approx(-10.0)
    assert units.dbm_to_watts(30.0) == pytest.approx(1.0)
    assert units.watts_to_dbm(1e-3) == pytest.approx(0.0)


def test_antenna_gain_examples():
    assert radio.antenna_gain(BS_PATTERN, 0.0) == pytest.approx(100.0)
    assert radio.antenna_gain(BS_PATTERN, 90.0) == pytest.approx(0.1)
    assert radio.antenna_gain(BS_PATTERN, 2.5) == pytest.approx(100.0)
    assert radio.antenna_gain(BS_PATTERN, 2.6) == pytest.approx(0.1)
    assert radio.antenna_gain(UE_PATTERN, 15.0) == pytest.approx(10.0)


@given(st.floats(-180, 180))
def test_antenna_gain_symmetric(phi):
    assert radio.antenna_gain(UE_PATTERN, phi) == radio.antenna_gain(UE_PATTERN, -phi)


def test_antenna_pattern_validation():
    with pytest.raises(ValueError):
        radio.AntennaPattern(0.0, 0.0, 10.0)
    with pytest.raises(ValueError):
        radio.AntennaPattern(10.0, 0.0, 360.0)


def test_bundled_channel_values():
    # 73 GHz NYC measurement fit
    assert (CH.los.intercept_db, CH.los.exponent, CH.los.shadowing_db) == (69.8, 2.0, 5.8)
    assert (CH.nlos.intercept_db, CH.nlos.exponent, CH.nlos.shadowing_db) == (86.6, 2.45, 8.0)
    assert (CH.outage_decay_m, CH.outage_offset, CH.los_decay_m) == (30.0, 5.2, 67.1)
    assert ChannelParams.from_dict(CH.to_dict()) == CH


def test_state_probability_limits():
    p_los, p_nlos, p_out = CH.state_probabilities(np.array([1e-3, 50.0, 200.0, 1e4]))
    assert np.allclose(p_los + p_nlos + p_out, 1.0)
    assert p_out[0] == 0.0 and p_los[0] == pytest.approx(1.0, abs=1e-4)
    assert p_out[-1] == pytest.approx(1.0)
    assert np.all((p_los >= 0) & (p_nlos >= 0) & (p_out >= 0))


def test_link_state_frequencies_match_probabilities():
    d = np.full(100_000, 150.0)
    cls, _, gain = radio.draw_link_states(d, CH, np.random.default_rng(0))
    probs = CH.state_probabilities(150.0)
    for k, p in zip((LinkClass.LOS, LinkClass.NLOS, LinkClass.OUTAGE), probs):
        freq = np.mean(cls == k)
        assert abs(freq - p) < 3 * math.sqrt(p * (1 - p) / d.size) + 1e-12
    assert np.all((gain == 0) == (cls == LinkClass.OUTAGE))


def test_link_gain_matches_path_loss_and_shadowing():
    cls, shadow, gain = radio.draw_link_states(np.full(1000, 80.0), CH, np.random.default_rng(1))
    for c, pl in ((LinkClass.LOS, CH.los), (LinkClass.NLOS, CH.nlos)):
        m = cls == c
        expect = 10 ** (-(pl.path_loss_db(80.0) + shadow[m]) / 10)
        assert np.allclose(gain[m], expect)
    nl = shadow[cls == LinkClass.NLOS]
    assert nl.std() == pytest.approx(8.0, rel=0.15)


def test_link_draw_consumes_fixed_randomness():
    a = np.random.default_rng(7)
    radio.draw_link_states(np.array([10.0, 500.0, 1e4]), CH, a)
    b = np.random.default_rng(7)
    b.random(3)
    b.standard_normal(3)
    assert a.random() == b.random()


def test_link_distance_must_be_positive():
    with pytest.raises(ValueError):
        radio.draw_link_state(0.0, CH, np.random.default_rng(0))


def test_mean_gain_monotone_in_distance_and_exponent():
    d = np.linspace(1, 500, 50)
    pl = radio.PathLossParams(70.0, 2.0, 0.0)
    steeper = radio.PathLossParams(70.0, 3.0, 0.0)
    g = 10 ** (-pl.path_loss_db(d) / 10)
    assert np.all(np.diff(g) <= 0)
    assert np.all(10 ** (-steeper.path_loss_db(d) / 10) <= g)


def test_fading_unit_mean_exponential():
    f = radio.fading_sample(np.random.default_rng(0), 1_000_000)
    assert f.min() >= 0
    assert abs(f.mean() - 1.0) < 0.01
    assert abs(np.mean(f > 1.0) - math.exp(-1)) < 0.005


def test_noise_power_examples():
    m = RateModel()
    assert radio.noise_power(m, 0.0) == 0.0
    n = radio.noise_power(m, 1e9)
    # -174 dBm/Hz + 90 dB(Hz) + 7 dB
    assert units.watts_to_dbm(n) == pytest.approx(-77.0, abs=1e-9)
    assert n == pytest.approx(1.99526e-11, rel=1e-5)
    assert radio.noise_power(m, 2e9) == pytest.approx(2 * n)


def test_rate_hand_value():
    r = radio.rate(RateModel(), 1e9, 10.0)
    assert r == pytest.approx(0.8e9 * math.log2(6.0), rel=1e-12)
    assert f"{r:.5e}" == "2.06797e+09"
    assert radio.rate(RateModel(), 1e9, 0.0) == 0.0
    assert radio.rate(RateModel(), 0.0, 10.0) == 0.0


def test_rate_model_validation():
    with pytest.raises(ValueError):
        RateModel(alpha=1.0)
    with pytest.raises(ValueError):
        RateModel(beta=0.0)


def test_rate_monotone_and_saturating_in_bandwidth():
    m = RateModel()
    s = np.linspace(0, 100, 101)
    assert np.all(np.diff(radio.rate(m, 1e9, s)) >= 0)
    # fixed received power: SNR falls as 1/W
    W = np.linspace(1e7, 5e9, 400)
    r = radio.rate(m, W, 1e-10 / radio.noise_power(m, W))
    assert np.all(np.diff(r) >= 0)
    assert np.all(np.diff(r, 2) <= 1e-3)


def _tx(bs, target, victim, h=1e-9, fade=1.0):
    return radio.Transmission(bs, target, h, fade)


def test_interference_examples():
    victim, serving = (500.0, 500.0), (400.0, 500.0)
    assert radio.interference_power(victim, serving, [], TORUS) == 0.0
    # interferer sits on the victim's boresight and beams straight at it
    aligned = _tx((450.0, 500.0), (700.0, 500.0), victim)
    got = radio.interference_power(victim, serving, [aligned], TORUS)
    assert got == pytest.approx(BS_PATTERN.main * UE_PATTERN.main * 1e-9)
    # interferer behind the victim, beaming away from it
    away = _tx((600.0, 500.0), (700.0, 500.0), victim)
    got = radio.interference_power(victim, serving, [away], TORUS)
    assert got == pytest.approx(BS_PATTERN.back * UE_PATTERN.back * 1e-9)


def test_interference_additive():
    rng = np.random.default_rng(3)
    victim, serving = (500.0, 500.0), (520.0, 480.0)
    txs = [_tx(tuple(rng.uniform(0, 1000, 2)), tuple(rng.uniform(0, 1000, 2)), victim,
               rng.uniform(1e-12, 1e-9), rng.exponential()) for _ in range(8)]
    whole = radio.interference_power(victim, serving, txs, TORUS)
    parts = (radio.interference_power(victim, serving, txs[:3], TORUS)
             + radio.interference_power(victim, serving, txs[3:], TORUS))
    assert whole == pytest.approx(parts)
