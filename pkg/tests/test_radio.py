import math

import numpy as np
import pytest

from uavmec import radio
from uavmec.errors import DegenerateGeometry
from uavmec.scenario import Position3, RadioConfig

from conftest import make_scenario

# Frozen from a 30-digit mpmath evaluation of the link formulas.
DIST_100_100_150 = 206.155281280883027
GAIN_150 = 4.44444444444444444e-10
SINR_150 = 44444444.4444444444
RATE_150 = 4572989.96222110041
RELAY_RATE_100_100_150 = 137814984.810287844


def test_distance():
    assert radio.distance(Position3(0, 0, 0), Position3(0, 0, 150)) == 150.0
    assert radio.distance(Position3(100, 100, 150), Position3(0, 0, 0)) == pytest.approx(
        DIST_100_100_150, rel=1e-12
    )
    assert radio.distance(Position3(1, 2, 3), Position3(1, 2, 3)) == 0.0
    assert DIST_100_100_150 == pytest.approx(206.155, abs=5e-4)


def test_channel_gain():
    r = RadioConfig()
    assert radio.channel_gain(r, 1.0) == pytest.approx(1e-5, rel=1e-12)
    assert radio.channel_gain(r, 150.0) == pytest.approx(GAIN_150, rel=1e-12)
    assert GAIN_150 == pytest.approx(4.4444e-10, rel=1e-4)
    with pytest.raises(DegenerateGeometry):
        radio.channel_gain(r, 0.0)


def test_lone_device_sinr_is_snr(micro):
    sinr = radio.sinr_md_uav(micro, np.ones((1, 1)), 0, 0, 0)
    assert sinr == pytest.approx(SINR_150, rel=1e-12)
    assert radio.sinr_matrix(micro, np.ones((1, 1)))[0, 0] == pytest.approx(SINR_150, rel=1e-12)


def _two_cluster(delta_other: float, n0: float = 1e-20):
    # device 1 sits 150 m from UAV 0 (but belongs to UAV 1), device 0 likewise
    s = make_scenario(
        [(0, 0, 0), (0, 0, 300)], [(0, 0, 150), (0, 0, 450)], [[0], [1]],
        radio=RadioConfig(n0_w=n0, num_subchannels=2),
    )
    delta = np.array([[1.0, 0.0], [delta_other, 1.0 - delta_other]])
    return s, delta


def test_equal_power_interferer_gives_unit_sinr():
    s, delta = _two_cluster(1.0, n0=1e-40)
    assert radio.sinr_md_uav(s, delta, 0, 0, 0) == pytest.approx(1.0, rel=1e-15)
    assert radio.sinr_matrix(s, delta)[0, 0] == pytest.approx(1.0, rel=1e-15)


def test_no_cochannel_user_gives_snr():
    s, delta = _two_cluster(0.0)
    assert radio.sinr_md_uav(s, delta, 0, 0, 0) == pytest.approx(SINR_150, rel=1e-12)


def test_same_cluster_devices_do_not_interfere():
    s = make_scenario([(0, 0, 0), (0, 0, 0.5)], [(0, 0, 150)], [[0, 1]])
    delta = np.ones((2, 1))
    assert radio.sinr_md_uav(s, delta, 0, 0, 0) == pytest.approx(SINR_150, rel=1e-12)


def test_vectorised_sinr_matches_loop(default_scenario):
    s = default_scenario
    rng = np.random.default_rng(0)
    delta = rng.dirichlet(np.ones(s.num_subchannels), s.num_devices)
    fast = radio.sinr_matrix(s, delta)
    for u in range(0, s.num_devices, 7):
        for n in range(0, s.num_subchannels, 11):
            slow = radio.sinr_md_uav(s, delta, u, int(s.cluster_of[u]), n)
            assert fast[u, n] == pytest.approx(slow, rel=1e-10)


def test_rate_md_uav():
    r = RadioConfig()
    assert radio.rate_md_uav(r, 1.0) == 180000.0
    assert radio.rate_md_uav(r, 0.0) == 0.0
    assert radio.rate_md_uav(r, SINR_150) == pytest.approx(RATE_150, rel=1e-12)
    assert RATE_150 == pytest.approx(4.573e6, rel=1e-3)


def test_relay_bandwidth():
    assert radio.relay_bandwidth_hz(RadioConfig(), 5) == 4e6


def test_relay_rate():
    s = make_scenario([(0, 0, 0)] * 5, [(100, 100, 150)] * 5, [[i] for i in range(5)])
    assert radio.rate_uav_tbs(s, 0) == pytest.approx(RELAY_RATE_100_100_150, rel=1e-12)
    assert RELAY_RATE_100_100_150 == pytest.approx(1.378e8, rel=1e-3)
    mute = make_scenario([(0, 0, 0)], [(100, 100, 150)], [[0]], relay_power=0.0)
    assert radio.rate_uav_tbs(mute, 0) == 0.0


def test_per_hz_noise_reading():
    r = RadioConfig(n0_w=1e-20, noise_mode="per_hz")
    assert radio.uplink_noise_w(r) == pytest.approx(1e-20 * 180e3)
    assert radio.relay_noise_w(r, 5) == pytest.approx(1e-20 * 4e6)
    assert math.isclose(radio.uplink_noise_w(RadioConfig()), 1e-20)
