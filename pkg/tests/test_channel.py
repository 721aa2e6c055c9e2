"""Multipath Rayleigh channel: fading statistics, propagation, noise."""

import numpy as np
import pytest
from scipy import stats

from dcsk_relay import channel


def make_profile(**kw):
    defaults = dict(tap_mean_powers=[1 / 3, 1 / 3, 1 / 3], tap_delays=[0, 2, 5],
                    distance=1.0, path_loss_exponent=3.5)
    defaults.update(kw)
    return channel.ChannelProfile(**defaults)


def test_profile_validation():
    with pytest.raises(ValueError):
        make_profile(tap_mean_powers=[0.5, 0.5])          # length mismatch
    with pytest.raises(ValueError):
        make_profile(tap_mean_powers=[0.0, 0.5, 0.5])     # zero-variance path
    with pytest.raises(ValueError):
        make_profile(tap_delays=[0, 5, 5])                # not strictly increasing
    with pytest.raises(ValueError):
        make_profile(distance=0.0)
    prof = channel.ChannelProfile.equal_power(3, delays=[0, 2, 5])
    assert prof.total_power == pytest.approx(1.0)


def test_single_path_mean_energy():
    rng = np.random.default_rng(1)
    prof = channel.ChannelProfile.equal_power(1, total_power=1.0)
    taps = rng.rayleigh(scale=np.sqrt(prof.tap_mean_powers / 2.0),
                        size=(1_000_000, 1))
    assert np.mean(taps ** 2) == pytest.approx(1.0, rel=0.01)


def test_three_path_profile_total_energy():
    # equal-power three-path profile: mean of sum h^2 is 1
    rng = np.random.default_rng(2)
    prof = make_profile()
    taps = rng.rayleigh(scale=np.sqrt(prof.tap_mean_powers / 2.0),
                        size=(1_000_000, 3))
    assert np.mean(np.sum(taps ** 2, axis=1)) == pytest.approx(1.0, rel=0.01)


def test_draw_realization_matches_convention():
    rng = np.random.default_rng(3)
    prof = make_profile()
    energies = [channel.channel_energy(channel.draw_realization(prof, rng))
                for _ in range(20_000)]
    assert np.mean(energies) == pytest.approx(1.0, rel=0.05)


def test_channel_energy_values():
    prof = make_profile()
    r = channel.ChannelRealization(taps=[1.0, 0.0, 0.0], profile=prof)
    assert channel.channel_energy(r) == pytest.approx(1.0)
    r = channel.ChannelRealization(taps=[0.5, 0.5, 0.5], profile=prof)
    assert channel.channel_energy(r) == pytest.approx(0.75)


def test_sum_square_gains_gamma_distributed():
    # L-path equal power, total Omega: sum h^2 ~ Gamma(L, Omega/L)
    rng = np.random.default_rng(4)
    L, omega_total = 3, 1.0
    taps = rng.rayleigh(scale=np.sqrt(omega_total / L / 2.0), size=(100_000, L))
    s = np.sum(taps ** 2, axis=1)
    result = stats.kstest(s, stats.gamma(a=L, scale=omega_total / L).cdf)
    assert result.pvalue > 0.01


def test_propagate_identity_channel():
    prof = channel.ChannelProfile.equal_power(1, distance=1.0)
    r = channel.ChannelRealization(taps=[1.0], profile=prof)
    x = np.linspace(-1, 1, 64)
    y = channel.propagate(x, r, tx_power=1.0, noise_psd=0.0,
                          rng=np.random.default_rng(0))
    assert np.allclose(y, x)


def test_propagate_pure_noise_variance():
    prof = channel.ChannelProfile.equal_power(1)
    r = channel.ChannelRealization(taps=[1.0], profile=prof)
    n0 = 0.8
    y = channel.propagate(np.zeros(1_000_000), r, tx_power=0.0, noise_psd=n0,
                          rng=np.random.default_rng(5))
    assert np.var(y) == pytest.approx(n0 / 2.0, rel=0.02)


def test_propagate_impulse_response():
    prof = channel.ChannelProfile(tap_mean_powers=[0.5, 0.5], tap_delays=[0, 1],
                                  distance=2.0, path_loss_exponent=2.0)
    r = channel.ChannelRealization(taps=[1.0, 1.0], profile=prof)
    x = np.zeros(16)
    x[0] = 1.0
    y = channel.propagate(x, r, tx_power=1.0, noise_psd=0.0,
                          rng=np.random.default_rng(0))
    amp = np.sqrt(1.0 / prof.path_loss)
    assert y[0] == pytest.approx(amp)
    assert y[1] == pytest.approx(amp)
    assert np.allclose(y[2:], 0.0)


def test_propagate_rejects_delay_beyond_frame():
    prof = channel.ChannelProfile(tap_mean_powers=[1.0], tap_delays=[40])
    r = channel.ChannelRealization(taps=[1.0], profile=prof)
    with pytest.raises(ValueError):
        channel.propagate(np.zeros(16), r, 1.0, 0.0, np.random.default_rng(0))


def test_propagate_warns_on_long_delay_spread():
    prof = channel.ChannelProfile(tap_mean_powers=[0.5, 0.5], tap_delays=[0, 9])
    r = channel.ChannelRealization(taps=[1.0, 1.0], profile=prof)
    with pytest.warns(UserWarning):
        channel.propagate(np.zeros(32), r, 1.0, 0.0, np.random.default_rng(0))


def test_noise_sample_independence():
    prof = channel.ChannelProfile.equal_power(1)
    r = channel.ChannelRealization(taps=[1.0], profile=prof)
    y = channel.propagate(np.zeros(1_000_000), r, 0.0, 1.0,
                          np.random.default_rng(6))
    y = y - y.mean()
    var = np.dot(y, y) / len(y)
    for lag in (1, 2, 5):
        rho = np.dot(y[:-lag], y[lag:]) / len(y) / var
        assert abs(rho) < 0.01
