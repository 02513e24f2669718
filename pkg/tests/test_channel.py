import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hocsim.channel import (
    ChannelRealization,
    ImpulseResponse,
    apply_freq_channel,
    apply_time_channel,
    calibrate_noise,
    complex_normal,
    draw_rayleigh,
)
from hocsim.ofdm import OfdmConfig, ofdm_demodulate, ofdm_modulate, random_frames


def test_rayleigh_statistics():
    g = draw_rayleigh(200_000, np.random.default_rng(0))
    assert np.mean(np.abs(g) ** 2) == pytest.approx(1.0, rel=0.01)
    assert abs(np.mean(g)) < 0.01
    assert abs(np.mean(g * g)) < 0.01  # circular
    # |h|^2 is Exp(1)
    assert np.mean(np.abs(g) ** 2 < 0.5) == pytest.approx(1 - np.exp(-0.5), abs=0.005)


def test_rayleigh_rejects_empty():
    with pytest.raises(ValueError):
        draw_rayleigh(0, np.random.default_rng(0))


def test_gains_are_read_only():
    ch = ChannelRealization(np.ones(3))
    with pytest.raises(ValueError):
        ch.gains[0] = 2
    with pytest.raises(ValueError):
        ChannelRealization(np.ones(3), noise_var=-1)


class TestNoise:
    def test_calibration_formula(self):
        # 64-QAM, 6 bits/symbol, 10 dB: N0 = P / (6 * 10)
        assert calibrate_noise(10.0, 0.3, 64) == pytest.approx(0.3 / 60)
        assert calibrate_noise(0.0, 1.0, 4) == pytest.approx(0.5)

    def test_measured_ebn0(self):
        rng = np.random.default_rng(1)
        ch = ChannelRealization(np.ones(6), calibrate_noise(14.0, 1.0, 16))
        Y = np.exp(2j * np.pi * rng.random((20000, 6)))
        w = apply_freq_channel(Y, ch, rng) - Y
        ebn0 = 1.0 / 4 / np.mean(np.abs(w) ** 2)
        assert 10 * np.log10(ebn0) == pytest.approx(14.0, abs=0.05)

    def test_noiseless_is_exact(self):
        g = np.array([1 + 1j, 0.5, -2j])
        Y = np.arange(6).reshape(2, 3) + 0j
        np.testing.assert_array_equal(apply_freq_channel(Y, ChannelRealization(g)), Y * g)

    def test_requires_rng(self):
        with pytest.raises(ValueError):
            apply_freq_channel(np.ones(3), ChannelRealization(np.ones(3), 0.1))
        with pytest.raises(ValueError):
            apply_freq_channel(np.ones(4), ChannelRealization(np.ones(3)))

    def test_rejects(self):
        with pytest.raises(ValueError):
            calibrate_noise(10, 0.0, 64)
        with pytest.raises(ValueError):
            calibrate_noise(10, 1.0, 8)

    def test_complex_normal_variance(self):
        z = complex_normal(np.random.default_rng(2), 100_000, 0.25)
        assert np.var(z.real) == pytest.approx(0.125, rel=0.02)
        assert np.var(z.imag) == pytest.approx(0.125, rel=0.02)


class TestTimeChannel:
    @settings(max_examples=40, deadline=None)
    @given(n_taps=st.integers(1, 17), seed=st.integers(0, 2**31))
    def test_matches_frequency_multiplication(self, n_taps, seed):
        cfg = OfdmConfig()
        rng = np.random.default_rng(seed)
        h = ImpulseResponse(complex_normal(rng, n_taps))
        d = random_frames(cfg, 3, rng).data
        r_time = ofdm_demodulate(apply_time_channel(ofdm_modulate(d, cfg), h, cfg.n_cp), cfg)
        r_freq = d * h.frequency_response(cfg.used_indices, cfg.n_fft)
        assert np.max(np.abs(r_time - r_freq)) < 1e-10

    def test_single_tap_is_flat(self):
        h = ImpulseResponse([0.5j])
        np.testing.assert_allclose(h.frequency_response((-3, 0, 7), 64), 0.5j)

    def test_delay_oracle(self):
        # one-sample delay: direct DFT of a shifted impulse
        h = ImpulseResponse([0, 1])
        k = np.array([-2, 1, 5])
        np.testing.assert_allclose(h.frequency_response(k, 16), np.exp(-2j * np.pi * k / 16))

    def test_too_long(self):
        with pytest.raises(ValueError):
            apply_time_channel(np.ones(80), ImpulseResponse(np.ones(18)), 16)
