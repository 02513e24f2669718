"""Per-subcarrier Rayleigh fading, AWGN calibrated to Eb/N0, and a multipath path."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ChannelRealization:
    """Frequency-domain channel seen by the used subcarriers.

    ``gains`` stays fixed for every frame of an instance; noise is redrawn per frame.
    """

    gains: np.ndarray
    noise_var: float = 0.0

    def __post_init__(self):
        g = np.asarray(self.gains, dtype=complex)
        g.setflags(write=False)
        object.__setattr__(self, "gains", g)
        if self.noise_var < 0:
            raise ValueError("noise_var must be non-negative")


@dataclass(frozen=True)
class ImpulseResponse:
    taps: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "taps", np.atleast_1d(np.asarray(self.taps, dtype=complex)))

    def frequency_response(self, used_indices, n_fft: int) -> np.ndarray:
        """``H_k = sum_l h_l exp(-j 2 pi l I_k / N)``."""
        l = np.arange(len(self.taps))
        I = np.asarray(used_indices)
        return np.exp(-2j * np.pi * np.outer(I, l) / n_fft) @ self.taps


def complex_normal(rng: np.random.Generator, size, var: float = 1.0) -> np.ndarray:
    return np.sqrt(var / 2.0) * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def draw_rayleigh(n_u: int, rng: np.random.Generator) -> np.ndarray:
    """i.i.d. CN(0, 1) gains, one per used subcarrier."""
    if n_u < 1:
        raise ValueError("n_u must be >= 1")
    return complex_normal(rng, n_u)


def calibrate_noise(ebn0_db: float, signal_power_per_used_sc: float, mod_order: int) -> float:
    """Per-subcarrier noise variance for the requested Eb/N0.

    Energy per bit is the mean received power per used subcarrier divided by
    ``log2(M)``; the cyclic prefix is not charged.
    """
    if signal_power_per_used_sc <= 0:
        raise ValueError("signal power must be positive")
    if mod_order not in (4, 16, 64):
        raise ValueError(f"unsupported modulation order {mod_order}")
    return signal_power_per_used_sc / (np.log2(mod_order) * 10.0 ** (ebn0_db / 10.0))


def apply_freq_channel(Y, ch: ChannelRealization, rng: np.random.Generator | None = None) -> np.ndarray:
    """``r_k = h_k Y_k + w_k`` for every frame in ``Y`` (shape ``(..., N_U)``)."""
    Y = np.asarray(Y)
    if Y.shape[-1] != ch.gains.shape[-1]:
        raise ValueError(f"Y has {Y.shape[-1]} subcarriers, channel has {ch.gains.shape[-1]}")
    r = Y * ch.gains
    if ch.noise_var > 0:
        if rng is None:
            raise ValueError("an rng is required when noise_var > 0")
        r = r + complex_normal(rng, Y.shape, ch.noise_var)
    return r


def apply_time_channel(y, h: ImpulseResponse, n_cp: int) -> np.ndarray:
    """Linear convolution of each frame with the taps, truncated to the frame length.

    Spill into the next frame is dropped; taps up to ``n_cp + 1`` long only
    touch the prefix of the following frame, which the receiver discards.
    """
    taps = h.taps
    if len(taps) > n_cp + 1:
        raise ValueError(f"{len(taps)} taps exceed cyclic prefix {n_cp} + 1")
    y = np.asarray(y, dtype=complex)
    n = y.shape[-1]
    out = np.zeros_like(y)
    for l, t in enumerate(taps):
        if l >= n:
            break
        out[..., l:] += t * y[..., : n - l]
    return out
