"""QAM mapping and OFDM (de)modulation.

Symbols are arranged with frames along the leading axes, so ``(n_frames, n_used)``
arrays of symbols map to ``(n_frames, n_cp + n_fft)`` arrays of time samples.

Bit-to-point table
------------------
Square M-QAM is built from two independent Gray-coded PAM axes. The first
``log2(M)/2`` bits of a symbol select the in-phase level, the remaining bits
the quadrature level. On each axis with ``m = sqrt(M)`` levels, the bit group
is read MSB first as a Gray code ``g``, decoded to the binary index ``i`` and
placed at amplitude ``(m - 1) - 2 i``. Points are divided by
``sqrt(2 (M - 1) / 3)`` for unit average energy. For QPSK this gives
``00 -> (+1 + 1j)/sqrt(2)``, ``01 -> (+1 - 1j)/sqrt(2)``,
``10 -> (-1 + 1j)/sqrt(2)`` and ``11 -> (-1 - 1j)/sqrt(2)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SUPPORTED_ORDERS = (4, 16, 64)

# Snap grid for hard decisions; values this close to a decision boundary count as ties.
_TIE_GRID = 1e-9


@dataclass(frozen=True)
class OfdmConfig:
    """OFDM numerology.

    Parameters
    ----------
    n_fft : int
        FFT size ``N``.
    n_cp : int
        Cyclic prefix length in samples.
    used_indices : tuple of int
        Occupied subcarrier indices in ``[-N/2, N/2 - 1]``, sorted ascending.
    mod_order : int
        QAM order, one of 4, 16, 64.
    """

    n_fft: int = 64
    n_cp: int = 16
    used_indices: tuple[int, ...] = (-3, -2, -1, 0, 1, 2)
    mod_order: int = 64

    def __post_init__(self):
        object.__setattr__(self, "used_indices", tuple(int(i) for i in self.used_indices))
        idx = self.used_indices
        if self.n_fft < 1:
            raise ValueError("n_fft must be positive")
        if not 0 <= self.n_cp < self.n_fft:
            raise ValueError("n_cp must satisfy 0 <= n_cp < n_fft")
        if len(idx) == 0 or len(idx) > self.n_fft:
            raise ValueError("need 1 <= len(used_indices) <= n_fft")
        if len(set(idx)) != len(idx):
            raise ValueError("used_indices must be unique")
        if list(idx) != sorted(idx):
            raise ValueError("used_indices must be sorted ascending")
        if idx[0] < -(self.n_fft // 2) or idx[-1] > self.n_fft // 2 - 1:
            raise ValueError("used_indices out of range [-N/2, N/2-1]")
        _check_order(self.mod_order)

    @property
    def n_used(self) -> int:
        return len(self.used_indices)

    @property
    def bits_per_symbol(self) -> int:
        return int(np.log2(self.mod_order))

    @property
    def bins(self) -> np.ndarray:
        """FFT bin of each used subcarrier."""
        return np.mod(np.asarray(self.used_indices), self.n_fft)

    @property
    def nominal_power(self) -> float:
        """Analytic mean sample power ``N_U / N`` for unit-energy symbols."""
        return self.n_used / self.n_fft


@dataclass
class SymbolFrame:
    """QAM symbols for one or more OFDM frames with the bits they carry."""

    data: np.ndarray
    bits: np.ndarray


def _check_order(mod_order: int) -> int:
    if mod_order not in SUPPORTED_ORDERS:
        raise ValueError(f"unsupported modulation order {mod_order}; use one of {SUPPORTED_ORDERS}")
    return int(np.log2(mod_order))


def _axis_tables(mod_order: int):
    m = int(round(np.sqrt(mod_order)))
    half = int(np.log2(m))
    i = np.arange(m)
    gray = i ^ (i >> 1)
    # amplitude for each gray word, and gray word for each level (ascending amplitude)
    amp_of_word = np.empty(m)
    amp_of_word[gray] = (m - 1) - 2 * i
    word_of_level = gray[::-1].copy()
    return m, half, amp_of_word, word_of_level


def qam_norm(mod_order: int) -> float:
    return float(np.sqrt(2.0 * (mod_order - 1) / 3.0))


def constellation(mod_order: int) -> np.ndarray:
    """All ``M`` points indexed by their integer bit label (MSB first)."""
    k = _check_order(mod_order)
    labels = np.arange(mod_order)
    bits = (labels[:, None] >> np.arange(k - 1, -1, -1)) & 1
    return map_bits(bits.ravel(), mod_order)


def map_bits(bits, mod_order: int) -> np.ndarray:
    """Gray-map bits to unit-energy square QAM points.

    The trailing axis of ``bits`` is consumed in groups of ``log2(M)``; any
    leading axes are kept.
    """
    k = _check_order(mod_order)
    bits = np.asarray(bits)
    if bits.shape[-1] % k:
        raise ValueError(f"bit length {bits.shape[-1]} not divisible by log2(M)={k}")
    m, half, amp_of_word, _ = _axis_tables(mod_order)
    groups = bits.reshape(bits.shape[:-1] + (-1, k)).astype(np.int64)
    weights = 1 << np.arange(half - 1, -1, -1)
    w_i = groups[..., :half] @ weights
    w_q = groups[..., half:] @ weights
    return (amp_of_word[w_i] + 1j * amp_of_word[w_q]) / qam_norm(mod_order)


def _decide_axis(v: np.ndarray, m: int) -> np.ndarray:
    # level j sits at amplitude 2j - (m-1); ties go to the smaller amplitude
    u = (v + (m - 1)) / 2.0
    u = np.round(u / _TIE_GRID) * _TIE_GRID
    j = np.ceil(u - 0.5)
    return np.clip(j, 0, m - 1).astype(np.int64)


def demap_hard(symbols, mod_order: int) -> np.ndarray:
    """Nearest-point hard decision followed by inverse Gray mapping.

    Ties on a decision boundary go to the point with the smaller real part,
    then the smaller imaginary part. Returns a uint8 bit array whose trailing
    axis is ``log2(M)`` times longer than the input's.
    """
    k = _check_order(mod_order)
    m, half, _, word_of_level = _axis_tables(mod_order)
    s = np.asarray(symbols) * qam_norm(mod_order)
    w_i = word_of_level[_decide_axis(s.real, m)]
    w_q = word_of_level[_decide_axis(s.imag, m)]
    shifts = np.arange(half - 1, -1, -1)
    b_i = (w_i[..., None] >> shifts) & 1
    b_q = (w_q[..., None] >> shifts) & 1
    out = np.concatenate([b_i, b_q], axis=-1).astype(np.uint8)
    return out.reshape(out.shape[:-2] + (-1,))


def slice_symbols(symbols, mod_order: int) -> np.ndarray:
    """Hard decision returning constellation points instead of bits."""
    return map_bits(demap_hard(symbols, mod_order), mod_order)


def random_frames(cfg: OfdmConfig, n_frames: int, rng: np.random.Generator) -> SymbolFrame:
    bits = rng.integers(0, 2, size=(n_frames, cfg.n_used * cfg.bits_per_symbol), dtype=np.uint8)
    return SymbolFrame(data=map_bits(bits, cfg.mod_order), bits=bits)


def ofdm_modulate(data, cfg: OfdmConfig) -> np.ndarray:
    """IFFT with unitary scaling and cyclic prefix.

    ``data`` has shape ``(..., N_U)``; returns ``(..., N_CP + N)`` samples
    for ``n = -N_CP, ..., N-1``.
    """
    if isinstance(data, SymbolFrame):
        data = data.data
    data = np.asarray(data)
    if data.shape[-1] != cfg.n_used:
        raise ValueError(f"expected {cfg.n_used} symbols per frame, got {data.shape[-1]}")
    spec = np.zeros(data.shape[:-1] + (cfg.n_fft,), dtype=complex)
    spec[..., cfg.bins] = data
    body = np.fft.ifft(spec, axis=-1) * np.sqrt(cfg.n_fft)
    if cfg.n_cp == 0:
        return body
    return np.concatenate([body[..., -cfg.n_cp:], body], axis=-1)


def ofdm_demodulate(signal, cfg: OfdmConfig, all_bins: bool = False) -> np.ndarray:
    """Drop the cyclic prefix and return the unitary FFT at the used subcarriers.

    With ``all_bins=True`` the full N-point spectrum is returned instead
    (natural FFT bin order).
    """
    signal = np.asarray(signal)
    if signal.shape[-1] < cfg.n_cp + cfg.n_fft:
        raise ValueError(
            f"signal has {signal.shape[-1]} samples, need at least {cfg.n_cp + cfg.n_fft}"
        )
    body = signal[..., cfg.n_cp : cfg.n_cp + cfg.n_fft]
    spec = np.fft.fft(body, axis=-1) / np.sqrt(cfg.n_fft)
    if all_bins:
        return spec
    return spec[..., cfg.bins]


def measure_power(signal, n_cp: int = 0) -> float:
    """Mean ``|x_n|^2`` over the frame body, skipping ``n_cp`` leading samples per frame."""
    signal = np.asarray(signal)
    body = signal[..., n_cp:]
    if body.size == 0:
        raise ValueError("cannot measure power of an empty signal")
    return float(np.mean(np.abs(body) ** 2))
