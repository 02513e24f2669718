"""Memoryless power amplifier models, IBO control and Bussgang gain."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .ofdm import OfdmConfig, measure_power, ofdm_modulate, random_frames


def rapp_amplify(x, gain: float = 1.0, p_max: float = 1.0, smoothness: float = 10.0):
    """Rapp AM/AM characteristic, ``y = Gx / (1 + |Gx|^{2p} / P_max^p)^{1/(2p)}``.

    Evaluated in the log domain so large smoothness values do not overflow.
    """
    gx = gain * np.asarray(x, dtype=complex)
    u = np.abs(gx) / np.sqrt(p_max)
    two_p = 2.0 * smoothness
    with np.errstate(divide="ignore", over="ignore"):
        small = u <= 1.0
        # (1 + u^2p)^(1/2p) = u (1 + u^-2p)^(1/2p) for u > 1
        denom = np.where(
            small,
            np.exp(np.log1p(np.where(small, u, 0.0) ** two_p) / two_p),
            u * np.exp(np.log1p(np.where(small, 1.0, u) ** -two_p) / two_p),
        )
    return gx / denom


def soft_limit(x, gain: float = 1.0, p_max: float = 1.0):
    """Ideal clipper: linear up to ``|Gx|^2 = P_max``, constant envelope above."""
    gx = gain * np.asarray(x, dtype=complex)
    mag = np.abs(gx)
    limit = np.sqrt(p_max)
    with np.errstate(divide="ignore", invalid="ignore"):
        clipped = limit * gx / mag
    return np.where(mag ** 2 <= p_max, gx, clipped)


def poly_amplify(x, coeffs):
    """Odd-order memoryless polynomial, ``y = sum_q a_q x |x|^{2(q-1)}``."""
    x = np.asarray(x, dtype=complex)
    p = np.abs(x) ** 2
    y = np.zeros_like(x)
    env = np.ones_like(p)
    for a in coeffs:
        y = y + a * x * env
        env = env * p
    return y


@dataclass(frozen=True)
class Rapp:
    gain: float = 1.0
    p_max: float = 1.0
    smoothness: float = 10.0
    kind: str = field(default="rapp", init=False)

    def __post_init__(self):
        if self.p_max <= 0 or self.gain <= 0:
            raise ValueError("Rapp gain and p_max must be positive")
        if self.smoothness < 0.5:
            raise ValueError("Rapp smoothness must be >= 0.5")

    def __call__(self, x):
        return rapp_amplify(x, self.gain, self.p_max, self.smoothness)


@dataclass(frozen=True)
class SoftLimiter:
    gain: float = 1.0
    p_max: float = 1.0
    kind: str = field(default="softlimiter", init=False)

    def __post_init__(self):
        if self.p_max <= 0 or self.gain <= 0:
            raise ValueError("soft limiter gain and p_max must be positive")

    def __call__(self, x):
        return soft_limit(x, self.gain, self.p_max)


@dataclass(frozen=True)
class Polynomial:
    """Coefficients ``a_1 .. a_Q`` of the orders ``1, 3, ..., 2Q-1``."""

    coeffs: tuple[complex, ...] = (1.0,)
    kind: str = field(default="polynomial", init=False)

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(complex(c) for c in self.coeffs))
        if not self.coeffs:
            raise ValueError("polynomial needs at least one coefficient")

    @property
    def gain(self) -> float:
        return abs(self.coeffs[0])

    def __call__(self, x):
        return poly_amplify(x, self.coeffs)


PaModel = Union[Rapp, SoftLimiter, Polynomial]


def pa_from_dict(d: dict) -> PaModel:
    d = dict(d)
    kind = d.pop("kind", "rapp").lower()
    if kind == "rapp":
        return Rapp(**d)
    if kind in ("softlimiter", "soft_limiter", "clipper"):
        return SoftLimiter(**d)
    if kind == "polynomial":
        coeffs = [complex(c[0], c[1]) if isinstance(c, (list, tuple)) else complex(c) for c in d["coeffs"]]
        return Polynomial(coeffs=tuple(coeffs))
    raise ValueError(f"unknown PA kind {kind!r}")


def pa_to_dict(pa: PaModel) -> dict:
    if isinstance(pa, Polynomial):
        return {"kind": pa.kind, "coeffs": [[c.real, c.imag] for c in pa.coeffs]}
    out = {"kind": pa.kind, "gain": pa.gain, "p_max": pa.p_max}
    if isinstance(pa, Rapp):
        out["smoothness"] = pa.smoothness
    return out


def gain_for_ibo(ibo_db: float, p_max: float, sigma2: float) -> float:
    """Amplitude scale ``s`` putting the PA input at ``P_max / (s^2 sigma^2) = 10^(IBO/10)``."""
    if p_max <= 0 or sigma2 <= 0:
        raise ValueError("p_max and sigma2 must be positive")
    gamma = 10.0 ** (ibo_db / 10.0)
    return float(np.sqrt(p_max / (gamma * sigma2)))


@dataclass(frozen=True)
class BussgangGain:
    alpha: complex
    input_power: float
    stderr: float = 0.0


def _bussgang_ratio(x: np.ndarray, y: np.ndarray) -> tuple[complex, float]:
    x = x.ravel()
    y = y.ravel()
    px = np.sum(np.abs(x) ** 2)
    if px == 0:
        raise ValueError("input has zero energy")
    alpha = np.vdot(x, y) / px
    resid = y - alpha * x
    # sandwich standard error of the ratio estimator
    se = np.sqrt(np.sum(np.abs(resid) ** 2 * np.abs(x) ** 2)) / px
    return complex(alpha), float(se)


def estimate_alpha(model: PaModel, sigma2: float, n_samples: int = 10**6, seed=0) -> BussgangGain:
    """Bussgang gain ``E[y x*] / E[|x|^2]`` for circular Gaussian input of power ``sigma2``."""
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    if n_samples < 10**4:
        raise ValueError("estimate_alpha needs at least 1e4 samples")
    rng = np.random.default_rng(seed)
    # stratified envelope: |x|^2 ~ Exp(sigma2) via inverse CDF of one uniform per stratum
    u = (np.arange(n_samples) + rng.random(n_samples)) / n_samples
    power = -sigma2 * np.log1p(-u)
    phase = rng.uniform(0.0, 2.0 * np.pi, n_samples)
    x = np.sqrt(power) * np.exp(1j * phase)
    # se below assumes iid draws, so it is conservative under stratification
    alpha, se = _bussgang_ratio(x, model(x))
    return BussgangGain(alpha=alpha, input_power=sigma2, stderr=se)


def estimate_alpha_frames(
    model: PaModel, cfg: OfdmConfig, scale: float, n_frames: int = 10**4, seed=0
) -> BussgangGain:
    """Bussgang gain measured on actual OFDM frames scaled by ``scale``."""
    rng = np.random.default_rng(seed)
    x = scale * ofdm_modulate(random_frames(cfg, n_frames, rng).data, cfg)[..., cfg.n_cp :]
    alpha, se = _bussgang_ratio(x, model(x))
    return BussgangGain(alpha=alpha, input_power=measure_power(x), stderr=se)


def bussgang_residual(x, y, alpha: complex) -> np.ndarray:
    """Distortion left after removing the correlated part, ``y - alpha x``."""
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch {x.shape} vs {y.shape}")
    return y - alpha * x
