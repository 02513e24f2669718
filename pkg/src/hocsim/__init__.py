"""Link-level simulation of OFDM reception under PA nonlinearity with higher-order combining receivers."""

from .channel import ChannelRealization, ImpulseResponse, apply_freq_channel, apply_time_channel, calibrate_noise, draw_rayleigh
from .harness import BerRecord, ExperimentConfig, run_point, sweep
from .imd import FullThirdOrderTermSet, ImdTermSet, build_features, enum_full3, enum_imd3, enum_imd5
from .lstsq import Solution, column_scale, lstsq
from .ofdm import OfdmConfig, SymbolFrame, demap_hard, map_bits, measure_power, ofdm_demodulate, ofdm_modulate
from .pa import BussgangGain, Polynomial, Rapp, SoftLimiter, bussgang_residual, estimate_alpha, gain_for_ibo
from .receivers import (
    CombinerCoefficients,
    DetectionResult,
    cnc_detect,
    hoc_detect,
    hoc_train,
    lchoc_detect,
    lchoc_train,
    sparsity_report,
    zf_detect,
)

__version__ = "0.1.0"
