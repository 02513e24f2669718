"""Detection schemes: ZF, clipping noise cancellation, and learned higher-order combining.

Throughout, ``alpha`` is the end-to-end linear gain from a QAM symbol to the
PA-output subcarrier value, i.e. the Bussgang gain of the PA times the IBO
input scale.
"""

from __future__ import annotations

import json
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .imd import FeatureMap, FullThirdOrderTermSet, ImdTermSet, Monomial, support_mask
from .lstsq import RankDeficiencyWarning, column_scale, lstsq
from .ofdm import OfdmConfig, demap_hard, ofdm_demodulate, ofdm_modulate, random_frames, slice_symbols

log = logging.getLogger(__name__)

ZERO_GAIN = 1e-6
TRAINED_WITH_CHANNEL = "trained-with-channel"
TRAINED_PA_ONLY = "trained-PA-only"


@dataclass
class DetectionResult:
    symbols: np.ndarray
    bits: np.ndarray
    sq_error: np.ndarray | None = None
    zero_gain_events: int = 0

    def bit_errors(self, bits) -> int:
        return int(np.count_nonzero(self.bits != np.asarray(bits)))

    def ber(self, bits) -> float:
        return self.bit_errors(bits) / self.bits.size


def _result(est, mod_order, reference=None, zero_events=0) -> DetectionResult:
    sq = None
    if reference is not None:
        sq = np.sum(np.abs(est - reference) ** 2, axis=-1)
    return DetectionResult(est, demap_hard(est, mod_order), sq, zero_events)


def _equalize(r, gains):
    """``r / h`` with near-zero gains left unscaled; returns the count of such subcarriers."""
    gains = np.asarray(gains)
    weak = np.abs(gains) < ZERO_GAIN
    safe = np.where(weak, 1.0, gains)
    return np.asarray(r) / safe, int(weak.sum())


def zf_detect(r, gains, alpha: complex, mod_order: int, reference=None) -> DetectionResult:
    """``d_k = r_k / (h_k alpha)``."""
    if alpha == 0:
        raise ValueError("alpha must be non-zero")
    eq, weak = _equalize(r, gains)
    return _result(eq / alpha, mod_order, reference, weak)


def cnc_detect(
    r,
    gains,
    pa,
    alpha: complex,
    cfg: OfdmConfig,
    scale: float,
    iterations: int = 10,
    reference=None,
) -> DetectionResult:
    """Decision-aided clipping noise cancellation.

    Each pass slices the current estimate, regenerates the transmit signal
    through the known PA (same IBO scaling), takes the distortion on the used
    subcarriers as ``Y_hat - alpha d_hat`` and subtracts it from the
    equalised observation.
    """
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    eq, weak = _equalize(r, gains)
    est = eq / alpha
    for _ in range(iterations):
        d_hat = slice_symbols(est, cfg.mod_order)
        y_hat = ofdm_demodulate(pa(scale * ofdm_modulate(d_hat, cfg)), cfg)
        distortion = y_hat - alpha * d_hat
        est = (eq - distortion) / alpha
    return _result(est, cfg.mod_order, reference, weak)


@dataclass
class CombinerCoefficients:
    """Per-subcarrier combining vectors aligned with their term sets."""

    term_sets: list
    coeffs: list[np.ndarray]
    n_used: int
    provenance: str = TRAINED_WITH_CHANNEL
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.term_sets) != len(self.coeffs):
            raise ValueError("one coefficient vector per term set required")
        for ts, c in zip(self.term_sets, self.coeffs):
            if len(ts) != len(c):
                raise ValueError(f"target {ts.target}: {len(c)} coefficients for {len(ts)} terms")
        self._maps = [FeatureMap(ts.monomials(), self.n_used) for ts in self.term_sets]

    def apply(self, r) -> np.ndarray:
        r = np.asarray(r)
        out = np.empty(r.shape, dtype=complex)
        for ts, fmap, c in zip(self.term_sets, self._maps, self.coeffs):
            out[..., ts.target] = fmap(r) @ c
        return out

    def to_json(self) -> str:
        sets = []
        for ts, c in zip(self.term_sets, self.coeffs):
            if isinstance(ts, FullThirdOrderTermSet):
                entry = {"kind": "full3", "target": ts.target, "families": [list(map(list, f)) for f in ts.families]}
            else:
                entry = {"kind": "imd", "target": ts.target, "imd3": [list(t) for t in ts.imd3], "imd5": [list(t) for t in ts.imd5]}
            entry["coeffs"] = [[float(v.real), float(v.imag)] for v in c]
            sets.append(entry)
        doc = {"n_used": self.n_used, "provenance": self.provenance, "metadata": self.metadata, "terms": sets}
        return json.dumps(doc, indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "CombinerCoefficients":
        doc = json.loads(text)
        term_sets, coeffs = [], []
        for e in doc["terms"]:
            if e["kind"] == "full3":
                ts = FullThirdOrderTermSet(e["target"], tuple(tuple(map(tuple, f)) for f in e["families"]))
            else:
                ts = ImdTermSet(e["target"], tuple(map(tuple, e["imd3"])), tuple(map(tuple, e["imd5"])))
            term_sets.append(ts)
            coeffs.append(np.array([complex(a, b) for a, b in e["coeffs"]]))
        return cls(term_sets, coeffs, doc["n_used"], doc["provenance"], doc["metadata"])


def imd_term_sets(I, order: int) -> list[ImdTermSet]:
    return [ImdTermSet.build(I, k, order) for k in range(len(I))]


def full3_term_sets(I) -> list[FullThirdOrderTermSet]:
    return [FullThirdOrderTermSet.build(I, k) for k in range(len(I))]


def hoc_train(
    r,
    d,
    term_sets,
    ridge: float = 0.0,
    provenance: str = TRAINED_WITH_CHANNEL,
    metadata: dict | None = None,
) -> CombinerCoefficients:
    """Fit one combining vector per subcarrier by least squares on column-scaled features.

    ``r`` and ``d`` are ``(n_frames, N_U)`` received and transmitted symbols.
    If the design is rank deficient and no ridge was given, the fit is
    repeated with ``ridge = 1e-8 * mean squared column norm`` and logged.
    """
    r = np.asarray(r)
    d = np.asarray(d)
    if r.shape != d.shape:
        raise ValueError(f"r {r.shape} and d {d.shape} differ")
    n_frames, n_used = r.shape
    need = 10 * max(len(ts) for ts in term_sets)
    if n_frames < need:
        raise ValueError(f"{n_frames} training frames, need >= {need} (10x the largest term set)")
    coeffs, mse, ridges, rms = [], [], [], []
    for ts in term_sets:
        A, scales = column_scale(FeatureMap(ts.monomials(), n_used)(r))
        target = d[:, ts.target]
        used_ridge = ridge
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", RankDeficiencyWarning)
            sol = lstsq(A, target, ridge=ridge)
        if ridge == 0 and any(issubclass(w.category, RankDeficiencyWarning) for w in caught):
            used_ridge = 1e-8 * float(np.mean(np.sum(np.abs(A) ** 2, axis=0)))
            log.warning("target %d rank deficient (rank %d/%d); refitting with ridge %.3g",
                        ts.target, sol.rank, A.shape[1], used_ridge)
            sol = lstsq(A, target, ridge=used_ridge)
        if not np.all(np.isfinite(sol.coeffs)):
            raise FloatingPointError(f"solver failed for target {ts.target}")
        coeffs.append(sol.coeffs / scales)
        mse.append(sol.residual_norm ** 2 / n_frames)
        ridges.append(used_ridge)
        rms.append(scales.tolist())
    meta = dict(metadata or {})
    meta.update(n_frames=n_frames, train_mse=mse, ridge=ridges, feature_rms=rms)
    return CombinerCoefficients(list(term_sets), coeffs, n_used, provenance, meta)


def hoc_detect(r, coeffs: CombinerCoefficients, mod_order: int, reference=None) -> DetectionResult:
    """Apply trained combining vectors to received symbols."""
    r = np.asarray(r)
    if r.shape[-1] != coeffs.n_used:
        raise ValueError(f"coefficients are for {coeffs.n_used} subcarriers, got {r.shape[-1]}")
    return _result(coeffs.apply(r), mod_order, reference)


def pa_only_observation(d, pa, cfg: OfdmConfig, scale: float) -> np.ndarray:
    """Used-subcarrier values at the PA output, no channel or noise."""
    return ofdm_demodulate(pa(scale * ofdm_modulate(d, cfg)), cfg)


def lchoc_train(
    pa,
    cfg: OfdmConfig,
    scale: float,
    n_frames: int,
    rng: np.random.Generator,
    order: int = 5,
    ridge: float = 0.0,
    metadata: dict | None = None,
) -> CombinerCoefficients:
    """Train combining vectors on noiseless PA-output symbols (no channel)."""
    d = random_frames(cfg, n_frames, rng).data
    r = pa_only_observation(d, pa, cfg, scale)
    return hoc_train(r, d, imd_term_sets(cfg.used_indices, order), ridge, TRAINED_PA_ONLY, metadata)


def lchoc_detect(r, gains, coeffs: CombinerCoefficients, mod_order: int, reference=None) -> DetectionResult:
    """ZF-equalise with the channel, then combine with PA-only coefficients."""
    if coeffs.provenance != TRAINED_PA_ONLY:
        raise ValueError("low-complexity detection needs PA-only coefficients")
    eq, weak = _equalize(r, gains)
    return _result(coeffs.apply(eq), mod_order, reference, weak)


@dataclass(frozen=True)
class SparsityRow:
    rank: int
    family: int
    term: str
    magnitude: float
    in_support: bool


def sparsity_report(coeffs: CombinerCoefficients, I, k: int, scaled: bool = True) -> tuple[list[SparsityRow], bool]:
    """Rank full third-order coefficients of target ``k`` by magnitude.

    With ``scaled`` (default) a magnitude is ``|c| * rms(feature)`` over the
    training set, i.e. the RMS contribution of that term to the estimate,
    which does not depend on the signal's units. Otherwise raw ``|c|``. The
    flag reports whether the top-ranked terms are exactly the linear +
    closure-satisfying IMD3 support.
    """
    idx = [i for i, ts in enumerate(coeffs.term_sets) if ts.target == k]
    if not idx or not isinstance(coeffs.term_sets[idx[0]], FullThirdOrderTermSet):
        raise ValueError(f"no full third-order coefficients for target {k}")
    ts = coeffs.term_sets[idx[0]]
    c = np.abs(coeffs.coeffs[idx[0]])
    if scaled:
        c = c * np.asarray(coeffs.metadata["feature_rms"][idx[0]])
    mask = support_mask(ts, I)
    fam = ts.family_of()
    mons = ts.monomials()
    order = np.argsort(-c, kind="stable")
    rows = [
        SparsityRow(rank + 1, int(fam[i]), mons[i].label(I), float(c[i]), bool(mask[i]))
        for rank, i in enumerate(order)
    ]
    n_support = int(mask.sum())
    top_match = bool(np.all(mask[order[:n_support]]))
    return rows, top_match


def format_sparsity(rows, top_match: bool, limit: int = 30) -> str:
    lines = [f"{'rank':>4}  {'fam':>3}  {'|coef|':>11}  sup  term"]
    for row in rows[:limit]:
        lines.append(f"{row.rank:>4}  {row.family:>3}  {row.magnitude:11.4e}  {'*' if row.in_support else ' ':>3}  {row.term}")
    lines.append(f"top terms match reduced support: {'yes' if top_match else 'no'}")
    return "\n".join(lines) + "\n"

