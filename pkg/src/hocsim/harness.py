"""Seeded Monte Carlo sweeps over IBO and Eb/N0 with per-instance BER records."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import channel as chn
from .imd import term_counts
from .ofdm import OfdmConfig, random_frames
from .pa import PaModel, estimate_alpha, gain_for_ibo, pa_from_dict, pa_to_dict
from .receivers import (
    CombinerCoefficients,
    cnc_detect,
    format_sparsity,
    full3_term_sets,
    hoc_detect,
    hoc_train,
    imd_term_sets,
    lchoc_detect,
    lchoc_train,
    pa_only_observation,
    sparsity_report,
    zf_detect,
)

log = logging.getLogger(__name__)

RECEIVERS = ("zf", "cnc", "hoc3", "hoc5", "hocfull", "lchoc3", "lchoc5")
DEFAULT_RECEIVERS = ("zf", "cnc", "hoc3", "hoc5", "lchoc3", "lchoc5")
CSV_HEADER = (
    "experiment",
    "receiver",
    "ibo_db",
    "ebn0_db",
    "instance",
    "ber_train",
    "ber_test",
    "n_bits",
    "zero_gain_events",
    "wall_ms",
)
SUMMARY_INSTANCE = "mean"
WORKERS_ENV = "HOCSIM_WORKERS"

# purpose codes for seed derivation
_CHANNEL, _TRAIN, _TEST, _LCHOC, _ALPHA, _CALIB = range(6)


@dataclass
class ExperimentConfig:
    name: str = "hoc"
    ofdm: OfdmConfig = field(default_factory=OfdmConfig)
    pa: dict = field(default_factory=lambda: {"kind": "rapp", "gain": 1.0, "p_max": 1.0, "smoothness": 10.0})
    ibo_db: list = field(default_factory=lambda: [-4.0])
    ebn0_db: list = field(default_factory=lambda: [6.0, 10.0, 14.0, 18.0, 22.0, 26.0, 30.0, 34.0])
    receivers: list = field(default_factory=lambda: list(DEFAULT_RECEIVERS))
    n_channel_instances: int = 50
    n_train_frames: int = 2000
    n_test_frames: int = 2000
    cnc_iterations: int = 10
    master_seed: int = 0
    ridge: float = 0.0
    output: str = "results.csv"
    alpha_samples: int = 10**6
    calibration_frames: int = 2000
    record_timing: bool = False
    cache_dir: str | None = None

    def __post_init__(self):
        if isinstance(self.ofdm, dict):
            self.ofdm = OfdmConfig(**self.ofdm)
        self.ibo_db = [float(v) for v in self.ibo_db]
        self.ebn0_db = [float(v) for v in self.ebn0_db]
        self.receivers = list(self.receivers)
        self.validate()

    def validate(self):
        if not (self.ibo_db and self.ebn0_db and self.receivers):
            raise ValueError("ibo_db, ebn0_db and receivers must be non-empty")
        unknown = set(self.receivers) - set(RECEIVERS)
        if unknown:
            raise ValueError(f"unknown receivers {sorted(unknown)}; choose from {RECEIVERS}")
        if self.n_channel_instances < 1 or self.n_test_frames < 1:
            raise ValueError("need at least one instance and one test frame")
        need = 10 * self.largest_term_set()
        if self.n_train_frames < need:
            raise ValueError(f"n_train_frames={self.n_train_frames} < {need} (10x the largest term set)")
        pa_from_dict(self.pa)

    def largest_term_set(self) -> int:
        I = self.ofdm.used_indices
        sizes = [1]
        orders = {"hoc3": 3, "lchoc3": 3, "hoc5": 5, "lchoc5": 5}
        for rx in self.receivers:
            if rx in orders:
                sizes += [len(ts) for ts in imd_term_sets(I, orders[rx])]
            elif rx == "hocfull":
                sizes += [len(ts) for ts in full3_term_sets(I)]
        return max(sizes)

    @property
    def pa_model(self) -> PaModel:
        return pa_from_dict(self.pa)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["ofdm"]["used_indices"] = list(self.ofdm.used_indices)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        extra = set(d) - names
        if extra:
            raise ValueError(f"unknown config fields {sorted(extra)}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def physics_hash(self) -> str:
        """Hash of the fields that determine PA-only training data."""
        key = {"ofdm": self.to_dict()["ofdm"], "pa": pa_to_dict(self.pa_model), "ridge": self.ridge}
        return hashlib.sha256(json.dumps(key, sort_keys=True).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class BerRecord:
    experiment: str
    receiver: str
    ibo_db: float
    ebn0_db: float
    instance: int | str
    ber_train: float
    ber_test: float
    n_bits: int
    zero_gain_events: int
    wall_ms: float

    def row(self) -> list[str]:
        return [
            self.experiment,
            self.receiver,
            _fmt(self.ibo_db),
            _fmt(self.ebn0_db),
            str(self.instance),
            repr(float(self.ber_train)),
            repr(float(self.ber_test)),
            str(self.n_bits),
            str(self.zero_gain_events),
            f"{self.wall_ms:.0f}",
        ]


def _fmt(v: float) -> str:
    return f"{v:g}"


def _key(value: float) -> int:
    # SeedSequence spawn keys must be non-negative ints
    return int(round(value * 1000)) + 10**6


def sub_seed(master: int, purpose: int, *keys: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master, spawn_key=(purpose, *keys))


def rng_for(master: int, purpose: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng(sub_seed(master, purpose, *keys))


@dataclass
class OperatingPoint:
    """Everything about one IBO that does not depend on channel or noise."""

    ibo_db: float
    scale: float
    alpha_pa: complex
    alpha_stderr: float
    signal_power: float
    lchoc: dict

    @property
    def alpha(self) -> complex:
        """End-to-end gain from symbol to PA-output subcarrier."""
        return self.alpha_pa * self.scale


_OP_CACHE: dict = {}


def _lchoc_cache_path(cfg: ExperimentConfig, ibo_db: float, order: int) -> Path | None:
    if cfg.cache_dir is None:
        return None
    name = f"lchoc{order}_{cfg.physics_hash()}_ibo{_fmt(ibo_db)}_n{cfg.n_train_frames}_s{cfg.master_seed}.json"
    return Path(cfg.cache_dir) / name


def operating_point(cfg: ExperimentConfig, ibo_db: float) -> OperatingPoint:
    memo = (cfg.physics_hash(), ibo_db, cfg.master_seed, cfg.n_train_frames, cfg.alpha_samples,
            cfg.calibration_frames, tuple(cfg.receivers), cfg.cache_dir)
    if memo in _OP_CACHE:
        return _OP_CACHE[memo]
    pa = cfg.pa_model
    o = cfg.ofdm
    p_max = getattr(pa, "p_max", 1.0)
    scale = gain_for_ibo(ibo_db, p_max, o.nominal_power)
    bg = estimate_alpha(pa, scale**2 * o.nominal_power, cfg.alpha_samples, sub_seed(cfg.master_seed, _ALPHA, _key(ibo_db)))
    calib = random_frames(o, cfg.calibration_frames, rng_for(cfg.master_seed, _CALIB, _key(ibo_db))).data
    power = float(np.mean(np.abs(pa_only_observation(calib, pa, o, scale)) ** 2))
    lchoc = {}
    for rx in cfg.receivers:
        if not rx.startswith("lchoc"):
            continue
        order = int(rx[-1])
        path = _lchoc_cache_path(cfg, ibo_db, order)
        if path is not None and path.exists():
            lchoc[rx] = CombinerCoefficients.from_json(path.read_text())
            continue
        coeffs = lchoc_train(
            pa, o, scale, cfg.n_train_frames, rng_for(cfg.master_seed, _LCHOC, _key(ibo_db), order),
            order=order, ridge=cfg.ridge,
            metadata={"ibo_db": ibo_db, "pa": pa_to_dict(pa), "cfg_hash": cfg.physics_hash()},
        )
        if path is not None:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(coeffs.to_json())
        lchoc[rx] = coeffs
    op = OperatingPoint(ibo_db, scale, bg.alpha, bg.stderr, power, lchoc)
    _OP_CACHE[memo] = op
    return op


@dataclass
class PointResult:
    records: list[BerRecord]
    train_mse: dict


def simulate_point(cfg: ExperimentConfig, ibo_db: float, ebn0_db: float, instance: int) -> PointResult:
    """One channel instance at one (IBO, Eb/N0): train, test, and score every receiver."""
    o = cfg.ofdm
    pa = cfg.pa_model
    op = operating_point(cfg, ibo_db)
    pkey = (_key(ibo_db), _key(ebn0_db), instance)

    gains = chn.draw_rayleigh(o.n_used, rng_for(cfg.master_seed, _CHANNEL, instance))
    ch = chn.ChannelRealization(gains, chn.calibrate_noise(ebn0_db, op.signal_power, o.mod_order))

    def dataset(purpose, n):
        rng = rng_for(cfg.master_seed, purpose, *pkey)
        frames = random_frames(o, n, rng)
        r = chn.apply_freq_channel(pa_only_observation(frames.data, pa, o, op.scale), ch, rng)
        return frames, r

    train, r_train = dataset(_TRAIN, cfg.n_train_frames)
    test, r_test = dataset(_TEST, cfg.n_test_frames)

    records, mse = [], {}
    for rx in cfg.receivers:
        t0 = time.perf_counter()
        if rx == "zf":
            detect = lambda r: zf_detect(r, gains, op.alpha, o.mod_order)
        elif rx == "cnc":
            detect = lambda r: cnc_detect(r, gains, pa, op.alpha, o, op.scale, cfg.cnc_iterations)
        elif rx.startswith("hoc"):
            sets = full3_term_sets(o.used_indices) if rx == "hocfull" else imd_term_sets(o.used_indices, int(rx[-1]))
            coeffs = hoc_train(
                r_train, train.data, sets, cfg.ridge,
                metadata={"ibo_db": ibo_db, "ebn0_db": ebn0_db, "instance": instance},
            )
            mse[rx] = coeffs.metadata["train_mse"]
            detect = lambda r, c=coeffs: hoc_detect(r, c, o.mod_order)
        else:
            detect = lambda r, c=op.lchoc[rx]: lchoc_detect(r, gains, c, o.mod_order)
        res_train = detect(r_train)
        res_test = detect(r_test)
        wall = (time.perf_counter() - t0) * 1000.0 if cfg.record_timing else 0.0
        records.append(
            BerRecord(
                cfg.name, rx, ibo_db, ebn0_db, instance,
                res_train.ber(train.bits), res_test.ber(test.bits), int(test.bits.size),
                res_test.zero_gain_events, wall,
            )
        )
    return PointResult(records, mse)


def _simulate_checked(cfg: ExperimentConfig, ibo_db: float, ebn0_db: float, instance: int) -> PointResult:
    try:
        return simulate_point(cfg, ibo_db, ebn0_db, instance)
    except Exception as exc:
        raise RuntimeError(f"point ibo={ibo_db:g} dB ebn0={ebn0_db:g} dB instance={instance} failed: {exc}") from exc


def run_point(cfg: ExperimentConfig, ibo_db: float, ebn0_db: float, instance: int) -> list[BerRecord]:
    """Records for every configured receiver at one point; failures name the point."""
    return _simulate_checked(cfg, ibo_db, ebn0_db, instance).records


def summarize(records: list[BerRecord]) -> list[BerRecord]:
    """Bit-weighted mean BER per (receiver, IBO, Eb/N0), in first-seen order."""
    groups: dict = {}
    for rec in records:
        groups.setdefault((rec.experiment, rec.receiver, rec.ibo_db, rec.ebn0_db), []).append(rec)
    out = []
    for (exp, rx, ibo, ebn0), recs in groups.items():
        bits = np.array([r.n_bits for r in recs], dtype=float)
        w = bits / bits.sum()
        out.append(
            BerRecord(
                exp, rx, ibo, ebn0, SUMMARY_INSTANCE,
                float(np.dot(w, [r.ber_train for r in recs])),
                float(np.dot(w, [r.ber_test for r in recs])),
                int(bits.sum()),
                sum(r.zero_gain_events for r in recs),
                sum(r.wall_ms for r in recs),
            )
        )
    return out


def worker_count() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


def sweep_points(cfg: ExperimentConfig) -> list[tuple[float, float, int]]:
    return [(ibo, ebn0, i) for ibo in cfg.ibo_db for ebn0 in cfg.ebn0_db for i in range(cfg.n_channel_instances)]


def _run_star(args):
    return _simulate_checked(*args)


def sweep(cfg: ExperimentConfig, out=None, workers: int | None = None, diagnostics: list | None = None) -> list[BerRecord]:
    """Run every (IBO, Eb/N0, instance) point and write per-point plus summary rows.

    Rows are written in sweep order regardless of completion order. If a
    point fails, rows finished so far are flushed before the error propagates.
    ``diagnostics``, when given, receives each point's :class:`PointResult`.
    """
    out = Path(out or cfg.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    if cfg.cache_dir is None:
        cfg = cfg.replace(cache_dir=str(out.parent / "lchoc_cache"))
    points = sweep_points(cfg)
    workers = workers or worker_count()
    records: list[BerRecord] = []
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        try:
            if workers <= 1:
                results = (_simulate_checked(cfg, *p) for p in points)
                for res in results:
                    _emit(writer, fh, res, records, diagnostics)
            else:
                # prepare operating points once so workers read the LC-HOC cache
                for ibo in cfg.ibo_db:
                    operating_point(cfg, ibo)
                with ProcessPoolExecutor(max_workers=workers) as pool:
                    for res in pool.map(_run_star, [(cfg, *p) for p in points]):
                        _emit(writer, fh, res, records, diagnostics)
        except BaseException:
            fh.flush()
            raise
        for rec in summarize(records):
            writer.writerow(rec.row())
    return records


def _emit(writer, fh, res: PointResult, sink, diagnostics):
    for rec in res.records:
        writer.writerow(rec.row())
    fh.flush()
    sink.extend(res.records)
    if diagnostics is not None:
        diagnostics.append(res)


def records_to_csv(records: list[BerRecord], with_summary: bool = True) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for rec in records:
        writer.writerow(rec.row())
    if with_summary:
        for rec in summarize(records):
            writer.writerow(rec.row())
    return buf.getvalue()


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def report_terms(cfg: ExperimentConfig) -> str:
    I = cfg.ofdm.used_indices
    counts = term_counts(I)
    lines = [f"{'pos':>3} {'subcarrier':>10} {'imd3':>6} {'imd5':>7} {'total':>7}"]
    for k, (c3, c5) in enumerate(counts):
        lines.append(f"{k:>3} {I[k]:>10} {c3:>6} {c5:>7} {1 + c3 + c5:>7}")
    c3 = np.array([c[0] for c in counts])
    c5 = np.array([c[1] for c in counts])
    lines.append(f"{'mean':>14} {c3.mean():>6.2f} {c5.mean():>7.2f} {1 + c3.mean() + c5.mean():>7.2f}")
    lines.append(f"{'sum':>14} {c3.sum():>6} {c5.sum():>7} {len(I) + c3.sum() + c5.sum():>7}")
    return "\n".join(lines) + "\n"


def alpha_table(cfg: ExperimentConfig) -> list[tuple[float, float, complex, float]]:
    """(IBO, PA-input power, alpha, standard error) for every IBO in the config."""
    pa = cfg.pa_model
    p_max = getattr(pa, "p_max", 1.0)
    rows = []
    for ibo in cfg.ibo_db:
        scale = gain_for_ibo(ibo, p_max, cfg.ofdm.nominal_power)
        sigma2 = scale**2 * cfg.ofdm.nominal_power
        bg = estimate_alpha(pa, sigma2, cfg.alpha_samples, sub_seed(cfg.master_seed, _ALPHA, _key(ibo)))
        rows.append((ibo, sigma2, bg.alpha, bg.stderr))
    return rows


def report_alpha(cfg: ExperimentConfig) -> str:
    lines = [f"pa: {json.dumps(pa_to_dict(cfg.pa_model), sort_keys=True)}",
             f"{'ibo_db':>7} {'sigma2_in':>10} {'alpha_re':>10} {'alpha_im':>10} {'stderr':>9}"]
    for ibo, sigma2, a, se in alpha_table(cfg):
        lines.append(f"{ibo:>7g} {sigma2:>10.5f} {a.real:>10.6f} {a.imag:>10.2e} {se:>9.2e}")
    return "\n".join(lines) + "\n"


def train_full_combiner(cfg: ExperimentConfig, ibo_db: float, n_frames: int, seed: int | None = None):
    """Full third-order combiner fitted on noiseless, channel-free PA output."""
    o = cfg.ofdm
    pa = cfg.pa_model
    scale = gain_for_ibo(ibo_db, getattr(pa, "p_max", 1.0), o.nominal_power)
    rng = rng_for(cfg.master_seed if seed is None else seed, _LCHOC, _key(ibo_db), 3)
    d = random_frames(o, n_frames, rng).data
    r = pa_only_observation(d, pa, o, scale)
    return hoc_train(r, d, full3_term_sets(o.used_indices), cfg.ridge,
                     metadata={"ibo_db": ibo_db, "pa": pa_to_dict(pa)})


def report_sparsity(cfg: ExperimentConfig, ibo_db: float, n_frames: int, targets=None, limit: int = 30) -> str:
    coeffs = train_full_combiner(cfg, ibo_db, n_frames)
    I = cfg.ofdm.used_indices
    out = []
    for k in targets if targets is not None else range(len(I)):
        rows, ok = sparsity_report(coeffs, I, k)
        out.append(f"target {k} (subcarrier {I[k]}), IBO {ibo_db:g} dB, {n_frames} frames\n")
        out.append(format_sparsity(rows, ok, limit))
    return "\n".join(out)


def bootstrap_ci(values, n_boot: int = 10000, level: float = 0.95, seed: int = 0) -> tuple[float, float]:
    """Percentile bootstrap interval for the mean of per-instance values."""
    v = np.asarray(values, dtype=float)
    rng = np.random.default_rng(seed)
    means = v[rng.integers(0, len(v), size=(n_boot, len(v)))].mean(axis=1)
    tail = 100 * (1 - level) / 2
    lo, hi = np.percentile(means, [tail, 100 - tail])
    return float(lo), float(hi)
