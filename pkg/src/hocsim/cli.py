"""Command line entry point: ``hocsim {sweep,point,terms,alpha,sparsity}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .harness import (
    ExperimentConfig,
    WORKERS_ENV,
    records_to_csv,
    report_alpha,
    report_sparsity,
    report_terms,
    run_point,
    sweep,
)
from .ofdm import OfdmConfig

PRESETS = {
    # BER vs Eb/N0 at a heavily clipped operating point
    "ebn0": {"name": "ber_vs_ebn0", "ibo_db": [-4.0], "ebn0_db": [6, 10, 14, 18, 22, 26, 30, 34]},
    # BER vs IBO at a noisy and a nearly noiseless Eb/N0
    "ibo": {"name": "ber_vs_ibo", "ibo_db": [-6, -4, -2, 0, 2, 4], "ebn0_db": [14.0, 34.0]},
}


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def build_config(args) -> ExperimentConfig:
    base = {}
    if getattr(args, "preset", None):
        base.update(PRESETS[args.preset])
    if args.config:
        base.update(json.loads(Path(args.config).read_text()))
    cfg = ExperimentConfig.from_dict(base)
    changes = {}
    if args.seed is not None:
        changes["master_seed"] = args.seed
    if args.out is not None:
        changes["output"] = args.out
    if args.receivers:
        changes["receivers"] = [r.strip() for r in args.receivers.split(",") if r.strip()]
    if args.instances is not None:
        changes["n_channel_instances"] = args.instances
    if args.frames is not None:
        changes["n_train_frames"] = args.frames
        changes["n_test_frames"] = args.frames
    if getattr(args, "ibo", None):
        changes["ibo_db"] = _floats(args.ibo)
    if getattr(args, "ebn0", None):
        changes["ebn0_db"] = _floats(args.ebn0)
    return cfg.replace(**changes) if changes else cfg


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--preset", choices=sorted(PRESETS), help="start from a built-in grid")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--out", help="output CSV path")
    p.add_argument("--receivers", help="comma list from zf,cnc,hoc3,hoc5,hocfull,lchoc3,lchoc5")
    p.add_argument("--instances", type=int, help="channel instances per point")
    p.add_argument("--frames", type=int, help="training and test frames per instance")
    p.add_argument("--ibo", help="comma list of IBO values [dB]")
    p.add_argument("--ebn0", help="comma list of Eb/N0 values [dB]")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hocsim", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="run the (IBO x Eb/N0 x instance) grid and write CSV")
    _common(p)
    p.add_argument("--workers", type=int, help=f"worker processes (default: ${WORKERS_ENV} or all CPUs)")
    p.add_argument("--plot", action="store_true", help="also render BER figures next to the CSV")

    p = sub.add_parser("point", help="run a single channel instance at one (IBO, Eb/N0)")
    _common(p)
    p.add_argument("--instance", type=int, default=0)

    p = sub.add_parser("terms", help="IMD3/IMD5 term counts per subcarrier")
    _common(p)
    p.add_argument("--used", help="comma list of used subcarrier indices")

    p = sub.add_parser("alpha", help="Bussgang gain per IBO")
    _common(p)

    p = sub.add_parser("sparsity", help="rank full third-order combiner coefficients")
    _common(p)
    p.add_argument("--target", type=int, action="append", help="target position (repeatable)")
    p.add_argument("--limit", type=int, default=30)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = build_config(args)
    except (ValueError, TypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.command == "sweep":
        try:
            sweep(cfg, cfg.output, workers=args.workers)
        except Exception as exc:
            print(f"error: {exc} (partial results in {cfg.output})", file=sys.stderr)
            return 1
        print(f"wrote {cfg.output}")
        if args.plot:
            from .plotting import plot_sweep

            for path in plot_sweep(cfg.output):
                print(f"wrote {path}")
        return 0

    if args.command == "point":
        try:
            recs = run_point(cfg, cfg.ibo_db[0], cfg.ebn0_db[0], args.instance)
        except Exception as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        text = records_to_csv(recs, with_summary=False)
        if args.out:
            Path(args.out).write_text(text)
        else:
            sys.stdout.write(text)
        return 0

    if args.command == "terms":
        if args.used:
            o = cfg.ofdm
            used = tuple(int(v) for v in args.used.split(","))
            cfg = cfg.replace(ofdm=OfdmConfig(o.n_fft, o.n_cp, used, o.mod_order), receivers=["zf"])
        sys.stdout.write(report_terms(cfg))
        return 0

    if args.command == "alpha":
        sys.stdout.write(report_alpha(cfg))
        return 0

    if args.command == "sparsity":
        frames = args.frames or max(cfg.n_train_frames, 5000)
        sys.stdout.write(report_sparsity(cfg, cfg.ibo_db[0], frames, args.target, args.limit))
        return 0
    return 2


if __name__ == "__main__":
    sys.exit(main())
