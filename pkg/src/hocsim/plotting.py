"""BER figures rendered from sweep CSV files."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .harness import SUMMARY_INSTANCE, read_csv  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 7,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "figure.figsize": (4.6, 3.4),
    "savefig.dpi": 150,
}

LABELS = {
    "zf": "REF (ZF)",
    "cnc": "CNC",
    "hoc3": "HOC 1+3",
    "hoc5": "HOC 1+3+5",
    "hocfull": "HOC full 3rd",
    "lchoc3": "LC-HOC 1+3",
    "lchoc5": "LC-HOC 1+3+5",
}
TRAINED = {"hoc3", "hoc5", "hocfull"}


def _summary(rows):
    table = {}
    for r in rows:
        if r["instance"] != SUMMARY_INSTANCE:
            continue
        key = (r["experiment"], r["receiver"], float(r["ibo_db"]), float(r["ebn0_db"]))
        table[key] = (float(r["ber_train"]), float(r["ber_test"]))
    return table


def _draw(ax, x, series, xlabel):
    for rx, pts in series.items():
        pts.sort()
        xs = [p[0] for p in pts]
        (line,) = ax.semilogy(xs, [p[2] for p in pts], marker="o", ms=3, label=LABELS.get(rx, rx))
        if rx in TRAINED:
            ax.semilogy(xs, [p[1] for p in pts], ls="--", color=line.get_color(), lw=0.8)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("BER")
    ax.legend(loc="lower left", frameon=False)


def plot_sweep(csv_path, out_dir=None, fmt: str = "png") -> list[Path]:
    """Write BER-vs-Eb/N0 figures (one per IBO) and BER-vs-IBO figures (one per Eb/N0).

    Only axes with at least two grid values get a figure. Dashed lines are
    training-set BER of the receivers that are fitted per point.
    """
    csv_path = Path(csv_path)
    out_dir = Path(out_dir) if out_dir else csv_path.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    table = _summary(read_csv(csv_path))
    ibos = sorted({k[2] for k in table})
    ebn0s = sorted({k[3] for k in table})
    written = []
    with plt.rc_context(STYLE):
        if len(ebn0s) > 1:
            for ibo in ibos:
                series = {}
                for (exp, rx, i, e), (tr, te) in table.items():
                    if i == ibo:
                        series.setdefault(rx, []).append((e, tr, te))
                fig, ax = plt.subplots()
                _draw(ax, ebn0s, series, "Eb/N0 [dB]")
                ax.set_title(f"IBO = {ibo:g} dB")
                path = out_dir / f"{csv_path.stem}_ber_vs_ebn0_ibo{ibo:g}.{fmt}"
                fig.tight_layout()
                fig.savefig(path)
                plt.close(fig)
                written.append(path)
        if len(ibos) > 1:
            for ebn0 in ebn0s:
                series = {}
                for (exp, rx, i, e), (tr, te) in table.items():
                    if e == ebn0:
                        series.setdefault(rx, []).append((i, tr, te))
                fig, ax = plt.subplots()
                _draw(ax, ibos, series, "IBO [dB]")
                ax.set_title(f"Eb/N0 = {ebn0:g} dB")
                path = out_dir / f"{csv_path.stem}_ber_vs_ibo_ebn0{ebn0:g}.{fmt}"
                fig.tight_layout()
                fig.savefig(path)
                plt.close(fig)
                written.append(path)
    return written
