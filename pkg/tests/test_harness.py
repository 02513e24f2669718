import json

import numpy as np
import pytest

from hocsim import harness
from hocsim.cli import main
from hocsim.harness import (
    CSV_HEADER,
    BerRecord,
    ExperimentConfig,
    bootstrap_ci,
    read_csv,
    rng_for,
    run_point,
    summarize,
    sweep,
)
from hocsim.plotting import plot_sweep


def small(**kw):
    base = dict(
        name="t", ibo_db=[-4.0, 2.0], ebn0_db=[14.0, 30.0], receivers=["zf", "cnc", "hoc3", "lchoc3"],
        n_channel_instances=2, n_train_frames=300, n_test_frames=100, alpha_samples=10**4,
        calibration_frames=200, cnc_iterations=3,
    )
    base.update(kw)
    return ExperimentConfig(**base)


class TestConfig:
    def test_round_trip(self):
        cfg = small()
        assert ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg

    def test_unknown_field(self):
        with pytest.raises(ValueError, match="unknown config"):
            ExperimentConfig.from_dict({"bogus": 1})

    def test_unknown_receiver(self):
        with pytest.raises(ValueError):
            small(receivers=["mmse"])

    def test_training_frames_rule(self):
        with pytest.raises(ValueError, match="10x"):
            small(receivers=["hoc5"], n_train_frames=500)

    def test_physics_hash_ignores_bookkeeping(self):
        a = small()
        assert a.physics_hash() == a.replace(output="x.csv", n_channel_instances=9).physics_hash()
        assert a.physics_hash() != a.replace(pa={"kind": "rapp", "smoothness": 2.0}).physics_hash()


class TestSeeds:
    def test_streams_independent_and_reproducible(self):
        a = rng_for(0, 1, 5).random(4)
        np.testing.assert_array_equal(a, rng_for(0, 1, 5).random(4))
        assert not np.allclose(a, rng_for(0, 2, 5).random(4))
        assert not np.allclose(a, rng_for(1, 1, 5).random(4))

    def test_point_is_reproducible(self):
        cfg = small(receivers=["zf", "hoc3"])
        assert run_point(cfg, -4.0, 14.0, 0) == run_point(cfg, -4.0, 14.0, 0)
        assert run_point(cfg, -4.0, 14.0, 0) != run_point(cfg, -4.0, 14.0, 1)

    def test_channel_depends_on_instance_only(self, monkeypatch):
        seen = []
        real = harness.chn.draw_rayleigh
        monkeypatch.setattr(harness.chn, "draw_rayleigh", lambda n, rng: seen.append(real(n, rng)) or seen[-1])
        cfg = small(receivers=["zf"])
        for ibo, ebn0 in [(-4.0, 14.0), (2.0, 30.0)]:
            run_point(cfg, ibo, ebn0, 3)
        np.testing.assert_array_equal(seen[0], seen[1])


class TestSweep:
    def test_csv_layout_and_summary(self, tmp_path):
        cfg = small()
        out = tmp_path / "a.csv"
        recs = sweep(cfg, out, workers=1)
        rows = read_csv(out)
        assert list(rows[0]) == list(CSV_HEADER)
        per_point = 2 * 2 * 2 * 4
        assert len(recs) == per_point
        assert len(rows) == per_point + 2 * 2 * 4
        assert {r["instance"] for r in rows[per_point:]} == {"mean"}
        assert all(r["wall_ms"] == "0" for r in rows)
        zf = [float(r["ber_test"]) for r in rows[:per_point] if r["receiver"] == "zf"]
        assert all(0 <= b <= 0.6 for b in zf)

    def test_deterministic_bytes(self, tmp_path):
        cfg = small(n_channel_instances=1)
        sweep(cfg, tmp_path / "a.csv", workers=1)
        harness._OP_CACHE.clear()
        sweep(cfg.replace(cache_dir=str(tmp_path / "other")), tmp_path / "b.csv", workers=1)
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_parallel_matches_serial(self, tmp_path):
        cfg = small(n_channel_instances=1, ibo_db=[-4.0])
        sweep(cfg, tmp_path / "s.csv", workers=1)
        sweep(cfg, tmp_path / "p.csv", workers=2)
        assert (tmp_path / "s.csv").read_bytes() == (tmp_path / "p.csv").read_bytes()

    def test_lchoc_cache_written_and_reused(self, tmp_path):
        cfg = small(n_channel_instances=1, ibo_db=[-4.0], ebn0_db=[30.0])
        sweep(cfg, tmp_path / "a.csv", workers=1)
        cached = list((tmp_path / "lchoc_cache").glob("lchoc3_*.json"))
        assert len(cached) == 1
        harness._OP_CACHE.clear()
        sweep(cfg, tmp_path / "b.csv", workers=1)
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_failure_keeps_partial_rows(self, tmp_path, monkeypatch):
        real = harness.simulate_point

        def flaky(cfg, ibo, ebn0, inst):
            if inst == 1:
                raise FloatingPointError("boom")
            return real(cfg, ibo, ebn0, inst)

        monkeypatch.setattr(harness, "simulate_point", flaky)
        out = tmp_path / "p.csv"
        with pytest.raises(RuntimeError, match="instance=1"):
            sweep(small(ibo_db=[-4.0], ebn0_db=[14.0]), out, workers=1)
        rows = read_csv(out)
        assert len(rows) == 4 and {r["instance"] for r in rows} == {"0"}


def test_summary_is_bit_weighted():
    recs = [
        BerRecord("e", "zf", 0.0, 1.0, 0, 0.1, 0.2, 100, 0, 0),
        BerRecord("e", "zf", 0.0, 1.0, 1, 0.3, 0.5, 300, 1, 0),
    ]
    (s,) = summarize(recs)
    assert s.ber_test == pytest.approx((0.2 * 100 + 0.5 * 300) / 400)
    assert s.n_bits == 400 and s.zero_gain_events == 1 and s.instance == "mean"


def test_bootstrap_ci():
    v = np.random.default_rng(0).normal(1.0, 0.1, 200)
    lo, hi = bootstrap_ci(v)
    half = 1.96 * v.std(ddof=1) / np.sqrt(len(v))
    assert lo < v.mean() < hi
    assert hi - lo == pytest.approx(2 * half, rel=0.1)
    assert bootstrap_ci(np.full(5, 0.3)) == pytest.approx((0.3, 0.3))


class TestCli:
    def test_terms(self, capsys):
        assert main(["terms"]) == 0
        out = capsys.readouterr().out
        assert "13.67" in out and "99.67" in out

    def test_terms_custom(self, capsys):
        assert main(["terms", "--used", "0,1,2"]) == 0
        assert "\n  0          0      4" in capsys.readouterr().out

    def test_alpha(self, capsys):
        assert main(["alpha", "--ibo=-4,4"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert len(lines) == 4

    def test_bad_config(self, tmp_path, capsys):
        bad = tmp_path / "c.json"
        bad.write_text('{"receivers": ["nope"]}')
        assert main(["sweep", "--config", str(bad)]) == 2
        assert "error" in capsys.readouterr().err

    def test_point(self, capsys):
        argv = ["point", "--receivers", "zf,cnc", "--frames", "50", "--ibo", "-4", "--ebn0", "20"]
        assert main(argv) == 0
        out = capsys.readouterr().out.splitlines()
        assert out[0] == ",".join(CSV_HEADER) and len(out) == 3

    def test_sweep_with_plot(self, tmp_path, capsys):
        cfg = small(n_channel_instances=1)
        cfg_path = tmp_path / "c.json"
        cfg_path.write_text(json.dumps(cfg.to_dict()))
        out = tmp_path / "run" / "r.csv"
        assert main(["sweep", "--config", str(cfg_path), "--out", str(out), "--workers", "1", "--plot"]) == 0
        pngs = sorted(p.name for p in out.parent.glob("*.png"))
        assert pngs == [
            "r_ber_vs_ebn0_ibo-4.png", "r_ber_vs_ebn0_ibo2.png",
            "r_ber_vs_ibo_ebn014.png", "r_ber_vs_ibo_ebn030.png",
        ]
        assert all((out.parent / p).stat().st_size > 1000 for p in pngs)

    def test_sparsity(self, capsys):
        argv = ["sparsity", "--frames", "5000", "--ibo", "-4", "--target", "0", "--limit", "5"]
        assert main(argv) == 0
        out = capsys.readouterr().out
        assert "target 0 (subcarrier -3)" in out and "top terms match" in out


def test_plot_single_point_makes_nothing(tmp_path):
    cfg = small(n_channel_instances=1, ibo_db=[-4.0], ebn0_db=[30.0], receivers=["zf"])
    sweep(cfg, tmp_path / "one.csv", workers=1)
    assert plot_sweep(tmp_path / "one.csv") == []
