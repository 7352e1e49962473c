"""Config parsing and end-to-end CLI behavior on fixture corpora."""

import subprocess
import sys

import pytest

from rollsim import corpus_io
from rollsim.config import ConfigError, default_duty_cycles, parse_config
from rollsim.fixtures import make_scene_frames

BASE_CFG = """
camera.frame_rate = 25
camera.n_rows_total = 384
camera.n_rows_visible = 192
camera.min_luminous_exposure = 0.25
camera.exposure_min_us = 32
camera.exposure_max_us = 1000
laser.frequency_hz = 750
laser.duty_cycle = 0.4
laser.irradiance_gain = 0.5
env.ambient_lux = 1250
synth.n_frames = 6
"""


class TestConfigParsing:
    def test_full_config(self):
        cfg = parse_config(BASE_CFG)
        assert cfg.camera.frame_rate == 25
        assert cfg.camera.exposure_range == (32, 1000)
        assert cfg.laser.duty_cycle == 0.4
        t_exp, source = cfg.resolve_t_exp()
        assert t_exp == pytest.approx(200.0)
        assert source == "estimated"

    def test_explicit_exposure_wins(self):
        cfg = parse_config(BASE_CFG + "env.exposure_time_us = 99\n")
        assert cfg.resolve_t_exp() == (99.0, "configured")

    def test_clamped_estimate_flagged(self):
        cfg = parse_config(BASE_CFG.replace("env.ambient_lux = 1250", "env.ambient_lux = 100"))
        t_exp, source = cfg.resolve_t_exp()
        assert t_exp == 1000.0
        assert "clamped" in source

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown key"):
            parse_config(BASE_CFG + "camera.zoom = 2\n")

    def test_duplicate_key_rejected(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config(BASE_CFG + "laser.duty_cycle = 0.2\n")

    def test_missing_required_rejected(self):
        with pytest.raises(ConfigError, match="camera.frame_rate"):
            parse_config("camera.n_rows_total = 100\ncamera.n_rows_visible = 50\n")

    def test_comments_and_blanks_ignored(self):
        cfg = parse_config(BASE_CFG + "\n# a comment\n  \n")
        assert cfg.camera.n_rows_total == 384

    def test_missing_exposure_info_instructive(self):
        text = BASE_CFG.replace("camera.min_luminous_exposure = 0.25\n", "")
        cfg = parse_config(text.replace("env.ambient_lux = 1250\n", ""))
        with pytest.raises(ConfigError, match="exposure_time_us"):
            cfg.resolve_t_exp()

    def test_sweep_defaults(self):
        cfg = parse_config(BASE_CFG)
        assert cfg.sweep_frequencies == [25.0, 250.0, 500.0, 750.0]
        assert len(cfg.sweep_duty_cycles) == 12
        assert cfg.sweep_duty_cycles[0] == pytest.approx(0.001)
        assert cfg.sweep_duty_cycles[-1] == pytest.approx(0.40)
        assert cfg.sweep_exposures_us == [32.0, 200.0]

    def test_default_duty_cycles_log_spaced(self):
        d = default_duty_cycles()
        ratios = [d[i + 1] / d[i] for i in range(len(d) - 1)]
        assert max(ratios) == pytest.approx(min(ratios))


def run_cli(args, cwd):
    return subprocess.run(
        [sys.executable, "-m", "rollsim.cli", *args],
        capture_output=True,
        text=True,
        cwd=cwd,
    )


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    ws = tmp_path_factory.mktemp("cli")
    frames = make_scene_frames(8, 256, 192, seed=21)
    corpus_io.save_frames(frames, ws / "frames")
    cfg = BASE_CFG + (
        "corpus.frames_dir = frames\n"
        "detector.kind = toy\n"
        "sweep.frequencies_hz = 750\n"
        "sweep.duty_cycles = 0.4\n"
        "sweep.exposure_times_us = 200\n"
        "stealth.n_pairs = 3\n"
    )
    (ws / "run.cfg").write_text(cfg)
    return ws


class TestCli:
    def test_plan(self, workspace):
        proc = run_cli(["--config", "run.cfg", "--out", "plan_out", "plan"], workspace)
        assert proc.returncode == 0, proc.stderr
        assert "delta_t_rst_us: 104.2" in proc.stdout
        assert "distortions_per_frame: 15" in proc.stdout
        assert (workspace / "plan_out" / "misestimation_surface.csv").exists()

    def test_plan_without_exposure_info_exits_1(self, workspace):
        text = BASE_CFG.replace("camera.min_luminous_exposure = 0.25\n", "")
        (workspace / "noexp.cfg").write_text(text.replace("env.ambient_lux = 1250\n", ""))
        proc = run_cli(["--config", "noexp.cfg", "plan"], workspace)
        assert proc.returncode == 1
        assert "exposure" in proc.stderr

    def test_unknown_config_key_exits_1(self, workspace):
        (workspace / "bad.cfg").write_text(BASE_CFG + "laser.wat = 1\n")
        proc = run_cli(["--config", "bad.cfg", "plan"], workspace)
        assert proc.returncode == 1

    def test_missing_corpus_exits_2(self, workspace):
        (workspace / "nocorpus.cfg").write_text(BASE_CFG + "corpus.frames_dir = nowhere\n")
        proc = run_cli(["--config", "nocorpus.cfg", "sweep"], workspace)
        assert proc.returncode == 2

    def test_synth_corrupt_evaluate_chain(self, workspace):
        proc = run_cli(["--config", "run.cfg", "--out", "chain", "--seed", "5", "synth"], workspace)
        assert proc.returncode == 0, proc.stderr
        proc = run_cli(
            ["--config", "run.cfg", "--out", "chain", "--seed", "5", "corrupt",
             "--patterns", "chain/patterns.json"],
            workspace,
        )
        assert proc.returncode == 0, proc.stderr
        assert (workspace / "chain" / "corrupted" / "000000.png").exists()

        # Detect on both corpora with the bundled toy detector, then evaluate.
        from rollsim.corpus_io import load_frames, save_boxes
        from rollsim.fixtures import toy_detect

        orig = load_frames(workspace / "frames")
        corr = load_frames(workspace / "chain" / "corrupted")
        save_boxes(workspace / "orig.jsonl", {f.frame_id: toy_detect(f) for f in orig.iter_frames()})
        save_boxes(workspace / "corr.jsonl", {f.frame_id: toy_detect(f) for f in corr.iter_frames()})
        proc = run_cli(
            ["--config", "run.cfg", "--out", "chain", "evaluate",
             "--orig-boxes", "orig.jsonl", "--corr-boxes", "corr.jsonl",
             "--params", "750,200,533.3"],
            workspace,
        )
        assert proc.returncode == 0, proc.stderr
        assert (workspace / "chain" / "summary.csv").exists()

    def test_synth_deterministic(self, workspace):
        run_cli(["--config", "run.cfg", "--out", "s1", "--seed", "9", "synth"], workspace)
        run_cli(["--config", "run.cfg", "--out", "s2", "--seed", "9", "synth"], workspace)
        a = (workspace / "s1" / "patterns.json").read_bytes()
        b = (workspace / "s2" / "patterns.json").read_bytes()
        assert a == b

    def test_stealth_outputs(self, workspace):
        proc = run_cli(["--config", "run.cfg", "--out", "st", "--seed", "2", "stealth"], workspace)
        assert proc.returncode == 0, proc.stderr
        records = corpus_io.read_records_csv(workspace / "st" / "stealth_records.csv")
        scenarios = {r.scenario for r in records}
        assert {"legit", "rolling", "blinding"} <= scenarios

    def test_validate_exposure(self, workspace):
        proc = run_cli(
            ["--config", "run.cfg", "--out", "vx", "validate-exposure"], workspace
        )
        assert proc.returncode == 0, proc.stderr
        text = (workspace / "vx" / "exposure_correlation.csv").read_text()
        assert text.startswith("channel,scenario,correlation")
        # matched-exposure correlation strictly above the offset one per channel
        import csv as _csv
        from io import StringIO

        rows = list(_csv.DictReader(StringIO(text)))
        by = {(r["channel"], r["scenario"]): float(r["correlation"]) for r in rows}
        for ch in ("R", "G", "B"):
            assert by[(ch, "manual")] > by[(ch, "manual_plus_offset")]
