"""Command-line pipeline: plan, synthesize, corrupt, evaluate, sweep.

Subcommands compose the library modules end to end.  Every run is a pure
function of (config, seed): worker count changes wall time only, because
per-frame work is independent and results are collected in input order
before anything is written.

Exit codes: 0 success, 1 config error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import shlex
import subprocess
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from rollsim import corpus_io
from rollsim.config import ConfigError, RunConfig, load_config
from rollsim.corpus_io import Corpus, DataError
from rollsim.corruption import Frame, blind, corrupt_corpus, overlay
from rollsim.detection_eval import OutcomeReport, aggregate, categorize
from rollsim.fixtures import toy_detect
from rollsim.pattern_synth import DistortionPattern, TimelineConfig, synthesize
from rollsim.sensor_timing import (
    EnvConditions,
    delta_t_rst,
    distortion_bounds,
    distortions_per_frame,
    misestimation_surface,
    on_time,
)
from rollsim.stealth_metrics import auc_report, build_records

__all__ = ["main"]


def _pmap(fn, items, jobs: int):
    """Parallel map that preserves input order (output-stable under jobs)."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _sub_seed(seed: int, *parts: int) -> int:
    return int(np.random.SeedSequence([seed, *parts]).generate_state(1)[0])


def _env_for(cfg: RunConfig, t_exp_us: float) -> EnvConditions:
    return EnvConditions(
        ambient_illuminance=cfg.ambient_lux if cfg.ambient_lux is not None else 1.0,
        exposure_time_us=t_exp_us,
    )


def _load_corpus(cfg: RunConfig) -> Corpus:
    if cfg.frames_dir is None:
        raise ConfigError("this command needs corpus.frames_dir in the config")
    return corpus_io.load_frames(cfg.frames_dir, every_k=cfg.every_k)


def _detect_frames(cfg: RunConfig, frames: list[Frame], jobs: int, workdir: Path) -> dict:
    """Produce boxes for frames via the configured detector."""
    if cfg.detector_kind == "toy":
        boxes = _pmap(toy_detect, frames, jobs)
        return {fr.frame_id: bx for fr, bx in zip(frames, boxes)}
    if cfg.detector_cmd:
        frames_dir = workdir / "frames"
        out_file = workdir / "boxes.jsonl"
        corpus_io.save_frames(frames, frames_dir)
        cmd = cfg.detector_cmd.format(frames=frames_dir, out=out_file)
        proc = subprocess.run(shlex.split(cmd), capture_output=True, text=True)
        if proc.returncode != 0:
            raise DataError(f"detector command failed ({proc.returncode}): {proc.stderr.strip()}")
        return corpus_io.load_boxes(out_file)
    raise ConfigError(
        "no detector available: set detector.kind = toy, detector.cmd, or supply "
        "pre-computed box files"
    )


def _synthesize_patterns(cfg: RunConfig, t_exp_us: float, seed: int, n_frames: int | None = None,
                         laser=None) -> list[DistortionPattern]:
    timeline = TimelineConfig(
        spec=cfg.camera,
        laser=laser or cfg.laser,
        env=_env_for(cfg, t_exp_us),
        n_frames=n_frames or cfg.synth_n_frames,
        dead_area_layout=cfg.dead_area_layout,
        seed=seed,
        random_phase=cfg.random_phase,
    )
    return synthesize(timeline)


def cmd_plan(cfg: RunConfig, out: Path, seed: int, jobs: int, args) -> int:
    dt = delta_t_rst(cfg.camera)
    t_on = on_time(cfg.laser)
    t_exp, source = cfg.resolve_t_exp()
    n_min, n_max = distortion_bounds(t_exp, t_on, dt)
    n_d = distortions_per_frame(cfg.laser, cfg.camera)

    print(f"delta_t_rst_us: {dt:.4g}")
    print(f"t_on_us: {t_on:.4g}")
    print(f"t_exp_us: {t_exp:.4g} ({source})")
    print(f"n_min: {n_min}  n_max: {n_max}  n_min_effective: {max(n_min, 1)}")
    print(f"distortions_per_frame: {n_d:.4g}")

    t_exp_range = cfg.camera.exposure_range or (t_exp / 4, t_exp * 4)
    if cfg.misest_t_on_us is not None:
        surf = misestimation_surface(
            t_exp_range, (cfg.misest_t_on_us, cfg.misest_t_on_us), dt,
            points_per_axis=cfg.misest_points, t_on_points=1,
        )
    else:
        surf = misestimation_surface(
            t_exp_range, (t_on, t_on), dt, points_per_axis=cfg.misest_points, t_on_points=1
        )
    out.mkdir(parents=True, exist_ok=True)
    corpus_io.write_surface_csv(out / "misestimation_surface.csv", surf.rows)
    print(f"misestimation: max_ratio={surf.max_ratio:.4g} "
          f"fraction_within_factor_2={surf.fraction_within_factor_2:.4g}")
    print(f"wrote {out / 'misestimation_surface.csv'}")
    return 0


def cmd_synth(cfg: RunConfig, out: Path, seed: int, jobs: int, args) -> int:
    t_exp, source = cfg.resolve_t_exp()
    patterns = _synthesize_patterns(cfg, t_exp, seed)
    if not patterns:
        raise DataError("no pulse intersected any visible row; nothing to write")
    out.mkdir(parents=True, exist_ok=True)
    timeline = TimelineConfig(
        spec=cfg.camera, laser=cfg.laser, env=_env_for(cfg, t_exp),
        n_frames=cfg.synth_n_frames, dead_area_layout=cfg.dead_area_layout,
        seed=seed, random_phase=cfg.random_phase,
    )
    corpus_io.save_patterns(out / "patterns.json", patterns, timeline.meta())
    n = sum(len(p.intervals) for p in patterns) / len(patterns)
    print(f"wrote {out / 'patterns.json'} ({len(patterns)} frames, "
          f"mean {n:.2f} visible distortions/frame, t_exp {source})")
    return 0


def cmd_corrupt(cfg: RunConfig, out: Path, seed: int, jobs: int, args) -> int:
    corpus = _load_corpus(cfg)
    frames = list(corpus.iter_frames())
    if args.blinding:
        attack = cfg.blinding
    else:
        if not args.patterns:
            raise ConfigError("corrupt needs --patterns FILE or --blinding")
        patterns, _ = corpus_io.load_patterns(args.patterns)
        attack = patterns
    corrupted, manifest = corrupt_corpus(frames, attack, every_k=1, seed=seed)
    out.mkdir(parents=True, exist_ok=True)
    corpus_io.save_frames(corrupted, out / "corrupted")
    corpus_io.save_manifest(out / "manifest.json", manifest)
    print(f"wrote {len(corrupted)} corrupted frames to {out / 'corrupted'}")
    return 0


def cmd_evaluate(cfg: RunConfig, out: Path, seed: int, jobs: int, args) -> int:
    orig = corpus_io.load_boxes(args.orig_boxes)
    corr = corpus_io.load_boxes(args.corr_boxes)
    params = tuple(float(x) for x in args.params.split(",")) if args.params else (0.0, 0.0, 0.0)
    if len(params) != 3:
        raise ConfigError("--params must be f_hz,t_exp_us,t_on_us")
    missing = sorted(set(orig) - set(corr))
    if missing:
        raise DataError(f"corrupted boxes missing for frames: {missing[:5]}")
    reports = [
        categorize(orig[fid], corr[fid], frame_id=fid, params=params) for fid in sorted(orig)
    ]
    out.mkdir(parents=True, exist_ok=True)
    corpus_io.write_summary_csv(out / "summary.csv", aggregate(reports))
    hidden = sum(r.hidden for r in reports)
    total = sum(r.n_original for r in reports)
    print(f"hidden {hidden}/{total} boxes over {len(reports)} frames; "
          f"wrote {out / 'summary.csv'}")
    return 0


def _stealth_pairs(corpus: Corpus, n_pairs: int):
    """Evenly spaced consecutive-frame index pairs."""
    n = len(corpus.frame_ids)
    if n < 2:
        raise DataError("stealth needs at least two frames")
    n_pairs = min(n_pairs, n - 1)
    positions = sorted({round(i * (n - 2) / max(n_pairs - 1, 1)) for i in range(n_pairs)})
    return [(j, j + 1) for j in positions]


def _stealth_records(cfg: RunConfig, corpus: Corpus, patterns, seed: int, jobs: int,
                     rolling_tag: str | None = None):
    """legit + blinding + rolling records over the corpus pair set."""
    video = corpus.root.name or "corpus"
    pair_idx = _stealth_pairs(corpus, cfg.stealth_n_pairs)
    frames = {i: corpus.load_frame(corpus.frame_ids[i])
              for i in sorted({i for pair in pair_idx for i in pair})}
    rng = np.random.default_rng(seed)
    legit, rolling, blinding = [], [], []
    for k, (a, b) in enumerate(pair_idx):
        prev, curr = frames[a], frames[b]
        legit.append((video, k, prev, curr))
        if patterns:
            pat = patterns[int(rng.integers(len(patterns)))]
            rolling.append((rolling_tag or video, k, prev, overlay(curr, pat)))
        blinding.append((video, k, prev, blind(curr, cfg.blinding)))

    records = []
    records += build_records(legit, "legit")
    if rolling:
        records += build_records(rolling, "rolling")
    records += build_records(blinding, "blinding")
    return records


def cmd_stealth(cfg: RunConfig, out: Path, seed: int, jobs: int, args) -> int:
    corpus = _load_corpus(cfg)
    if args.patterns:
        patterns, _ = corpus_io.load_patterns(args.patterns)
    else:
        t_exp, _ = cfg.resolve_t_exp()
        patterns = _synthesize_patterns(cfg, t_exp, seed)
    records = _stealth_records(cfg, corpus, patterns, seed, jobs)
    out.mkdir(parents=True, exist_ok=True)
    corpus_io.write_records_csv(out / "stealth_records.csv", records)
    corpus_io.write_auc_report_csv(out / "stealth_auc.csv", auc_report(records))
    for rep in auc_report(records):
        print(f"{rep.metric:7s} {rep.scenario:9s} auc={rep.auc:.4f} "
              f"det@0fpr={rep.detection_rate_at_0fpr:.4f}")
    print(f"wrote {out / 'stealth_records.csv'} and {out / 'stealth_auc.csv'}")
    return 0


def cmd_sweep(cfg: RunConfig, out: Path, seed: int, jobs: int, args) -> int:
    corpus = _load_corpus(cfg)
    frames = list(corpus.iter_frames())
    out.mkdir(parents=True, exist_ok=True)
    sweep_dir = out / "sweep"
    sweep_dir.mkdir(exist_ok=True)

    if cfg.boxes_file is not None:
        orig_boxes = corpus_io.load_boxes(cfg.boxes_file)
        missing = [fid for fid in corpus.frame_ids if fid not in orig_boxes]
        if missing:
            raise DataError(f"boxes file lacks frames: {missing[:5]}")
    else:
        orig_boxes = _detect_frames(cfg, frames, jobs, sweep_dir / "original")

    all_reports: list[OutcomeReport] = []
    pair_idx = _stealth_pairs(corpus, cfg.stealth_n_pairs)
    video = corpus.root.name or "corpus"
    legit_pairs = [(video, k, frames[a], frames[b]) for k, (a, b) in enumerate(pair_idx)]
    blinding_pairs = [
        (video, k, frames[a], blind(frames[b], cfg.blinding)) for k, (a, b) in enumerate(pair_idx)
    ]
    stealth_records = build_records(legit_pairs, "legit") + build_records(
        blinding_pairs, "blinding"
    )

    for i_f, f_hz in enumerate(cfg.sweep_frequencies):
        for i_d, duty in enumerate(cfg.sweep_duty_cycles):
            for i_t, t_exp in enumerate(cfg.sweep_exposures_us):
                laser = replace(cfg.laser, frequency=f_hz, duty_cycle=duty)
                t_on = on_time(laser)
                tag = f"f{f_hz:g}_d{duty:.6g}_te{t_exp:g}"
                params = (f_hz, t_exp, t_on)
                sub = _sub_seed(seed, i_f, i_d, i_t)
                try:
                    patterns = _synthesize_patterns(cfg, t_exp, sub, laser=laser)
                    if not patterns:
                        raise DataError("no pulse intersected any visible row")
                    point_dir = sweep_dir / tag
                    point_dir.mkdir(parents=True, exist_ok=True)
                    timeline = TimelineConfig(
                        spec=cfg.camera, laser=laser, env=_env_for(cfg, t_exp),
                        n_frames=cfg.synth_n_frames, dead_area_layout=cfg.dead_area_layout,
                        seed=sub, random_phase=cfg.random_phase,
                    )
                    corpus_io.save_patterns(point_dir / "patterns.json", patterns, timeline.meta())
                    corrupted, manifest = corrupt_corpus(frames, patterns, every_k=1, seed=sub)
                    corpus_io.save_manifest(point_dir / "manifest.json", manifest)
                    corpus_io.save_frames(corrupted, point_dir / "corrupted")

                    if cfg.detector_kind == "none" and cfg.detector_cmd is None:
                        precomputed = point_dir / "boxes.jsonl"
                        if not precomputed.exists():
                            raise DataError(
                                f"no detector configured and {precomputed} not found; run a "
                                f"detector bridge over {point_dir / 'corrupted'} first"
                            )
                        corr_boxes = corpus_io.load_boxes(precomputed)
                    else:
                        corr_boxes = _detect_frames(cfg, corrupted, jobs, point_dir)

                    for fr in frames:
                        all_reports.append(
                            categorize(
                                orig_boxes[fr.frame_id],
                                corr_boxes.get(fr.frame_id, []),
                                frame_id=fr.frame_id,
                                params=params,
                            )
                        )
                    rng = np.random.default_rng(_sub_seed(seed, i_f, i_d, i_t, 1))
                    rolling_pairs = []
                    for k, (a, b) in enumerate(pair_idx):
                        pat = patterns[int(rng.integers(len(patterns)))]
                        rolling_pairs.append((tag, k, frames[a], overlay(frames[b], pat)))
                    stealth_records += build_records(rolling_pairs, "rolling")
                except (DataError, ValueError) as exc:
                    raise DataError(f"sweep point (f={f_hz}, duty={duty:.6g}, "
                                    f"t_exp={t_exp}): {exc}") from exc

    corpus_io.write_summary_csv(out / "sweep_summary.csv", aggregate(all_reports))
    corpus_io.write_records_csv(out / "stealth_records.csv", stealth_records)
    corpus_io.write_auc_report_csv(out / "stealth_auc.csv", auc_report(stealth_records))
    print(f"wrote {out / 'sweep_summary.csv'} "
          f"({len(all_reports)} frame reports over "
          f"{len(cfg.sweep_frequencies) * len(cfg.sweep_duty_cycles) * len(cfg.sweep_exposures_us)} "
          f"parameter points)")
    return 0


def cmd_validate_exposure(cfg: RunConfig, out: Path, seed: int, jobs: int, args) -> int:
    from rollsim.exposure_validation import (
        channel_histograms,
        histogram_cross_correlation,
        simulate_capture,
    )
    from rollsim.fixtures import make_scene_frames

    if cfg.frames_dir is not None:
        corpus = _load_corpus(cfg)
        base = corpus.load_frame(corpus.frame_ids[0]).pixels
    else:
        base = make_scene_frames(1, 320, 240, seed)[0].pixels
    t_exp, _ = cfg.resolve_t_exp()

    auto = simulate_capture(base, t_exp, t_exp, seed=_sub_seed(seed, 0))
    manual = simulate_capture(base, t_exp, t_exp, seed=_sub_seed(seed, 1))
    offset = simulate_capture(base, t_exp + args.offset_us, t_exp, seed=_sub_seed(seed, 2))

    rows = []
    for scenario, capture in (("manual", manual), ("manual_plus_offset", offset)):
        for h_auto, h_other in zip(channel_histograms(auto), channel_histograms(capture)):
            corr = histogram_cross_correlation(h_auto, h_other)
            rows.append((h_auto.channel, scenario, corr))
    out.mkdir(parents=True, exist_ok=True)
    corpus_io.write_correlation_csv(out / "exposure_correlation.csv", rows)
    for ch, sc, corr in rows:
        print(f"{ch} {sc:20s} {corr:.4f}")
    print(f"wrote {out / 'exposure_correlation.csv'}")
    return 0


_COMMANDS = {
    "plan": cmd_plan,
    "synth": cmd_synth,
    "corrupt": cmd_corrupt,
    "evaluate": cmd_evaluate,
    "stealth": cmd_stealth,
    "sweep": cmd_sweep,
    "validate-exposure": cmd_validate_exposure,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rollsim",
        description="Rolling-shutter laser attack simulator and planner",
    )
    parser.add_argument("--config", required=True, help="run configuration file")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--jobs", type=int, default=1)
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("plan", help="print timing plan and misestimation table")
    sub.add_parser("synth", help="synthesize a distortion pattern file")
    p_corrupt = sub.add_parser("corrupt", help="overlay patterns or blinding onto a corpus")
    p_corrupt.add_argument("--patterns", help="pattern file from synth")
    p_corrupt.add_argument("--blinding", action="store_true", help="apply the blinding model")
    p_eval = sub.add_parser("evaluate", help="categorize detection outcomes")
    p_eval.add_argument("--orig-boxes", required=True)
    p_eval.add_argument("--corr-boxes", required=True)
    p_eval.add_argument("--params", help="f_hz,t_exp_us,t_on_us tag for the table")
    p_stealth = sub.add_parser("stealth", help="stealth metrics vs blinding baseline")
    p_stealth.add_argument("--patterns", help="pattern file (default: synthesize)")
    sub.add_parser("sweep", help="full parameter sweep")
    p_val = sub.add_parser("validate-exposure", help="histogram cross-correlation check")
    p_val.add_argument("--offset-us", type=float, default=60.0)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        return _COMMANDS[args.command](cfg, Path(args.out), args.seed, args.jobs, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
