#!/usr/bin/env python3
"""Run the reference-style attack-parameter sweep on a fixture corpus.

Sweeps laser frequency {25, 250, 500, 750} Hz, twelve log-spaced duty
cycles (0.1%..40%) and the sunny/cloudy exposure pair {32, 200} us, then
reports which configuration hides the most objects.  Heavy: 96 parameter
points; trim axes with the flags for a quick look.
"""

import argparse
import csv
import subprocess
import sys
from pathlib import Path

from rollsim import corpus_io
from rollsim.fixtures import make_street_corpus

CONFIG_TEMPLATE = """\
camera.frame_rate = 25
camera.n_rows_total = {n_rows}
camera.n_rows_visible = {n_visible}
laser.frequency_hz = 750
laser.duty_cycle = 0.4
laser.irradiance_gain = 1.0
env.exposure_time_us = 200
synth.n_frames = {n_frames}
corpus.frames_dir = {frames_dir}
detector.kind = toy
sweep.frequencies_hz = {frequencies}
sweep.duty_cycles = {duties}
sweep.exposure_times_us = {exposures}
stealth.n_pairs = 6
"""


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="sweep_run")
    parser.add_argument("--frames", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--jobs", type=int, default=4)
    parser.add_argument("--frequencies", default="25,250,500,750")
    parser.add_argument("--duties", default="")
    parser.add_argument("--exposures", default="32,200")
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    frames = make_street_corpus(args.frames, 320, 192, args.seed)
    corpus_io.save_frames(frames, out / "street")

    if args.duties:
        duties = args.duties
    else:
        from rollsim.config import default_duty_cycles

        duties = ", ".join(f"{d:.6g}" for d in default_duty_cycles())

    cfg_path = out / "sweep.cfg"
    cfg_path.write_text(
        CONFIG_TEMPLATE.format(
            n_rows=384,
            n_visible=192,
            n_frames=12,
            frames_dir=out / "street",
            frequencies=args.frequencies,
            duties=duties,
            exposures=args.exposures,
        )
    )
    cmd = [
        sys.executable, "-m", "rollsim.cli",
        "--config", str(cfg_path), "--out", str(out / "results"),
        "--seed", str(args.seed), "--jobs", str(args.jobs), "sweep",
    ]
    print("running:", " ".join(cmd))
    subprocess.run(cmd, check=True)

    with open(out / "results" / "sweep_summary.csv", newline="") as fh:
        rows = sorted(csv.DictReader(fh), key=lambda r: -float(r["hidden"]))
    print("\ntop configurations by hidden fraction:")
    for row in rows[:5]:
        print(
            f"  f={float(row['f_hz']):g}Hz t_exp={float(row['t_exp_us']):g}us "
            f"t_on={float(row['t_on_us']):.1f}us hidden={float(row['hidden']):.2f} "
            f"misplaced={float(row['misplaced']):.2f}"
        )


if __name__ == "__main__":
    main()
