#!/usr/bin/env python3
"""Generate the synthetic fixture corpora used by the demos and tests.

Writes a street-scene frame sequence (for detection experiments) and a
ready-to-use run config next to it.  Everything is deterministic in --seed.
"""

import argparse
from pathlib import Path

from rollsim import corpus_io
from rollsim.fixtures import make_street_corpus

CONFIG_TEMPLATE = """\
camera.frame_rate = 25
camera.n_rows_total = {n_rows}
camera.n_rows_visible = {n_visible}
camera.min_luminous_exposure = 0.25
camera.exposure_min_us = 32
camera.exposure_max_us = 1000
laser.frequency_hz = 750
laser.duty_cycle = 0.4
laser.irradiance_gain = 1.0
env.exposure_time_us = 200
synth.n_frames = 25
corpus.frames_dir = {frames_dir}
detector.kind = toy
stealth.n_pairs = 10
"""


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="fixtures", help="output directory")
    parser.add_argument("--frames", type=int, default=50)
    parser.add_argument("--width", type=int, default=640)
    parser.add_argument("--height", type=int, default=360)
    parser.add_argument("--seed", type=int, default=99)
    args = parser.parse_args()

    out = Path(args.out)
    frames = make_street_corpus(args.frames, args.width, args.height, args.seed)
    corpus_io.save_frames(frames, out / "street")
    config = CONFIG_TEMPLATE.format(
        n_rows=args.height * 2,
        n_visible=args.height,
        frames_dir=out / "street",
    )
    (out / "street.cfg").write_text(config)
    print(f"wrote {len(frames)} frames to {out / 'street'} and config {out / 'street.cfg'}")
    print(f"try: rollsim --config {out / 'street.cfg'} --out out plan")


if __name__ == "__main__":
    main()
