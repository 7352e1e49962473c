"""Round-trip and schema-validation tests for persisted artifacts."""

import json

import numpy as np
import pytest

from rollsim import corpus_io
from rollsim.corpus_io import DataError, SchemaError, load_boxes, load_frames, save_boxes
from rollsim.corruption import CorruptionManifest, Frame
from rollsim.detection_eval import DetectionBox
from rollsim.pattern_synth import DistortionPattern, Interval
from rollsim.stealth_metrics import StealthRecord


def make_frames(n, h=24, w=16):
    rng = np.random.default_rng(0)
    return [
        Frame(f"{i:06d}", rng.integers(0, 255, size=(h, w, 3), dtype=np.uint8))
        for i in range(n)
    ]


class TestFrames:
    def test_save_load_round_trip(self, tmp_path):
        frames = make_frames(5)
        corpus_io.save_frames(frames, tmp_path / "seq")
        corpus = load_frames(tmp_path / "seq")
        assert corpus.frame_ids == tuple(f"{i:06d}" for i in range(5))
        assert corpus.resolution == (16, 24)
        for orig, loaded in zip(frames, corpus.iter_frames()):
            assert np.array_equal(orig.pixels, loaded.pixels)

    def test_every_k(self, tmp_path):
        corpus_io.save_frames(make_frames(100), tmp_path / "seq")
        corpus = load_frames(tmp_path / "seq", every_k=10)
        assert len(corpus) == 10
        assert corpus.frame_ids[:2] == ("000000", "000010")

    def test_every_one_loads_all(self, tmp_path):
        corpus_io.save_frames(make_frames(7), tmp_path / "seq")
        assert len(load_frames(tmp_path / "seq", every_k=1)) == 7

    def test_empty_dir_errors(self, tmp_path):
        (tmp_path / "empty").mkdir()
        with pytest.raises(DataError, match="no frames"):
            load_frames(tmp_path / "empty")

    def test_corrupt_png_identified(self, tmp_path):
        corpus_io.save_frames(make_frames(3), tmp_path / "seq")
        bad = tmp_path / "seq" / "000001.png"
        bad.write_bytes(b"not a png")
        with pytest.raises(DataError, match="000001.png"):
            load_frames(tmp_path / "seq")

    def test_resolution_mismatch_identified(self, tmp_path):
        corpus_io.save_frames(make_frames(2), tmp_path / "seq")
        corpus_io.save_frames(
            [Frame("000002", np.zeros((10, 10, 3), dtype=np.uint8))], tmp_path / "seq"
        )
        with pytest.raises(DataError, match="resolution mismatch"):
            load_frames(tmp_path / "seq")


class TestBoxes:
    def boxes(self):
        return {
            "000000": [DetectionBox(1.5, 2.0, 10.25, 12.75, "car", 0.97)],
            "000001": [],
            "000002": [
                DetectionBox(0, 0, 5, 5, "person", 0.5),
                DetectionBox(3, 4, 9, 11, "bus", 1.0),
            ],
        }

    def test_round_trip(self, tmp_path):
        path = tmp_path / "boxes.jsonl"
        save_boxes(path, self.boxes())
        assert load_boxes(path) == self.boxes()

    def test_empty_box_list_valid(self, tmp_path):
        path = tmp_path / "boxes.jsonl"
        save_boxes(path, {"000000": []})
        assert load_boxes(path) == {"000000": []}

    def test_degenerate_box_reported_with_path(self, tmp_path):
        path = tmp_path / "boxes.jsonl"
        rec = {"frame_id": "000000",
               "boxes": [{"x1": 10, "y1": 0, "x2": 5, "y2": 5, "class": "car", "score": 0.5}]}
        path.write_text(json.dumps(rec) + "\n")
        with pytest.raises(SchemaError, match=r"boxes.jsonl:1: boxes\[0\]"):
            load_boxes(path)

    def test_missing_field_reported(self, tmp_path):
        path = tmp_path / "boxes.jsonl"
        rec = {"frame_id": "000000", "boxes": [{"x1": 0, "y1": 0, "x2": 5, "y2": 5, "class": "car"}]}
        path.write_text(json.dumps(rec) + "\n")
        with pytest.raises(SchemaError, match="missing field 'score'"):
            load_boxes(path)

    def test_bad_json_line_number(self, tmp_path):
        path = tmp_path / "boxes.jsonl"
        path.write_text('{"frame_id": "000000", "boxes": []}\n{oops\n')
        with pytest.raises(SchemaError, match=":2:"):
            load_boxes(path)


class TestPatterns:
    def test_bit_exact_round_trip(self, tmp_path):
        patterns = [
            DistortionPattern(
                i,
                (Interval(3 * i, 3 * i + 2, (0.1234567890123456, 1.0, 1 / 3)),),
                (0.2, 1.0, 0.25),
            )
            for i in range(3)
        ]
        meta = {"camera": {"frame_rate": 25}, "seed": 7}
        path = tmp_path / "patterns.json"
        corpus_io.save_patterns(path, patterns, meta)
        loaded, loaded_meta = corpus_io.load_patterns(path)
        assert loaded == patterns
        assert loaded_meta == meta

    def test_schema_violation(self, tmp_path):
        path = tmp_path / "patterns.json"
        path.write_text(json.dumps({"frames": []}))
        with pytest.raises(SchemaError, match="meta"):
            corpus_io.load_patterns(path)


class TestManifest:
    def test_round_trip(self, tmp_path):
        m = CorruptionManifest(mode="rolling", seed=5, every_k=10,
                               entries=[{"frame_id": "000000", "pattern_index": 2}])
        path = tmp_path / "manifest.json"
        corpus_io.save_manifest(path, m)
        assert corpus_io.load_manifest(path).to_dict() == m.to_dict()


class TestRecordsCsv:
    def test_round_trip(self, tmp_path):
        records = [
            StealthRecord("video000", 0, "legit", 0.012345678901234567, 0.2, 1 / 7),
            StealthRecord("video000", 1, "rolling", 0.5, 0.25, 0.125),
        ]
        path = tmp_path / "records.csv"
        corpus_io.write_records_csv(path, records)
        assert corpus_io.read_records_csv(path) == sorted(
            records, key=lambda r: (r.video_id, r.pair_index, r.scenario)
        )

    def test_header_enforced(self, tmp_path):
        path = tmp_path / "records.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(SchemaError, match="header"):
            corpus_io.read_records_csv(path)
