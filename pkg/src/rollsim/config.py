"""Run configuration: a flat key=value file with dotted section prefixes.

Example:

    camera.frame_rate = 25
    camera.n_rows_total = 2160
    camera.n_rows_visible = 1080
    camera.min_luminous_exposure = 0.25
    laser.frequency_hz = 750
    laser.duty_cycle = 0.4
    env.ambient_lux = 7800
    corpus.frames_dir = fixtures/street

Unknown keys are errors: a typo must not silently fall back to a default.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from rollsim.corruption import BlindingModel
from rollsim.sensor_timing import CameraSpec, LaserConfig, estimate_exposure_for

__all__ = ["ConfigError", "RunConfig", "parse_config", "load_config", "default_duty_cycles"]


class ConfigError(Exception):
    """Malformed or inconsistent run configuration."""


def default_duty_cycles(n: int = 12) -> list[float]:
    """Log-spaced duty cycles over the 0.1%..40% collection range."""
    lo, hi = math.log(0.001), math.log(0.40)
    return [math.exp(lo + (hi - lo) * i / (n - 1)) for i in range(n)]


def _as_float(v: str) -> float:
    try:
        return float(v)
    except ValueError as exc:
        raise ConfigError(f"expected a number, got {v!r}") from exc


def _as_int(v: str) -> int:
    try:
        return int(v)
    except ValueError as exc:
        raise ConfigError(f"expected an integer, got {v!r}") from exc


def _as_bool(v: str) -> bool:
    if v.lower() in ("true", "yes", "1"):
        return True
    if v.lower() in ("false", "no", "0"):
        return False
    raise ConfigError(f"expected true/false, got {v!r}")


def _as_float_list(v: str) -> list[float]:
    items = [s.strip() for s in v.split(",") if s.strip()]
    if not items:
        raise ConfigError("expected a comma-separated list of numbers")
    return [_as_float(s) for s in items]


def _as_str(v: str) -> str:
    return v


_CONVERTERS = {
    "camera.frame_rate": _as_float,
    "camera.n_rows_total": _as_int,
    "camera.n_rows_visible": _as_int,
    "camera.min_luminous_exposure": _as_float,
    "camera.exposure_min_us": _as_float,
    "camera.exposure_max_us": _as_float,
    "camera.name": _as_str,
    "laser.frequency_hz": _as_float,
    "laser.duty_cycle": _as_float,
    "laser.phase_s": _as_float,
    "laser.color": _as_float_list,
    "laser.irradiance_gain": _as_float,
    "env.ambient_lux": _as_float,
    "env.exposure_time_us": _as_float,
    "synth.n_frames": _as_int,
    "synth.dead_area_layout": _as_str,
    "synth.random_phase": _as_bool,
    "sweep.frequencies_hz": _as_float_list,
    "sweep.duty_cycles": _as_float_list,
    "sweep.exposure_times_us": _as_float_list,
    "corpus.frames_dir": _as_str,
    "corpus.boxes_file": _as_str,
    "corpus.every_k": _as_int,
    "stealth.n_pairs": _as_int,
    "blinding.center_x": _as_float,
    "blinding.center_y": _as_float,
    "blinding.peak_intensity": _as_float,
    "blinding.falloff_radius": _as_float,
    "blinding.color": _as_float_list,
    "detector.kind": _as_str,
    "detector.cmd": _as_str,
    "misest.points_per_axis": _as_int,
    "misest.t_on_us": _as_float,
}

_REQUIRED = ("camera.frame_rate", "camera.n_rows_total", "camera.n_rows_visible")


@dataclass
class RunConfig:
    """Everything a CLI run needs, resolved and validated."""

    camera: CameraSpec
    laser: LaserConfig
    ambient_lux: float | None = None
    exposure_time_us: float | None = None
    synth_n_frames: int = 50
    dead_area_layout: str = "trailing_block"
    random_phase: bool = True
    sweep_frequencies: list[float] = field(default_factory=lambda: [25.0, 250.0, 500.0, 750.0])
    sweep_duty_cycles: list[float] = field(default_factory=default_duty_cycles)
    sweep_exposures_us: list[float] = field(default_factory=lambda: [32.0, 200.0])
    frames_dir: Path | None = None
    boxes_file: Path | None = None
    every_k: int = 1
    stealth_n_pairs: int = 10
    blinding: BlindingModel = field(default_factory=BlindingModel)
    detector_kind: str = "none"
    detector_cmd: str | None = None
    misest_points: int = 32
    misest_t_on_us: float | None = None

    def resolve_t_exp(self) -> tuple[float, str]:
        """Explicit exposure wins; otherwise estimate from H_v and ambient."""
        if self.exposure_time_us is not None:
            return self.exposure_time_us, "configured"
        if self.camera.min_luminous_exposure is not None:
            if self.ambient_lux is None:
                raise ConfigError(
                    "cannot estimate exposure: set env.ambient_lux (lux meter reading) "
                    "or env.exposure_time_us"
                )
            t_exp, clamped = estimate_exposure_for(self.camera, self.ambient_lux)
            return t_exp, "estimated (clamped to camera range)" if clamped else "estimated"
        raise ConfigError(
            "no exposure information: set env.exposure_time_us explicitly or provide "
            "camera.min_luminous_exposure plus env.ambient_lux"
        )


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    raw: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, _, value = stripped.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _CONVERTERS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            raw[key] = _CONVERTERS[key](value)
        except ConfigError as exc:
            raise ConfigError(f"{source}:{lineno}: {key}: {exc}") from exc

    for key in _REQUIRED:
        if key not in raw:
            raise ConfigError(f"{source}: missing required key {key!r}")

    exposure_range = None
    if ("camera.exposure_min_us" in raw) != ("camera.exposure_max_us" in raw):
        raise ConfigError(f"{source}: exposure_min_us and exposure_max_us must be set together")
    if "camera.exposure_min_us" in raw:
        exposure_range = (raw["camera.exposure_min_us"], raw["camera.exposure_max_us"])

    try:
        camera = CameraSpec(
            frame_rate=raw["camera.frame_rate"],
            n_rows_total=raw["camera.n_rows_total"],
            n_rows_visible=raw["camera.n_rows_visible"],
            min_luminous_exposure=raw.get("camera.min_luminous_exposure"),
            exposure_range=exposure_range,
            name=raw.get("camera.name", ""),
        )
        color = raw.get("laser.color", [0.2, 1.0, 0.25])
        if len(color) != 3:
            raise ConfigError("laser.color needs exactly three components")
        laser = LaserConfig(
            frequency=raw.get("laser.frequency_hz", 750.0),
            duty_cycle=raw.get("laser.duty_cycle", 0.40),
            phase=raw.get("laser.phase_s", 0.0),
            color=tuple(color),
            irradiance_gain=raw.get("laser.irradiance_gain", 1.0),
        )
        bl_color = raw.get("blinding.color", [1.0, 1.0, 1.0])
        if len(bl_color) != 3:
            raise ConfigError("blinding.color needs exactly three components")
        blinding = BlindingModel(
            center=(raw.get("blinding.center_x", 0.5), raw.get("blinding.center_y", 0.5)),
            peak_intensity=raw.get("blinding.peak_intensity", 1.0),
            falloff_radius=raw.get("blinding.falloff_radius", 0.75),
            color=tuple(bl_color),
        )
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from exc

    detector_kind = raw.get("detector.kind", "none")
    if detector_kind not in ("none", "toy"):
        raise ConfigError(f"{source}: detector.kind must be 'none' or 'toy', got {detector_kind!r}")

    cfg = RunConfig(
        camera=camera,
        laser=laser,
        ambient_lux=raw.get("env.ambient_lux"),
        exposure_time_us=raw.get("env.exposure_time_us"),
        synth_n_frames=raw.get("synth.n_frames", 50),
        dead_area_layout=raw.get("synth.dead_area_layout", "trailing_block"),
        random_phase=raw.get("synth.random_phase", True),
        blinding=blinding,
        every_k=raw.get("corpus.every_k", 1),
        stealth_n_pairs=raw.get("stealth.n_pairs", 10),
        detector_kind=detector_kind,
        detector_cmd=raw.get("detector.cmd"),
        misest_points=raw.get("misest.points_per_axis", 32),
        misest_t_on_us=raw.get("misest.t_on_us"),
    )
    if "sweep.frequencies_hz" in raw:
        cfg.sweep_frequencies = raw["sweep.frequencies_hz"]
    if "sweep.duty_cycles" in raw:
        cfg.sweep_duty_cycles = raw["sweep.duty_cycles"]
    if "sweep.exposure_times_us" in raw:
        cfg.sweep_exposures_us = raw["sweep.exposure_times_us"]
    if "corpus.frames_dir" in raw:
        cfg.frames_dir = Path(raw["corpus.frames_dir"])
    if "corpus.boxes_file" in raw:
        cfg.boxes_file = Path(raw["corpus.boxes_file"])
    if cfg.every_k < 1:
        raise ConfigError(f"{source}: corpus.every_k must be >= 1")
    return cfg


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    return parse_config(path.read_text(), source=str(path))
