"""Rolling-shutter timing model: distortion geometry and parameter estimation.

A modulated light source pointed at a rolling-shutter sensor brightens the
band of rows whose exposure windows overlap the pulse.  Everything in this
module is closed-form arithmetic on five quantities:

    t_exp   per-row exposure (integration) time
    t_on    pulse on-time, duty_cycle / frequency
    dt_rst  row reset interval, 1 / (frame_rate * n_rows_total)
    o       pulse delay after the nearest row reset, in [0, dt_rst)
    f, F    pulse frequency and camera frame rate

The affected-row count for a known offset is

    N_o = ceil((t_exp - o)/dt_rst) + ceil((t_on + o)/dt_rst) - 1

which equals the number of half-open row windows [i*dt_rst, i*dt_rst + t_exp)
intersecting the pulse interval.  Since the attacker cannot observe o, only
the bounds N_min = ceil(t_exp/dt)+ceil(t_on/dt)-2 and N_max = N_min+2 are
plannable.

Times cross the public API in microseconds but are converted to integer
nanoseconds internally so the ceilings are exact: a boundary case like
t_exp == k*dt_rst resolves as the mathematical ceiling (ceil(k) == k) instead
of depending on float rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

__all__ = [
    "CameraSpec",
    "LaserConfig",
    "EnvConditions",
    "TimingPlan",
    "delta_t_rst",
    "estimate_n_rows",
    "estimate_exposure",
    "estimate_exposure_for",
    "distortion_size",
    "distortion_bounds",
    "distortions_per_frame",
    "on_time",
    "timing_plan",
    "misestimation_ratio",
    "misestimation_surface",
    "MisestimationSurface",
]

NS_PER_US = 1000


def _to_ns(t_us: float) -> int:
    """Microseconds to integer nanoseconds, round half up (deterministic)."""
    return math.floor(t_us * NS_PER_US + 0.5)


def _ceil_div(a: int, b: int) -> int:
    """Mathematical ceil(a/b) for integers, b > 0 (a may be negative)."""
    return -((-a) // b)


@dataclass(frozen=True)
class CameraSpec:
    """Static, datasheet-derived camera parameters.

    min_luminous_exposure is in lux-seconds; exposure_range, when present,
    is (t_min_us, t_max_us) and bounds what the auto-exposure will pick.
    """

    frame_rate: float
    n_rows_total: int
    n_rows_visible: int
    min_luminous_exposure: float | None = None
    exposure_range: tuple[float, float] | None = None
    name: str = ""

    def __post_init__(self):
        if self.frame_rate <= 0:
            raise ValueError(f"frame_rate must be > 0, got {self.frame_rate}")
        if not (1 <= self.n_rows_visible <= self.n_rows_total):
            raise ValueError(
                f"need 1 <= n_rows_visible <= n_rows_total, got "
                f"{self.n_rows_visible}/{self.n_rows_total}"
            )
        if self.exposure_range is not None:
            t_min, t_max = self.exposure_range
            if not (0 < t_min <= t_max):
                raise ValueError(f"exposure_range must satisfy 0 < min <= max, got {self.exposure_range}")

    @property
    def visible_fraction(self) -> float:
        return self.n_rows_visible / self.n_rows_total


@dataclass(frozen=True)
class LaserConfig:
    """Adversary-controlled modulation parameters.

    color is an RGB weight triple in [0,1]^3; irradiance_gain scales how much
    a full-exposure overlap brightens a row (1.0 saturates it).
    """

    frequency: float
    duty_cycle: float
    phase: float = 0.0
    color: tuple[float, float, float] = (0.0, 1.0, 0.0)
    irradiance_gain: float = 1.0

    def __post_init__(self):
        if self.frequency <= 0:
            raise ValueError(f"frequency must be > 0, got {self.frequency}")
        if not (0 < self.duty_cycle < 1):
            raise ValueError(f"duty_cycle must be in (0,1), got {self.duty_cycle}")
        if any(not (0 <= c <= 1) for c in self.color):
            raise ValueError(f"color weights must be in [0,1], got {self.color}")
        if self.irradiance_gain < 0:
            raise ValueError(f"irradiance_gain must be >= 0, got {self.irradiance_gain}")


@dataclass(frozen=True)
class EnvConditions:
    """Ambient light level and the exposure time it induces."""

    ambient_illuminance: float
    exposure_time_us: float

    def __post_init__(self):
        if self.ambient_illuminance <= 0:
            raise ValueError(f"ambient_illuminance must be > 0, got {self.ambient_illuminance}")
        if self.exposure_time_us <= 0:
            raise ValueError(f"exposure_time_us must be > 0, got {self.exposure_time_us}")


@dataclass(frozen=True)
class TimingPlan:
    """Resolved attack timing for one (camera, laser, exposure) choice."""

    delta_t_rst_us: float
    offset_us: float
    n_o: int
    n_min: int
    n_max: int
    n_d: float
    n_min_effective: int = field(init=False)

    def __post_init__(self):
        if self.delta_t_rst_us <= 0:
            raise ValueError("delta_t_rst_us must be > 0")
        if not (0 <= self.offset_us < self.delta_t_rst_us):
            raise ValueError("offset must lie in [0, delta_t_rst)")
        if not (self.n_min <= self.n_o <= self.n_max):
            raise ValueError("n_o outside [n_min, n_max]")
        if self.n_max - self.n_min != 2:
            raise ValueError("n_max - n_min must equal 2")
        if self.n_d < 0:
            raise ValueError("n_d must be >= 0")
        # Eq-style n_min can be 0, but a pulse that fires during active
        # readout always hits at least one row.
        object.__setattr__(self, "n_min_effective", max(self.n_min, 1))


def delta_t_rst(spec: CameraSpec) -> float:
    """Row reset interval in microseconds: 1 / (frame_rate * n_rows_total)."""
    return 1e6 / (spec.frame_rate * spec.n_rows_total)


def estimate_n_rows(n_visible: int, visible_fraction: float) -> int:
    """Total sensor rows from the visible count and the observed visible fraction.

    The fraction comes from counting visible vs. invisible distortions while
    sweeping the pattern across the sensor.
    """
    if not (0 < visible_fraction <= 1):
        raise ValueError(f"visible_fraction must be in (0,1], got {visible_fraction}")
    return round(n_visible / visible_fraction)


def estimate_exposure(h_v: float, e_v: float) -> float:
    """Auto-exposure estimate in microseconds: t_exp = H_v / E_v.

    h_v is the camera's minimal luminous exposure (lux-seconds), e_v the
    measured ambient illuminance (lux).
    """
    if h_v <= 0 or e_v <= 0:
        raise ValueError(f"h_v and e_v must be > 0, got h_v={h_v}, e_v={e_v}")
    return h_v / e_v * 1e6


def estimate_exposure_for(spec: CameraSpec, e_v: float) -> tuple[float, bool]:
    """Exposure estimate for a camera, clamped to its exposure range.

    Returns (t_exp_us, clamped).  Real cameras bound what the auto-exposure
    may pick, so an out-of-range estimate snaps to the nearest bound.
    """
    if spec.min_luminous_exposure is None:
        raise ValueError("camera spec has no min_luminous_exposure; supply t_exp explicitly")
    t_exp = estimate_exposure(spec.min_luminous_exposure, e_v)
    if spec.exposure_range is None:
        return t_exp, False
    t_min, t_max = spec.exposure_range
    clamped = min(max(t_exp, t_min), t_max)
    return clamped, clamped != t_exp


def distortion_size(t_exp_us: float, t_on_us: float, delta_t_rst_us: float, o_us: float) -> int:
    """Affected-row count N_o for a known pulse offset o in [0, dt_rst)."""
    if t_exp_us <= 0 or t_on_us <= 0 or delta_t_rst_us <= 0:
        raise ValueError("t_exp, t_on and delta_t_rst must be > 0")
    t_exp, t_on, dt, o = map(_to_ns, (t_exp_us, t_on_us, delta_t_rst_us, o_us))
    if not (0 <= o < dt):
        raise ValueError(f"offset must lie in [0, delta_t_rst), got o={o_us}us, dt={delta_t_rst_us}us")
    return _ceil_div(t_exp - o, dt) + _ceil_div(t_on + o, dt) - 1


def distortion_bounds(t_exp_us: float, t_on_us: float, delta_t_rst_us: float) -> tuple[int, int]:
    """(N_min, N_max) over all offsets; N_max - N_min == 2 identically."""
    if t_exp_us <= 0 or t_on_us <= 0 or delta_t_rst_us <= 0:
        raise ValueError("t_exp, t_on and delta_t_rst must be > 0")
    t_exp, t_on, dt = map(_to_ns, (t_exp_us, t_on_us, delta_t_rst_us))
    n_min = _ceil_div(t_exp, dt) + _ceil_div(t_on, dt) - 2
    return n_min, n_min + 2


def on_time(laser: LaserConfig) -> float:
    """Pulse on-time in microseconds: duty_cycle / frequency."""
    return laser.duty_cycle / laser.frequency * 1e6


def distortions_per_frame(laser: LaserConfig, spec: CameraSpec) -> float:
    """Expected visible distortions per frame: (f/F) * (n_visible/n_rows)."""
    return (laser.frequency / spec.frame_rate) * spec.visible_fraction


def timing_plan(
    spec: CameraSpec,
    laser: LaserConfig,
    t_exp_us: float,
    o_us: float = 0.0,
) -> TimingPlan:
    """Bundle the derived timing quantities for one configuration."""
    dt = delta_t_rst(spec)
    t_on = on_time(laser)
    n_min, n_max = distortion_bounds(t_exp_us, t_on, dt)
    return TimingPlan(
        delta_t_rst_us=dt,
        offset_us=o_us,
        n_o=distortion_size(t_exp_us, t_on, dt, o_us),
        n_min=n_min,
        n_max=n_max,
        n_d=distortions_per_frame(laser, spec),
    )


def _n_max(t_exp_ns: int, t_on_ns: int, dt_ns: int) -> int:
    return _ceil_div(t_exp_ns, dt_ns) + _ceil_div(t_on_ns, dt_ns)


def misestimation_ratio(
    t_exp_true_us: float, t_exp_est_us: float, t_on_us: float, delta_t_rst_us: float
) -> float:
    """Actual-to-expected distortion size when the exposure estimate is off.

    Computed as N_max(true)/N_max(est); the offset term is negligible at this
    level of analysis.
    """
    if min(t_exp_true_us, t_exp_est_us, t_on_us, delta_t_rst_us) <= 0:
        raise ValueError("all inputs must be > 0")
    t_true, t_est, t_on, dt = map(_to_ns, (t_exp_true_us, t_exp_est_us, t_on_us, delta_t_rst_us))
    return _n_max(t_true, t_on, dt) / _n_max(t_est, t_on, dt)


@dataclass(frozen=True)
class MisestimationSurface:
    """Grid of misestimation ratios plus the summary statistics planners need.

    rows are (t_exp_true_us, t_exp_est_us, t_on_us, ratio) tuples.
    """

    rows: list[tuple[float, float, float, float]]
    max_ratio: float
    fraction_within_factor_2: float

    CSV_HEADER = "t_exp_true_us,t_exp_est_us,t_on_us,ratio"

    def worst_ratio_at_t_on(self, t_on_us: float) -> float:
        matching = [r for (_, _, ton, r) in self.rows if ton == t_on_us]
        if not matching:
            raise ValueError(f"t_on={t_on_us} not on the grid")
        return max(matching)


def log_grid(lo: float, hi: float, n: int) -> list[float]:
    """n log-spaced points over [lo, hi], endpoints exact."""
    if n < 1 or lo <= 0 or hi < lo:
        raise ValueError(f"bad grid spec lo={lo}, hi={hi}, n={n}")
    if n == 1:
        return [lo]
    step = (math.log(hi) - math.log(lo)) / (n - 1)
    grid = [math.exp(math.log(lo) + i * step) for i in range(n)]
    grid[0], grid[-1] = lo, hi
    return grid


def misestimation_surface(
    t_exp_range_us: tuple[float, float],
    t_on_range_us: tuple[float, float],
    delta_t_rst_us: float,
    points_per_axis: int = 32,
    t_on_points: int | None = None,
) -> MisestimationSurface:
    """Evaluate the misestimation ratio over a log-spaced parameter grid.

    Both the true and the estimated exposure run over t_exp_range_us, so the
    surface covers under- and over-estimation symmetrically.  t_on_points=1
    pins the on-time axis to a single value for slice-style analysis.
    """
    t_grid = log_grid(*t_exp_range_us, points_per_axis)
    ton_grid = log_grid(*t_on_range_us, points_per_axis if t_on_points is None else t_on_points)
    rows = []
    max_ratio = 0.0
    within = 0
    for t_on in ton_grid:
        for t_true in t_grid:
            for t_est in t_grid:
                r = misestimation_ratio(t_true, t_est, t_on, delta_t_rst_us)
                rows.append((t_true, t_est, t_on, r))
                if r > max_ratio:
                    max_ratio = r
                if 0.5 <= r <= 2.0:
                    within += 1
    return MisestimationSurface(
        rows=rows,
        max_ratio=max_ratio,
        fraction_within_factor_2=within / len(rows),
    )
