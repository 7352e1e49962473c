"""Rolling-shutter laser-injection attack simulator and planning toolkit."""

from rollsim.sensor_timing import (
    CameraSpec,
    EnvConditions,
    LaserConfig,
    TimingPlan,
    delta_t_rst,
    distortion_bounds,
    distortion_size,
    distortions_per_frame,
    estimate_exposure,
    misestimation_ratio,
    misestimation_surface,
    on_time,
    timing_plan,
)

__version__ = "0.1.0"
