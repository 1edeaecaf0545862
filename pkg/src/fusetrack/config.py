"""Scenario configuration: YAML schema, validation and object builders.

A scenario file is a single YAML document with nested sections mirroring
the subsystem types (conveyor, sensor, radar, link, clutter, camera,
detection, pantilt, controller, calibration).  Every key has a default;
an empty file builds the horizontal-belt scenario with catalogue values.
Validation errors carry the dotted path of the offending key.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .controller import ControllerSettings
from .errors import ConfigurationError, DegenerateInputError, FusetrackError
from .geometry import (ConveyorPath, path_point_at_azimuth, path_point_at_range,
                       unit_from_angles_deg)
from .optical import CameraModel, HsvThresholds, LabelSpec
from .pantilt import PanTiltState
from .radar import ChirpConfig, ClutterModel
from .scene import SensorScene
from .sensor import SensorAntenna, SensorPhysics


def _section(raw: dict, key: str) -> dict:
    value = raw.get(key, {})
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigurationError("expected a mapping", field=key)
    return value


def _num(section: dict, key: str, path: str, default: float) -> float:
    value = section.get(key, default)
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"expected a number, got {value!r}",
                                 field=f"{path}.{key}") from None


def _int(section: dict, key: str, path: str, default: int) -> int:
    value = section.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigurationError(f"expected an integer, got {value!r}",
                                 field=f"{path}.{key}")
    return value


def _str(section: dict, key: str, path: str, default: str) -> str:
    value = section.get(key, default)
    if not isinstance(value, str):
        raise ConfigurationError(f"expected a string, got {value!r}",
                                 field=f"{path}.{key}")
    return value


def _vec(section: dict, key: str, path: str, default, n: int):
    value = section.get(key, default)
    try:
        out = [float(v) for v in value]
    except (TypeError, ValueError):
        raise ConfigurationError(f"expected {n} numbers, got {value!r}",
                                 field=f"{path}.{key}") from None
    if len(out) != n:
        raise ConfigurationError(f"expected {n} numbers, got {len(out)}",
                                 field=f"{path}.{key}")
    return out


def _rgb(section: dict, key: str, path: str, default):
    vals = _vec(section, key, path, default, 3)
    out = tuple(int(v) for v in vals)
    if any(not 0 <= v <= 255 for v in out):
        raise ConfigurationError("RGB channels must be in [0, 255]",
                                 field=f"{path}.{key}")
    return out


def _build(factory, path: str, **kwargs):
    """Run a validating constructor, attaching the section path on failure."""
    try:
        return factory(**kwargs)
    except DegenerateInputError as exc:
        raise ConfigurationError(str(exc), field=path) from None


@dataclass
class ScenarioConfig:
    """Fully validated scenario, ready to build simulation objects."""

    scenario_id: int
    seed: int
    output_dir: str
    duration_s: float | None
    path: ConveyorPath
    physics: SensorPhysics
    antenna_hpbw_deg: tuple[float, float]
    antenna_boresight_deg: tuple[float, float]
    levels_mm: list[float]
    label: LabelSpec
    chirp: ChirpConfig
    anchor_db: float
    reference_range_m: float
    modulation_slope_db_per_mm: float
    clutter: ClutterModel
    camera: CameraModel
    thresholds: HsvThresholds
    pantilt_initial_deg: tuple[float, float]
    pantilt_template: PanTiltState
    settings: ControllerSettings
    calibration_azimuth_deg: float | None
    calibration_range_m: float | None

    def build_antenna(self) -> SensorAntenna:
        az, el = self.antenna_boresight_deg
        return SensorAntenna(azimuth_hpbw_deg=self.antenna_hpbw_deg[0],
                             elevation_hpbw_deg=self.antenna_hpbw_deg[1],
                             boresight=unit_from_angles_deg(az, el))

    def calibration_reference(self) -> np.ndarray:
        if self.calibration_azimuth_deg is not None:
            return path_point_at_azimuth(self.path, self.calibration_azimuth_deg)
        return path_point_at_range(self.path, self.calibration_range_m)

    def build_scene(self, level_mm: float) -> SensorScene:
        return SensorScene(path=self.path, physics=self.physics,
                           antenna=self.build_antenna(), label=self.label,
                           level_mm=level_mm, anchor_db=self.anchor_db,
                           reference_range_m=self.reference_range_m,
                           modulation_slope_db_per_mm=self.modulation_slope_db_per_mm,
                           clutter=self.clutter,
                           calibration_reference_m=self.calibration_reference())

    def build_mount(self) -> PanTiltState:
        from dataclasses import replace
        pan, tilt = self.pantilt_initial_deg
        return replace(self.pantilt_template,
                       pan_exact_deg=pan, tilt_exact_deg=tilt,
                       target_pan_deg=pan, target_tilt_deg=tilt)

    @property
    def cycle_dt_s(self) -> float:
        return 1.0 / self.camera.frame_rate_hz

    def traverse_duration_s(self) -> float:
        if self.duration_s is not None:
            return self.duration_s
        duration = self.path.duration_s
        if not math.isfinite(duration):
            raise ConfigurationError(
                "a parked conveyor needs an explicit duration_s", field="duration_s")
        return duration


def _parse_levels(raw: dict, physics: SensorPhysics) -> list[float]:
    spec = raw.get("levels_mm", {"start": 0.0, "stop": 2.4, "step": physics.level_step_mm})
    if isinstance(spec, dict):
        start = _num(spec, "start", "sensor.levels_mm", 0.0)
        stop = _num(spec, "stop", "sensor.levels_mm", 2.4)
        step = _num(spec, "step", "sensor.levels_mm", physics.level_step_mm)
        if step <= 0.0 or stop < start:
            raise ConfigurationError("need step > 0 and stop >= start",
                                     field="sensor.levels_mm")
        n = int(round((stop - start) / step))
        levels = [round(start + k * step, 10) for k in range(n + 1)]
    else:
        try:
            levels = [float(v) for v in spec]
        except (TypeError, ValueError):
            raise ConfigurationError(f"expected a list or start/stop/step mapping, "
                                     f"got {spec!r}", field="sensor.levels_mm") from None
    if not levels:
        raise ConfigurationError("at least one level required", field="sensor.levels_mm")
    for lv in levels:
        if not 0.0 <= lv <= physics.max_level_mm:
            raise ConfigurationError(f"level {lv} outside [0, {physics.max_level_mm}]",
                                     field="sensor.levels_mm")
    return levels


def parse_config(raw: dict | None) -> ScenarioConfig:
    """Validate a parsed YAML document and build a ScenarioConfig."""
    raw = raw or {}
    if not isinstance(raw, dict):
        raise ConfigurationError("config root must be a mapping")

    scenario_id = _int(raw, "scenario", "", 1)
    seed = _int(raw, "seed", "", 0)
    output_dir = _str(raw, "output_dir", "", "out")
    duration = raw.get("duration_s")
    if duration is not None:
        duration = _num(raw, "duration_s", "", 0.0)
        if duration <= 0.0:
            raise ConfigurationError("must be positive", field="duration_s")

    conv = _section(raw, "conveyor")
    path = _build(
        ConveyorPath, "conveyor",
        start_m=np.array(_vec(conv, "start_m", "conveyor", [-0.75, 3.5, 0.0], 3)),
        direction=unit_from_angles_deg(_num(conv, "azimuth_deg", "conveyor", 90.0)),
        length_m=_num(conv, "length_m", "conveyor", 1.5),
        speed_mps=_num(conv, "speed_mps", "conveyor", 0.05))

    sens = _section(raw, "sensor")
    phys_raw = _section(sens, "physics") if "physics" in sens else {}
    physics = _build(
        SensorPhysics, "sensor.physics",
        channel_radius_mm=_num(phys_raw, "channel_radius_mm", "sensor.physics", 0.25),
        alpha_v_per_K=_num(phys_raw, "alpha_v_per_K", "sensor.physics", 11.5e-5),
        tank_volume_mm3=_num(phys_raw, "tank_volume_mm3", "sensor.physics", 100.0),
        max_level_mm=_num(phys_raw, "max_level_mm", "sensor.physics", 3.6),
        ref_temperature_C=_num(phys_raw, "ref_temperature_C", "sensor.physics", 20.0),
        level_step_mm=_num(phys_raw, "level_step_mm", "sensor.physics", 0.2))

    ant = _section(sens, "antenna") if "antenna" in sens else {}
    hpbw = (_num(ant, "azimuth_hpbw_deg", "sensor.antenna", 62.0),
            _num(ant, "elevation_hpbw_deg", "sensor.antenna", 50.0))
    boresight = (_num(ant, "boresight_azimuth_deg", "sensor.antenna", 180.0),
                 _num(ant, "boresight_elevation_deg", "sensor.antenna", 0.0))
    if not (0.0 < hpbw[0] < 180.0 and 0.0 < hpbw[1] < 180.0):
        raise ConfigurationError("beamwidths must be in (0, 180)", field="sensor.antenna")

    levels = _parse_levels(sens, physics)

    lab = _section(sens, "label") if "label" in sens else {}
    label = LabelSpec(width_m=_num(lab, "width_m", "sensor.label", 0.12),
                      height_m=_num(lab, "height_m", "sensor.label", 0.08),
                      color_rgb=_rgb(lab, "color_rgb", "sensor.label", (230, 25, 25)))
    if label.width_m <= 0.0 or label.height_m <= 0.0:
        raise ConfigurationError("label sides must be positive", field="sensor.label")

    rad = _section(raw, "radar")
    chirp = _build(
        ChirpConfig, "radar",
        carrier_hz=_num(rad, "carrier_hz", "radar", 24e9),
        bandwidth_hz=_num(rad, "bandwidth_hz", "radar", 2e9),
        chirp_duration_s=_num(rad, "chirp_duration_s", "radar", 0.015),
        num_samples=_int(rad, "num_samples", "radar", 256),
        tx_gain_dbi=_num(rad, "tx_gain_dbi", "radar", 28.0),
        rx_gain_dbi=_num(rad, "rx_gain_dbi", "radar", 20.0),
        tx_power_dbm=_num(rad, "tx_power_dbm", "radar", 20.0),
        az_hpbw_deg=_num(rad, "az_hpbw_deg", "radar", 12.0),
        el_hpbw_deg=_num(rad, "el_hpbw_deg", "radar", 9.0),
        speed_of_light_mps=_num(rad, "speed_of_light_mps", "radar", 299_792_458.0))
    window = _str(rad, "window", "radar", "hann")
    if window not in ("hann", "rectangular"):
        raise ConfigurationError(f"unknown window {window!r}", field="radar.window")
    min_range = _num(rad, "min_range_m", "radar", 0.2)
    if min_range <= 0.0:
        raise ConfigurationError("must be positive", field="radar.min_range_m")

    link = _section(raw, "link")
    anchor_db = _num(link, "anchor_db", "link", -16.0)
    ref_range = _num(link, "reference_range_m", "link", 3.5)
    slope = _num(link, "modulation_slope_db_per_mm", "link", 6.0)
    if ref_range <= 0.0:
        raise ConfigurationError("must be positive", field="link.reference_range_m")
    if slope < 0.0:
        raise ConfigurationError("must be non-negative",
                                 field="link.modulation_slope_db_per_mm")

    clu = _section(raw, "clutter")
    noise_level = clu.get("noise_level_db")
    if noise_level is not None:
        noise_level = _num(clu, "noise_level_db", "clutter", 0.0)
    tones_raw = clu.get("tones", []) or []
    tones = []
    for i, tone in enumerate(tones_raw):
        if not isinstance(tone, dict):
            raise ConfigurationError("each tone is a mapping with range_m/level_db",
                                     field=f"clutter.tones[{i}]")
        tones.append((_num(tone, "range_m", f"clutter.tones[{i}]", 1.0),
                      _num(tone, "level_db", f"clutter.tones[{i}]", -60.0)))
    clutter = ClutterModel(noise_level_db=noise_level, tones=tuple(tones))

    cam = _section(raw, "camera")
    camera = _build(
        CameraModel, "camera",
        width_px=_int(cam, "width_px", "camera", 640),
        height_px=_int(cam, "height_px", "camera", 480),
        frame_rate_hz=_num(cam, "frame_rate_hz", "camera", 1.0),
        hfov_deg=_num(cam, "hfov_deg", "camera", 60.0))
    cam_noise = _num(cam, "noise_sigma", "camera", 4.0)
    if cam_noise < 0.0:
        raise ConfigurationError("must be non-negative", field="camera.noise_sigma")
    background = _rgb(cam, "background_rgb", "camera", (96, 96, 96))

    det = _section(raw, "detection")
    hue = _vec(det, "hue_deg", "detection", [350.0, 10.0], 2)
    sat = _vec(det, "saturation", "detection", [0.5, 1.0], 2)
    val = _vec(det, "value", "detection", [0.3, 1.0], 2)
    if sat[0] > sat[1] or val[0] > val[1]:
        raise ConfigurationError("saturation/value ranges must be lo <= hi",
                                 field="detection")
    thresholds = HsvThresholds(hue_lo_deg=hue[0] % 360.0, hue_hi_deg=hue[1] % 360.0,
                               sat_lo=sat[0], sat_hi=sat[1],
                               val_lo=val[0], val_hi=val[1])
    min_area = _int(det, "min_area_px", "detection", 4)

    pt = _section(raw, "pantilt")
    pan_limits = tuple(_vec(pt, "pan_limits_deg", "pantilt", [-170.0, 170.0], 2))
    tilt_limits = tuple(_vec(pt, "tilt_limits_deg", "pantilt", [-60.0, 60.0], 2))
    initial = (_num(pt, "initial_pan_deg", "pantilt", 0.0),
               _num(pt, "initial_tilt_deg", "pantilt", 0.0))
    template = _build(
        PanTiltState, "pantilt",
        pan_exact_deg=initial[0], tilt_exact_deg=initial[1],
        target_pan_deg=initial[0], target_tilt_deg=initial[1],
        pan_speed_dps=_num(pt, "pan_speed_dps", "pantilt", 6.1),
        tilt_speed_dps=_num(pt, "tilt_speed_dps", "pantilt", 4.6),
        precision_deg=_num(pt, "precision_deg", "pantilt", 0.1),
        pan_limits_deg=pan_limits, tilt_limits_deg=tilt_limits)

    ctl = _section(raw, "controller")
    settings = ControllerSettings(
        detect_margin_db=_num(ctl, "detect_margin_db", "controller", 3.0),
        undetectable_margin_db=_num(ctl, "undetectable_margin_db", "controller", 0.0),
        echo_sigma_db=_num(ctl, "echo_sigma_db", "controller", 0.4),
        aspect_error_deg=_num(ctl, "aspect_error_deg", "controller", 0.0),
        min_range_m=min_range,
        chirps_per_cycle=_int(ctl, "chirps_per_cycle", "controller", 1),
        mount_tick_s=_num(ctl, "mount_tick_s", "controller", 0.015),
        window=window, camera_noise_sigma=cam_noise,
        background_rgb=background, min_area_px=min_area)
    if settings.chirps_per_cycle < 1:
        raise ConfigurationError("must be >= 1", field="controller.chirps_per_cycle")
    if settings.mount_tick_s <= 0.0:
        raise ConfigurationError("must be positive", field="controller.mount_tick_s")

    cal = _section(raw, "calibration")
    if "calibration" not in raw:
        cal = {"azimuth_deg": 3.3}
    cal_az = cal.get("azimuth_deg")
    cal_range = cal.get("range_m")
    if (cal_az is None) == (cal_range is None):
        raise ConfigurationError("give exactly one of azimuth_deg or range_m",
                                 field="calibration")
    if cal_az is not None:
        cal_az = _num(cal, "azimuth_deg", "calibration", 0.0)
    if cal_range is not None:
        cal_range = _num(cal, "range_m", "calibration", 0.0)

    cfg = ScenarioConfig(
        scenario_id=scenario_id, seed=seed, output_dir=output_dir,
        duration_s=duration, path=path, physics=physics,
        antenna_hpbw_deg=hpbw, antenna_boresight_deg=boresight,
        levels_mm=levels, label=label, chirp=chirp,
        anchor_db=anchor_db, reference_range_m=ref_range,
        modulation_slope_db_per_mm=slope, clutter=clutter, camera=camera,
        thresholds=thresholds, pantilt_initial_deg=initial,
        pantilt_template=template, settings=settings,
        calibration_azimuth_deg=cal_az, calibration_range_m=cal_range)

    # the reference point must actually exist on the belt
    try:
        cfg.calibration_reference()
    except FusetrackError as exc:
        raise ConfigurationError(str(exc), field="calibration") from None
    return cfg


def load_config(path) -> ScenarioConfig:
    """Parse and validate a YAML scenario file."""
    text = Path(path).read_text()
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"not valid YAML: {exc}") from None
    return parse_config(raw)


def default_config() -> ScenarioConfig:
    """Scenario-1 catalogue defaults, used when no file is given."""
    return parse_config({})
