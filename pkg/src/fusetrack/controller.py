"""Closed-loop fusion controller and echo-to-temperature calibration.

One control cycle per camera frame: render and detect the label, turn the
pixel offsets into a mount correction, slew for one frame period, then fire
a single chirp along the new orientation and read range and echo level off
the beat spectrum.  The echo is normalised back to the calibration geometry
with the same pattern/range model used forward, and the monotone
temperature-vs-echo curve is inverted to produce the readout.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DegenerateInputError, OutOfCalibrationError
from .geometry import SphericalPose, cartesian_to_spherical, spherical_to_cartesian, wrap_deg
from .optical import (CameraModel, Detection, HsvThresholds, LabelSpec, detect_label,
                      offsets_to_angles, render_frame)
from .pantilt import PanTiltState
from .radar import (ChirpConfig, EchoTarget, beat_spectrum, min_bin_for_range,
                    noise_floor_estimate_db, peak_beat_frequency, range_from_beat,
                    synthesize_beat, tone_level_db)
from .scene import SensorScene
from .sensor import (SensorAntenna, aspect_gain_db, beam_gain_db, quantization_precision_C,
                     sensitivity_C_per_mm, temperature_from_level)


class CycleStatus(enum.Enum):
    OK = "OK"
    NOT_FOUND = "NotFound"
    UNDETECTABLE = "Undetectable"


@dataclass(frozen=True)
class TemperatureEstimate:
    temperature_C: float
    sigma_C: float


@dataclass
class CalibrationCurve:
    """Monotone echo-vs-temperature map at a fixed reference geometry."""

    reference_azimuth_deg: float
    reference_range_m: float
    temperatures_C: np.ndarray
    echoes_db: np.ndarray

    def __post_init__(self):
        self.temperatures_C = np.asarray(self.temperatures_C, dtype=float)
        self.echoes_db = np.asarray(self.echoes_db, dtype=float)
        if len(self.temperatures_C) < 2 or len(self.temperatures_C) != len(self.echoes_db):
            raise ConfigurationError("calibration needs >= 2 matched (T, echo) points")
        if not np.all(np.diff(self.temperatures_C) > 0.0):
            raise ConfigurationError("calibration temperatures must strictly increase")
        if not np.all(np.diff(self.echoes_db) < 0.0):
            raise ConfigurationError(
                "calibration echoes must strictly decrease with temperature; "
                "check the modulation slope and antenna settings")

    @property
    def echo_max_db(self) -> float:
        return float(self.echoes_db[0])

    @property
    def echo_min_db(self) -> float:
        return float(self.echoes_db[-1])

    def dynamic_range_db(self) -> float:
        return self.echo_max_db - self.echo_min_db

    def implied_sensitivity_db_per_C(self, t_lo_C: float = 30.3,
                                     t_hi_C: float = 61.0) -> float:
        """Full dynamic range divided by the usable temperature span.

        This is the conventional figure of merit quoted for this kind of
        readout: the whole echo swing is credited to the span over which the
        response is treated as usable, not the pointwise curve slope.
        """
        return self.dynamic_range_db() / (t_hi_C - t_lo_C)

    def temperature_at(self, echo_db: float) -> float:
        """Piecewise-linear inversion, clamped to the calibrated span."""
        # np.interp wants ascending x; echoes descend with temperature
        return float(np.interp(echo_db, self.echoes_db[::-1], self.temperatures_C[::-1]))

    def local_slope_db_per_C(self, echo_db: float) -> float:
        """|d echo / dT| of the segment the echo falls in."""
        idx = int(np.searchsorted(-self.echoes_db, -echo_db, side="right"))
        idx = min(max(idx, 1), len(self.echoes_db) - 1)
        de = self.echoes_db[idx - 1] - self.echoes_db[idx]
        dt = self.temperatures_C[idx] - self.temperatures_C[idx - 1]
        return float(de / dt)


def default_levels_mm(physics, stop_mm: float = 2.4) -> list[float]:
    """The interrogation sweep: 0 .. stop in level_step_mm increments."""
    n = int(round(stop_mm / physics.level_step_mm))
    return [round(k * physics.level_step_mm, 10) for k in range(n + 1)]


def build_calibration(scene: SensorScene, cfg: ChirpConfig,
                      levels_mm=None) -> CalibrationCurve:
    """Sweep the fill level with a motionless tag at the reference point.

    Uses the noise-free forward model with the mount pointed exactly at the
    tag, one (temperature, echo) pair per level.
    """
    if scene.calibration_reference_m is None:
        raise ConfigurationError("scene has no calibration reference point")
    if levels_mm is None:
        levels_mm = default_levels_mm(scene.physics)
    pose = cartesian_to_spherical(scene.calibration_reference_m)
    temps, echoes = [], []
    for level in levels_mm:
        sensor = scene.sensor_at_point(scene.calibration_reference_m, level_mm=level)
        temps.append(temperature_from_level(scene.physics, level))
        echoes.append(scene.echo_db(cfg, sensor, pose.azimuth_deg, pose.elevation_deg))
    return CalibrationCurve(reference_azimuth_deg=pose.azimuth_deg,
                            reference_range_m=pose.range_m,
                            temperatures_C=np.array(temps),
                            echoes_db=np.array(echoes))


def estimate_temperature(echo_db: float, measured_pose: SphericalPose,
                         calibration: CalibrationCurve, scene: SensorScene,
                         cfg: ChirpConfig, *,
                         pointing_error_deg: tuple[float, float] = (0.0, 0.0),
                         echo_sigma_db: float = 0.4,
                         undetectable_margin_db: float = 0.0,
                         aspect_error_deg: float = 0.0
                         ) -> TemperatureEstimate | None:
    """Normalise an echo to the calibration geometry and invert the curve.

    Returns None when the normalised echo falls below the curve minimum plus
    the margin (tag treated as buried in clutter).  Echoes more than three
    noise sigmas above the curve maximum raise OutOfCalibrationError.

    pointing_error_deg is the controller's estimate of where the tag sits
    relative to the radar boresight at chirp time.  aspect_error_deg rotates
    the assumed tag boresight in azimuth, a knob for studying model mismatch.
    """
    position = spherical_to_cartesian(measured_pose)
    antenna = scene.antenna
    if aspect_error_deg != 0.0:
        c, s = math.cos(math.radians(aspect_error_deg)), math.sin(math.radians(aspect_error_deg))
        b = antenna.boresight
        rotated = np.array([c * b[0] + s * b[1], -s * b[0] + c * b[1], b[2]])
        antenna = SensorAntenna(antenna.azimuth_hpbw_deg, antenna.elevation_hpbw_deg, rotated)

    # geometry terms at the measurement: radar pattern at the estimated
    # pointing error, tag aspect and range spread at the estimated position
    sensor_meas = scene.sensor_at_point(position)
    sensor_meas.antenna = antenna
    pan_eff = measured_pose.azimuth_deg - pointing_error_deg[0]
    tilt_eff = measured_pose.elevation_deg - pointing_error_deg[1]
    geom_meas = scene.geometry_db(cfg, sensor_meas, pan_eff, tilt_eff)

    # reference points sit at mount height, so elevation 0 reconstructs them
    ref_pose = SphericalPose(calibration.reference_azimuth_deg, 0.0,
                             calibration.reference_range_m)
    sensor_ref = scene.sensor_at_point(spherical_to_cartesian(ref_pose))
    geom_ref = scene.geometry_db(cfg, sensor_ref, ref_pose.azimuth_deg,
                                 ref_pose.elevation_deg)

    echo_at_ref = echo_db - geom_meas + geom_ref

    if echo_at_ref < calibration.echo_min_db + undetectable_margin_db:
        return None
    if echo_at_ref > calibration.echo_max_db + 3.0 * echo_sigma_db:
        raise OutOfCalibrationError(
            f"echo {echo_at_ref:.2f} dB exceeds the calibrated maximum "
            f"{calibration.echo_max_db:.2f} dB by more than 3 sigma")

    temperature = calibration.temperature_at(echo_at_ref)
    slope = calibration.local_slope_db_per_C(echo_at_ref)
    sigma = max(echo_sigma_db / slope, quantization_precision_C(scene.physics))
    return TemperatureEstimate(temperature_C=temperature, sigma_C=sigma)


@dataclass(frozen=True)
class ControlCycleResult:
    """Outcome of one frame-to-chirp cycle."""

    time_s: float
    status: CycleStatus
    detection: Detection | None
    commanded_offsets_deg: tuple[float, float] | None
    mount_pan_deg: float
    mount_tilt_deg: float
    target_pan_deg: float
    target_tilt_deg: float
    beat_hz: float | None = None
    estimated_pose: SphericalPose | None = None
    echo_db: float | None = None
    temperature: TemperatureEstimate | None = None


@dataclass
class ControllerSettings:
    """Knobs of the tracking/readout loop."""

    detect_margin_db: float = 3.0
    undetectable_margin_db: float = 0.0
    echo_sigma_db: float = 0.4
    aspect_error_deg: float = 0.0
    min_range_m: float = 0.2
    chirps_per_cycle: int = 1
    mount_tick_s: float = 0.015  # one chirp period per kinematic sub-step
    window: str = "hann"
    camera_noise_sigma: float = 4.0
    background_rgb: tuple[int, int, int] = (96, 96, 96)
    min_area_px: int = 4


class FusionController:
    """Drives the mount from camera detections and reads the tag by radar."""

    def __init__(self, scene: SensorScene, camera: CameraModel, cfg: ChirpConfig,
                 mount: PanTiltState, calibration: CalibrationCurve,
                 thresholds: HsvThresholds | None = None,
                 settings: ControllerSettings | None = None,
                 rng: np.random.Generator | None = None):
        self.scene = scene
        self.camera = camera
        self.cfg = cfg
        self.mount = mount
        self.calibration = calibration
        self.thresholds = thresholds or HsvThresholds()
        self.settings = settings or ControllerSettings()
        self.rng = rng or np.random.default_rng(0)
        self.min_bin = min_bin_for_range(cfg, self.settings.min_range_m)

    def run_cycle(self, t_s: float, dt_s: float) -> ControlCycleResult:
        """Frame at t, command, slew for dt, chirp at t + dt."""
        st = self.settings
        sensor_now = self.scene.sensor_at(t_s)
        frame = render_frame(self.camera, self.mount.pan_deg, self.mount.tilt_deg,
                             sensor_now, self.scene.label,
                             background_rgb=st.background_rgb,
                             noise_sigma=st.camera_noise_sigma, rng=self.rng,
                             timestamp_s=t_s)
        detection = detect_label(frame, self.thresholds, min_area_px=st.min_area_px)

        offsets = None
        if detection is not None:
            offsets = offsets_to_angles(self.camera, *detection.offsets)
            self.mount = self.mount.command(*offsets)

        self._advance_mount(dt_s)
        t_chirp = t_s + dt_s

        if detection is None:
            # hold the last command; nothing trustworthy to aim the radar at
            return ControlCycleResult(
                time_s=t_chirp, status=CycleStatus.NOT_FOUND, detection=None,
                commanded_offsets_deg=None,
                mount_pan_deg=self.mount.pan_deg, mount_tilt_deg=self.mount.tilt_deg,
                target_pan_deg=self.mount.target_pan_deg,
                target_tilt_deg=self.mount.target_tilt_deg)

        beat_hz, echo_db = self._interrogate(t_chirp)
        if beat_hz is None:
            return ControlCycleResult(
                time_s=t_chirp, status=CycleStatus.UNDETECTABLE, detection=detection,
                commanded_offsets_deg=offsets,
                mount_pan_deg=self.mount.pan_deg, mount_tilt_deg=self.mount.tilt_deg,
                target_pan_deg=self.mount.target_pan_deg,
                target_tilt_deg=self.mount.target_tilt_deg)

        est_pose = SphericalPose(self.mount.pan_deg, self.mount.tilt_deg,
                                 range_from_beat(self.cfg, beat_hz))
        # best guess of the residual pointing error at chirp time: where the
        # mount was told to go minus where it currently points
        residual = (wrap_deg(self.mount.target_pan_deg - self.mount.pan_deg),
                    self.mount.target_tilt_deg - self.mount.tilt_deg)
        temperature = estimate_temperature(
            echo_db, est_pose, self.calibration, self.scene, self.cfg,
            pointing_error_deg=residual, echo_sigma_db=st.echo_sigma_db,
            undetectable_margin_db=st.undetectable_margin_db,
            aspect_error_deg=st.aspect_error_deg)

        status = CycleStatus.OK if temperature is not None else CycleStatus.UNDETECTABLE
        return ControlCycleResult(
            time_s=t_chirp, status=status, detection=detection,
            commanded_offsets_deg=offsets,
            mount_pan_deg=self.mount.pan_deg, mount_tilt_deg=self.mount.tilt_deg,
            target_pan_deg=self.mount.target_pan_deg,
            target_tilt_deg=self.mount.target_tilt_deg,
            beat_hz=beat_hz, estimated_pose=est_pose, echo_db=echo_db,
            temperature=temperature)

    def _advance_mount(self, dt_s: float) -> None:
        tick = self.settings.mount_tick_s
        n_sub = max(1, int(round(dt_s / tick)))
        sub = dt_s / n_sub
        for _ in range(n_sub):
            self.mount = self.mount.step(sub)

    def _interrogate(self, t_chirp: float):
        """Fire chirps_per_cycle chirps; (median beat, mean echo) or (None, None)."""
        sensor = self.scene.sensor_at(t_chirp)
        level = self.scene.echo_db(self.cfg, sensor, self.mount.pan_deg,
                                   self.mount.tilt_deg)
        truth_range = float(np.linalg.norm(sensor.position))
        beats, echoes = [], []
        for _ in range(self.settings.chirps_per_cycle):
            target = EchoTarget(range_m=truth_range, level_db=level,
                                phase_rad=self.rng.uniform(0.0, 2.0 * np.pi))
            samples = synthesize_beat(self.cfg, [target], self.scene.clutter, self.rng)
            spectrum = beat_spectrum(self.cfg, samples, window=self.settings.window)
            f_n, peak_db = peak_beat_frequency(spectrum, self.min_bin)
            floor_db = noise_floor_estimate_db(spectrum, self.min_bin)
            if peak_db <= floor_db + self.settings.detect_margin_db:
                continue
            peak_bin = int(round(f_n / spectrum.bin_hz))
            beats.append(f_n)
            echoes.append(tone_level_db(spectrum, peak_bin))
        if not beats:
            return None, None
        return float(np.median(beats)), float(np.mean(echoes))
