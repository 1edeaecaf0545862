"""Physics of the passive liquid-metal temperature tag.

The tag is a sealed cavity crossed by a microfluidic channel.  Thermal
expansion of a Galinstan reservoir pushes liquid metal into the channel;
the fill level attenuates the cavity transmission and therefore the radar
echo.  Temperature maps linearly to fill level through

    dT/dl = S_c / (alpha_v * V0),    S_c = pi * r^2

with r the channel radius, alpha_v the volumetric expansion coefficient
and V0 the reservoir volume.  With the default values this gives
17.07 degC per mm of fill.

The tag re-radiates through a pair of horns; their combined main lobe is
modelled as a Gaussian beam in dB with the catalogue half-power
beamwidths, clamped to a hard back-lobe floor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInputError
from .geometry import direction_angles_deg, wrap_deg

# Relative gain assigned to anything behind the antenna or below the
# main-lobe model's validity.
BACK_LOBE_FLOOR_DB = -40.0


@dataclass(frozen=True)
class SensorPhysics:
    """Geometry and material constants of the microfluidic channel."""

    channel_radius_mm: float = 0.25
    alpha_v_per_K: float = 11.5e-5
    tank_volume_mm3: float = 100.0
    max_level_mm: float = 3.6
    ref_temperature_C: float = 20.0
    level_step_mm: float = 0.2

    def __post_init__(self):
        for name in ("channel_radius_mm", "alpha_v_per_K", "tank_volume_mm3",
                     "max_level_mm", "level_step_mm"):
            if not getattr(self, name) > 0.0:
                raise DegenerateInputError(f"{name} must be positive")
        steps = self.max_level_mm / self.level_step_mm
        if abs(steps - round(steps)) > 1e-9:
            raise DegenerateInputError("max_level_mm must be a multiple of level_step_mm")


@dataclass
class SensorAntenna:
    """Main-lobe model of the tag's horn pair."""

    azimuth_hpbw_deg: float = 62.0
    elevation_hpbw_deg: float = 50.0
    boresight: np.ndarray = field(default_factory=lambda: np.array([0.0, -1.0, 0.0]))

    def __post_init__(self):
        if not 0.0 < self.azimuth_hpbw_deg < 180.0:
            raise DegenerateInputError("azimuth_hpbw_deg must be in (0, 180)")
        if not 0.0 < self.elevation_hpbw_deg < 180.0:
            raise DegenerateInputError("elevation_hpbw_deg must be in (0, 180)")
        self.boresight = np.asarray(self.boresight, dtype=float)
        n = np.linalg.norm(self.boresight)
        if n == 0.0:
            raise DegenerateInputError("boresight must be a non-zero vector")
        self.boresight = self.boresight / n


@dataclass
class SensorState:
    """Tag snapshot: fill level, physics, antenna and mount-frame position."""

    level_mm: float
    physics: SensorPhysics
    antenna: SensorAntenna
    position: np.ndarray

    def __post_init__(self):
        if not 0.0 <= self.level_mm <= self.physics.max_level_mm:
            raise DegenerateInputError(
                f"level_mm {self.level_mm} outside [0, {self.physics.max_level_mm}]")
        self.position = np.asarray(self.position, dtype=float)


def sensitivity_C_per_mm(physics: SensorPhysics) -> float:
    """Temperature change per mm of channel fill, S_c / (alpha_v * V0)."""
    section_mm2 = math.pi * physics.channel_radius_mm ** 2
    return section_mm2 / (physics.alpha_v_per_K * physics.tank_volume_mm3)


def temperature_from_level(physics: SensorPhysics, level_mm: float) -> float:
    """Temperature indicated by a fill level; level 0 is the reference point."""
    if not 0.0 <= level_mm <= physics.max_level_mm:
        raise DegenerateInputError(
            f"level_mm {level_mm} outside [0, {physics.max_level_mm}]")
    return physics.ref_temperature_C + sensitivity_C_per_mm(physics) * level_mm


def level_from_temperature(physics: SensorPhysics, temperature_C: float) -> float:
    """Exact inverse of temperature_from_level."""
    level = (temperature_C - physics.ref_temperature_C) / sensitivity_C_per_mm(physics)
    if not -1e-12 <= level <= physics.max_level_mm + 1e-12:
        raise DegenerateInputError(f"temperature {temperature_C} C outside the tag span")
    return min(max(level, 0.0), physics.max_level_mm)


def full_scale_range_C(physics: SensorPhysics) -> float:
    """Temperature span covered by a completely filling channel."""
    return sensitivity_C_per_mm(physics) * physics.max_level_mm


def quantization_precision_C(physics: SensorPhysics) -> float:
    """Readout precision implied by the level quantization step."""
    return sensitivity_C_per_mm(physics) * physics.level_step_mm


def modulation_loss_db(physics: SensorPhysics, level_mm: float,
                       slope_db_per_mm: float) -> float:
    """Echo attenuation caused by the channel fill, linear in dB."""
    if not 0.0 <= level_mm <= physics.max_level_mm:
        raise DegenerateInputError(
            f"level_mm {level_mm} outside [0, {physics.max_level_mm}]")
    if slope_db_per_mm < 0.0:
        raise DegenerateInputError("slope_db_per_mm must be non-negative")
    return slope_db_per_mm * level_mm


def beam_gain_db(dphi_deg: float, dtheta_deg: float,
                 az_hpbw_deg: float, el_hpbw_deg: float) -> float:
    """Gaussian main-lobe gain relative to boresight, clamped at the floor.

    -3 dB at a half-beamwidth offset in either principal plane.
    """
    g = (-3.0 * (2.0 * dphi_deg / az_hpbw_deg) ** 2
         - 3.0 * (2.0 * dtheta_deg / el_hpbw_deg) ** 2)
    return max(g, BACK_LOBE_FLOOR_DB)


def aspect_gain_db(antenna: SensorAntenna, line_of_sight) -> float:
    """Relative tag gain toward a unit line-of-sight direction (dB, <= 0).

    Directions more than 90 deg off boresight get the back-lobe floor.
    """
    los = np.asarray(line_of_sight, dtype=float)
    if abs(np.linalg.norm(los) - 1.0) > 1e-6:
        raise DegenerateInputError("line_of_sight must be a unit vector")
    if float(los.dot(antenna.boresight)) < 0.0:
        return BACK_LOBE_FLOOR_DB
    az_b, el_b = direction_angles_deg(antenna.boresight)
    az_l, el_l = direction_angles_deg(los)
    dphi = wrap_deg(az_l - az_b)
    dtheta = el_l - el_b
    return beam_gain_db(dphi, dtheta, antenna.azimuth_hpbw_deg, antenna.elevation_hpbw_deg)
