"""Mount-centred geometry and conveyor kinematics.

Frame convention used everywhere in this package: the origin sits at the
centre of the pan-tilt mount, x points right, y points forward along the
zero-pan boresight, z points up.  Azimuth grows from +y toward +x (panning
right is positive), elevation from the horizontal plane toward +z.  Public
interfaces carry degrees; radians never escape a function body.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigurationError, DegenerateInputError


def wrap_deg(angle_deg: float) -> float:
    """Wrap an angle into (-180, 180]."""
    r = angle_deg % 360.0
    return r - 360.0 if r > 180.0 else r


@dataclass(frozen=True)
class SphericalPose:
    """Target location seen from the mount: azimuth, elevation, range."""

    azimuth_deg: float
    elevation_deg: float
    range_m: float

    def __post_init__(self):
        if not self.range_m > 0.0:
            raise DegenerateInputError(f"range_m must be positive, got {self.range_m}")
        if not -180.0 < self.azimuth_deg <= 180.0:
            raise DegenerateInputError(f"azimuth_deg outside (-180, 180]: {self.azimuth_deg}")
        if not -90.0 <= self.elevation_deg <= 90.0:
            raise DegenerateInputError(f"elevation_deg outside [-90, 90]: {self.elevation_deg}")


def cartesian_to_spherical(p) -> SphericalPose:
    """Convert a mount-frame point (m) to a SphericalPose.

    Raises DegenerateInputError for the origin, where angles are undefined.
    """
    x, y, z = (float(v) for v in p)
    r = math.sqrt(x * x + y * y + z * z)
    if r == 0.0:
        raise DegenerateInputError("cannot convert the zero vector to angles")
    az = math.degrees(math.atan2(x, y))
    if az == -180.0:  # atan2 may return either edge; keep (-180, 180]
        az = 180.0
    el = math.degrees(math.atan2(z, math.hypot(x, y)))
    return SphericalPose(azimuth_deg=az, elevation_deg=el, range_m=r)


def spherical_to_cartesian(pose: SphericalPose) -> np.ndarray:
    az = math.radians(pose.azimuth_deg)
    el = math.radians(pose.elevation_deg)
    ch = math.cos(el) * pose.range_m
    return np.array([ch * math.sin(az), ch * math.cos(az), pose.range_m * math.sin(el)])


def direction_angles_deg(v) -> tuple[float, float]:
    """(azimuth, elevation) of a direction vector; magnitude is ignored."""
    pose = cartesian_to_spherical(v)
    return pose.azimuth_deg, pose.elevation_deg


def unit_from_angles_deg(azimuth_deg: float, elevation_deg: float = 0.0) -> np.ndarray:
    az = math.radians(azimuth_deg)
    el = math.radians(elevation_deg)
    return np.array([math.cos(el) * math.sin(az), math.cos(el) * math.cos(az), math.sin(el)])


@dataclass
class ConveyorPath:
    """Straight constant-speed belt segment in the mount frame."""

    start_m: np.ndarray
    direction: np.ndarray
    length_m: float = 1.5
    speed_mps: float = 0.05

    def __post_init__(self):
        self.start_m = np.asarray(self.start_m, dtype=float)
        self.direction = np.asarray(self.direction, dtype=float)
        if self.start_m.shape != (3,) or self.direction.shape != (3,):
            raise DegenerateInputError("start_m and direction must be 3-vectors")
        if abs(np.linalg.norm(self.direction) - 1.0) > 1e-9:
            raise DegenerateInputError("direction must be a unit vector (within 1e-9)")
        if not self.length_m > 0.0:
            raise DegenerateInputError("length_m must be positive")
        if self.speed_mps < 0.0:
            raise DegenerateInputError("speed_mps must be non-negative")

    @property
    def duration_s(self) -> float:
        """Time to traverse the full belt (inf for a parked belt)."""
        return math.inf if self.speed_mps == 0.0 else self.length_m / self.speed_mps


def conveyor_position(path: ConveyorPath, t_s: float) -> np.ndarray:
    """Belt position at time t; motion stops at the far end of the belt."""
    if t_s < 0.0:
        raise DegenerateInputError(f"time must be non-negative, got {t_s}")
    travelled = min(path.speed_mps * t_s, path.length_m)
    return path.start_m + travelled * path.direction


def _arclength_where(path: ConveyorPath, f, what: str) -> float:
    """Arc length s in [0, L] where f(s) == 0; f must change sign on the path."""
    a, b = 0.0, path.length_m
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0.0:
        raise ConfigurationError(f"{what} is not reached anywhere on the conveyor path")
    return float(brentq(f, a, b, xtol=1e-12))


def path_point_at_azimuth(path: ConveyorPath, azimuth_deg: float) -> np.ndarray:
    """Point on the belt whose mount-frame azimuth equals azimuth_deg."""
    def f(s):
        p = path.start_m + s * path.direction
        return wrap_deg(cartesian_to_spherical(p).azimuth_deg - azimuth_deg)

    s = _arclength_where(path, f, f"azimuth {azimuth_deg} deg")
    return path.start_m + s * path.direction


def path_point_at_range(path: ConveyorPath, range_m: float) -> np.ndarray:
    """Point on the belt at the requested distance from the mount."""
    def f(s):
        return float(np.linalg.norm(path.start_m + s * path.direction)) - range_m

    s = _arclength_where(path, f, f"range {range_m} m")
    return path.start_m + s * path.direction


def closest_range_m(path: ConveyorPath) -> float:
    """Smallest mount-to-belt distance over the traverse."""
    # Projection of the origin onto the belt line, clamped to the segment.
    s = float(np.clip(-path.start_m.dot(path.direction), 0.0, path.length_m))
    return float(np.linalg.norm(path.start_m + s * path.direction))


def required_pan_rate_dps(path: ConveyorPath) -> float:
    """Upper bound on the azimuth rate of the target, speed / closest range."""
    return math.degrees(path.speed_mps / closest_range_m(path))
