"""Rate-limited, quantized, range-clamped pan-tilt mount.

The physical axes move continuously at a constant slew rate toward their
commanded targets; the reported (and optically/radar-effective) orientation
is the axis position snapped to the encoder precision.  Keeping the
continuous position internal and quantizing on read preserves the true slew
rate under arbitrarily fine stepping -- snapping the stored state every
sub-step would let the tilt axis creep a full quantum per step and exceed
its rated speed.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .errors import DegenerateInputError


def _quantize(value: float, quantum: float) -> float:
    return round(value / quantum) * quantum


def _clip(value: float, limits: tuple[float, float]) -> float:
    return min(max(value, limits[0]), limits[1])


@dataclass(frozen=True)
class PanTiltState:
    """Mount state; command() and step() return updated copies."""

    pan_exact_deg: float = 0.0
    tilt_exact_deg: float = 0.0
    target_pan_deg: float = 0.0
    target_tilt_deg: float = 0.0
    pan_speed_dps: float = 6.1
    tilt_speed_dps: float = 4.6
    precision_deg: float = 0.1
    pan_limits_deg: tuple[float, float] = (-170.0, 170.0)
    tilt_limits_deg: tuple[float, float] = (-60.0, 60.0)

    def __post_init__(self):
        if self.pan_speed_dps <= 0.0 or self.tilt_speed_dps <= 0.0:
            raise DegenerateInputError("axis speeds must be positive")
        if self.precision_deg <= 0.0:
            raise DegenerateInputError("precision_deg must be positive")
        for lo, hi in (self.pan_limits_deg, self.tilt_limits_deg):
            if lo >= hi:
                raise DegenerateInputError("axis limits must satisfy lo < hi")
        if not self.pan_limits_deg[0] <= self.pan_exact_deg <= self.pan_limits_deg[1]:
            raise DegenerateInputError("pan outside its limits")
        if not self.tilt_limits_deg[0] <= self.tilt_exact_deg <= self.tilt_limits_deg[1]:
            raise DegenerateInputError("tilt outside its limits")

    @property
    def pan_deg(self) -> float:
        return _quantize(self.pan_exact_deg, self.precision_deg)

    @property
    def tilt_deg(self) -> float:
        return _quantize(self.tilt_exact_deg, self.precision_deg)

    def command(self, dphi_deg: float, dtheta_deg: float) -> "PanTiltState":
        """Add a relative correction to the targets, clamped to the limits."""
        return replace(
            self,
            target_pan_deg=_clip(self.target_pan_deg + dphi_deg, self.pan_limits_deg),
            target_tilt_deg=_clip(self.target_tilt_deg + dtheta_deg, self.tilt_limits_deg),
        )

    def step(self, dt_s: float) -> "PanTiltState":
        """Slew both axes toward their targets for dt seconds."""
        if dt_s <= 0.0:
            raise DegenerateInputError("dt_s must be positive")
        return replace(
            self,
            pan_exact_deg=_slew(self.pan_exact_deg, self.target_pan_deg,
                                self.pan_speed_dps * dt_s),
            tilt_exact_deg=_slew(self.tilt_exact_deg, self.target_tilt_deg,
                                 self.tilt_speed_dps * dt_s),
        )


def _slew(current: float, target: float, max_move: float) -> float:
    delta = target - current
    if abs(delta) <= max_move:
        return target
    return current + (max_move if delta > 0.0 else -max_move)
