"""World model shared by the controller and the scenario harness."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import ConveyorPath, conveyor_position
from .optical import LabelSpec
from .radar import ChirpConfig, ClutterModel, geometry_terms_db, link_echo_db
from .sensor import SensorAntenna, SensorPhysics, SensorState


@dataclass
class SensorScene:
    """Everything the simulated world needs besides the mount itself.

    The tag rides the conveyor with a fixed orientation; its fill level is
    constant within one traverse.  anchor_db fixes the absolute echo scale:
    it is the echo of an empty tag at reference_range_m with the radar
    pointing straight at it and the tag boresight-aligned.
    """

    path: ConveyorPath
    physics: SensorPhysics
    antenna: SensorAntenna
    label: LabelSpec
    level_mm: float = 0.0
    anchor_db: float = -16.0
    reference_range_m: float = 3.5
    modulation_slope_db_per_mm: float = 6.0
    clutter: ClutterModel = field(default_factory=ClutterModel)
    calibration_reference_m: np.ndarray | None = None

    def sensor_at(self, t_s: float) -> SensorState:
        return SensorState(level_mm=self.level_mm, physics=self.physics,
                           antenna=self.antenna,
                           position=conveyor_position(self.path, t_s))

    def sensor_at_point(self, position, level_mm: float | None = None) -> SensorState:
        return SensorState(level_mm=self.level_mm if level_mm is None else level_mm,
                           physics=self.physics, antenna=self.antenna,
                           position=np.asarray(position, dtype=float))

    def echo_db(self, cfg: ChirpConfig, sensor: SensorState,
                pan_deg: float, tilt_deg: float) -> float:
        return link_echo_db(cfg, sensor, pan_deg, tilt_deg, self.anchor_db,
                            self.modulation_slope_db_per_mm, self.reference_range_m)

    def geometry_db(self, cfg: ChirpConfig, sensor: SensorState,
                    pan_deg: float, tilt_deg: float) -> float:
        return geometry_terms_db(cfg, sensor, pan_deg, tilt_deg,
                                 self.reference_range_m)
