"""Synthetic camera frames and HSV blob detection of the tag label.

The camera shares the pan-tilt mount with the radar.  Projection uses a
linear angle-to-pixel model: one degree of target offset relative to the
current mount orientation maps to width_px / hfov_deg pixels on either
axis (square pixels, so the vertical field of view follows from the
aspect ratio).  At the offsets this system works with (well inside
+-30 deg) the difference to a tan projection is absorbed by the closed
loop.

Pixel coordinates are continuous: pixel (i, j) covers [i, i+1) x [j, j+1)
and the image centre is exactly (width/2, height/2).  u grows to the
right, v grows downward.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import DegenerateInputError
from .geometry import cartesian_to_spherical, wrap_deg
from .sensor import SensorState


@dataclass(frozen=True)
class CameraModel:
    width_px: int = 640
    height_px: int = 480
    frame_rate_hz: float = 1.0
    hfov_deg: float = 60.0

    def __post_init__(self):
        if self.width_px <= 0 or self.height_px <= 0:
            raise DegenerateInputError("frame dimensions must be positive")
        if not 0.0 < self.hfov_deg < 180.0:
            raise DegenerateInputError("hfov_deg must be in (0, 180)")
        if not self.frame_rate_hz > 0.0:
            raise DegenerateInputError("frame_rate_hz must be positive")

    @property
    def px_per_deg(self) -> float:
        return self.width_px / self.hfov_deg

    @property
    def center_px(self) -> tuple[float, float]:
        return self.width_px / 2.0, self.height_px / 2.0


@dataclass(frozen=True)
class LabelSpec:
    """Colored rectangle glued onto the tag, sized in metres."""

    width_m: float = 0.12
    height_m: float = 0.08
    color_rgb: tuple[int, int, int] = (230, 25, 25)


@dataclass
class Frame:
    """One camera image, height x width x RGB, 8 bit per channel."""

    pixels: np.ndarray
    timestamp_s: float = 0.0

    def __post_init__(self):
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise DegenerateInputError("pixels must be an (H, W, 3) array")


@dataclass(frozen=True)
class HsvThresholds:
    """Wrap-aware hue interval plus saturation and value bands."""

    hue_lo_deg: float = 350.0
    hue_hi_deg: float = 10.0
    sat_lo: float = 0.5
    sat_hi: float = 1.0
    val_lo: float = 0.3
    val_hi: float = 1.0

    def hue_mask(self, hue_deg: np.ndarray) -> np.ndarray:
        if self.hue_lo_deg <= self.hue_hi_deg:
            return (hue_deg >= self.hue_lo_deg) & (hue_deg <= self.hue_hi_deg)
        return (hue_deg >= self.hue_lo_deg) | (hue_deg <= self.hue_hi_deg)


@dataclass(frozen=True)
class Detection:
    """Label blob found in a frame."""

    bbox: tuple[int, int, int, int]        # u_min, v_min, u_max, v_max (inclusive)
    centroid: tuple[float, float]          # (U_L, V_L), continuous pixels
    offsets: tuple[float, float]           # (dU, dV) = centroid - image centre
    area_px: int


def project_to_pixel(camera: CameraModel, pan_deg: float, tilt_deg: float,
                     point_m) -> tuple[float, float] | None:
    """Continuous pixel coordinates of a mount-frame point, or None.

    None means the point lies behind the camera's angular hemisphere; points
    merely outside the frame still project (to out-of-bounds coordinates).
    """
    pose = cartesian_to_spherical(point_m)
    phi_rel = wrap_deg(pose.azimuth_deg - pan_deg)
    theta_rel = pose.elevation_deg - tilt_deg
    if abs(phi_rel) >= 90.0 or abs(theta_rel) >= 90.0:
        return None
    cu, cv = camera.center_px
    u = cu + camera.px_per_deg * phi_rel
    v = cv - camera.px_per_deg * theta_rel
    return u, v


def render_frame(camera: CameraModel, pan_deg: float, tilt_deg: float,
                 sensor: SensorState, label: LabelSpec,
                 background_rgb: tuple[int, int, int] = (96, 96, 96),
                 noise_sigma: float = 0.0,
                 rng: np.random.Generator | None = None,
                 timestamp_s: float = 0.0) -> Frame:
    """Paint the label rectangle over a flat background.

    The rectangle is centred on the tag's projected pixel and scales with
    1/range.  Optional per-pixel Gaussian noise (RGB counts) is added last.
    """
    img = np.empty((camera.height_px, camera.width_px, 3), dtype=np.uint8)
    img[:, :] = np.asarray(background_rgb, dtype=np.uint8)

    uv = project_to_pixel(camera, pan_deg, tilt_deg, sensor.position)
    if uv is not None:
        u, v = uv
        r = float(np.linalg.norm(sensor.position))
        w_px = camera.px_per_deg * math.degrees(label.width_m / r)
        h_px = camera.px_per_deg * math.degrees(label.height_m / r)
        u0 = round(u - w_px / 2.0)
        u1 = round(u + w_px / 2.0)
        v0 = round(v - h_px / 2.0)
        v1 = round(v + h_px / 2.0)
        u0, u1 = max(u0, 0), min(u1, camera.width_px)
        v0, v1 = max(v0, 0), min(v1, camera.height_px)
        if u1 > u0 and v1 > v0:
            img[v0:v1, u0:u1] = np.asarray(label.color_rgb, dtype=np.uint8)

    if noise_sigma > 0.0:
        if rng is None:
            raise DegenerateInputError("pixel noise requires an rng")
        noisy = img.astype(np.float32)
        noisy += rng.normal(0.0, noise_sigma, img.shape).astype(np.float32)
        img = np.clip(np.rint(noisy), 0.0, 255.0).astype(np.uint8)

    return Frame(pixels=img, timestamp_s=timestamp_s)


def rgb_to_hsv(pixel) -> tuple[float, float, float]:
    """Hexcone conversion of one 8-bit RGB triple to (h deg, s, v)."""
    r, g, b = (float(c) / 255.0 for c in pixel)
    mx, mn = max(r, g, b), min(r, g, b)
    delta = mx - mn
    v = mx
    s = 0.0 if mx == 0.0 else delta / mx
    if delta == 0.0:
        h = 0.0
    elif mx == r:
        h = 60.0 * ((g - b) / delta) % 360.0
    elif mx == g:
        h = 60.0 * ((b - r) / delta) + 120.0
    else:
        h = 60.0 * ((r - g) / delta) + 240.0
    return h % 360.0, s, v


def hsv_to_rgb(h_deg: float, s: float, v: float) -> tuple[int, int, int]:
    """Inverse hexcone conversion back to an 8-bit RGB triple."""
    h = (h_deg % 360.0) / 60.0
    i = int(h) % 6
    f = h - int(h)
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    r, g, b = ((v, t, p), (q, v, p), (p, v, t), (p, q, v), (t, p, v), (v, p, q))[i]
    return tuple(int(round(c * 255.0)) for c in (r, g, b))


def _hsv_arrays(pixels: np.ndarray):
    """Vectorised hexcone conversion of a whole frame (float32 internals)."""
    arr = pixels.astype(np.float32)
    r, g, b = arr[..., 0], arr[..., 1], arr[..., 2]
    mx = np.max(arr, axis=-1)
    mn = np.min(arr, axis=-1)
    delta = mx - mn
    v = mx / 255.0
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(mx > 0.0, delta / mx, 0.0)
        safe = np.where(delta > 0.0, delta, 1.0)
        h = np.where(mx == r, (60.0 * (g - b) / safe) % 360.0,
                     np.where(mx == g, 60.0 * (b - r) / safe + 120.0,
                              60.0 * (r - g) / safe + 240.0))
    h = np.where(delta > 0.0, h % 360.0, 0.0)
    return h, s, v


def detect_label(frame: Frame, thresholds: HsvThresholds,
                 min_area_px: int = 4) -> Detection | None:
    """Largest 4-connected blob passing the HSV thresholds, or None.

    The centroid is the pixel-mass centre of the blob in continuous
    coordinates; offsets are relative to the image centre.
    """
    h, s, v = _hsv_arrays(frame.pixels)
    mask = (thresholds.hue_mask(h)
            & (s >= thresholds.sat_lo) & (s <= thresholds.sat_hi)
            & (v >= thresholds.val_lo) & (v <= thresholds.val_hi))
    if not mask.any():
        return None

    labels, count = ndimage.label(mask)  # default structure = 4-connectivity
    sizes = np.bincount(labels.ravel())
    sizes[0] = 0
    best = int(np.argmax(sizes))
    area = int(sizes[best])
    if area < min_area_px:
        return None

    rows, cols = np.nonzero(labels == best)
    u_c = float(cols.mean()) + 0.5
    v_c = float(rows.mean()) + 0.5
    height, width = frame.pixels.shape[:2]
    du = u_c - width / 2.0
    dv = v_c - height / 2.0
    bbox = (int(cols.min()), int(rows.min()), int(cols.max()), int(rows.max()))
    return Detection(bbox=bbox, centroid=(u_c, v_c), offsets=(du, dv), area_px=area)


def offsets_to_angles(camera: CameraModel, du_px: float, dv_px: float,
                      gains_deg_per_px: tuple[float, float] | None = None
                      ) -> tuple[float, float]:
    """Map pixel offsets to mount corrections (dphi, dtheta) in degrees.

    Positive dv (target below centre) commands a downward tilt.  The default
    gain is the exact inverse of the projection scale, so the correction is
    a one-step dead-beat move for a stationary target.
    """
    if gains_deg_per_px is None:
        k = camera.hfov_deg / camera.width_px
        k_phi, k_theta = k, k
    else:
        k_phi, k_theta = gains_deg_per_px
    return k_phi * du_px, -k_theta * dv_px


def write_ppm(frame: Frame, path) -> None:
    """Dump a frame as binary PPM (P6) for eyeballing."""
    h, w = frame.pixels.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(frame.pixels.tobytes())
