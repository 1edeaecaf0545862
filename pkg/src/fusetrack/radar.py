"""FMCW chirp model: beat synthesis, spectrum, peak pickup, range and echo.

The radar sweeps a bandwidth B over the chirp repetition time T_c and mixes
the received signal down to baseband, so a point echo at range R appears as
a real tone at the beat frequency

    f = 4 * B * R / (c * T_c)

sampled at f_s = num_samples / T_c.  Range follows by inverting the same
expression; nothing above baseband is simulated.  The spectrum is the dB
magnitude of the DFT of the windowed samples, normalised so a unit-amplitude
tone sitting exactly on a bin reads 0 dB regardless of the window.  With
that normalisation an echo synthesised at level L dB is recovered at L dB
(up to scalloping), which keeps spectrum readings directly comparable with
link-budget numbers.

Echo levels everywhere in this module are dB relative to an arbitrary but
fixed reference; only differences of levels are meaningful.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AliasRiskError, DegenerateInputError
from .geometry import cartesian_to_spherical, wrap_deg
from .sensor import SensorState, aspect_gain_db, beam_gain_db, modulation_loss_db

DB_FLOOR = -120.0  # clamp for log magnitudes of empty bins

WINDOWS = ("rectangular", "hann")

# Power carried by the three bins around an on-bin tone, relative to the
# squared normalised peak.  Used by tone_level_db to undo scalloping.
_THREE_BIN_REF = {"rectangular": 1.0, "hann": 1.5}


@dataclass(frozen=True)
class ChirpConfig:
    """Chirp and antenna parameters of the interrogating radar."""

    carrier_hz: float = 24e9
    bandwidth_hz: float = 2e9
    chirp_duration_s: float = 0.015
    num_samples: int = 256
    tx_gain_dbi: float = 28.0
    rx_gain_dbi: float = 20.0
    tx_power_dbm: float = 20.0
    az_hpbw_deg: float = 12.0
    el_hpbw_deg: float = 9.0
    speed_of_light_mps: float = 299_792_458.0

    def __post_init__(self):
        for name in ("carrier_hz", "bandwidth_hz", "chirp_duration_s",
                     "az_hpbw_deg", "el_hpbw_deg", "speed_of_light_mps"):
            if not getattr(self, name) > 0.0:
                raise DegenerateInputError(f"{name} must be positive")
        n = self.num_samples
        if n < 2 or (n & (n - 1)) != 0:
            raise DegenerateInputError("num_samples must be a power of two")
        if self.bandwidth_hz >= self.carrier_hz:
            raise DegenerateInputError("bandwidth must be below the carrier")

    @property
    def sample_rate_hz(self) -> float:
        return self.num_samples / self.chirp_duration_s

    @property
    def bin_hz(self) -> float:
        return 1.0 / self.chirp_duration_s


def range_resolution_m(cfg: ChirpConfig) -> float:
    """c / (2B), the classic two-way sweep resolution."""
    return cfg.speed_of_light_mps / (2.0 * cfg.bandwidth_hz)


def range_bin_m(cfg: ChirpConfig) -> float:
    """Range step of one spectrum bin, c / (4B)."""
    return cfg.speed_of_light_mps / (4.0 * cfg.bandwidth_hz)


def max_unambiguous_range_m(cfg: ChirpConfig) -> float:
    """Range whose beat tone reaches Nyquist, (f_s/2) * c * T_c / (4B)."""
    return (cfg.sample_rate_hz / 2.0) * cfg.speed_of_light_mps \
        * cfg.chirp_duration_s / (4.0 * cfg.bandwidth_hz)


def beat_frequency_for_range(cfg: ChirpConfig, range_m: float) -> float:
    return 4.0 * cfg.bandwidth_hz * range_m / (cfg.speed_of_light_mps * cfg.chirp_duration_s)


def range_from_beat(cfg: ChirpConfig, f_n_hz: float) -> float:
    """Invert the beat-frequency relation, R = f * c * T_c / (4B)."""
    if f_n_hz < 0.0:
        raise DegenerateInputError("beat frequency must be non-negative")
    return f_n_hz * cfg.speed_of_light_mps * cfg.chirp_duration_s / (4.0 * cfg.bandwidth_hz)


def min_bin_for_range(cfg: ChirpConfig, range_m: float) -> int:
    """First spectrum bin index at or above the given range (at least 1)."""
    return max(1, math.ceil(beat_frequency_for_range(cfg, range_m) / cfg.bin_hz))


@dataclass(frozen=True)
class EchoTarget:
    """One point echo: range, level (dB) and the chirp-to-chirp phase."""

    range_m: float
    level_db: float
    phase_rad: float = 0.0


@dataclass
class ClutterModel:
    """Stationary environment return: white Gaussian floor plus fixed tones.

    noise_level_db is the dB amplitude of the per-sample Gaussian noise
    (20*log10(sigma)), on the same scale as EchoTarget levels; None disables
    the floor.  tones are (range_m, level_db) static reflectors that get a
    random phase per chirp.
    """

    noise_level_db: float | None = None
    tones: tuple[tuple[float, float], ...] = ()

    @property
    def noise_sigma(self) -> float:
        if self.noise_level_db is None:
            return 0.0
        return 10.0 ** (self.noise_level_db / 20.0)


@dataclass
class BeatSpectrum:
    """Half-spectrum of one chirp: per-bin magnitudes in normalised dB."""

    bin_hz: float
    magnitudes_db: np.ndarray
    window: str = "hann"

    def frequency_of_bin(self, idx: int) -> float:
        return idx * self.bin_hz

    def to_csv_rows(self):
        for k, m in enumerate(self.magnitudes_db):
            yield k * self.bin_hz, float(m)


def _window(name: str, n: int) -> np.ndarray:
    if name == "rectangular":
        return np.ones(n)
    if name == "hann":
        # periodic form: sums to N/2 exactly, power gain 3/8
        k = np.arange(n)
        return 0.5 - 0.5 * np.cos(2.0 * np.pi * k / n)
    raise DegenerateInputError(f"unknown window {name!r}; expected one of {WINDOWS}")


def synthesize_beat(cfg: ChirpConfig, targets, clutter: ClutterModel | None = None,
                    rng: np.random.Generator | None = None) -> np.ndarray:
    """Real baseband samples of one chirp for a set of point echoes.

    s[k] = sum_i A_i cos(2 pi f_i k / f_s + psi_i) + clutter[k], with A_i
    the linear amplitude of the target level and f_i its beat frequency.
    Targets (and clutter tones) beyond the unambiguous range raise
    AliasRiskError instead of silently folding.
    """
    n = cfg.num_samples
    fs = cfg.sample_rate_hz
    r_max = max_unambiguous_range_m(cfg)
    samples = np.zeros(n)
    k = np.arange(n)

    def add_tone(range_m, level_db, phase_rad, what):
        if not 0.0 < range_m < r_max:
            raise AliasRiskError(
                f"{what} at {range_m:.3f} m outside (0, {r_max:.3f}) m unambiguous span")
        f = beat_frequency_for_range(cfg, range_m)
        amp = 10.0 ** (level_db / 20.0)
        samples[:] += amp * np.cos(2.0 * np.pi * f * k / fs + phase_rad)

    for t in targets:
        add_tone(t.range_m, t.level_db, t.phase_rad, "target")

    if clutter is not None:
        for range_m, level_db in clutter.tones:
            phase = rng.uniform(0.0, 2.0 * np.pi) if rng is not None else 0.0
            add_tone(range_m, level_db, phase, "clutter tone")
        sigma = clutter.noise_sigma
        if sigma > 0.0:
            if rng is None:
                raise DegenerateInputError("clutter noise requires an rng")
            samples += rng.normal(0.0, sigma, n)

    return samples


def beat_spectrum(cfg: ChirpConfig, samples: np.ndarray,
                  window: str = "hann") -> BeatSpectrum:
    """Windowed DFT magnitude of one chirp, bins 0 .. N/2 - 1 in dB."""
    samples = np.asarray(samples, dtype=float)
    if samples.shape != (cfg.num_samples,):
        raise DegenerateInputError(
            f"expected {cfg.num_samples} samples, got shape {samples.shape}")
    w = _window(window, cfg.num_samples)
    spectrum = np.fft.rfft(samples * w)[: cfg.num_samples // 2]
    # normalise so an on-bin unit tone reads 0 dB under any window
    mags = 2.0 * np.abs(spectrum) / w.sum()
    db = 20.0 * np.log10(np.maximum(mags, 10.0 ** (DB_FLOOR / 20.0)))
    return BeatSpectrum(bin_hz=cfg.bin_hz, magnitudes_db=db, window=window)


def peak_beat_frequency(spectrum: BeatSpectrum, min_bin: int = 1) -> tuple[float, float]:
    """Frequency and dB magnitude of the strongest bin at index >= min_bin.

    Ties break toward the lower bin.  DC is never eligible.
    """
    if min_bin < 1:
        raise DegenerateInputError("min_bin must be at least 1 (DC excluded)")
    mags = spectrum.magnitudes_db
    if len(mags) <= min_bin:
        raise DegenerateInputError("spectrum has no bins at or above min_bin")
    idx = min_bin + int(np.argmax(mags[min_bin:]))
    return idx * spectrum.bin_hz, float(mags[idx])


def tone_level_db(spectrum: BeatSpectrum, peak_bin: int) -> float:
    """Scalloping-free level of a tone near peak_bin.

    Sums the power of the three bins around the peak and renormalises by the
    window's on-bin three-bin power, which is flat within 0.09 dB across the
    bin for the hann window (the rectangular window keeps its inherent
    0.7 dB ripple).
    """
    mags = spectrum.magnitudes_db
    if not 0 <= peak_bin < len(mags):
        raise DegenerateInputError(f"peak_bin {peak_bin} outside the spectrum")
    lo, hi = max(peak_bin - 1, 0), min(peak_bin + 2, len(mags))
    power = float(np.sum(10.0 ** (mags[lo:hi] / 10.0)))
    return 10.0 * math.log10(power / _THREE_BIN_REF[spectrum.window])


def noise_floor_estimate_db(spectrum: BeatSpectrum, min_bin: int = 1) -> float:
    """Level that clutter peaks are expected to reach, from the spectrum itself.

    Median bin magnitude plus the Rayleigh median-to-expected-max factor for
    the number of bins inspected; a genuine echo must clear this estimate to
    be trusted.
    """
    mags = spectrum.magnitudes_db[min_bin:]
    if len(mags) == 0:
        raise DegenerateInputError("spectrum has no bins at or above min_bin")
    n = len(mags)
    median_db = float(np.median(mags))
    max_over_median = 10.0 * math.log10(math.log(n) / math.log(2.0)) if n > 2 else 0.0
    return median_db + max_over_median


def geometry_terms_db(cfg: ChirpConfig, sensor: SensorState,
                      pan_deg: float, tilt_deg: float,
                      reference_range_m: float) -> float:
    """Pointing, aspect and range-spread terms of the echo budget (dB).

    Two-way radar pattern at the current pointing error, two passes through
    the tag's antenna, and 40 log10(R / R_ref) of range loss.
    """
    pose = cartesian_to_spherical(sensor.position)
    if pose.range_m <= 0.0:
        raise DegenerateInputError("sensor range must be positive")
    dphi = wrap_deg(pose.azimuth_deg - pan_deg)
    dtheta = pose.elevation_deg - tilt_deg
    pointing = beam_gain_db(dphi, dtheta, cfg.az_hpbw_deg, cfg.el_hpbw_deg)
    los_back = -sensor.position / pose.range_m
    aspect = aspect_gain_db(sensor.antenna, los_back)
    spread = -40.0 * math.log10(pose.range_m / reference_range_m)
    return 2.0 * pointing + 2.0 * aspect + spread


def link_echo_db(cfg: ChirpConfig, sensor: SensorState,
                 pan_deg: float, tilt_deg: float,
                 anchor_db: float, modulation_slope_db_per_mm: float,
                 reference_range_m: float) -> float:
    """Echo level of the tag for the current geometry and fill level.

    anchor_db is the echo of an empty tag at the reference range with both
    the radar and the tag boresight-aligned; everything else is a correction
    on top of it.  The absolute scale is a free calibration constant of the
    deployment (the Tx/Rx gains and transmit power in ChirpConfig are carried
    for bookkeeping, not re-derived here).
    """
    geom = geometry_terms_db(cfg, sensor, pan_deg, tilt_deg, reference_range_m)
    loss = modulation_loss_db(sensor.physics, sensor.level_mm, modulation_slope_db_per_mm)
    return anchor_db + geom - loss
