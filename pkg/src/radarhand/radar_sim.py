"""FMCW radar signal synthesis for cylinder-mesh hand scatterers.

Each bone-center scatterer produces a dechirped intermediate-frequency (IF)
signal per chirp. With the stop-and-go approximation (range frozen within a
chirp, sampled at the chirp start), the IF sample at fast time t of chirp m
is

    IF(m, t) = A'(m) * exp(j * 2*pi * (f0*tau + S*tau*t - S*tau^2/2)),
    tau = 2*D(m)/c,

the phase difference between the transmitted chirp and its delayed echo.
The beat frequency S*tau encodes range, and the chirp-to-chirp phase step
4*pi*v*Tc/lambda encodes radial velocity (positive = receding, mapping to
the upper half of a centered Doppler axis).

Scatterer amplitude follows the radar equation,

    A' = lambda * sqrt(G_tx * G_rx * P * sigma) / ((4*pi)^1.5 * D^2),

with the cylinder backscatter RCS

    sigma = lambda * r * sin(theta) / (8*pi * cos(theta)^2),

where theta is the aspect angle between cylinder axis and line of sight
(0 = end-on, clamped below pi/2 to keep the broadside singularity finite).

Occlusion is geometric: a tessellation vertex is visible when the open ray
segment from the radar origin to the vertex passes through no solid finite
cylinder, excluding a 1e-6 m neighborhood of the vertex itself so that a
vertex never occludes itself with its own surface.
"""

from __future__ import annotations

import configparser
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .hand_model import HandMesh, ScattererTrack

log = logging.getLogger(__name__)

# Aspect angles at or beyond this are clamped before evaluating the RCS.
ASPECT_CLAMP_RAD = np.pi / 2 - 1e-2

# Ray-cast self-intersection exclusion around the target vertex, meters.
RAY_EPSILON_M = 1e-6


@dataclass(frozen=True)
class RadarParams:
    """FMCW radar configuration. Defaults reproduce the reference 77 GHz
    single-Tx/single-Rx setup (AWR1843-class device).

    The chirp interval (slow-time sampling period) defaults to
    lambda / (4 * max_velocity) so the configured maximum unambiguous
    velocity of 2.50 m/s is exact. The frame rate is bookkeeping for the
    source data; the synthesis timeline is the uniform chirp grid, grouped
    into radar frames of ``chirps_per_frame`` chirps.
    """

    start_frequency_hz: float = 77e9
    bandwidth_hz: float = 3.9e9
    chirp_slope_hz_per_s: float = 76.22e12
    chirp_duration_s: float | None = None  # defaults to bandwidth / slope
    samples_per_chirp: int = 256
    sample_rate_hz: float = 12.5e6
    chirps_per_frame: int = 128
    frame_rate_hz: float = 10.0
    chirp_interval_s: float | None = None  # defaults to lambda / (4 * v_max)
    max_velocity_m_s: float = 2.50
    rx_gain_db: float = 30.0
    tx_gain_db: float = 8.0
    tx_power_dbm: float = 12.0
    tx_amplitude: float = 1.0
    initial_phase_rad: float = 0.0
    wave_speed_m_s: float = 3e8

    def __post_init__(self):
        if self.chirp_duration_s is None:
            object.__setattr__(
                self, "chirp_duration_s", self.bandwidth_hz / self.chirp_slope_hz_per_s
            )
        if self.chirp_interval_s is None:
            object.__setattr__(
                self, "chirp_interval_s", self.wavelength_m / (4.0 * self.max_velocity_m_s)
            )
        positive = {
            "start_frequency_hz": self.start_frequency_hz,
            "bandwidth_hz": self.bandwidth_hz,
            "chirp_slope_hz_per_s": self.chirp_slope_hz_per_s,
            "chirp_duration_s": self.chirp_duration_s,
            "samples_per_chirp": self.samples_per_chirp,
            "sample_rate_hz": self.sample_rate_hz,
            "chirps_per_frame": self.chirps_per_frame,
            "frame_rate_hz": self.frame_rate_hz,
            "chirp_interval_s": self.chirp_interval_s,
            "max_velocity_m_s": self.max_velocity_m_s,
            "tx_amplitude": self.tx_amplitude,
            "wave_speed_m_s": self.wave_speed_m_s,
        }
        for name, value in positive.items():
            if not value > 0:
                raise ValueError(f"{name} must be positive, got {value}")
        slope = self.bandwidth_hz / self.chirp_duration_s
        if abs(slope - self.chirp_slope_hz_per_s) > 1e-6 * self.chirp_slope_hz_per_s:
            raise ValueError(
                "chirp slope inconsistent with bandwidth / duration "
                f"({self.chirp_slope_hz_per_s:.6g} vs {slope:.6g} Hz/s)"
            )
        adc_window = self.samples_per_chirp / self.sample_rate_hz
        if adc_window > self.chirp_duration_s * (1 + 1e-12):
            raise ValueError(
                f"ADC window {adc_window * 1e6:.2f} us exceeds chirp duration "
                f"{self.chirp_duration_s * 1e6:.2f} us"
            )
        if self.chirp_interval_s < self.chirp_duration_s * (1 - 1e-12):
            raise ValueError("chirp interval shorter than the chirp itself")

    @property
    def wavelength_m(self) -> float:
        return self.wave_speed_m_s / self.start_frequency_hz

    @property
    def rx_gain_linear(self) -> float:
        return 10.0 ** (self.rx_gain_db / 10.0)

    @property
    def tx_gain_linear(self) -> float:
        return 10.0 ** (self.tx_gain_db / 10.0)

    @property
    def tx_power_w(self) -> float:
        return 10.0 ** ((self.tx_power_dbm - 30.0) / 10.0)

    @property
    def range_bin_spacing_m(self) -> float:
        """Meters per range-FFT bin: c * fs / (2 * S * samples_per_chirp)."""
        return (
            self.wave_speed_m_s
            * self.sample_rate_hz
            / (2.0 * self.chirp_slope_hz_per_s * self.samples_per_chirp)
        )

    @property
    def frame_period_s(self) -> float:
        return self.chirps_per_frame * self.chirp_interval_s

    @property
    def max_unambiguous_velocity_m_s(self) -> float:
        return self.wavelength_m / (4.0 * self.chirp_interval_s)

    @property
    def frame_velocity_resolution_m_s(self) -> float:
        """Velocity per Doppler bin with a full frame (chirps_per_frame) FFT."""
        return 2.0 * self.max_velocity_m_s / self.chirps_per_frame

    def doppler_bin_velocity(self, window_len: int) -> float:
        """Velocity per Doppler bin for a slow-time DFT of ``window_len``."""
        return self.wavelength_m / (2.0 * window_len * self.chirp_interval_s)

    def fast_times(self) -> np.ndarray:
        return np.arange(self.samples_per_chirp) / self.sample_rate_hz


# Config-file keys mirror the reference parameter table; values in the
# units named by each key. Derived/informational table rows (velocity
# resolution, range resolution, maximum range) are not configuration.
_CONFIG_KEYS = {
    "starting_frequency_ghz": ("start_frequency_hz", 1e9),
    "frequency_slope_mhz_per_us": ("chirp_slope_hz_per_s", 1e12),
    "bandwidth_ghz": ("bandwidth_hz", 1e9),
    "sampling_rate_ksps": ("sample_rate_hz", 1e3),
    "maximum_velocity_m_s": ("max_velocity_m_s", 1.0),
    "rx_gain_db": ("rx_gain_db", 1.0),
    "tx_gain_db": ("tx_gain_db", 1.0),
    "transmission_power_dbm": ("tx_power_dbm", 1.0),
    "chirp_duration_us": ("chirp_duration_s", 1e-6),
    "chirp_interval_us": ("chirp_interval_s", 1e-6),
    "tx_amplitude": ("tx_amplitude", 1.0),
    "initial_phase_rad": ("initial_phase_rad", 1.0),
}


def load_radar_config(path) -> RadarParams:
    """Read RadarParams from an INI file with a [radar] section. Missing
    keys fall back to the defaults (the reference parameter table)."""
    parser = configparser.ConfigParser()
    read = parser.read(Path(path))
    if not read:
        raise FileNotFoundError(f"radar config not found: {path}")
    if not parser.has_section("radar"):
        raise ValueError(f"radar config missing [radar] section: {path}")
    section = parser["radar"]
    kwargs: dict = {}
    for key, raw in section.items():
        if key in _CONFIG_KEYS:
            field_name, scale = _CONFIG_KEYS[key]
            kwargs[field_name] = float(raw) * scale
        elif key == "chirps_per_frame":
            kwargs["chirps_per_frame"] = int(raw)
        elif key == "samples_per_chirp":
            kwargs["samples_per_chirp"] = int(raw)
        elif key == "frame_time_ms":
            kwargs["frame_rate_hz"] = 1e3 / float(raw)
        else:
            raise ValueError(f"unknown radar config key {key!r}")
    return RadarParams(**kwargs)


def save_radar_config(params: RadarParams, path) -> None:
    parser = configparser.ConfigParser()
    parser["radar"] = {
        "starting_frequency_ghz": repr(params.start_frequency_hz / 1e9),
        "frequency_slope_mhz_per_us": repr(params.chirp_slope_hz_per_s / 1e12),
        "bandwidth_ghz": repr(params.bandwidth_hz / 1e9),
        "sampling_rate_ksps": repr(params.sample_rate_hz / 1e3),
        "frame_time_ms": repr(1e3 / params.frame_rate_hz),
        "chirps_per_frame": str(params.chirps_per_frame),
        "samples_per_chirp": str(params.samples_per_chirp),
        "maximum_velocity_m_s": repr(params.max_velocity_m_s),
        "rx_gain_db": repr(params.rx_gain_db),
        "tx_gain_db": repr(params.tx_gain_db),
        "transmission_power_dbm": repr(params.tx_power_dbm),
        "chirp_duration_us": repr(params.chirp_duration_s * 1e6),
        "chirp_interval_us": repr(params.chirp_interval_s * 1e6),
        "tx_amplitude": repr(params.tx_amplitude),
        "initial_phase_rad": repr(params.initial_phase_rad),
    }
    with open(Path(path), "w") as fh:
        parser.write(fh)


@dataclass
class IFSignalCube:
    """Complex IF samples, shape (slow_time, fast_time)."""

    samples: np.ndarray
    provenance: str = "composite"

    def __post_init__(self):
        self.samples = np.asarray(self.samples)
        if self.samples.ndim != 2:
            raise ValueError("IF cube must be 2-D (slow, fast)")
        if not np.all(np.isfinite(self.samples.view(float))):
            raise ValueError("non-finite IF samples")

    @property
    def n_chirps(self) -> int:
        return self.samples.shape[0]


def cylinder_rcs(radius_m, aspect_angle_rad, wavelength_m, *, clamp=ASPECT_CLAMP_RAD):
    """Backscatter RCS of a circular cylinder at aspect angle theta:

        sigma = lambda * r * sin(theta) / (8 * pi * cos(theta)^2)

    theta = 0 is end-on incidence (zero return); theta -> pi/2 is broadside,
    clamped at ``clamp`` so the return stays finite. Accepts scalars or
    arrays (broadcast).
    """
    r = np.asarray(radius_m, dtype=float)
    theta = np.asarray(aspect_angle_rad, dtype=float)
    if np.any(r <= 0):
        raise ValueError("cylinder radius must be positive")
    if wavelength_m <= 0:
        raise ValueError("wavelength must be positive")
    if np.any(theta < 0):
        raise ValueError("aspect angle must be non-negative")
    n_clamped = int(np.count_nonzero(theta > clamp))
    if n_clamped:
        log.debug("clamped %d aspect angles at %.4f rad", n_clamped, clamp)
        theta = np.minimum(theta, clamp)
    sigma = wavelength_m * r * np.sin(theta) / (8.0 * np.pi * np.cos(theta) ** 2)
    return float(sigma) if sigma.ndim == 0 else sigma


def attenuated_amplitude(params: RadarParams, sigma_m2, distance_m):
    """Received amplitude of a scatterer with RCS sigma at distance D:

        A' = lambda * sqrt(G_tx * G_rx * P * sigma) / ((4*pi)^1.5 * D^2)

    Accepts scalars or arrays (broadcast)."""
    sigma = np.asarray(sigma_m2, dtype=float)
    dist = np.asarray(distance_m, dtype=float)
    if np.any(dist <= 0):
        raise ValueError("scatterer distance must be positive")
    if np.any(sigma < 0):
        raise ValueError("RCS must be non-negative")
    amp = (
        params.wavelength_m
        * np.sqrt(params.tx_gain_linear * params.rx_gain_linear * params.tx_power_w * sigma)
        / ((4.0 * np.pi) ** 1.5 * dist**2)
    )
    return float(amp) if amp.ndim == 0 else amp


def _ray_blocked(origin: np.ndarray, targets: np.ndarray, axes_a, axes_b, radii) -> np.ndarray:
    """For each target vertex, is the open segment origin->vertex blocked by
    any solid finite cylinder? A block requires an intersection interval of
    positive length inside t in (0, 1 - eps), eps = 1e-6 m at the vertex end.

    targets: (V, 3); axes_a, axes_b: (C, 3); radii: (C,). Returns bool (V,).
    """
    d = targets - origin  # (V, 3)
    dn = np.linalg.norm(d, axis=1)
    t_hi_cap = 1.0 - RAY_EPSILON_M / np.maximum(dn, 1e-300)  # (V,)

    seg = axes_b - axes_a  # (C, 3)
    length = np.linalg.norm(seg, axis=1)
    u = seg / length[:, None]
    oa = origin - axes_a  # (C, 3)
    p0 = np.sum(oa * u, axis=1)  # (C,)
    pd = d @ u.T  # (V, C)

    with np.errstate(divide="ignore", invalid="ignore"):
        t_plane0 = (0.0 - p0)[None, :] / pd
        t_plane1 = (length - p0)[None, :] / pd
    ax_lo = np.minimum(t_plane0, t_plane1)
    ax_hi = np.maximum(t_plane0, t_plane1)
    parallel = np.abs(pd) < 1e-12 * dn[:, None]
    inside_slab = ((p0 >= 0) & (p0 <= length))[None, :]
    ax_lo = np.where(parallel, np.where(inside_slab, -np.inf, np.inf), ax_lo)
    ax_hi = np.where(parallel, np.where(inside_slab, np.inf, -np.inf), ax_hi)

    operp = oa - p0[:, None] * u  # (C, 3)
    dperp = d[:, None, :] - pd[:, :, None] * u[None, :, :]  # (V, C, 3)
    qa = np.sum(dperp * dperp, axis=2)  # (V, C)
    qb = 2.0 * np.sum(dperp * operp[None, :, :], axis=2)
    qc = (np.sum(operp * operp, axis=1) - radii**2)[None, :]

    axial_ray = qa < (1e-12 * dn**2)[:, None]
    disc = qb * qb - 4.0 * qa * qc
    sq = np.sqrt(np.maximum(disc, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        rad_lo = (-qb - sq) / (2.0 * qa)
        rad_hi = (-qb + sq) / (2.0 * qa)
    rad_lo = np.where(axial_ray, np.where(qc <= 0, -np.inf, np.inf), rad_lo)
    rad_hi = np.where(axial_ray, np.where(qc <= 0, np.inf, -np.inf), rad_hi)
    grazing = (~axial_ray) & (disc <= 0)
    rad_lo = np.where(grazing, np.inf, rad_lo)
    rad_hi = np.where(grazing, -np.inf, rad_hi)

    lo = np.maximum(np.maximum(ax_lo, rad_lo), 0.0)
    hi = np.minimum(np.minimum(ax_hi, rad_hi), t_hi_cap[:, None])
    return np.any(lo < hi, axis=1)


def visibility_count(mesh: HandMesh, radar_origin) -> np.ndarray:
    """Count, per segment, the tessellation vertices visible from the radar
    origin (no solid cylinder between origin and vertex). Returns int (S,).
    """
    if not mesh.segments:
        return np.zeros(0, dtype=int)
    origin = np.asarray(radar_origin, dtype=float)
    n_seg, n_vert, _ = mesh.vertices.shape
    targets = mesh.vertices.reshape(-1, 3)
    axes_a = np.stack([s.endpoint_a for s in mesh.segments])
    axes_b = np.stack([s.endpoint_b for s in mesh.segments])
    radii = np.array([s.radius for s in mesh.segments])
    blocked = _ray_blocked(origin, targets, axes_a, axes_b, radii)
    visible = (~blocked).reshape(n_seg, n_vert)
    return visible.sum(axis=1).astype(int)


def synthesize_if(
    track: ScattererTrack,
    params: RadarParams,
    *,
    n_chirps: int | None = None,
    visibility_scaling: bool = False,
) -> IFSignalCube:
    """Synthesize one scatterer's IF cube from its track.

    ``visibility_scaling`` additionally scales the amplitude by the visible
    vertex fraction (strict-occlusion ablation mode); by default occlusion
    influences the signal only through the learned weights.
    """
    if n_chirps is not None and n_chirps != track.n_chirps:
        raise ValueError(
            f"track has {track.n_chirps} chirps but cube wants {n_chirps}"
        )
    tau = 2.0 * track.radial_distance / params.wave_speed_m_s  # (M,)
    t = params.fast_times()  # (N,)
    slope = params.chirp_slope_hz_per_s
    phase = 2.0 * np.pi * (
        params.start_frequency_hz * tau[:, None]
        + slope * tau[:, None] * t[None, :]
        - 0.5 * slope * tau[:, None] ** 2
    )
    amp = params.tx_amplitude * attenuated_amplitude(
        params, track.rcs, track.radial_distance
    )
    amp = np.asarray(amp, dtype=float)
    if visibility_scaling:
        amp = amp * track.visible_vertex_count / track.vertex_count
    samples = amp[:, None] * np.exp(1j * phase)
    return IFSignalCube(samples=samples, provenance=f"scatterer:{track.segment_id}")


def compose(per_scatterer: list[IFSignalCube], weights: np.ndarray | None = None) -> IFSignalCube:
    """Weighted sum of per-scatterer cubes.

    ``weights`` has shape (n_scatterers, n_radar_frames), non-negative,
    held constant across each radar frame's chirps (frame size inferred
    from the cube length). ``None`` means unit weights, the pure-modeling
    baseline.
    """
    if not per_scatterer:
        raise ValueError("no cubes to compose")
    shapes = {c.samples.shape for c in per_scatterer}
    if len(shapes) != 1:
        raise ValueError(f"cube dimensions differ: {sorted(shapes)}")
    (m, n), = shapes
    if weights is None:
        total = per_scatterer[0].samples.copy()
        for cube in per_scatterer[1:]:
            total += cube.samples
        return IFSignalCube(samples=total, provenance="composite")
    weights = np.asarray(weights, dtype=float)
    if weights.ndim != 2 or weights.shape[0] != len(per_scatterer):
        raise ValueError(
            f"weights shape {weights.shape} does not match {len(per_scatterer)} cubes"
        )
    if not np.all(np.isfinite(weights)) or np.any(weights < 0):
        raise ValueError("weights must be finite and non-negative")
    if m % weights.shape[1]:
        raise ValueError(
            f"{m} chirps do not divide into {weights.shape[1]} radar frames"
        )
    cpf = m // weights.shape[1]
    total = np.zeros((m, n), dtype=complex)
    for k, cube in enumerate(per_scatterer):
        total += np.repeat(weights[k], cpf)[:, None] * cube.samples
    return IFSignalCube(samples=total, provenance="composite")
