"""Range/Doppler processing: IF cube -> normalized time-Doppler spectrogram.

The chain is range-FFT along fast time, static clutter suppression
(slow-time mean removal per range bin), selection of the gesture's range
bin, then a short-time Fourier transform along slow time (Hamming window,
non-overlapping 64-sample hops, zero-Doppler centered), log magnitude, and
per-image min-max normalization. Clips are standardized to 2048 slow-time
samples so the output is always 64 Doppler bins by 32 time frames.

Beat frequency maps to distance as d = f*c/(2*S) and slow-time phase step
to velocity as v = lambda*dphi/(4*pi*Tc). Positive radial velocity
(receding scatterer) lands in the upper half of the centered Doppler axis.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .radar_sim import IFSignalCube, RadarParams

SPECTROGRAM_MAGIC = b"RHSPEC01"


@dataclass
class RangeProfileCube:
    """Range-FFT output, shape (slow_time, range_bin); bin k spans
    k * bin_spacing_m meters."""

    samples: np.ndarray
    bin_spacing_m: float

    def __post_init__(self):
        self.samples = np.asarray(self.samples)
        if self.samples.ndim != 2:
            raise ValueError("range profile cube must be 2-D (slow, bins)")
        if not np.all(np.isfinite(self.samples.view(float))):
            raise ValueError("non-finite range profiles")


@dataclass(frozen=True)
class StftConfig:
    """Slow-time STFT settings. Defaults give the 64x32 output image."""

    window_len: int = 64
    hop: int = 64
    target_frames: int = 32
    log_floor: float = 1e-6

    def __post_init__(self):
        if self.window_len < 2 or self.hop < 1 or self.target_frames < 1:
            raise ValueError("invalid STFT configuration")

    @property
    def standard_samples(self) -> int:
        return self.window_len * self.target_frames


@dataclass
class Spectrogram:
    """Normalized time-Doppler image: values[doppler_bin][time_frame] in
    [0, 1], row 32 (with 64 bins) = zero Doppler, higher rows = receding."""

    values: np.ndarray
    doppler_bin_velocity: float
    frame_spacing: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError("spectrogram must be 2-D")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite spectrogram values")
        if self.values.min() < -1e-12 or self.values.max() > 1 + 1e-12:
            raise ValueError("spectrogram values outside [0, 1]")

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def hamming_window(n: int) -> np.ndarray:
    """Symmetric Hamming window: 0.54 - 0.46*cos(2*pi*k/(n-1))."""
    k = np.arange(n)
    return 0.54 - 0.46 * np.cos(2.0 * np.pi * k / (n - 1))


def range_fft(cube: IFSignalCube, params: RadarParams) -> RangeProfileCube:
    """DFT along fast time; beat-frequency bin k corresponds to distance
    k * bin_spacing."""
    profiles = np.fft.fft(cube.samples, axis=1)
    return RangeProfileCube(samples=profiles, bin_spacing_m=params.range_bin_spacing_m)


def clutter_suppress(cube: RangeProfileCube) -> RangeProfileCube:
    """Remove static returns by subtracting each range bin's slow-time mean."""
    if cube.samples.shape[0] < 2:
        raise ValueError("clutter suppression needs at least 2 chirps")
    cleaned = cube.samples - cube.samples.mean(axis=0, keepdims=True)
    return RangeProfileCube(samples=cleaned, bin_spacing_m=cube.bin_spacing_m)


def strongest_range_bin(cube: RangeProfileCube) -> int:
    """Argmax over bins of total slow-time energy; ties take the lowest bin."""
    energy = np.sum(np.abs(cube.samples) ** 2, axis=0)
    return int(np.argmax(energy))


def select_range_bin(cube: RangeProfileCube, mode="max_energy") -> np.ndarray:
    """Extract one range bin's slow-time sequence. ``mode`` is "max_energy"
    or an explicit bin index."""
    if mode == "max_energy":
        return cube.samples[:, strongest_range_bin(cube)].copy()
    k = int(mode)
    if not 0 <= k < cube.samples.shape[1]:
        raise ValueError(f"range bin {k} out of range 0..{cube.samples.shape[1] - 1}")
    return cube.samples[:, k].copy()


def standardize_slow_time(x: np.ndarray, length: int) -> np.ndarray:
    """Center-crop or zero-pad a slow-time sequence to ``length`` samples."""
    x = np.asarray(x)
    m = x.shape[0]
    if m == length:
        return x.copy()
    if m > length:
        start = (m - length) // 2
        return x[start : start + length].copy()
    out = np.zeros(length, dtype=x.dtype)
    pad = (length - m) // 2
    out[pad : pad + m] = x
    return out


def _stft_stages(z: np.ndarray, cfg: StftConfig) -> dict:
    """Forward STFT chain on a standardized slow-time sequence, keeping every
    intermediate (shared with the training-path gradient code).

    Returns coef (complex, shifted), mag, logmag, norm, and the min/max data
    used by normalization.
    """
    n = cfg.window_len
    window = hamming_window(n)
    frames = z.reshape(cfg.target_frames, n) if cfg.hop == n else np.stack(
        [z[i * cfg.hop : i * cfg.hop + n] for i in range(cfg.target_frames)]
    )
    windowed = frames * window[None, :]
    coef = np.fft.fftshift(np.fft.fft(windowed, axis=1), axes=1).T  # (doppler, frame)
    mag = np.abs(coef)
    logmag = 20.0 * np.log10(mag + cfg.log_floor)
    lo = logmag.min()
    hi = logmag.max()
    if hi == lo:
        norm = np.zeros_like(logmag)
    else:
        norm = (logmag - lo) / (hi - lo)
    return {
        "window": window,
        "coef": coef,
        "mag": mag,
        "logmag": logmag,
        "lo": lo,
        "hi": hi,
        "norm": norm,
    }


def stft_spectrogram(
    slow_time: np.ndarray, cfg: StftConfig, params: RadarParams
) -> Spectrogram:
    """Slow-time STFT to a normalized time-Doppler image.

    The input is standardized to window_len * target_frames samples
    (center crop / zero pad), then each hop is Hamming-windowed and DFT'd
    with the zero-Doppler bin centered; magnitudes go through
    20*log10(|X| + floor) and per-image min-max normalization (a constant
    image maps to all zeros).
    """
    slow_time = np.asarray(slow_time)
    if slow_time.size == 0:
        raise ValueError("empty slow-time sequence")
    if slow_time.size < cfg.window_len:
        raise ValueError(
            f"slow-time sequence ({slow_time.size}) shorter than the STFT "
            f"window ({cfg.window_len})"
        )
    z = standardize_slow_time(slow_time.astype(complex), cfg.standard_samples)
    stages = _stft_stages(z, cfg)
    return Spectrogram(
        values=stages["norm"],
        doppler_bin_velocity=params.doppler_bin_velocity(cfg.window_len),
        frame_spacing=cfg.hop * params.chirp_interval_s,
    )


def spectrogram_from_cube(
    cube: IFSignalCube,
    params: RadarParams,
    cfg: StftConfig | None = None,
    bin_mode="max_energy",
) -> Spectrogram:
    """Full processing chain: range-FFT, clutter suppression, range-bin
    selection, STFT spectrogram."""
    cfg = cfg or StftConfig()
    profiles = clutter_suppress(range_fft(cube, params))
    column = select_range_bin(profiles, bin_mode)
    return stft_spectrogram(column, cfg, params)


def beat_to_distance(frequency_hz, params: RadarParams):
    """Invert the beat frequency: d = f * c / (2 * S)."""
    return frequency_hz * params.wave_speed_m_s / (2.0 * params.chirp_slope_hz_per_s)


def phase_to_velocity(dphi_rad, params: RadarParams):
    """Invert the chirp-to-chirp phase step: v = lambda * dphi / (4*pi*Tc)."""
    return params.wavelength_m * dphi_rad / (4.0 * np.pi * params.chirp_interval_s)


def save_spectrogram(spec: Spectrogram, path) -> None:
    """Write the self-describing binary format: magic, u32 dims, f32
    Doppler-bin velocity and frame spacing, then row-major f32 values.
    Carries no timestamps so identical inputs give identical bytes."""
    rows, cols = spec.values.shape
    header = SPECTROGRAM_MAGIC + struct.pack(
        "<IIff", rows, cols, spec.doppler_bin_velocity, spec.frame_spacing
    )
    data = spec.values.astype("<f4").tobytes(order="C")
    Path(path).write_bytes(header + data)


def load_spectrogram(path) -> Spectrogram:
    raw = Path(path).read_bytes()
    if raw[: len(SPECTROGRAM_MAGIC)] != SPECTROGRAM_MAGIC:
        raise ValueError(f"not a spectrogram file: {path}")
    off = len(SPECTROGRAM_MAGIC)
    rows, cols, binvel, spacing = struct.unpack_from("<IIff", raw, off)
    off += struct.calcsize("<IIff")
    expected = rows * cols * 4
    if len(raw) - off != expected:
        raise ValueError(f"truncated spectrogram file: {path}")
    values = np.frombuffer(raw, dtype="<f4", offset=off).reshape(rows, cols)
    return Spectrogram(
        values=values.astype(float),
        doppler_bin_velocity=float(binvel),
        frame_spacing=float(spacing),
    )


def spectrogram_to_csv(spec: Spectrogram, path) -> None:
    np.savetxt(Path(path), spec.values, fmt="%.9g", delimiter=",")


def spectrogram_to_png(spec: Spectrogram, path, colormap: str = "gray", scale: int = 8) -> None:
    """Render a heatmap PNG, one cell = ``scale`` x ``scale`` pixels, with
    positive (receding) Doppler at the top. ``colormap`` is "gray" or "hot".
    """
    from PIL import Image

    img = np.kron(np.flipud(spec.values), np.ones((scale, scale)))
    if colormap == "gray":
        arr = np.round(img * 255.0).astype(np.uint8)
        Image.fromarray(arr, mode="L").save(Path(path), format="PNG")
    elif colormap == "hot":
        r = np.clip(3.0 * img, 0.0, 1.0)
        g = np.clip(3.0 * img - 1.0, 0.0, 1.0)
        b = np.clip(3.0 * img - 2.0, 0.0, 1.0)
        arr = np.round(np.stack([r, g, b], axis=-1) * 255.0).astype(np.uint8)
        Image.fromarray(arr, mode="RGB").save(Path(path), format="PNG")
    else:
        raise ValueError(f"unknown colormap {colormap!r}")
