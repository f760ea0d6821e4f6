"""Trainable per-scatterer weighting of the hand's reflection signals.

Per-frame motion features of each scatterer (visible-vertex fraction,
radial velocity, acceleration, log RCS, distance) feed a small sequence
model: one LSTM layer along the radar-frame axis (parameters shared across
scatterers) followed by three dense layers and a softplus, producing one
strictly positive weight per scatterer per radar frame. The weights scale
the per-scatterer IF cubes before composition, so the underlying signals
are never altered, only re-balanced.

Training minimizes 1 - ssim(synthesized, reference) end to end. All
gradients are hand-written reverse mode: complex intermediates carry
adjoints as d/dRe + j*d/dIm, the DFT adjoint is N times the inverse DFT,
fftshift's adjoint is ifftshift, and the min-max normalization and
range-bin argmax use straight-through subgradients at their (isolated)
discrete points. The optimizer is Adam with a two-stage schedule
(lr 5e-4 / batch 32 / 20 epochs, then lr 1e-4 / batch 16 / 50 epochs).
"""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import dsp, metrics, radar_sim
from .dsp import Spectrogram, StftConfig
from .hand_model import ScattererTrack
from .radar_sim import IFSignalCube, RadarParams

log = logging.getLogger(__name__)

FEATURES = ("visibility", "radial_velocity", "acceleration", "log_rcs", "distance")
FEATURE_VERSION = 1

WEIGHTNET_MAGIC = b"RWNET001"

_ARRAY_ORDER = ("w_x", "w_h", "b", "w1", "b1", "w2", "b2", "w3", "b3")


@dataclass(frozen=True)
class FeatureStats:
    """Per-feature z-score statistics, frozen from the training split."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=float))
        object.__setattr__(self, "std", np.asarray(self.std, dtype=float))
        if self.mean.shape != (len(FEATURES),) or self.std.shape != (len(FEATURES),):
            raise ValueError("feature stats must have one entry per feature")


@dataclass
class FeatureTensor:
    """Shape (scatterer, radar_frame, feature); feature order = FEATURES."""

    values: np.ndarray
    standardized: bool = False
    stats: FeatureStats | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 3 or self.values.shape[2] != len(FEATURES):
            raise ValueError(
                f"feature tensor must be (K, F, {len(FEATURES)}), got {self.values.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite features")


def extract_features(tracks: list[ScattererTrack], chirps_per_frame: int) -> FeatureTensor:
    """Aggregate per-chirp track state into per-radar-frame feature means."""
    if not tracks:
        raise ValueError("no tracks to extract features from")
    m = tracks[0].n_chirps
    if m % chirps_per_frame:
        raise ValueError(f"{m} chirps do not divide into frames of {chirps_per_frame}")
    f = m // chirps_per_frame
    vals = np.empty((len(tracks), f, len(FEATURES)))
    for k, tr in enumerate(tracks):
        per_chirp = np.stack(
            [
                tr.visible_vertex_count / tr.vertex_count,
                tr.radial_velocity,
                tr.acceleration,
                np.log10(tr.rcs + 1e-12),
                tr.radial_distance,
            ],
            axis=1,
        )
        vals[k] = per_chirp.reshape(f, chirps_per_frame, len(FEATURES)).mean(axis=1)
    return FeatureTensor(values=vals)


def compute_feature_stats(tensors: list[FeatureTensor]) -> FeatureStats:
    """Pool all (scatterer, frame) cells of the given tensors per feature."""
    if not tensors:
        raise ValueError("no feature tensors")
    stacked = np.concatenate([t.values.reshape(-1, len(FEATURES)) for t in tensors])
    return FeatureStats(mean=stacked.mean(axis=0), std=stacked.std(axis=0))


def standardize_features(feats: FeatureTensor, stats: FeatureStats) -> FeatureTensor:
    scaled = (feats.values - stats.mean) / np.maximum(stats.std, 1e-8)
    return FeatureTensor(values=scaled, standardized=True, stats=stats)


@dataclass
class WeightNetParams:
    """LSTM (gate order: input, forget, cell, output) plus three dense layers
    mapping input_dim -> H -> H -> H/2 -> 1."""

    w_x: np.ndarray  # (4H, input_dim)
    w_h: np.ndarray  # (4H, H)
    b: np.ndarray  # (4H,)
    w1: np.ndarray  # (H, H)
    b1: np.ndarray  # (H,)
    w2: np.ndarray  # (H/2, H)
    b2: np.ndarray  # (H/2,)
    w3: np.ndarray  # (1, H/2)
    b3: np.ndarray  # (1,)

    def __post_init__(self):
        for name in _ARRAY_ORDER:
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        h = self.hidden_size
        d = self.input_dim
        h2 = self.w2.shape[0]
        expected = {
            "w_x": (4 * h, d),
            "w_h": (4 * h, h),
            "b": (4 * h,),
            "w1": (h, h),
            "b1": (h,),
            "w2": (h2, h),
            "b2": (h2,),
            "w3": (1, h2),
            "b3": (1,),
        }
        for name, shape in expected.items():
            arr = getattr(self, name)
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"non-finite parameters in {name}")

    @property
    def hidden_size(self) -> int:
        return self.w_h.shape[1]

    @property
    def input_dim(self) -> int:
        return self.w_x.shape[1]

    def arrays(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in _ARRAY_ORDER}

    def copy(self) -> "WeightNetParams":
        return WeightNetParams(**{k: v.copy() for k, v in self.arrays().items()})

    @classmethod
    def initialize(
        cls, input_dim: int = len(FEATURES), hidden: int = 32, seed: int = 0
    ) -> "WeightNetParams":
        """Matrices uniform in +-1/sqrt(fan_in), biases zero."""
        rng = np.random.default_rng(seed)
        h2 = max(hidden // 2, 1)

        def mat(rows, cols):
            lim = 1.0 / np.sqrt(cols)
            return rng.uniform(-lim, lim, size=(rows, cols))

        return cls(
            w_x=mat(4 * hidden, input_dim),
            w_h=mat(4 * hidden, hidden),
            b=np.zeros(4 * hidden),
            w1=mat(hidden, hidden),
            b1=np.zeros(hidden),
            w2=mat(h2, hidden),
            b2=np.zeros(h2),
            w3=mat(1, h2),
            b3=np.zeros(1),
        )


def save_weightnet(params: WeightNetParams, path, stats: FeatureStats | None = None) -> None:
    """Versioned binary: magic, array table (name, shape), float32 data.
    Feature statistics ride along as extra arrays when given."""
    entries = list(params.arrays().items())
    if stats is not None:
        entries += [("feature_mean", stats.mean), ("feature_std", stats.std)]
    blob = bytearray(WEIGHTNET_MAGIC)
    blob += struct.pack("<II", FEATURE_VERSION, len(entries))
    for name, arr in entries:
        encoded = name.encode()
        blob += struct.pack("<H", len(encoded)) + encoded
        blob += struct.pack("<B", arr.ndim)
        blob += struct.pack(f"<{arr.ndim}I", *arr.shape)
    for _, arr in entries:
        blob += arr.astype("<f4").tobytes(order="C")
    Path(path).write_bytes(bytes(blob))


def load_weightnet(path) -> tuple[WeightNetParams, FeatureStats | None]:
    raw = Path(path).read_bytes()
    if raw[: len(WEIGHTNET_MAGIC)] != WEIGHTNET_MAGIC:
        raise ValueError(f"not a weight file: {path}")
    off = len(WEIGHTNET_MAGIC)
    version, count = struct.unpack_from("<II", raw, off)
    off += 8
    if version != FEATURE_VERSION:
        raise ValueError(f"weight file feature version {version} unsupported")
    shapes = []
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", raw, off)
        off += 2
        name = raw[off : off + name_len].decode()
        off += name_len
        (ndim,) = struct.unpack_from("<B", raw, off)
        off += 1
        shape = struct.unpack_from(f"<{ndim}I", raw, off)
        off += 4 * ndim
        shapes.append((name, shape))
    arrays = {}
    for name, shape in shapes:
        n = int(np.prod(shape)) if shape else 1
        arrays[name] = (
            np.frombuffer(raw, dtype="<f4", count=n, offset=off)
            .reshape(shape)
            .astype(float)
        )
        off += 4 * n
    stats = None
    if "feature_mean" in arrays:
        stats = FeatureStats(mean=arrays.pop("feature_mean"), std=arrays.pop("feature_std"))
    missing = [name for name in _ARRAY_ORDER if name not in arrays]
    if missing:
        raise ValueError(f"weight file missing arrays: {missing}")
    return WeightNetParams(**{k: arrays[k] for k in _ARRAY_ORDER}), stats


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _net_forward(params: WeightNetParams, x: np.ndarray) -> tuple[np.ndarray, dict]:
    """x: (K, F, D) -> weights (K, F) plus the cache for backprop."""
    k_sc, n_fr, _ = x.shape
    h_dim = params.hidden_size
    h = np.zeros((k_sc, h_dim))
    c = np.zeros((k_sc, h_dim))
    hs = np.empty((k_sc, n_fr, h_dim))
    steps = []
    for t in range(n_fr):
        a = x[:, t] @ params.w_x.T + h @ params.w_h.T + params.b
        ai, af, ag, ao = np.split(a, 4, axis=1)
        gi, gf, go = _sigmoid(ai), _sigmoid(af), _sigmoid(ao)
        gg = np.tanh(ag)
        c_new = gf * c + gi * gg
        tanh_c = np.tanh(c_new)
        h_new = go * tanh_c
        steps.append((h, c, gi, gf, gg, go, tanh_c))
        h, c = h_new, c_new
        hs[:, t] = h
    d1 = np.tanh(hs @ params.w1.T + params.b1)
    d2 = np.tanh(d1 @ params.w2.T + params.b2)
    u = (d2 @ params.w3.T + params.b3)[..., 0]
    weights = np.logaddexp(0.0, u)  # softplus
    cache = {"x": x, "steps": steps, "hs": hs, "d1": d1, "d2": d2, "u": u}
    return weights, cache


def _net_backward(params: WeightNetParams, cache: dict, dw: np.ndarray) -> dict:
    """Backpropagate d loss/d weights (K, F) to parameter gradients."""
    x, hs, d1, d2, u = cache["x"], cache["hs"], cache["d1"], cache["d2"], cache["u"]
    du = dw * _sigmoid(u)  # softplus'
    g_w3 = np.einsum("kf,kfj->j", du, d2)[None, :]
    g_b3 = np.array([du.sum()])
    dd2 = du[..., None] * params.w3[0]
    dpre2 = dd2 * (1.0 - d2**2)
    g_w2 = np.einsum("kfi,kfj->ij", dpre2, d1)
    g_b2 = dpre2.sum(axis=(0, 1))
    dd1 = dpre2 @ params.w2
    dpre1 = dd1 * (1.0 - d1**2)
    g_w1 = np.einsum("kfi,kfj->ij", dpre1, hs)
    g_b1 = dpre1.sum(axis=(0, 1))
    dh_head = dpre1 @ params.w1  # (K, F, H)

    k_sc, n_fr, h_dim = hs.shape
    g_wx = np.zeros_like(params.w_x)
    g_wh = np.zeros_like(params.w_h)
    g_b = np.zeros_like(params.b)
    dh_next = np.zeros((k_sc, h_dim))
    dc_next = np.zeros((k_sc, h_dim))
    for t in reversed(range(n_fr)):
        h_prev, c_prev, gi, gf, gg, go, tanh_c = cache["steps"][t]
        dh = dh_head[:, t] + dh_next
        do = dh * tanh_c
        dc = dc_next + dh * go * (1.0 - tanh_c**2)
        di = dc * gg
        df = dc * c_prev
        dg = dc * gi
        dc_next = dc * gf
        da = np.concatenate(
            [
                di * gi * (1.0 - gi),
                df * gf * (1.0 - gf),
                dg * (1.0 - gg**2),
                do * go * (1.0 - go),
            ],
            axis=1,
        )
        g_wx += da.T @ x[:, t]
        g_wh += da.T @ h_prev
        g_b += da.sum(axis=0)
        dh_next = da @ params.w_h
    return {
        "w_x": g_wx,
        "w_h": g_wh,
        "b": g_b,
        "w1": g_w1,
        "b1": g_b1,
        "w2": g_w2,
        "b2": g_b2,
        "w3": g_w3,
        "b3": g_b3,
    }


def forward(params: WeightNetParams, feats, feature_mask=None) -> np.ndarray:
    """Per-scatterer, per-frame positive weights, shape (K, F)."""
    x = np.asarray(getattr(feats, "values", feats), dtype=float)
    if x.ndim != 3 or x.shape[2] != params.input_dim:
        raise ValueError(
            f"features shape {x.shape} incompatible with input dim {params.input_dim}"
        )
    if feature_mask is not None:
        x = x * np.asarray(feature_mask, dtype=float)
    weights, _ = _net_forward(params, x)
    return weights


# ---------------------------------------------------------------------------
# Differentiable spectrogram path on a selected range-bin column.
# ---------------------------------------------------------------------------


def _column_forward(s_col: np.ndarray, cfg: StftConfig) -> tuple[np.ndarray, dict]:
    """Clutter-suppressed column -> normalized image, keeping intermediates."""
    z = dsp.standardize_slow_time(s_col.astype(complex), cfg.standard_samples)
    stages = dsp._stft_stages(z, cfg)
    stages["cfg"] = cfg
    stages["m"] = s_col.shape[0]
    return stages["norm"], stages


def _column_backward(cache: dict, d_norm: np.ndarray) -> np.ndarray:
    """Adjoint of _column_forward: d loss/d image -> d loss/d column
    (complex, d/dRe + j*d/dIm)."""
    cfg: StftConfig = cache["cfg"]
    m = cache["m"]
    lo, hi = cache["lo"], cache["hi"]
    if hi == lo:
        return np.zeros(m, dtype=complex)
    logmag, norm = cache["logmag"], cache["norm"]
    rng = hi - lo
    d_log = d_norm / rng
    # Straight-through at the normalization extremes (first occurrence).
    imin = int(np.argmin(logmag))
    imax = int(np.argmax(logmag))
    d_log.flat[imin] += float((d_norm * (norm - 1.0)).sum()) / rng
    d_log.flat[imax] -= float((d_norm * norm).sum()) / rng

    mag, coef, window = cache["mag"], cache["coef"], cache["window"]
    d_mag = d_log * (20.0 / np.log(10.0)) / (mag + cfg.log_floor)
    with np.errstate(invalid="ignore", divide="ignore"):
        d_coef = np.where(mag > 0, d_mag * coef / mag, 0.0)
    n = cfg.window_len
    d_windowed = n * np.fft.ifft(np.fft.ifftshift(d_coef.T, axes=1), axis=1)
    d_frames = d_windowed * window[None, :]
    dz = np.zeros(cfg.standard_samples, dtype=complex)
    for i in range(cfg.target_frames):
        dz[i * cfg.hop : i * cfg.hop + n] += d_frames[i]
    # Standardization adjoint: crop <-> pad.
    length = cfg.standard_samples
    if m == length:
        return dz
    if m > length:
        ds = np.zeros(m, dtype=complex)
        start = (m - length) // 2
        ds[start : start + length] = dz
        return ds
    pad = (length - m) // 2
    return dz[pad : pad + m].copy()


def _weighted_column(weights: np.ndarray, col_basis: np.ndarray) -> np.ndarray:
    """Composite slow-time column at the selected range bin, clutter
    suppressed. col_basis[k, m] = range-FFT of scatterer k at that bin."""
    cpf = col_basis.shape[1] // weights.shape[1]
    w_slow = np.repeat(weights, cpf, axis=1)
    s = np.sum(w_slow * col_basis, axis=0)
    return s - s.mean()


def _weighted_column_backward(ds: np.ndarray, col_basis: np.ndarray, n_frames: int) -> np.ndarray:
    """Adjoint of _weighted_column with respect to the weights."""
    d_pre = ds - ds.mean()
    contrib = np.real(np.conj(d_pre)[None, :] * col_basis)  # (K, M)
    k_sc, m = col_basis.shape
    return contrib.reshape(k_sc, n_frames, m // n_frames).sum(axis=2)


def _cube_bin_column(cube: IFSignalCube, bin_index: int) -> np.ndarray:
    """Range-FFT of one cube evaluated at a single bin (direct DFT column)."""
    n = cube.samples.shape[1]
    phase = np.exp(-2j * np.pi * bin_index * np.arange(n) / n)
    return cube.samples @ phase


def loss(
    params: WeightNetParams,
    feats,
    per_scatterer_cubes: list[IFSignalCube],
    real_spec: Spectrogram,
    radar: RadarParams,
    cfg: StftConfig | None = None,
    feature_mask=None,
) -> float:
    """1 - ssim(synthesized spectrogram, reference) under the current net."""
    cfg = cfg or StftConfig()
    weights = forward(params, feats, feature_mask)
    composite = radar_sim.compose(per_scatterer_cubes, weights)
    spec = dsp.spectrogram_from_cube(composite, radar, cfg)
    return 1.0 - metrics.ssim(spec, real_spec)


@dataclass
class TrainItem:
    """One training example. ``cubes`` feeds the exact loss/gradient path;
    ``col_basis``/``sel_bin`` (per-scatterer range-FFT columns at the
    unit-weight strongest bin) feed the equivalent fast path used by the
    training loop. ``prepare_item`` in the pipeline module fills both."""

    features: FeatureTensor
    real_values: np.ndarray  # (doppler, frames) reference image
    label: str = ""
    item_id: str = ""
    cubes: list[IFSignalCube] | None = None
    col_basis: np.ndarray | None = None  # (K, M) complex
    sel_bin: int | None = None

    def __post_init__(self):
        self.real_values = np.asarray(
            getattr(self.real_values, "values", self.real_values), dtype=float
        )

    @property
    def n_frames(self) -> int:
        return self.features.values.shape[1]


def _item_loss_grad_full(
    params: WeightNetParams,
    item: TrainItem,
    radar: RadarParams,
    cfg: StftConfig,
    feature_mask=None,
) -> tuple[float, dict]:
    """Loss and parameter gradients through the full cube path (argmax range
    bin re-evaluated, straight-through in backward)."""
    x = item.features.values
    if feature_mask is not None:
        x = x * np.asarray(feature_mask, dtype=float)
    weights, net_cache = _net_forward(params, x)
    if not np.all(np.isfinite(weights)):
        raise FloatingPointError("non-finite weights out of the network")
    composite = radar_sim.compose(item.cubes, weights)
    profiles = dsp.clutter_suppress(dsp.range_fft(composite, radar))
    sel = dsp.strongest_range_bin(profiles)
    s_col = profiles.samples[:, sel]
    norm, col_cache = _column_forward(s_col, cfg)
    value = 1.0 - metrics.ssim(norm, item.real_values)
    if not np.isfinite(value):
        raise FloatingPointError("non-finite loss after spectrogram stage")

    d_norm = -metrics.ssim_grad(norm, item.real_values)
    ds = _column_backward(col_cache, d_norm)
    col_basis = np.stack([_cube_bin_column(c, sel) for c in item.cubes])
    dw = _weighted_column_backward(ds, col_basis, weights.shape[1])
    grads = _net_backward(params, net_cache, dw)
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient for {name}")
    return value, grads


def _item_loss_grad_fast(
    params: WeightNetParams,
    item: TrainItem,
    radar: RadarParams,
    cfg: StftConfig,
    feature_mask=None,
    need_grad: bool = True,
) -> tuple[float, dict | None, float]:
    """Loss, gradients, and ssim via the precomputed column basis (range bin
    frozen at the item's unit-weight selection)."""
    x = item.features.values
    if feature_mask is not None:
        x = x * np.asarray(feature_mask, dtype=float)
    weights, net_cache = _net_forward(params, x)
    s_col = _weighted_column(weights, item.col_basis)
    norm, col_cache = _column_forward(s_col, cfg)
    sim = metrics.ssim(norm, item.real_values)
    value = 1.0 - sim
    if not need_grad:
        return value, None, sim
    d_norm = -metrics.ssim_grad(norm, item.real_values)
    ds = _column_backward(col_cache, d_norm)
    dw = _weighted_column_backward(ds, item.col_basis, weights.shape[1])
    grads = _net_backward(params, net_cache, dw)
    return value, grads, sim


def gradient(
    params: WeightNetParams,
    batch: list[TrainItem],
    radar: RadarParams,
    cfg: StftConfig | None = None,
    loss_scale: float = 1.0,
    feature_mask=None,
) -> dict:
    """Mean parameter gradients of the loss over a batch (full cube path)."""
    cfg = cfg or StftConfig()
    if not batch:
        raise ValueError("empty batch")
    total: dict | None = None
    for item in batch:
        if item.cubes is None:
            raise ValueError("gradient() needs items with per-scatterer cubes")
        _, grads = _item_loss_grad_full(params, item, radar, cfg, feature_mask)
        if total is None:
            total = grads
        else:
            for k in total:
                total[k] += grads[k]
    scale = loss_scale / len(batch)
    return {k: v * scale for k, v in total.items()}


@dataclass(frozen=True)
class TrainStage:
    learning_rate: float
    batch_size: int
    epochs: int

    def __post_init__(self):
        if self.learning_rate <= 0 or self.epochs < 1 or self.batch_size < 1:
            raise ValueError("invalid training stage")


@dataclass(frozen=True)
class TrainSchedule:
    """Two-stage Adam schedule by default: coarse then fine-tune."""

    stages: tuple[TrainStage, ...] = (
        TrainStage(learning_rate=5e-4, batch_size=32, epochs=20),
        TrainStage(learning_rate=1e-4, batch_size=16, epochs=50),
    )
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    val_fraction: float = 0.2


class Adam:
    """Adaptive moment estimation on a dict of parameter arrays, in place."""

    def __init__(self, lr: float, beta1: float, beta2: float, eps: float):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.t = 0

    def step(self, arrays: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        for key, g in grads.items():
            m = self.m.setdefault(key, np.zeros_like(g))
            v = self.v.setdefault(key, np.zeros_like(g))
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            m_hat = m / (1.0 - self.beta1**self.t)
            v_hat = v / (1.0 - self.beta2**self.t)
            arrays[key] -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass
class TrainResult:
    """Training outcome: checkpoint with the lowest validation loss, the
    frozen feature statistics, and the per-epoch curve. best_val_ssim is a
    fraction in [0, 1]; the history records it x100."""

    params: WeightNetParams
    stats: FeatureStats
    history: list[dict]
    best_val_loss: float
    best_val_ssim: float
    diverged: bool = False
    feature_mask: np.ndarray | None = None
    train_indices: tuple[int, ...] = ()
    val_indices: tuple[int, ...] = ()


def _split_by_label(
    items: list[TrainItem], rng: np.random.Generator, val_fraction: float
) -> tuple[list[int], list[int]]:
    """Deterministic per-label split: each gesture class contributes
    ~val_fraction of its items to validation."""
    by_label: dict[str, list[int]] = {}
    for i, item in enumerate(items):
        by_label.setdefault(item.label, []).append(i)
    train_idx: list[int] = []
    val_idx: list[int] = []
    for label in sorted(by_label):
        idx = np.array(by_label[label])
        rng.shuffle(idx)
        n_val = int(round(val_fraction * idx.size)) if idx.size > 1 else 0
        val_idx += idx[:n_val].tolist()
        train_idx += idx[n_val:].tolist()
    return sorted(train_idx), sorted(val_idx)


def prepare_col_basis(item: TrainItem) -> None:
    """Fill col_basis/sel_bin from the item's cubes (unit-weight selection).
    Bin spacing is metadata only, so the profiles are built directly."""
    if item.col_basis is not None:
        return
    if item.cubes is None:
        raise ValueError(f"item {item.item_id!r} has neither cubes nor col_basis")
    composite = radar_sim.compose(item.cubes, None)
    profiles = dsp.clutter_suppress(
        dsp.RangeProfileCube(np.fft.fft(composite.samples, axis=1), bin_spacing_m=1.0)
    )
    item.sel_bin = dsp.strongest_range_bin(profiles)
    item.col_basis = np.stack(
        [np.fft.fft(c.samples, axis=1)[:, item.sel_bin] for c in item.cubes]
    )


def train(
    dataset: list[TrainItem],
    schedule: TrainSchedule,
    radar: RadarParams,
    cfg: StftConfig | None = None,
    *,
    hidden: int = 32,
    feature_mask=None,
    log_path=None,
) -> TrainResult:
    """Two-stage Adam training; returns the parameters with the lowest
    validation loss (training loss when no validation split exists).

    Features are standardized with statistics frozen from the training
    split. The training loop evaluates the fast column-basis path; the
    public loss()/gradient() contract path is algebraically identical while
    the strongest range bin is stable (property-tested).
    """
    cfg = cfg or StftConfig()
    if not dataset:
        raise ValueError("empty dataset")
    mask = None if feature_mask is None else np.asarray(feature_mask, dtype=float)

    rng = np.random.default_rng(schedule.seed)
    train_idx, val_idx = _split_by_label(dataset, rng, schedule.val_fraction)
    stats = compute_feature_stats([dataset[i].features for i in train_idx])
    std_items = []
    for item in dataset:
        prepare_col_basis(item)
        std_items.append(
            replace_features(item, standardize_features(item.features, stats))
        )

    params = WeightNetParams.initialize(hidden=hidden, seed=schedule.seed)
    best = params.copy()
    best_loss = np.inf
    best_ssim = 0.0
    history: list[dict] = []
    diverged = False
    log_fh = open(log_path, "w") if log_path else None

    def eval_split(idx: list[int]) -> tuple[float, float]:
        losses, sims = [], []
        for i in idx:
            value, _, sim = _item_loss_grad_fast(
                params, std_items[i], radar, cfg, mask, need_grad=False
            )
            losses.append(value)
            sims.append(sim)
        return float(np.mean(losses)), float(np.mean(sims))

    try:
        for stage_no, stage in enumerate(schedule.stages):
            opt = Adam(stage.learning_rate, schedule.beta1, schedule.beta2, schedule.eps)
            for epoch in range(stage.epochs):
                order = np.array(train_idx)
                rng.shuffle(order)
                for lo in range(0, order.size, stage.batch_size):
                    chunk = order[lo : lo + stage.batch_size]
                    total: dict | None = None
                    for i in chunk:
                        value, grads, _ = _item_loss_grad_fast(
                            params, std_items[i], radar, cfg, mask
                        )
                        if not np.isfinite(value):
                            raise FloatingPointError("training loss diverged")
                        if total is None:
                            total = grads
                        else:
                            for k in total:
                                total[k] += grads[k]
                    grads = {k: v / chunk.size for k, v in total.items()}
                    if any(not np.all(np.isfinite(g)) for g in grads.values()):
                        raise FloatingPointError("gradient diverged")
                    opt.step(params.arrays(), grads)
                train_loss, _ = eval_split(train_idx)
                val_loss, val_ssim = eval_split(val_idx if val_idx else train_idx)
                record = {
                    "stage": stage_no,
                    "epoch": epoch,
                    "train_loss": train_loss,
                    "val_loss": val_loss,
                    "val_ssim_x100": 100.0 * val_ssim,
                }
                history.append(record)
                if log_fh:
                    log_fh.write(json.dumps(record, sort_keys=True) + "\n")
                if val_loss < best_loss:
                    best_loss = val_loss
                    best_ssim = val_ssim
                    best = params.copy()
    except FloatingPointError as exc:
        log.warning("training aborted: %s; returning last good checkpoint", exc)
        diverged = True
    finally:
        if log_fh:
            log_fh.close()

    return TrainResult(
        params=best,
        stats=stats,
        history=history,
        best_val_loss=best_loss,
        best_val_ssim=best_ssim,
        diverged=diverged,
        feature_mask=mask,
        train_indices=tuple(train_idx),
        val_indices=tuple(val_idx),
    )


def replace_features(item: TrainItem, feats: FeatureTensor) -> TrainItem:
    return TrainItem(
        features=feats,
        real_values=item.real_values,
        label=item.label,
        item_id=item.item_id,
        cubes=item.cubes,
        col_basis=item.col_basis,
        sel_bin=item.sel_bin,
    )


def feature_ablation(
    dataset: list[TrainItem],
    schedule: TrainSchedule,
    radar: RadarParams,
    cfg: StftConfig | None = None,
    *,
    hidden: int = 32,
) -> dict:
    """Retrain with each feature zeroed in turn and report the validation
    SSIM delta against the all-features run."""
    base = train(dataset, schedule, radar, cfg, hidden=hidden)
    report = {
        "full": {"val_ssim_x100": 100.0 * base.best_val_ssim},
        "ablations": {},
    }
    for i, name in enumerate(FEATURES):
        mask = np.ones(len(FEATURES))
        mask[i] = 0.0
        run = train(dataset, schedule, radar, cfg, hidden=hidden, feature_mask=mask)
        report["ablations"][name] = {
            "val_ssim_x100": 100.0 * run.best_val_ssim,
            "delta_x100": 100.0 * (base.best_val_ssim - run.best_val_ssim),
        }
    return report
