"""End-to-end orchestration: skeleton ingestion and alignment, batch
spectrogram synthesis, training-item preparation, dataset export, and
evaluation reporting. Every stage failure is wrapped in PipelineError with
the stage name and entry id; batch drivers log failures and continue."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import dsp, metrics, weightnet
from .dsp import Spectrogram, StftConfig
from .hand_model import (
    DEFAULT_SEGMENT_RADII,
    DEFAULT_TESSELLATION,
    JointFrameSequence,
    SensorOffset,
    leap_to_radar,
    load_skeleton,
    resample_tracks,
)
from .radar_sim import IFSignalCube, RadarParams, compose, synthesize_if
from .synthetic import GESTURES
from .weightnet import (
    FeatureStats,
    TrainItem,
    WeightNetParams,
    extract_features,
    forward,
    standardize_features,
)

log = logging.getLogger(__name__)

DEFAULT_LABELS = tuple(GESTURES)

# DHG-style source layout: 0 wrist, 1 palm center, then per finger
# (thumb, index, middle, ring, pinky): base, first articulation, second
# articulation, tip.
_DHG_FINGER_BASE = (2, 6, 10, 14, 18)


class PipelineError(RuntimeError):
    """A stage failure carrying the stage name and the entry id."""

    def __init__(self, stage: str, entry_id: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed for entry {entry_id!r}: {cause}")
        self.stage = stage
        self.entry_id = entry_id


@dataclass(frozen=True)
class AlignmentSpec:
    """How to convert a 22-joint DHG-style sequence to the internal 20-joint
    layout: drop the palm center, merge the thumb articulation pair into its
    midpoint, permute/flip axes, then translate. ``axis_map``/``axis_signs``
    mean out[i] = sign[i] * src[axis_map[i]]; the default swaps y and z
    (tracker y-up to radar z-up). ``translation`` None places the time-mean
    palm centroid at ``target_center``."""

    source_layout: str = "dhg22"
    drop: tuple[int, ...] = (1,)
    merge: tuple[tuple[int, int], ...] = ((3, 4),)
    axis_map: tuple[int, int, int] = (0, 2, 1)
    axis_signs: tuple[int, int, int] = (1, 1, 1)
    translation: tuple[float, float, float] | None = None
    target_center: tuple[float, float, float] = (0.0, 0.0, 0.25)


def align_skeleton(seq: JointFrameSequence, spec: AlignmentSpec | None = None) -> JointFrameSequence:
    """Convert a DHG-style 22-joint sequence to the internal 20-joint radar
    frame layout."""
    spec = spec or AlignmentSpec()
    if seq.layout != spec.source_layout:
        raise ValueError(f"expected layout {spec.source_layout!r}, got {seq.layout!r}")
    src = seq.joints  # (T, 22, 3)
    merged_lo, merged_hi = spec.merge[0]
    thumb_base = _DHG_FINGER_BASE[0]
    out = [src[:, 0], src[:, thumb_base]]
    out.append(0.5 * (src[:, merged_lo] + src[:, merged_hi]))
    out.append(src[:, thumb_base + 3])
    for base in _DHG_FINGER_BASE[1:]:
        for k in range(4):
            out.append(src[:, base + k])
    joints = np.stack(out, axis=1)  # (T, 20, 3)
    mapped = joints[:, :, list(spec.axis_map)] * np.asarray(spec.axis_signs, dtype=float)
    if spec.translation is not None:
        shift = np.asarray(spec.translation, dtype=float)
    else:
        palm = mapped[:, [0, 1, 4, 8, 12, 16]].mean(axis=(0, 1))
        shift = np.asarray(spec.target_center, dtype=float) - palm
    return JointFrameSequence(
        times=seq.times.copy(),
        joints=mapped + shift,
        layout="internal20",
        hands=1,
        frame="radar",
    )


@dataclass
class ManifestEntry:
    gesture_label: str
    skeleton_file: Path
    reference_spectrogram: Path | None = None
    subject: str = "s0"
    angle: int = 0
    hands: int = 1
    occlusion: bool = False
    item_id: str = ""

    def __post_init__(self):
        self.skeleton_file = Path(self.skeleton_file)
        if self.reference_spectrogram is not None:
            self.reference_spectrogram = Path(self.reference_spectrogram)
        if self.angle not in (0, 30, -30):
            raise ValueError(f"angle tag must be 0, +30 or -30, got {self.angle}")
        if self.hands not in (1, 2):
            raise ValueError("hands must be 1 or 2")
        if not self.item_id:
            self.item_id = f"{self.gesture_label}_{self.subject}_{self.angle:+d}"


@dataclass
class DatasetManifest:
    entries: list[ManifestEntry]
    labels: tuple[str, ...] = DEFAULT_LABELS

    def __post_init__(self):
        for entry in self.entries:
            if entry.gesture_label not in self.labels:
                raise ValueError(
                    f"label {entry.gesture_label!r} not in the declared set {self.labels}"
                )


def load_manifest(path) -> DatasetManifest:
    """Read a JSON manifest: {"labels": [...], "entries": [{gesture_label,
    skeleton_file, reference_spectrogram?, subject?, angle?, hands?,
    occlusion?, item_id?}]}. Relative paths resolve against the manifest
    directory; referenced files must exist."""
    path = Path(path)
    doc = json.loads(path.read_text())
    labels = tuple(doc.get("labels", DEFAULT_LABELS))
    entries = []
    for raw in doc["entries"]:
        skel = path.parent / raw["skeleton_file"]
        ref = raw.get("reference_spectrogram")
        entry = ManifestEntry(
            gesture_label=raw["gesture_label"],
            skeleton_file=skel,
            reference_spectrogram=path.parent / ref if ref else None,
            subject=str(raw.get("subject", "s0")),
            angle=int(raw.get("angle", 0)),
            hands=int(raw.get("hands", 1)),
            occlusion=bool(raw.get("occlusion", False)),
            item_id=raw.get("item_id", ""),
        )
        if not entry.skeleton_file.exists():
            raise FileNotFoundError(f"skeleton file missing: {entry.skeleton_file}")
        if entry.reference_spectrogram and not entry.reference_spectrogram.exists():
            raise FileNotFoundError(
                f"reference spectrogram missing: {entry.reference_spectrogram}"
            )
        entries.append(entry)
    return DatasetManifest(entries=entries, labels=labels)


def write_manifest(manifest: DatasetManifest, path) -> None:
    path = Path(path)
    doc = {
        "labels": list(manifest.labels),
        "entries": [
            {
                "gesture_label": e.gesture_label,
                "skeleton_file": str(_relative_to(e.skeleton_file, path.parent)),
                **(
                    {"reference_spectrogram": str(_relative_to(e.reference_spectrogram, path.parent))}
                    if e.reference_spectrogram
                    else {}
                ),
                "subject": e.subject,
                "angle": e.angle,
                "hands": e.hands,
                "occlusion": e.occlusion,
                "item_id": e.item_id,
            }
            for e in manifest.entries
        ],
    }
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _relative_to(p: Path, base: Path) -> Path:
    try:
        return p.relative_to(base)
    except ValueError:
        return p


def _to_radar_frame(
    seq: JointFrameSequence, alignment: AlignmentSpec | None
) -> JointFrameSequence:
    if seq.layout == "dhg22":
        seq = align_skeleton(seq, alignment)
    if seq.frame == "sensor":
        seq = leap_to_radar(seq, seq.sensor_offset or SensorOffset())
    return seq


def synthesize_sequence(
    seq: JointFrameSequence,
    radar: RadarParams,
    *,
    net: WeightNetParams | None = None,
    stats: FeatureStats | None = None,
    stft: StftConfig | None = None,
    alignment: AlignmentSpec | None = None,
    radii=None,
    tessellation: tuple[int, int] = DEFAULT_TESSELLATION,
) -> Spectrogram:
    """Full synthesis chain for an in-memory sequence. Without ``net`` the
    pure-modeling baseline (unit weights) is used; with it, per-scatterer
    weights come from the network (``stats`` standardizes features the same
    way training did)."""
    seq = _to_radar_frame(seq, alignment)
    tracks = resample_tracks(seq, radar, radii=radii, tessellation=tessellation)
    weights = None
    if net is not None:
        feats = extract_features(tracks, radar.chirps_per_frame)
        if stats is not None:
            feats = standardize_features(feats, stats)
        weights = forward(net, feats)
    composite = None
    for k, track in enumerate(tracks):
        cube = synthesize_if(track, radar).samples
        if weights is not None:
            cube = cube * np.repeat(weights[k], radar.chirps_per_frame)[:, None]
        composite = cube if composite is None else composite + cube
    return dsp.spectrogram_from_cube(
        IFSignalCube(samples=composite, provenance="composite"), radar, stft
    )


def synthesize_gesture(
    entry: ManifestEntry,
    radar: RadarParams,
    net: WeightNetParams | None = None,
    stats: FeatureStats | None = None,
    *,
    stft: StftConfig | None = None,
    alignment: AlignmentSpec | None = None,
    radii=None,
    tessellation: tuple[int, int] = DEFAULT_TESSELLATION,
) -> Spectrogram:
    """synthesize_sequence for a manifest entry, with stage-tagged errors."""

    def run(stage, fn):
        try:
            return fn()
        except PipelineError:
            raise
        except Exception as exc:
            raise PipelineError(stage, entry.item_id, exc) from exc

    seq = run("parse", lambda: load_skeleton(entry.skeleton_file))
    return run(
        "synthesize",
        lambda: synthesize_sequence(
            seq,
            radar,
            net=net,
            stats=stats,
            stft=stft,
            alignment=alignment,
            radii=radii,
            tessellation=tessellation,
        ),
    )


def prepare_item(
    seq: JointFrameSequence,
    radar: RadarParams,
    *,
    label: str = "",
    item_id: str = "",
    real_spec: Spectrogram | None = None,
    hidden_weights: np.ndarray | None = None,
    stft: StftConfig | None = None,
    alignment: AlignmentSpec | None = None,
    radii=None,
    tessellation: tuple[int, int] = DEFAULT_TESSELLATION,
    keep_cubes: bool = False,
) -> TrainItem:
    """Build a training item from a sequence: raw features, the reference
    image, and the precomputed column basis for the fast training path.

    The reference is ``real_spec`` when given; otherwise it is synthesized
    from the same cubes using ``hidden_weights`` (unit weights when None),
    which is how synthetic ground-truth corpora are made.
    """
    stft = stft or StftConfig()
    seq = _to_radar_frame(seq, alignment)
    tracks = resample_tracks(seq, radar, radii=radii, tessellation=tessellation)
    feats = extract_features(tracks, radar.chirps_per_frame)
    cubes = [synthesize_if(tr, radar) for tr in tracks]
    if real_spec is None:
        reference = dsp.spectrogram_from_cube(
            compose(cubes, hidden_weights), radar, stft
        )
    else:
        reference = real_spec
    item = TrainItem(
        features=feats,
        real_values=reference.values,
        label=label,
        item_id=item_id,
        cubes=cubes,
    )
    weightnet.prepare_col_basis(item)
    if not keep_cubes:
        item.cubes = None
    return item


def export_dataset(
    manifest: DatasetManifest,
    out_dir,
    radar: RadarParams,
    *,
    net: WeightNetParams | None = None,
    stats: FeatureStats | None = None,
    stft: StftConfig | None = None,
    alignment: AlignmentSpec | None = None,
    png: bool = False,
) -> dict:
    """Synthesize every manifest entry into ``out_dir``: one spectrogram
    binary (plus optional PNG) per entry and an index.json mapping labels to
    files. Entries error individually; failures are logged in the index,
    never silently dropped."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    index: dict = {"entries": [], "by_label": {}, "failures": []}
    for entry in manifest.entries:
        try:
            spec = synthesize_gesture(
                entry, radar, net=net, stats=stats, stft=stft, alignment=alignment
            )
            name = f"{entry.item_id}.spec"
            dsp.save_spectrogram(spec, out_dir / name)
            if png:
                dsp.spectrogram_to_png(spec, out_dir / f"{entry.item_id}.png")
            index["entries"].append(
                {
                    "item_id": entry.item_id,
                    "label": entry.gesture_label,
                    "file": name,
                    "subject": entry.subject,
                    "angle": entry.angle,
                    "hands": entry.hands,
                    "occlusion": entry.occlusion,
                }
            )
            index["by_label"].setdefault(entry.gesture_label, []).append(name)
        except PipelineError as exc:
            log.error("%s", exc)
            index["failures"].append(
                {"item_id": exc.entry_id, "stage": exc.stage, "error": str(exc)}
            )
    (out_dir / "index.json").write_text(json.dumps(index, indent=2, sort_keys=True) + "\n")
    return index


def evaluate_pairs(pairs: list[tuple[Spectrogram, Spectrogram, dict]]) -> dict:
    """SSIM (x100) and MSE per pair plus aggregate means, sliced by every
    metadata key present (label, angle, subject, hands, occlusion)."""
    per_pair = []
    for synth, ref, meta in pairs:
        per_pair.append(
            {
                **meta,
                "ssim_x100": 100.0 * metrics.ssim(synth, ref),
                "mse": metrics.mse(synth, ref),
            }
        )
    report: dict = {"pairs": per_pair, "aggregate": _aggregate(per_pair)}
    slices: dict = {}
    for key in ("label", "angle", "subject", "hands", "occlusion"):
        groups: dict = {}
        for row in per_pair:
            if key in row:
                groups.setdefault(str(row[key]), []).append(row)
        if groups:
            slices[key] = {name: _aggregate(rows) for name, rows in sorted(groups.items())}
    report["slices"] = slices
    return report


def _aggregate(rows: list[dict]) -> dict:
    if not rows:
        return {"count": 0}
    return {
        "count": len(rows),
        "mean_ssim_x100": float(np.mean([r["ssim_x100"] for r in rows])),
        "mean_mse": float(np.mean([r["mse"] for r in rows])),
    }


def evaluate_manifest(
    manifest: DatasetManifest,
    radar: RadarParams,
    *,
    net: WeightNetParams | None = None,
    stats: FeatureStats | None = None,
    stft: StftConfig | None = None,
    alignment: AlignmentSpec | None = None,
) -> dict:
    """Synthesize each entry that has a reference spectrogram and report
    SSIM/MSE against it."""
    pairs = []
    failures = []
    for entry in manifest.entries:
        if entry.reference_spectrogram is None:
            continue
        try:
            synth = synthesize_gesture(
                entry, radar, net=net, stats=stats, stft=stft, alignment=alignment
            )
            ref = dsp.load_spectrogram(entry.reference_spectrogram)
            pairs.append(
                (
                    synth,
                    ref,
                    {
                        "item_id": entry.item_id,
                        "label": entry.gesture_label,
                        "angle": entry.angle,
                        "subject": entry.subject,
                        "hands": entry.hands,
                        "occlusion": entry.occlusion,
                    },
                )
            )
        except PipelineError as exc:
            log.error("%s", exc)
            failures.append(
                {"item_id": exc.entry_id, "stage": exc.stage, "error": str(exc)}
            )
    report = evaluate_pairs(pairs)
    report["failures"] = failures
    return report
