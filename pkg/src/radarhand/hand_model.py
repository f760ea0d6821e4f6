"""Hand skeleton geometry for radar simulation.

A hand is 20 joints (wrist plus 3 thumb joints and 4 joints for each other
finger) whose 19 connecting bones are modeled as finite cylinders. Cylinder
surfaces are tessellated into vertices for occlusion ray tests, and bone
centers act as radar scattering centers. ``resample_tracks`` interpolates a
joint sequence onto the chirp timeline and derives the per-chirp scatterer
state (radial distance, radial velocity, acceleration magnitude, aspect
angle, RCS, visible vertex count) that drives signal synthesis.

Radial velocity is the range rate dD/dt: positive values mean the scatterer
is moving away from the radar.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

JOINTS_PER_HAND = 20
SEGMENTS_PER_HAND = 19

# Internal 20-joint layout: 0 = wrist, thumb 1-3, then base/mid1/mid2/tip
# for index (4-7), middle (8-11), ring (12-15), pinky (16-19).
SEGMENT_JOINT_PAIRS: tuple[tuple[int, int], ...] = (
    (0, 1), (1, 2), (2, 3),
    (0, 4), (4, 5), (5, 6), (6, 7),
    (0, 8), (8, 9), (9, 10), (10, 11),
    (0, 12), (12, 13), (13, 14), (14, 15),
    (0, 16), (16, 17), (17, 18), (18, 19),
)

# Radii per segment: 8 mm metacarpal, 7 mm proximal, 6 mm intermediate,
# 5 mm distal. The thumb has no intermediate phalanx. Plausible round
# numbers, overridable per call.
DEFAULT_SEGMENT_RADII: tuple[float, ...] = (
    0.008, 0.007, 0.005,
    0.008, 0.007, 0.006, 0.005,
    0.008, 0.007, 0.006, 0.005,
    0.008, 0.007, 0.006, 0.005,
    0.008, 0.007, 0.006, 0.005,
)

DEFAULT_TESSELLATION: tuple[int, int] = (20, 20)

_LAYOUT_JOINTS = {"internal20": 20, "leap20": 20, "dhg22": 22}


@dataclass(frozen=True)
class SensorOffset:
    """Horizontal offset between the optical tracker and the radar, meters."""

    dx: float = 0.0
    dy: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.dx) and np.isfinite(self.dy)):
            raise ValueError("sensor offset must be finite")


@dataclass
class JointFrameSequence:
    """Time-stamped joint positions.

    ``times`` is shape (T,) seconds, strictly increasing. ``joints`` is shape
    (T, J, 3) meters where J is the layout joint count times ``hands``.
    ``frame`` names the coordinate frame: "sensor" (tracker axes) or "radar".
    """

    times: np.ndarray
    joints: np.ndarray
    layout: str = "internal20"
    hands: int = 1
    frame: str = "sensor"
    sensor_offset: SensorOffset | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.joints = np.asarray(self.joints, dtype=float)
        if self.layout not in _LAYOUT_JOINTS:
            raise ValueError(f"unknown joint layout {self.layout!r}")
        if self.hands not in (1, 2):
            raise ValueError("hands must be 1 or 2")
        if self.layout == "dhg22" and self.hands != 1:
            raise ValueError("dhg22 sequences are single-hand")
        if self.frame not in ("sensor", "radar"):
            raise ValueError(f"unknown coordinate frame {self.frame!r}")
        expected = _LAYOUT_JOINTS[self.layout] * self.hands
        if self.times.ndim != 1 or self.joints.shape != (self.times.size, expected, 3):
            raise ValueError(
                f"joints shape {self.joints.shape} does not match "
                f"{self.times.size} frames of {expected} joints"
            )
        if self.times.size < 1:
            raise ValueError("sequence has no frames")
        if not np.all(np.isfinite(self.times)) or not np.all(np.isfinite(self.joints)):
            raise ValueError("non-finite joint data")
        if self.times.size > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("timestamps must be strictly increasing")

    @property
    def joint_count(self) -> int:
        return self.joints.shape[1]

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])


def leap_to_radar(seq: JointFrameSequence, offset: SensorOffset) -> JointFrameSequence:
    """Translate a sensor-frame sequence into the radar frame.

    X' = X - dx, Y' = Y - dy, Z' = Z for every joint.
    """
    if seq.frame != "sensor":
        raise ValueError("sequence is not in the sensor frame")
    shifted = seq.joints.copy()
    shifted[:, :, 0] -= offset.dx
    shifted[:, :, 1] -= offset.dy
    return JointFrameSequence(
        times=seq.times.copy(),
        joints=shifted,
        layout=seq.layout,
        hands=seq.hands,
        frame="radar",
        sensor_offset=None,
    )


@dataclass
class CylinderSegment:
    """One bone as a finite solid cylinder between two joints."""

    endpoint_a: np.ndarray
    endpoint_b: np.ndarray
    radius: float
    segment_id: int

    def __post_init__(self):
        self.endpoint_a = np.asarray(self.endpoint_a, dtype=float)
        self.endpoint_b = np.asarray(self.endpoint_b, dtype=float)
        if self.radius <= 0:
            raise ValueError("cylinder radius must be positive")
        if self.length < 1e-9:
            raise ValueError(
                f"degenerate bone: segment {self.segment_id} endpoints coincide"
            )

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.endpoint_b - self.endpoint_a))

    @property
    def axis(self) -> np.ndarray:
        d = self.endpoint_b - self.endpoint_a
        return d / np.linalg.norm(d)

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.endpoint_a + self.endpoint_b)


def build_segments(
    joints: np.ndarray, radii: tuple[float, ...] | np.ndarray | None = None
) -> list[CylinderSegment]:
    """Build the 19 cylinder segments per hand from a 20-joint (or 40-joint) pose."""
    joints = np.asarray(joints, dtype=float)
    if joints.ndim != 2 or joints.shape[1] != 3 or joints.shape[0] % JOINTS_PER_HAND:
        raise ValueError(f"expected (20*hands, 3) joints, got {joints.shape}")
    if radii is None:
        radii = DEFAULT_SEGMENT_RADII
    radii = np.asarray(radii, dtype=float)
    if radii.shape != (SEGMENTS_PER_HAND,):
        raise ValueError("radii table must have 19 entries")
    hands = joints.shape[0] // JOINTS_PER_HAND
    segments = []
    for hand in range(hands):
        base = hand * JOINTS_PER_HAND
        for k, (a, b) in enumerate(SEGMENT_JOINT_PAIRS):
            pa, pb = joints[base + a], joints[base + b]
            if np.linalg.norm(pb - pa) < 1e-9:
                raise ValueError(
                    f"degenerate bone: joints {base + a} and {base + b} coincide"
                )
            segments.append(
                CylinderSegment(pa, pb, float(radii[k]), hand * SEGMENTS_PER_HAND + k)
            )
    return segments


def tessellate(
    segment: CylinderSegment, rings: int = 20, verts_per_ring: int = 20
) -> np.ndarray:
    """Sample the cylinder surface: ``rings`` circles of ``verts_per_ring``
    points from endpoint_a to endpoint_b, plus the two cap centers.

    Returns shape (rings * verts_per_ring + 2, 3).
    """
    if rings < 2 or verts_per_ring < 3:
        raise ValueError("tessellation needs rings >= 2 and verts_per_ring >= 3")
    axis = segment.axis
    # Any unit vector not parallel to the axis seeds the circle basis.
    seed = np.array([1.0, 0.0, 0.0])
    if abs(axis @ seed) > 0.9:
        seed = np.array([0.0, 1.0, 0.0])
    u = np.cross(axis, seed)
    u /= np.linalg.norm(u)
    v = np.cross(axis, u)
    ang = 2.0 * np.pi * np.arange(verts_per_ring) / verts_per_ring
    circle = segment.radius * (np.outer(np.cos(ang), u) + np.outer(np.sin(ang), v))
    stations = np.linspace(0.0, 1.0, rings)
    centers = segment.endpoint_a + np.outer(stations, segment.endpoint_b - segment.endpoint_a)
    verts = (centers[:, None, :] + circle[None, :, :]).reshape(-1, 3)
    caps = np.stack([segment.endpoint_a, segment.endpoint_b])
    return np.concatenate([verts, caps], axis=0)


@dataclass
class HandMesh:
    """All cylinder segments of one pose plus their tessellated vertices."""

    segments: list[CylinderSegment]
    vertices: np.ndarray  # (n_segments, verts_per_segment, 3)
    tessellation: tuple[int, int]

    @property
    def verts_per_segment(self) -> int:
        return self.tessellation[0] * self.tessellation[1] + 2


def build_mesh(
    joints: np.ndarray,
    radii=None,
    tessellation: tuple[int, int] = DEFAULT_TESSELLATION,
) -> HandMesh:
    """Segment + tessellate a single pose into a HandMesh."""
    rings, vpr = tessellation
    segments = build_segments(joints, radii)
    vertices = np.stack([tessellate(s, rings, vpr) for s in segments])
    return HandMesh(segments=segments, vertices=vertices, tessellation=(rings, vpr))


@dataclass
class ScattererTrack:
    """Per-chirp state of one bone-center scatterer.

    All arrays are length n_chirps. ``vertex_count`` is the tessellated
    vertex total per segment (the visibility ceiling).
    """

    segment_id: int
    times: np.ndarray
    center: np.ndarray  # (n_chirps, 3)
    radial_distance: np.ndarray
    radial_velocity: np.ndarray
    acceleration: np.ndarray
    aspect_angle: np.ndarray
    rcs: np.ndarray
    visible_vertex_count: np.ndarray
    vertex_count: int

    @property
    def n_chirps(self) -> int:
        return self.times.size


def _interp_joints(times: np.ndarray, joints: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Linear interpolation of (T, J, 3) joints onto query times (M,)."""
    T, J, _ = joints.shape
    flat = joints.reshape(T, J * 3)
    out = np.empty((t.size, J * 3))
    for col in range(J * 3):
        out[:, col] = np.interp(t, times, flat[:, col])
    return out.reshape(t.size, J, 3)


def resample_tracks(
    seq: JointFrameSequence,
    params,
    *,
    radii=None,
    tessellation: tuple[int, int] = DEFAULT_TESSELLATION,
    radar_origin=(0.0, 0.0, 0.0),
) -> list[ScattererTrack]:
    """Interpolate a radar-frame joint sequence onto the chirp grid and
    derive every scatterer's per-chirp kinematic and radiometric state.

    The chirp grid starts at the first timestamp and covers as many whole
    radar frames as fit inside the sequence. Velocity and acceleration use
    central finite differences (one-sided at the ends). Occlusion is
    evaluated once per radar frame, at the frame's center chirp, and held
    constant across that frame's chirps.
    """
    from . import radar_sim

    if seq.frame != "radar":
        raise ValueError("resample_tracks expects a radar-frame sequence")
    tc = params.chirp_interval_s
    cpf = params.chirps_per_frame
    n_frames = int(seq.duration / (cpf * tc) + 1e-9)
    if n_frames < 1:
        raise ValueError(
            f"sequence duration {seq.duration:.4f} s is shorter than one radar "
            f"frame ({cpf * tc:.4f} s)"
        )
    n_chirps = n_frames * cpf
    chirp_times = seq.times[0] + np.arange(n_chirps) * tc
    origin = np.asarray(radar_origin, dtype=float)

    joints_c = _interp_joints(seq.times, seq.joints, chirp_times)  # (M, J, 3)
    if radii is None:
        radii = DEFAULT_SEGMENT_RADII
    radii = np.asarray(radii, dtype=float)
    hands = seq.joints.shape[1] // JOINTS_PER_HAND
    pairs = [
        (h * JOINTS_PER_HAND + a, h * JOINTS_PER_HAND + b)
        for h in range(hands)
        for a, b in SEGMENT_JOINT_PAIRS
    ]
    a_idx = np.array([p[0] for p in pairs])
    b_idx = np.array([p[1] for p in pairs])
    seg_radii = np.tile(radii, hands)

    centers = 0.5 * (joints_c[:, a_idx] + joints_c[:, b_idx])  # (M, S, 3)
    rel = centers - origin
    dist = np.linalg.norm(rel, axis=2)  # (M, S)
    if np.any(dist <= 0):
        raise ValueError("scatterer coincides with the radar origin")

    # Central differences; one-sided at the ends.
    vel = np.empty_like(dist)
    vel[1:-1] = (dist[2:] - dist[:-2]) / (2.0 * tc)
    vel[0] = (dist[1] - dist[0]) / tc
    vel[-1] = (dist[-1] - dist[-2]) / tc

    acc_vec = np.zeros_like(centers)
    acc_vec[1:-1] = (centers[2:] - 2.0 * centers[1:-1] + centers[:-2]) / tc**2
    acc_vec[0] = (centers[2] - 2.0 * centers[1] + centers[0]) / tc**2
    acc_vec[-1] = (centers[-1] - 2.0 * centers[-2] + centers[-3]) / tc**2
    acc = np.linalg.norm(acc_vec, axis=2)

    axes = joints_c[:, b_idx] - joints_c[:, a_idx]
    axes /= np.linalg.norm(axes, axis=2, keepdims=True)
    los = rel / dist[:, :, None]
    cos_th = np.clip(np.abs(np.sum(axes * los, axis=2)), 0.0, 1.0)
    theta = np.minimum(np.arccos(cos_th), radar_sim.ASPECT_CLAMP_RAD)

    sigma = radar_sim.cylinder_rcs(seg_radii[None, :], theta, params.wavelength_m)

    rings, vpr = tessellation
    verts_per_seg = rings * vpr + 2
    visible = np.zeros((n_chirps, len(pairs)), dtype=int)
    for f in range(n_frames):
        mid = f * cpf + cpf // 2
        mesh = build_mesh(joints_c[mid], radii=radii, tessellation=tessellation)
        counts = radar_sim.visibility_count(mesh, origin)
        visible[f * cpf : (f + 1) * cpf] = counts[None, :]

    tracks = []
    for s in range(len(pairs)):
        tracks.append(
            ScattererTrack(
                segment_id=s,
                times=chirp_times,
                center=centers[:, s],
                radial_distance=dist[:, s],
                radial_velocity=vel[:, s],
                acceleration=acc[:, s],
                aspect_angle=theta[:, s],
                rcs=sigma[:, s],
                visible_vertex_count=visible[:, s],
                vertex_count=verts_per_seg,
            )
        )
    return tracks


# Canonical bone lengths (meters) for the optional proportion-normalization
# pass: per segment, same order as SEGMENT_JOINT_PAIRS.
STANDARD_BONE_LENGTHS: tuple[float, ...] = (
    0.046, 0.032, 0.030,
    0.068, 0.040, 0.025, 0.022,
    0.065, 0.045, 0.028, 0.023,
    0.058, 0.040, 0.027, 0.022,
    0.054, 0.032, 0.020, 0.019,
)


def normalize_bone_lengths(
    seq: JointFrameSequence, lengths: tuple[float, ...] | np.ndarray | None = None
) -> JointFrameSequence:
    """Rebuild every frame with standard bone lengths, preserving each bone's
    direction and the wrist position. Off by default in the pipeline; useful
    when a source dataset carries unreliable absolute joint scales.
    """
    if lengths is None:
        lengths = STANDARD_BONE_LENGTHS
    lengths = np.asarray(lengths, dtype=float)
    if lengths.shape != (SEGMENTS_PER_HAND,):
        raise ValueError("lengths table must have 19 entries")
    hands = seq.joints.shape[1] // JOINTS_PER_HAND
    out = seq.joints.copy()
    for t in range(seq.times.size):
        for h in range(hands):
            base = h * JOINTS_PER_HAND
            for k, (a, b) in enumerate(SEGMENT_JOINT_PAIRS):
                d = seq.joints[t, base + b] - seq.joints[t, base + a]
                n = np.linalg.norm(d)
                if n < 1e-9:
                    raise ValueError(f"degenerate bone at frame {t}, segment {k}")
                out[t, base + b] = out[t, base + a] + d / n * lengths[k]
    return JointFrameSequence(
        times=seq.times.copy(),
        joints=out,
        layout=seq.layout,
        hands=seq.hands,
        frame=seq.frame,
        sensor_offset=seq.sensor_offset,
    )


def load_skeleton(path) -> JointFrameSequence:
    """Read a skeleton file. Two styles are accepted:

    * line-delimited: first line is a header object with ``layout``,
      ``hands``, ``frame`` and optionally ``units`` ("mm" default) and
      ``sensor_offset_mm``; each following line is ``{"t": sec,
      "joints": [[x, y, z], ...]}``.
    * array-style: a single object with the same header fields plus a
      ``frames`` list.

    Coordinates are millimeters on disk and meters in memory.
    """
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError:
        doc = None
    if isinstance(doc, dict) and "frames" in doc:
        header = doc
        records = doc["frames"]
    else:
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise ValueError(f"empty skeleton file: {path}")
        header = json.loads(lines[0])
        if "layout" not in header:
            raise ValueError(f"skeleton header missing 'layout': {path}")
        records = [json.loads(ln) for ln in lines[1:]]
    if not records:
        raise ValueError(f"skeleton file has no frames: {path}")
    scale = 1e-3 if header.get("units", "mm") == "mm" else 1.0
    times = np.array([rec["t"] for rec in records], dtype=float)
    joints = np.array([rec["joints"] for rec in records], dtype=float) * scale
    offset = None
    if "sensor_offset_mm" in header:
        dx, dy = header["sensor_offset_mm"]
        offset = SensorOffset(dx * 1e-3, dy * 1e-3)
    return JointFrameSequence(
        times=times,
        joints=joints,
        layout=header.get("layout", "internal20"),
        hands=int(header.get("hands", 1)),
        frame=header.get("frame", "sensor"),
        sensor_offset=offset,
    )


def save_skeleton(seq: JointFrameSequence, path, style: str = "lines") -> None:
    """Write a skeleton file in either accepted style (millimeters on disk)."""
    header: dict = {
        "layout": seq.layout,
        "hands": seq.hands,
        "frame": seq.frame,
        "units": "mm",
    }
    if seq.sensor_offset is not None:
        header["sensor_offset_mm"] = [
            seq.sensor_offset.dx * 1e3,
            seq.sensor_offset.dy * 1e3,
        ]
    recs = [
        {"t": float(t), "joints": (j * 1e3).tolist()}
        for t, j in zip(seq.times, seq.joints)
    ]
    path = Path(path)
    if style == "lines":
        lines = [json.dumps(header, sort_keys=True)]
        lines += [json.dumps(rec, sort_keys=True) for rec in recs]
        path.write_text("\n".join(lines) + "\n")
    elif style == "array":
        header["frames"] = recs
        path.write_text(json.dumps(header, sort_keys=True))
    else:
        raise ValueError(f"unknown skeleton style {style!r}")
