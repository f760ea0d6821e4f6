"""Procedural gesture sequences and point-target fixtures.

No measured dataset ships with this package, so demos, tests, and the
training corpus are built from parametric skeleton motions: ten gesture
classes (five single-hand, five double-hand) over a canonical 20-joint
hand, plus an idealized point-scatterer track for radar physics checks.
All generators are deterministic given their seed.
"""

from __future__ import annotations

import numpy as np

from .hand_model import JOINTS_PER_HAND, JointFrameSequence, ScattererTrack
from .radar_sim import RadarParams

# label -> (hands, occlusion flag), mirroring the gesture attribute table.
GESTURES: dict[str, tuple[int, bool]] = {
    "grasp": (1, True),
    "finger_friction": (1, True),
    "finger_wave": (1, False),
    "circle": (1, True),
    "slide": (1, False),
    "finger_cross": (2, True),
    "double_hand_clap": (2, True),
    "double_hand_drumming": (2, False),
    "hand_merge": (2, False),
    "double_hand_circle": (2, False),
}

# Per-finger splay angle from straight ahead (+y), radians, and bone lengths
# (meters): thumb 3 bones, other fingers metacarpal + 3 phalanges.
_FINGERS = (
    (-1.13, (0.045, 0.035, 0.030)),
    (-0.26, (0.068, 0.040, 0.025, 0.022)),
    (0.0, (0.070, 0.045, 0.028, 0.024)),
    (0.23, (0.066, 0.040, 0.027, 0.023)),
    (0.52, (0.060, 0.030, 0.020, 0.018)),
)


def canonical_hand(curl=0.0, mirror: bool = False) -> np.ndarray:
    """A 20-joint right hand at the origin, fingers along +y in the x-y
    plane. ``curl`` in [0, 1] flexes the phalanges toward -z (0 = flat,
    1 = loose fist); a scalar curls all fingers, a length-5 array curls
    each finger separately. ``mirror`` flips x for a left hand."""
    curl = np.broadcast_to(np.asarray(curl, dtype=float), (5,))
    joints = np.zeros((JOINTS_PER_HAND, 3))
    j = 1
    for f, (splay, bones) in enumerate(_FINGERS):
        direction = np.array([np.sin(splay), np.cos(splay), 0.0])
        pos = joints[0]
        for b, length in enumerate(bones):
            pitch = 0.0 if b == 0 else curl[f] * (0.35 + 0.55 * b)
            d = np.cos(pitch) * direction + np.sin(pitch) * np.array([0.0, 0.0, -1.0])
            pos = pos + length * d
            joints[j] = pos
            j += 1
    if mirror:
        joints = joints * np.array([-1.0, 1.0, 1.0])
    return joints


def _pose(local: np.ndarray, position, tilt: float) -> np.ndarray:
    """Pitch the hand about the x axis by ``tilt`` then translate."""
    ct, st = np.cos(tilt), np.sin(tilt)
    rot = np.array([[1.0, 0.0, 0.0], [0.0, ct, -st], [0.0, st, ct]])
    return local @ rot.T + np.asarray(position, dtype=float)


def make_gesture(
    label: str,
    *,
    duration: float = 0.8,
    fps: float = 100.0,
    seed: int = 0,
    jitter: float = 0.0,
) -> JointFrameSequence:
    """Generate one gesture sequence in the radar frame.

    ``jitter`` scales random perturbations of amplitude, rate, and resting
    position (0 = the canonical instance), for building varied corpora.
    """
    if label not in GESTURES:
        raise ValueError(f"unknown gesture {label!r}; known: {sorted(GESTURES)}")
    hands, _ = GESTURES[label]
    rng = np.random.default_rng(seed)

    def jit(scale=1.0):
        return 1.0 + jitter * scale * rng.uniform(-1.0, 1.0)

    amp = jit()
    rate = jit(0.6)
    base = np.array([0.0, -0.05, 0.26]) + jitter * rng.uniform(-0.02, 0.02, 3)
    tilt = -0.6 * jit(0.4)

    n = max(int(round(duration * fps)) + 1, 2)
    times = np.arange(n) / fps
    frames = np.empty((n, hands * JOINTS_PER_HAND, 3))
    for i, t in enumerate(times):
        u = t / duration
        hand_joints = []
        for hand in range(hands):
            mirror = hand == 1
            side = -1.0 if mirror else 1.0
            curl = 0.0
            pos = base.copy()
            if hands == 2:
                pos = pos + np.array([side * 0.10, 0.0, 0.0])
            if label == "grasp":
                curl = 0.9 * amp * 0.5 * (1.0 - np.cos(np.pi * u))
            elif label == "finger_friction":
                curl = np.array([0.5, 0.25, 0.0, 0.0, 0.0])
                pos = pos + np.array(
                    [0.02 * amp * np.sin(2.0 * np.pi * 3.0 * rate * t), 0.0, 0.0]
                )
            elif label == "finger_wave":
                phase = 2.0 * np.pi * 2.0 * rate * t - 0.9 * np.arange(5)
                curl = 0.45 * amp * (1.0 + np.sin(phase)) / 2.0
            elif label == "circle":
                ang = 2.0 * np.pi * 1.25 * rate * t
                pos = pos + 0.035 * amp * np.array([np.cos(ang), 0.0, np.sin(ang)])
            elif label == "slide":
                pos = pos + np.array([0.24 * amp * (u - 0.5), 0.0, 0.02 * np.sin(np.pi * u)])
            elif label == "finger_cross":
                approach = 0.085 * amp * 0.5 * (1.0 - np.cos(np.pi * u))
                pos = pos + np.array(
                    [-side * approach, 0.0, 0.012 * np.sin(2.0 * np.pi * 2.0 * t + hand * np.pi)]
                )
                curl = 0.35
            elif label == "double_hand_clap":
                gap = 0.02 + 0.08 * amp * 0.5 * (1.0 + np.cos(2.0 * np.pi * 1.25 * rate * t))
                pos = pos + np.array([side * (gap - 0.10), 0.0, 0.0])
            elif label == "double_hand_drumming":
                strike = np.sin(2.0 * np.pi * 2.5 * rate * t + hand * np.pi)
                pos = pos + np.array([0.0, 0.0, -0.035 * amp * max(strike, 0.0)])
            elif label == "hand_merge":
                pos = pos + np.array([-side * 0.08 * amp * 0.5 * (1.0 - np.cos(np.pi * u)), 0.0, 0.0])
            elif label == "double_hand_circle":
                ang = 2.0 * np.pi * 1.25 * rate * t + hand * np.pi
                pos = pos + 0.030 * amp * np.array([np.cos(ang), 0.0, np.sin(ang)])
            local = canonical_hand(curl, mirror=mirror)
            hand_joints.append(_pose(local, pos, tilt))
        frames[i] = np.concatenate(hand_joints, axis=0)
    return JointFrameSequence(
        times=times, joints=frames, layout="internal20", hands=hands, frame="radar"
    )


def gesture_labels() -> tuple[str, ...]:
    return tuple(GESTURES)


def point_scatterer_track(
    params: RadarParams,
    n_chirps: int,
    *,
    distance0: float = 0.4,
    velocity: float = 0.0,
    rcs: float = 1e-5,
    segment_id: int = 0,
) -> ScattererTrack:
    """An idealized constant-velocity point scatterer on the +z axis with a
    fixed RCS and full visibility, for radar physics oracles."""
    t = np.arange(n_chirps) * params.chirp_interval_s
    dist = distance0 + velocity * t
    if np.any(dist <= 0):
        raise ValueError("point target crosses the radar origin")
    center = np.zeros((n_chirps, 3))
    center[:, 2] = dist
    return ScattererTrack(
        segment_id=segment_id,
        times=t,
        center=center,
        radial_distance=dist,
        radial_velocity=np.full(n_chirps, float(velocity)),
        acceleration=np.zeros(n_chirps),
        aspect_angle=np.full(n_chirps, np.pi / 4),
        rcs=np.full(n_chirps, float(rcs)),
        visible_vertex_count=np.full(n_chirps, 402, dtype=int),
        vertex_count=402,
    )
