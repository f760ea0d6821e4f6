import json

import numpy as np
import pytest

import radarhand as rh
from radarhand import hand_model as hm

from conftest import rng_for


def test_segment_topology():
    pairs = hm.SEGMENT_JOINT_PAIRS
    assert len(pairs) == 19
    # finger chains: thumb has 3 bones, the other four have 4
    roots = [p for p in pairs if p[0] == 0]
    assert len(roots) == 5
    for a, b in pairs:
        assert 0 <= a < 20 and 0 < b < 20
        assert a < b


def test_build_segments_counts_and_radii(flat_hand):
    segs = rh.build_segments(flat_hand)
    assert len(segs) == 19
    radii = [s.radius for s in segs]
    assert radii == list(hm.DEFAULT_SEGMENT_RADII)
    # thumb chain: 8/7/5 mm; full fingers: 8/7/6/5 mm
    assert radii[:3] == [0.008, 0.007, 0.005]
    assert radii[3:7] == [0.008, 0.007, 0.006, 0.005]
    for seg, (a, b) in zip(segs, hm.SEGMENT_JOINT_PAIRS):
        assert np.array_equal(seg.endpoint_a, flat_hand[a])
        assert np.array_equal(seg.endpoint_b, flat_hand[b])


def test_build_segments_two_hands(flat_hand):
    shifted = flat_hand + np.array([0.15, 0.0, 0.0])
    both = np.concatenate([flat_hand, shifted], axis=0)
    segs = rh.build_segments(both)
    assert len(segs) == 38
    assert segs[19].segment_id == 19


def test_degenerate_bone_rejected(flat_hand):
    bad = flat_hand.copy()
    bad[1] = bad[2]
    with pytest.raises(ValueError):
        rh.build_segments(bad)


def test_tessellation_vertex_count_and_geometry(flat_hand):
    seg = rh.build_segments(flat_hand)[4]
    verts = rh.tessellate(seg)
    assert verts.shape == (20 * 20 + 2, 3)
    axis = seg.axis
    rel = verts[:-2] - seg.endpoint_a
    along = rel @ axis
    # lateral vertices sit exactly on the cylinder surface between the caps
    radial = np.linalg.norm(rel - np.outer(along, axis), axis=1)
    assert np.allclose(radial, seg.radius, atol=1e-12)
    assert along.min() >= -1e-12 and along.max() <= seg.length + 1e-12
    # last two vertices are the cap centers
    assert np.allclose(verts[-2], seg.endpoint_a, atol=1e-12)
    assert np.allclose(verts[-1], seg.endpoint_b, atol=1e-12)


def test_mesh_shape(flat_hand):
    mesh = rh.build_mesh(flat_hand)
    assert mesh.vertices.shape == (19, 402, 3)
    assert mesh.verts_per_segment == 402


def test_sequence_validation():
    times = np.linspace(0.0, 0.5, 6)
    joints = np.zeros((6, 20, 3))
    joints[..., 2] = 0.3
    seq = rh.JointFrameSequence(times=times, joints=joints, layout="internal20", hands=1, frame="radar")
    assert seq.joint_count == 20
    assert seq.duration == pytest.approx(0.5)

    with pytest.raises(ValueError):
        rh.JointFrameSequence(times=times[::-1], joints=joints, layout="internal20", hands=1, frame="radar")
    with pytest.raises(ValueError):
        rh.JointFrameSequence(times=times, joints=joints[:, :19], layout="internal20", hands=1, frame="radar")
    bad = joints.copy()
    bad[2, 5, 1] = np.nan
    with pytest.raises(ValueError):
        rh.JointFrameSequence(times=times, joints=bad, layout="internal20", hands=1, frame="radar")
    with pytest.raises(ValueError):
        rh.JointFrameSequence(times=times, joints=np.zeros((6, 22, 3)), layout="dhg22", hands=2)


def test_leap_to_radar_offset():
    times = np.array([0.0, 0.1])
    joints = np.full((2, 20, 3), 0.3)
    seq = rh.JointFrameSequence(
        times=times,
        joints=joints,
        layout="internal20",
        hands=1,
        frame="sensor",
        sensor_offset=rh.SensorOffset(dx=0.05, dy=-0.02),
    )
    out = rh.leap_to_radar(seq, seq.sensor_offset)
    assert out.frame == "radar"
    assert np.allclose(out.joints[..., 0], 0.25)
    assert np.allclose(out.joints[..., 1], 0.32)
    assert np.allclose(out.joints[..., 2], 0.3)


def test_resample_static_hand(radar, flat_hand):
    # 0.8 s static capture: zero radial velocity everywhere
    times = np.linspace(0.0, 0.8, 81)
    joints = np.repeat(flat_hand[None], 81, axis=0)
    seq = rh.JointFrameSequence(times=times, joints=joints, layout="internal20", hands=1, frame="radar")
    tracks = rh.resample_tracks(seq, radar)
    assert len(tracks) == 19
    n = radar.chirps_per_frame * 16
    for tr in tracks:
        assert tr.center.shape == (n, 3)
        assert np.all(tr.radial_distance > 0)
        assert np.allclose(tr.radial_velocity, 0.0, atol=1e-9)
        assert np.allclose(tr.acceleration, 0.0, atol=1e-9)
        assert tr.visible_vertex_count.shape == (n,)
        # per-frame visibility is held constant across each frame's chirps
        per_frame = tr.visible_vertex_count.reshape(16, radar.chirps_per_frame)
        assert np.all(per_frame == per_frame[:, :1])


def test_resample_constant_velocity(radar, flat_hand):
    # rigid translation toward +z at 0.7 m/s; wrist-to-radar motion is radial
    v = 0.7
    times = np.linspace(0.0, 0.8, 81)
    joints = np.repeat(flat_hand[None], 81, axis=0)
    joints = joints + v * times[:, None, None] * np.array([0.0, 0.0, 1.0])
    seq = rh.JointFrameSequence(times=times, joints=joints, layout="internal20", hands=1, frame="radar")
    tracks = rh.resample_tracks(seq, radar)
    vel = np.array([0.0, 0.0, v])
    for tr in tracks:
        # radial component of a straight +z translation depends on geometry:
        # d/dt |c(t)| = (c . v) / |c|
        c = tr.center[500]
        d_dot = float(c @ vel) / np.linalg.norm(c)
        assert tr.radial_velocity[500] == pytest.approx(d_dot, rel=1e-6)


def test_resample_rejects_short_sequences(radar, flat_hand):
    times = np.array([0.0, 0.01])
    joints = np.repeat(flat_hand[None], 2, axis=0)
    seq = rh.JointFrameSequence(times=times, joints=joints, layout="internal20", hands=1, frame="radar")
    with pytest.raises(ValueError):
        rh.resample_tracks(seq, radar)


def test_resample_rejects_nonpositive_distance(radar, flat_hand):
    times = np.linspace(0.0, 0.8, 81)
    # put the first bone's midpoint exactly at the radar origin
    shifted = flat_hand.copy()
    shifted[0] = [0.0, 0.0, -0.1]
    shifted[1] = [0.0, 0.0, 0.1]
    joints = np.repeat(shifted[None], 81, axis=0)
    seq = rh.JointFrameSequence(times=times, joints=joints, layout="internal20", hands=1, frame="radar")
    with pytest.raises(ValueError):
        rh.resample_tracks(seq, radar)


def test_aspect_angle_wiring(radar):
    # bone along +x, scatterer on +z axis: bone is broadside (theta ~ 0)
    times = np.linspace(0.0, 0.8, 81)
    joints = np.repeat(rh.make_gesture("slide", seed=0).joints[:1], 81, axis=0)
    seq = rh.JointFrameSequence(times=times, joints=joints, layout="internal20", hands=1, frame="radar")
    tracks = rh.resample_tracks(seq, radar)
    for tr in tracks:
        assert np.all(tr.aspect_angle >= 0.0)
        assert np.all(tr.aspect_angle <= rh.ASPECT_CLAMP_RAD)
        assert np.all(tr.rcs >= 0.0)


def test_skeleton_roundtrip(tmp_path, grasp_seq):
    for style in ("lines", "array"):
        p = tmp_path / f"g_{style}.json"
        rh.save_skeleton(grasp_seq, p, style=style)
        back = rh.load_skeleton(p)
        assert np.allclose(back.times, grasp_seq.times, atol=1e-12)
        assert np.allclose(back.joints, grasp_seq.joints, atol=1e-9)
        assert back.layout == grasp_seq.layout
        assert back.hands == grasp_seq.hands


def test_skeleton_units_mm(tmp_path):
    # default on-disk unit is millimeters
    doc = {
        "layout": "internal20",
        "hands": 1,
        "frame": "radar",
        "frames": [
            {"t": 0.0, "joints": (np.full((20, 3), 250.0)).tolist()},
            {"t": 0.1, "joints": (np.full((20, 3), 260.0)).tolist()},
        ],
    }
    p = tmp_path / "mm.json"
    p.write_text(json.dumps(doc))
    seq = rh.load_skeleton(p)
    assert np.allclose(seq.joints[0], 0.25)
    assert np.allclose(seq.joints[1], 0.26)


def test_normalize_bone_lengths(grasp_seq):
    out = rh.normalize_bone_lengths(grasp_seq)
    for t in (0, len(out.times) // 2, -1):
        segs = rh.build_segments(out.joints[t])
        for seg, want in zip(segs, hm.STANDARD_BONE_LENGTHS):
            assert seg.length == pytest.approx(want, rel=1e-9)


def test_visibility_drops_when_occluded(radar):
    rng = rng_for("occlusion-drop")
    # two parallel fingers stacked along the line of sight: the far one
    # loses visible vertices compared to standing alone
    a = rh.CylinderSegment(np.array([-0.03, 0.0, 0.30]), np.array([0.03, 0.0, 0.30]), 0.008, 0)
    b = rh.CylinderSegment(np.array([-0.03, 0.0, 0.35]), np.array([0.03, 0.0, 0.35]), 0.008, 1)
    tess = (20, 20)
    mesh_pair = rh.HandMesh([a, b], np.stack([rh.tessellate(a), rh.tessellate(b)]), tess)
    mesh_solo = rh.HandMesh([b], np.stack([rh.tessellate(b)]), tess)
    paired = rh.visibility_count(mesh_pair, np.zeros(3))
    solo = rh.visibility_count(mesh_solo, np.zeros(3))
    assert paired[1] < solo[0]
    assert paired[0] > 0
