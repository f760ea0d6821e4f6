"""
Aligning a 22-joint tracker skeleton
====================================

Sequences recorded with a 22-joint layout (wrist, palm center, and a
two-joint thumb articulation) carry two joints the cylinder model does
not use. The alignment drops the palm center, merges the thumb pair into
its midpoint, swaps the tracker's y-up axes to radar z-up, and re-centers
the hand in front of the radar.
"""

from pathlib import Path

import numpy as np

import radarhand as rh

out = Path(__file__).parent / "out"
out.mkdir(exist_ok=True)

# fabricate a tracker-style recording: 22 joints, y up, meters
rng = np.random.default_rng(9)
base = rh.make_gesture("finger_wave", seed=1).joints  # (T, 20, 3) radar frame
t_axis = np.arange(base.shape[0]) / 100.0
src = np.empty((base.shape[0], 22, 3))
src[:, 0] = base[:, 0]                      # wrist
src[:, 1] = base[:, 1:5].mean(axis=1)       # extra palm-center joint
src[:, 2:4] = base[:, 1:3]                   # thumb base + articulation pair
src[:, 4] = base[:, 2] + rng.normal(0, 1e-3, 3)
src[:, 5] = base[:, 3]
src[:, 6:] = base[:, 4:]
src = src[:, :, (0, 2, 1)]                   # back to y-up tracker axes

seq22 = rh.JointFrameSequence(t_axis, src, layout="dhg22")
print(f"source: {seq22.joints.shape[1]} joints, layout {seq22.layout!r}")

aligned = rh.align_skeleton(seq22)
print(f"aligned: {aligned.joints.shape[1]} joints, layout {aligned.layout!r}, "
      f"frame {aligned.frame!r}")

# the merged thumb joint is the midpoint of the articulation pair
mid = 0.5 * (src[:, 3] + src[:, 4])[:, (0, 2, 1)]
shift = aligned.joints[0, 0] - src[0, 0, (0, 2, 1)]
print(f"thumb merge residual {np.abs(aligned.joints[:, 2] - (mid + shift)).max():.2e}")

centroid = aligned.joints[:, [0, 1, 4, 8, 12, 16]].mean(axis=(0, 1))
print(f"palm centroid placed at ({centroid[0]:.3f}, {centroid[1]:.3f}, {centroid[2]:.3f})")

# the aligned sequence feeds the normal synthesis chain
spec = rh.synthesize_sequence(aligned, rh.RadarParams())
rh.spectrogram_to_png(spec, out / "aligned_wave.png", colormap="hot")
rh.save_skeleton(aligned, out / "aligned_wave.skeleton.txt")
print(f"wrote {out / 'aligned_wave.png'}")
