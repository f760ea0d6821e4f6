"""
Cylinder hand mesh and occlusion
================================

Builds the 19-cylinder mesh for one hand pose and looks at which
reflection points the radar can actually see. Each bone is a finite
cylinder; a tessellation vertex counts as visible when the ray from the
radar origin reaches it without passing through any cylinder volume
(including the far side of its own bone).
"""

import numpy as np

import radarhand as rh

# a flat hand pose from the gesture generator, already in the radar frame
pose = rh.make_gesture("slide", seed=0).joints[0]
mesh = rh.build_mesh(pose)
print(f"{len(mesh.segments)} segments, vertices {mesh.vertices.shape}")

counts = rh.visibility_count(mesh, np.zeros(3))
verts = mesh.vertices.shape[1]
print(f"visible fraction per segment (of {verts} vertices each):")
for seg, (ja, jb), n in zip(mesh.segments, rh.SEGMENT_JOINT_PAIRS, counts):
    bar = "#" * int(30 * n / verts)
    print(f"  joints {ja:2d}-{jb:2d}  r={seg.radius * 1e3:4.1f}mm  {n:3d}  {bar}")

# even an isolated cylinder hides its own back side, so fractions top out
# near one half; fingers behind the palm drop well below that
print(f"mean visible fraction {counts.mean() / verts:.3f}")

# curling the fingers toward the palm increases self-occlusion
fist = rh.make_gesture("grasp", seed=0).joints[-1]
fist_counts = rh.visibility_count(rh.build_mesh(fist), np.zeros(3))
print(f"flat hand {counts.sum()} visible vertices, "
      f"curled {fist_counts.sum()}")

# RCS of each bone depends on its radius and aspect angle to the radar
lam = rh.RadarParams().wavelength_m
for theta_deg in (15, 45, 75, 89):
    sigma = rh.cylinder_rcs(0.008, np.radians(theta_deg), lam)
    print(f"rcs of an 8mm cylinder at {theta_deg:2d} deg aspect: {sigma:.3e} m^2")
