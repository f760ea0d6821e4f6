import numpy as np
import pytest

import radarhand as rh
from radarhand import radar_sim as rs

from conftest import rng_for

C = 3e8


def test_default_params_match_config_sheet(radar):
    assert radar.start_frequency_hz == 77e9
    assert radar.chirp_slope_hz_per_s == 76.22e12
    assert radar.bandwidth_hz == 3.9e9
    assert radar.sample_rate_hz == 12.5e6
    assert radar.samples_per_chirp == 256
    assert radar.chirps_per_frame == 128
    assert radar.rx_gain_db == 30.0
    assert radar.tx_gain_db == 8.0
    assert radar.tx_power_dbm == 12.0
    assert radar.frame_rate_hz == 10.0
    assert radar.max_velocity_m_s == 2.50


def test_derived_quantities(radar):
    assert radar.wavelength_m == pytest.approx(C / 77e9, rel=1e-12)
    # chirp repetition chosen from the unambiguous velocity: Tc = lambda/(4 v_max)
    assert radar.chirp_interval_s == pytest.approx(radar.wavelength_m / (4 * 2.5), rel=1e-12)
    assert radar.chirp_duration_s == pytest.approx(3.9e9 / 76.22e12, rel=1e-12)
    assert radar.tx_power_w == pytest.approx(10 ** ((12 - 30) / 10), rel=1e-12)
    assert radar.rx_gain_linear == pytest.approx(1000.0, rel=1e-12)
    assert radar.range_bin_spacing_m == pytest.approx(
        C * 12.5e6 / (2 * 76.22e12 * 256), rel=1e-12
    )
    assert radar.max_unambiguous_velocity_m_s == pytest.approx(2.5, rel=1e-12)
    # velocity resolution of one frame: 2 v_max / chirps_per_frame
    assert radar.frame_velocity_resolution_m_s == pytest.approx(2 * 2.5 / 128, rel=1e-12)
    assert radar.doppler_bin_velocity(64) == pytest.approx(
        radar.wavelength_m / (2 * 64 * radar.chirp_interval_s), rel=1e-12
    )


def test_param_validation():
    with pytest.raises(ValueError):
        rh.RadarParams(bandwidth_hz=0.0)
    with pytest.raises(ValueError):
        # slope inconsistent with bandwidth/duration
        rh.RadarParams(chirp_duration_s=40e-6, bandwidth_hz=3.9e9, chirp_slope_hz_per_s=76.22e12)
    with pytest.raises(ValueError):
        # ADC window longer than the chirp
        rh.RadarParams(samples_per_chirp=4096, sample_rate_hz=12.5e6)
    with pytest.raises(ValueError):
        rh.RadarParams(chirp_interval_s=1e-6)  # shorter than the chirp itself


def test_config_roundtrip(tmp_path, radar):
    p = tmp_path / "radar.cfg"
    rs.save_radar_config(radar, p)
    back = rs.load_radar_config(p)
    for name in (
        "start_frequency_hz",
        "bandwidth_hz",
        "chirp_slope_hz_per_s",
        "chirp_duration_s",
        "chirp_interval_s",
        "sample_rate_hz",
        "max_velocity_m_s",
        "rx_gain_db",
        "tx_gain_db",
        "tx_power_dbm",
    ):
        assert getattr(back, name) == pytest.approx(getattr(radar, name), rel=1e-9), name
    assert back.samples_per_chirp == 256
    assert back.chirps_per_frame == 128


def test_config_rejects_unknown_keys(tmp_path):
    p = tmp_path / "bad.cfg"
    p.write_text("[radar]\nstarting_frequency_ghz = 77\nbogus_knob = 3\n")
    with pytest.raises(ValueError):
        rs.load_radar_config(p)


def test_cylinder_rcs_formula():
    rng = rng_for("rcs-tuples")
    for _ in range(20):
        r = rng.uniform(1e-3, 2e-2)
        wl = rng.uniform(1e-3, 1e-2)
        th = rng.uniform(0.0, rs.ASPECT_CLAMP_RAD)
        want = wl * r * np.sin(th) / (8 * np.pi * np.cos(th) ** 2)
        got = rh.cylinder_rcs(r, th, wl)
        assert got == pytest.approx(want, rel=1e-12)
    assert rh.cylinder_rcs(0.008, 0.0, 0.0039) == 0.0  # broadside null is exact


def test_cylinder_rcs_clamps_near_end_on():
    wl = 0.0039
    at_clamp = rh.cylinder_rcs(0.008, rs.ASPECT_CLAMP_RAD, wl)
    beyond = rh.cylinder_rcs(0.008, np.pi / 2, wl)
    assert beyond == pytest.approx(at_clamp, rel=1e-12)
    assert np.isfinite(beyond)


def test_cylinder_rcs_rejects_bad_inputs():
    with pytest.raises(ValueError):
        rh.cylinder_rcs(-0.01, 0.3, 0.0039)
    with pytest.raises(ValueError):
        rh.cylinder_rcs(0.01, -0.3, 0.0039)
    with pytest.raises(ValueError):
        rh.cylinder_rcs(0.01, 0.3, 0.0)


def test_attenuated_amplitude_formula(radar):
    rng = rng_for("amp-tuples")
    for _ in range(20):
        sigma = rng.uniform(1e-8, 1e-4)
        d = rng.uniform(0.1, 1.5)
        want = (
            radar.wavelength_m
            * np.sqrt(radar.tx_gain_linear * radar.rx_gain_linear * radar.tx_power_w * sigma)
            / ((4 * np.pi) ** 1.5 * d**2)
        )
        assert rh.attenuated_amplitude(radar, sigma, d) == pytest.approx(want, rel=1e-12)
    with pytest.raises(ValueError):
        rh.attenuated_amplitude(radar, 1e-6, 0.0)
    with pytest.raises(ValueError):
        rh.attenuated_amplitude(radar, -1e-6, 0.5)


def _blocked_oracle(origin, vertex, a, b, r):
    """Scalar reference for the solid finite-cylinder ray test, written with
    cross products and np.roots instead of the vectorized projections."""
    d = vertex - origin
    dn = np.linalg.norm(d)
    t_hi = 1.0 - 1e-6 / dn
    u = b - a
    length = np.linalg.norm(u)
    u = u / length
    p0 = (origin - a) @ u
    pd = d @ u
    if abs(pd) < 1e-12 * dn:
        if not (0.0 <= p0 <= length):
            return False
        ax_lo, ax_hi = -np.inf, np.inf
    else:
        ta, tb = (0.0 - p0) / pd, (length - p0) / pd
        ax_lo, ax_hi = min(ta, tb), max(ta, tb)
    cw = np.cross(origin - a, u)
    cd = np.cross(d, u)
    qa = cd @ cd
    qb = 2.0 * (cw @ cd)
    qc = cw @ cw - r * r
    if qa < 1e-12 * dn * dn:
        if qc > 0:
            return False
        lat_lo, lat_hi = -np.inf, np.inf
    else:
        if qb * qb - 4.0 * qa * qc <= 0:
            return False
        roots = np.sort(np.roots([qa, qb, qc]).real)
        lat_lo, lat_hi = roots[0], roots[1]
    lo = max(ax_lo, lat_lo, 0.0)
    hi = min(ax_hi, lat_hi, t_hi)
    return lo < hi


def _random_segment(rng):
    a = rng.uniform([-0.06, -0.06, 0.2], [0.06, 0.06, 0.45])
    v = rng.normal(size=3)
    v = v / np.linalg.norm(v) * rng.uniform(0.02, 0.06)
    return rh.CylinderSegment(a, a + v, rng.uniform(0.004, 0.01), 0)


def test_visibility_matches_bruteforce_oracle():
    rng = rng_for("visibility-scenes")
    for _ in range(10):
        s0 = _random_segment(rng)
        s1 = _random_segment(rng)
        mesh = rh.HandMesh(
            [s0, s1], np.stack([rh.tessellate(s0), rh.tessellate(s1)]), (20, 20)
        )
        got = rh.visibility_count(mesh, np.zeros(3))
        cyl = [(s.endpoint_a, s.endpoint_b, s.radius) for s in (s0, s1)]
        want = np.zeros(2, dtype=int)
        for si in range(2):
            for v in mesh.vertices[si]:
                blocked = any(_blocked_oracle(np.zeros(3), v, a, b, r) for a, b, r in cyl)
                want[si] += not blocked
        assert np.array_equal(got, want)


def test_total_occlusion_gives_zero():
    # wide slab of a cylinder right in front of a small far one
    blocker = rh.CylinderSegment(
        np.array([-0.5, 0.0, 0.2]), np.array([0.5, 0.0, 0.2]), 0.15, 0
    )
    target = rh.CylinderSegment(
        np.array([-0.01, 0.0, 0.5]), np.array([0.01, 0.0, 0.5]), 0.005, 1
    )
    mesh = rh.HandMesh(
        [blocker, target], np.stack([rh.tessellate(blocker), rh.tessellate(target)]), (20, 20)
    )
    counts = rh.visibility_count(mesh, np.zeros(3))
    assert counts[1] == 0
    assert counts[0] > 0


def test_self_occlusion_hides_back_side():
    seg = rh.CylinderSegment(np.array([-0.03, 0.0, 0.3]), np.array([0.03, 0.0, 0.3]), 0.008, 0)
    mesh = rh.HandMesh([seg], rh.tessellate(seg)[None], (20, 20))
    count = rh.visibility_count(mesh, np.zeros(3))[0]
    assert 0 < count < 402


def test_if_signal_closed_form(small_radar):
    tr = rh.point_scatterer_track(small_radar, 64, distance0=0.42, velocity=0.9)
    cube = rh.synthesize_if(tr, small_radar)
    assert cube.samples.shape == (64, 8)
    t = np.arange(8) / small_radar.sample_rate_hz
    s = small_radar.chirp_slope_hz_per_s
    rng = rng_for("if-samples")
    for _ in range(25):
        m = int(rng.integers(0, 64))
        n = int(rng.integers(0, 8))
        tau = 2 * tr.radial_distance[m] / C
        phase = 2 * np.pi * (77e9 * tau + s * tau * t[n] - 0.5 * s * tau**2)
        amp = rh.attenuated_amplitude(small_radar, tr.rcs[m], tr.radial_distance[m])
        want = amp * np.exp(1j * phase)
        assert cube.samples[m, n] == pytest.approx(want, rel=1e-12)


def test_slow_time_phase_step_encodes_velocity(small_radar):
    v = 1.3
    tr = rh.point_scatterer_track(small_radar, 64, distance0=0.5, velocity=v)
    cube = rh.synthesize_if(tr, small_radar)
    dphi = np.angle(cube.samples[1:, 0] * np.conj(cube.samples[:-1, 0]))
    want = 4 * np.pi * v * small_radar.chirp_interval_s / small_radar.wavelength_m
    assert np.allclose(dphi, want, rtol=2e-3)
    # and the helper inverts it
    assert rh.phase_to_velocity(np.mean(dphi), small_radar) == pytest.approx(v, rel=2e-3)


def test_visibility_scaling_flag(small_radar):
    tr = rh.point_scatterer_track(small_radar, 64, distance0=0.4, velocity=0.0)
    tr.visible_vertex_count[:] = 201  # half the mesh
    full = rh.synthesize_if(tr, small_radar)
    scaled = rh.synthesize_if(tr, small_radar, visibility_scaling=True)
    assert np.allclose(scaled.samples, full.samples * (201 / 402), atol=0, rtol=1e-12)


def test_compose_unit_is_sum(small_radar):
    tr1 = rh.point_scatterer_track(small_radar, 64, distance0=0.4, velocity=0.5, segment_id=0)
    tr2 = rh.point_scatterer_track(small_radar, 64, distance0=0.6, velocity=-0.5, segment_id=1)
    cubes = [rh.synthesize_if(t, small_radar) for t in (tr1, tr2)]
    total = rh.compose(cubes)
    assert np.array_equal(total.samples, cubes[0].samples + cubes[1].samples)


def test_compose_weight_layout(small_radar):
    tr1 = rh.point_scatterer_track(small_radar, 64, distance0=0.4, velocity=0.5, segment_id=0)
    tr2 = rh.point_scatterer_track(small_radar, 64, distance0=0.6, velocity=-0.5, segment_id=1)
    cubes = [rh.synthesize_if(t, small_radar) for t in (tr1, tr2)]
    w = np.array([[0.5, 2.0], [1.5, 0.0]])  # 2 scatterers x 2 frames of 32 chirps
    total = rh.compose(cubes, w).samples
    want = np.zeros_like(total)
    for k, cube in enumerate(cubes):
        for f in range(2):
            want[32 * f : 32 * (f + 1)] += w[k, f] * cube.samples[32 * f : 32 * (f + 1)]
    assert np.allclose(total, want, rtol=1e-15, atol=0)


def test_compose_validation(small_radar):
    tr = rh.point_scatterer_track(small_radar, 64, distance0=0.4, velocity=0.0)
    cube = rh.synthesize_if(tr, small_radar)
    with pytest.raises(ValueError):
        rh.compose([])
    with pytest.raises(ValueError):
        rh.compose([cube], np.array([[-1.0, 1.0]]))
    with pytest.raises(ValueError):
        rh.compose([cube], np.ones((1, 3)))  # 64 % 3 != 0
    with pytest.raises(ValueError):
        rh.compose([cube], np.ones((2, 2)))  # row count mismatch


def test_cube_validation():
    with pytest.raises(ValueError):
        rh.IFSignalCube(samples=np.ones(5, dtype=complex))
    bad = np.ones((4, 4), dtype=complex)
    bad[1, 1] = np.nan
    with pytest.raises(ValueError):
        rh.IFSignalCube(samples=bad)
