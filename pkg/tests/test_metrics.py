import numpy as np
import pytest

import radarhand as rh
from radarhand import metrics

from conftest import rng_for


def _ssim_reference(x, y, c1, c2):
    """Straight transcription of the global-statistics form."""
    mx, my = x.mean(), y.mean()
    vx = ((x - mx) ** 2).mean()
    vy = ((y - my) ** 2).mean()
    cov = ((x - mx) * (y - my)).mean()
    return ((2 * mx * my + c1) * (2 * cov + c2)) / ((mx**2 + my**2 + c1) * (vx + vy + c2))


def test_ssim_identity_and_symmetry():
    rng = rng_for("ssim-basic")
    for _ in range(20):
        x = rng.random((64, 32))
        y = rng.random((64, 32))
        assert rh.ssim(x, x) == pytest.approx(1.0, abs=1e-12)
        assert rh.ssim(x, y) == pytest.approx(rh.ssim(y, x), abs=1e-12)
        assert -1.0 <= rh.ssim(x, y) <= 1.0


def test_ssim_matches_reference_formula():
    rng = rng_for("ssim-ref")
    c1, c2 = 0.01**2, 0.03**2
    for _ in range(20):
        x = rng.random((16, 8))
        y = rng.random((16, 8))
        assert rh.ssim(x, y) == pytest.approx(_ssim_reference(x, y, c1, c2), abs=1e-12)


def test_ssim_constant_images():
    zeros = np.zeros((8, 8))
    ones = np.ones((8, 8))
    c1 = 0.01**2
    # mu terms differ maximally, variance terms agree: c1 / (1 + c1)
    assert rh.ssim(zeros, ones) == pytest.approx(c1 / (1 + c1), abs=1e-12)
    assert rh.ssim(zeros, zeros) == pytest.approx(1.0, abs=1e-12)


def test_ssim_custom_dynamic_range():
    rng = rng_for("ssim-range")
    x = 255 * rng.random((8, 8))
    y = 255 * rng.random((8, 8))
    cfg = rh.SsimConfig(dynamic_range=255.0)
    want = _ssim_reference(x, y, (0.01 * 255) ** 2, (0.03 * 255) ** 2)
    assert rh.ssim(x, y, cfg) == pytest.approx(want, abs=1e-12)


def test_ssim_accepts_spectrogram_objects(radar):
    vals = np.linspace(0, 1, 64 * 32).reshape(64, 32)
    spec = rh.Spectrogram(values=vals, doppler_bin_velocity=0.078125, frame_spacing=0.025)
    assert rh.ssim(spec, spec) == pytest.approx(1.0, abs=1e-12)
    assert rh.mse(spec, vals) == 0.0


def test_shape_mismatch_rejected():
    with pytest.raises(ValueError):
        rh.ssim(np.zeros((4, 4)), np.zeros((4, 5)))
    with pytest.raises(ValueError):
        rh.mse(np.zeros((4, 4)), np.zeros((4, 5)))


def test_mse():
    x = np.zeros((4, 4))
    y = np.full((4, 4), 0.5)
    assert rh.mse(x, y) == pytest.approx(0.25, abs=1e-15)
    assert rh.mse(y, y) == 0.0


def test_ssim_grad_matches_finite_differences():
    rng = rng_for("ssim-grad")
    for _ in range(5):
        x = rng.random((8, 6))
        y = rng.random((8, 6))
        g = rh.ssim_grad(x, y)
        assert g.shape == x.shape
        h = 1e-5
        for idx in [(0, 0), (3, 2), (7, 5), (4, 1)]:
            xp = x.copy()
            xp[idx] += h
            xm = x.copy()
            xm[idx] -= h
            fd = (rh.ssim(xp, y) - rh.ssim(xm, y)) / (2 * h)
            assert g[idx] == pytest.approx(fd, rel=1e-5, abs=1e-10)


def test_ssim_grad_points_toward_reference():
    # moving x along the gradient must increase similarity to y
    rng = rng_for("ssim-ascent")
    x = rng.random((16, 8))
    y = rng.random((16, 8))
    g = rh.ssim_grad(x, y)
    s0 = rh.ssim(x, y)
    s1 = rh.ssim(x + 1e-3 * g / np.max(np.abs(g)), y)
    assert s1 > s0
