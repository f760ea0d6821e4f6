"""Spectrogram similarity metrics: global-statistics SSIM and MSE.

SSIM uses whole-image means, variances, and covariance (the images are only
64x32, so no sliding window):

    ssim = (2*mu_x*mu_y + c1)(2*cov_xy + c2)
           / ((mu_x^2 + mu_y^2 + c1)(var_x + var_y + c2))

with biased (1/N) moments. ``ssim_grad`` is its closed-form derivative with
respect to the first image, used as the top of the training backward pass.
Printed SSIM values are conventionally scaled by 100.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SsimConfig:
    """Stabilization constants for dynamic range L (normalized images: 1.0)."""

    dynamic_range: float = 1.0
    c1: float | None = None  # defaults to (0.01 * L)^2
    c2: float | None = None  # defaults to (0.03 * L)^2

    def __post_init__(self):
        if self.c1 is None:
            object.__setattr__(self, "c1", (0.01 * self.dynamic_range) ** 2)
        if self.c2 is None:
            object.__setattr__(self, "c2", (0.03 * self.dynamic_range) ** 2)
        if self.c1 <= 0 or self.c2 <= 0:
            raise ValueError("SSIM stabilization constants must be positive")


def _image(x) -> np.ndarray:
    return np.asarray(getattr(x, "values", x), dtype=float)


def _check_shapes(x: np.ndarray, y: np.ndarray) -> None:
    if x.shape != y.shape:
        raise ValueError(f"image shapes differ: {x.shape} vs {y.shape}")


def ssim(x, y, cfg: SsimConfig | None = None) -> float:
    """Global SSIM between two images (Spectrogram or array), in (-1, 1]."""
    cfg = cfg or SsimConfig()
    xv, yv = _image(x), _image(y)
    _check_shapes(xv, yv)
    mu_x, mu_y = xv.mean(), yv.mean()
    var_x = ((xv - mu_x) ** 2).mean()
    var_y = ((yv - mu_y) ** 2).mean()
    cov = ((xv - mu_x) * (yv - mu_y)).mean()
    num = (2.0 * mu_x * mu_y + cfg.c1) * (2.0 * cov + cfg.c2)
    den = (mu_x**2 + mu_y**2 + cfg.c1) * (var_x + var_y + cfg.c2)
    return float(num / den)


def ssim_grad(x, y, cfg: SsimConfig | None = None) -> np.ndarray:
    """d ssim(x, y) / dx, elementwise, same shape as x."""
    cfg = cfg or SsimConfig()
    xv, yv = _image(x), _image(y)
    _check_shapes(xv, yv)
    n = xv.size
    mu_x, mu_y = xv.mean(), yv.mean()
    var_x = ((xv - mu_x) ** 2).mean()
    var_y = ((yv - mu_y) ** 2).mean()
    cov = ((xv - mu_x) * (yv - mu_y)).mean()
    a1 = 2.0 * mu_x * mu_y + cfg.c1
    a2 = 2.0 * cov + cfg.c2
    b1 = mu_x**2 + mu_y**2 + cfg.c1
    b2 = var_x + var_y + cfg.c2
    s = (a1 * a2) / (b1 * b2)
    # d a1 = 2*mu_y/n; d a2 = 2*(y_i - mu_y)/n; d b1 = 2*mu_x/n;
    # d b2 = 2*(x_i - mu_x)/n.
    grad = (2.0 * mu_y * a2 + 2.0 * (yv - mu_y) * a1) / (n * b1 * b2) - s * (
        2.0 * mu_x / (n * b1) + 2.0 * (xv - mu_x) / (n * b2)
    )
    return grad


def mse(x, y) -> float:
    """Mean squared pixel difference."""
    xv, yv = _image(x), _image(y)
    _check_shapes(xv, yv)
    return float(((xv - yv) ** 2).mean())
