"""Image quality metrics: mean squared error and single-scale SSIM."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import convolve1d

from .errors import DimensionMismatchError, ParameterError
from .image import Image, support_mask

_WINDOW_SIZE = 11
_WINDOW_SIGMA = 1.5
_K1 = 0.01
_K2 = 0.03


@dataclass(frozen=True)
class MetricReport:
    mse: float
    ssim: float
    n_pixels: int
    masked: bool


def _check_pair(a: Image, b: Image):
    if a.n_pixels != b.n_pixels:
        raise DimensionMismatchError(
            f"image sizes differ: {a.n_pixels} vs {b.n_pixels}"
        )


def mse(a: Image, b: Image, mask_to_support: bool = False) -> float:
    """Mean squared difference over all pixels, or over the support disk."""
    _check_pair(a, b)
    diff = (a.values - b.values) ** 2
    if mask_to_support:
        if a.support_radius != b.support_radius:
            raise DimensionMismatchError(
                "masked comparison requires equal support radii, got "
                f"{a.support_radius} vs {b.support_radius}"
            )
        mask = support_mask(a)
        return float(np.mean(diff[mask]))
    return float(np.mean(diff))


def _gaussian_window() -> np.ndarray:
    half = _WINDOW_SIZE // 2
    t = np.arange(-half, half + 1, dtype=np.float64)
    w = np.exp(-(t * t) / (2.0 * _WINDOW_SIGMA**2))
    return w / w.sum()


def _local_mean(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    half = w.size // 2
    y = convolve1d(x, w, axis=0, mode="constant")
    y = convolve1d(y, w, axis=1, mode="constant")
    # keep only windows fully inside the image
    return y[half:-half, half:-half]


def ssim(a: Image, b: Image, pooled_range: bool = False) -> float:
    """Mean local structural similarity with an 11x11 Gaussian window (std 1.5).

    Stabilizers are ``C1 = (0.01 D)^2`` and ``C2 = (0.03 D)^2`` with the
    dynamic range ``D`` taken from the reference image ``b`` (max - min), or
    from the pooled pair when ``pooled_range`` is set (which makes the score
    symmetric under argument swap).  Local statistics use the window weights
    directly (no sample-covariance correction), and only fully interior
    windows are pooled.
    """
    _check_pair(a, b)
    if a.n_pixels < _WINDOW_SIZE:
        raise ParameterError(
            f"images must be at least {_WINDOW_SIZE} pixels on a side for SSIM"
        )
    if pooled_range:
        data_range = float(
            max(a.values.max(), b.values.max()) - min(a.values.min(), b.values.min())
        )
    else:
        data_range = float(b.values.max() - b.values.min())
    if data_range == 0.0:
        raise ParameterError("reference image has zero dynamic range")
    c1 = (_K1 * data_range) ** 2
    c2 = (_K2 * data_range) ** 2

    w = _gaussian_window()
    xa = a.values
    xb = b.values
    mu_a = _local_mean(xa, w)
    mu_b = _local_mean(xb, w)
    var_a = _local_mean(xa * xa, w) - mu_a * mu_a
    var_b = _local_mean(xb * xb, w) - mu_b * mu_b
    covariance = _local_mean(xa * xb, w) - mu_a * mu_b

    score = ((2.0 * mu_a * mu_b + c1) * (2.0 * covariance + c2)) / (
        (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    )
    return float(np.mean(score))


def metric_report(a: Image, b: Image, mask_to_support: bool = False) -> MetricReport:
    """MSE and SSIM of ``a`` against the reference ``b``."""
    return MetricReport(
        mse=mse(a, b, mask_to_support),
        ssim=ssim(a, b),
        n_pixels=a.n_pixels,
        masked=mask_to_support,
    )
