"""
Image quality metrics: MSE, PSNR and SSIM on 8-bit images.

SSIM uses 8x8 uniform windows at stride 1 with C1 = (0.01 * 255)^2 and
C2 = (0.03 * 255)^2, averaging the local index over all window positions.
Window statistics are population (1/64) moments.
"""

import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .exceptions import ShapeMismatchError
from .models.image import Image
from .models.reports import QualityReport

MAX_INTENSITY = 255.0
SSIM_WINDOW = 8
SSIM_C1 = (0.01 * MAX_INTENSITY) ** 2
SSIM_C2 = (0.03 * MAX_INTENSITY) ** 2


def _check_same_shape(a: Image, b: Image) -> None:
    if a.shape != b.shape:
        raise ShapeMismatchError(
            f"Image dimensions differ: {a.width}x{a.height} vs {b.width}x{b.height}"
        )


def mse(a: Image, b: Image) -> float:
    """Mean over pixels of the squared intensity difference."""
    _check_same_shape(a, b)
    diff = a.pixels.astype(np.float64) - b.pixels.astype(np.float64)
    return float(np.mean(diff * diff))


def psnr_from_mse(value: float, max_val: float = MAX_INTENSITY) -> float:
    """10 log10(max_val^2 / mse); infinite when mse is zero."""
    if value < 0:
        raise ValueError("MSE must be non-negative")
    if value == 0:
        return math.inf
    return 10.0 * math.log10(max_val * max_val / value)


def psnr(a: Image, b: Image, max_val: float = MAX_INTENSITY) -> float:
    """Peak signal-to-noise ratio in decibels."""
    return psnr_from_mse(mse(a, b), max_val)


def ssim(a: Image, b: Image) -> float:
    """
    Mean structural similarity over 8x8 windows.

    Raises:
        ShapeMismatchError: If the images differ in size
        ValueError: If either side is smaller than the window
    """
    _check_same_shape(a, b)
    if a.width < SSIM_WINDOW or a.height < SSIM_WINDOW:
        raise ValueError(f"SSIM needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels")

    wa = sliding_window_view(a.pixels.astype(np.float64), (SSIM_WINDOW, SSIM_WINDOW))
    wb = sliding_window_view(b.pixels.astype(np.float64), (SSIM_WINDOW, SSIM_WINDOW))
    mu_a = wa.mean(axis=(-2, -1))
    mu_b = wb.mean(axis=(-2, -1))
    da = wa - mu_a[..., None, None]
    db = wb - mu_b[..., None, None]
    var_a = (da * da).mean(axis=(-2, -1))
    var_b = (db * db).mean(axis=(-2, -1))
    cov = (da * db).mean(axis=(-2, -1))

    numerator = (2.0 * mu_a * mu_b + SSIM_C1) * (2.0 * cov + SSIM_C2)
    denominator = (mu_a * mu_a + mu_b * mu_b + SSIM_C1) * (var_a + var_b + SSIM_C2)
    return float(np.mean(numerator / denominator))


def quality_report(reference: Image, candidate: Image) -> QualityReport:
    """MSE, PSNR and SSIM of candidate against reference."""
    error = mse(reference, candidate)
    return QualityReport(
        mse=error,
        psnr_db=psnr_from_mse(error),
        ssim=ssim(reference, candidate)
    )
