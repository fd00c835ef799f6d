"""
Unit tests for image quality metrics.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings

from quantum_image_denoising.exceptions import ShapeMismatchError
from quantum_image_denoising.metrics import (
    SSIM_C1, mse, psnr, psnr_from_mse, quality_report, ssim
)
from quantum_image_denoising.models.image import Image
from tests.strategies import image_strategy


def _constant(value, side=8):
    return Image.from_array(np.full((side, side), value, dtype=np.uint8))


class TestMse:
    """Test cases for MSE."""

    def test_black_vs_white(self):
        assert mse(_constant(0), _constant(255)) == 65025.0

    def test_symmetric(self, gradient_image):
        other = Image.from_array(gradient_image.pixels[::-1].copy())
        assert mse(gradient_image, other) == mse(other, gradient_image)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError, match="dimensions differ"):
            mse(_constant(0, 8), _constant(0, 9))

    @given(image_strategy())
    def test_identical_images(self, image):
        assert mse(image, image) == 0.0


class TestPsnr:
    """Test cases for PSNR."""

    def test_zero_db(self):
        assert psnr(_constant(0), _constant(255)) == pytest.approx(0.0)

    def test_twenty_db(self):
        assert psnr_from_mse(650.25) == pytest.approx(20.0)

    def test_identical_is_infinite(self, tiny_image):
        assert psnr(tiny_image, tiny_image) == math.inf

    def test_negative_mse(self):
        with pytest.raises(ValueError, match="non-negative"):
            psnr_from_mse(-1.0)


class TestSsim:
    """Test cases for SSIM."""

    def test_identical(self, gradient_image):
        assert ssim(gradient_image, gradient_image) == pytest.approx(1.0)

    def test_black_vs_white(self):
        """Test constant 0 vs 255: C1 / (255^2 + C1)."""
        expected = SSIM_C1 / (255.0 ** 2 + SSIM_C1)
        assert ssim(_constant(0), _constant(255)) == pytest.approx(expected)

    def test_negative_image_is_anticorrelated(self, gradient_image):
        negative = Image.from_array(255 - gradient_image.pixels)
        assert ssim(gradient_image, negative) < 0

    def test_symmetric(self, gradient_image):
        noisy = Image.from_array(np.clip(gradient_image.pixels.astype(int) + 9, 0, 255))
        assert ssim(gradient_image, noisy) == pytest.approx(ssim(noisy, gradient_image))

    def test_too_small(self, tiny_image):
        with pytest.raises(ValueError, match="at least 8x8"):
            ssim(tiny_image, tiny_image)

    @given(image_strategy(min_side=8, max_side=10))
    @settings(max_examples=25, deadline=None)
    def test_bounded(self, image):
        flipped = Image.from_array(image.pixels[::-1, ::-1].copy())
        assert -1.0 <= ssim(image, flipped) <= 1.0


class TestQualityReport:
    """Test cases for the combined report."""

    def test_report(self, gradient_image):
        noisy = Image.from_array(np.clip(gradient_image.pixels.astype(int) + 10, 0, 255))
        report = quality_report(gradient_image, noisy)

        assert report.mse == mse(gradient_image, noisy)
        assert report.psnr_db == pytest.approx(psnr(gradient_image, noisy))
        assert 0.0 < report.ssim < 1.0

    def test_perfect(self, gradient_image):
        report = quality_report(gradient_image, gradient_image)

        assert report.mse == 0.0
        assert report.psnr_db == math.inf
