"""
Unit tests for confidence-threshold denoising and threshold selection.
"""

import csv

import numpy as np
import pytest

from quantum_image_denoising.denoiser import (
    confidence_map, denoise, estimate_value, extract_patch, fit_patch, median_filter,
    model_input_size, pixel_confidence, sample_patch_examples, select_threshold,
    write_threshold_table
)
from quantum_image_denoising.datasets import split
from quantum_image_denoising.exceptions import ShapeMismatchError
from quantum_image_denoising.metrics import mse, quality_report
from quantum_image_denoising.models.denoising import DenoiseConfig, ThresholdGrid
from quantum_image_denoising.models.image import Image, ImageClass
from quantum_image_denoising.models.network import CnnModel, TrainConfig
from quantum_image_denoising.models.reports import mean_report
from quantum_image_denoising.neuralnet import train
from quantum_image_denoising.noise_channels import quantum_corrupt, salt_pepper


@pytest.fixture
def patch_model():
    """Seeded classifier for 3x3 patches (input side 4)."""
    return CnnModel.initialize(4, seed=21)


@pytest.fixture
def bright_image(gradient_image):
    """Ramp without any black pixel."""
    return Image.from_array(np.maximum(gradient_image.pixels, 1))


class TestPatches:
    """Test cases for patch extraction."""

    @pytest.mark.parametrize("k,n", [(3, 4), (5, 8), (7, 8), (9, 12)])
    def test_model_input_size(self, k, n):
        assert model_input_size(k) == n

    def test_interior_patch(self, gradient_image):
        patch = extract_patch(gradient_image, 5, 7, 3)
        assert np.array_equal(patch, gradient_image.pixels[6:9, 4:7])

    def test_corner_patch_replicates_edges(self, tiny_image):
        patch = extract_patch(tiny_image, 0, 0, 3)
        assert np.array_equal(patch, [[1, 1, 2], [1, 1, 2], [3, 3, 4]])

    def test_patch_larger_than_image(self, tiny_image):
        """Test that k up to twice the image side is accepted."""
        assert extract_patch(tiny_image, 1, 1, 3).shape == (3, 3)
        with pytest.raises(ValueError, match="exceeds twice the image side"):
            extract_patch(tiny_image, 0, 0, 5)

    def test_even_patch(self, gradient_image):
        with pytest.raises(ValueError, match="must be odd"):
            extract_patch(gradient_image, 0, 0, 4)

    def test_outside(self, gradient_image):
        with pytest.raises(ValueError, match="outside"):
            extract_patch(gradient_image, 16, 0, 3)

    def test_fit_patch(self):
        """Test widening 9 -> 12: one column before, two after."""
        patch = np.arange(81, dtype=float).reshape(9, 9)
        fitted = fit_patch(patch, 12)

        assert fitted.shape == (12, 12)
        assert np.array_equal(fitted[1:10, 1:10], patch)
        assert np.array_equal(fitted[0, 1:10], patch[0])
        assert np.array_equal(fitted[11, 1:10], patch[8])

    def test_fit_patch_too_large(self):
        with pytest.raises(ShapeMismatchError, match="exceeds model input"):
            fit_patch(np.zeros((5, 5)), 4)


class TestConfidence:
    """Test cases for per-pixel confidence."""

    def test_range_and_shape(self, patch_model, gradient_image):
        confidence = confidence_map(gradient_image, patch_model, 3)

        assert confidence.shape == (16, 16)
        assert np.all(confidence >= -1.0)
        assert np.all(confidence <= 1.0)

    def test_map_matches_single_pixel(self, patch_model, gradient_image):
        """Test that (x, y) is (column, row) in both paths."""
        confidence = confidence_map(gradient_image, patch_model, 3)
        patch = fit_patch(extract_patch(gradient_image, 3, 11, 3), 4)

        assert confidence[11, 3] == pytest.approx(pixel_confidence(patch_model, patch))

    def test_model_size_mismatch(self, small_model, gradient_image):
        with pytest.raises(ShapeMismatchError, match="needs a model with n = 4"):
            confidence_map(gradient_image, small_model, 3)

    def test_pixel_confidence_shape(self, patch_model):
        with pytest.raises(ShapeMismatchError, match="model expects"):
            pixel_confidence(patch_model, np.zeros((3, 3)))


class TestEstimators:
    """Test cases for value estimation."""

    def test_isolated_spike_is_removed(self):
        pixels = np.zeros((3, 3), dtype=np.uint8)
        pixels[1, 1] = 255
        image = Image.from_array(pixels)

        assert estimate_value(image, 1, 1) == 0
        assert median_filter(image)[1, 1] == 0

    def test_median_filter_matches_pointwise(self, gradient_image):
        filtered = median_filter(gradient_image)
        assert filtered[4, 9] == estimate_value(gradient_image, 9, 4)

    def test_constant_image(self):
        image = Image.from_array(np.full((5, 5), 77, dtype=np.uint8))
        assert np.all(median_filter(image) == 77)


class TestDenoise:
    """Test cases for denoising."""

    def test_lowest_threshold_is_median_filter(self, patch_model, gradient_image):
        """Test that T = -1 keeps every pixel."""
        out = denoise(gradient_image, patch_model, DenoiseConfig(patch_size=3, threshold=-1.0))
        assert np.array_equal(out.pixels, median_filter(gradient_image))

    def test_masking_is_monotone(self, patch_model, bright_image):
        """Test that raising T never keeps a pixel an earlier T blacked out."""
        previous = None
        for threshold in ThresholdGrid.default():
            cfg = DenoiseConfig(patch_size=3, threshold=threshold, estimator="identity")
            kept = denoise(bright_image, patch_model, cfg).pixels > 0
            if previous is not None:
                assert not np.any(kept & ~previous)
            previous = kept

    def test_identity_estimator_keeps_values(self, patch_model, bright_image):
        out = denoise(bright_image, patch_model, DenoiseConfig(patch_size=3, threshold=-1.0, estimator="identity"))
        assert out == bright_image

    def test_zero_model_blackens_above_zero(self, bright_image):
        """Test that a 50/50 classifier gives c = 0, so T > 0 blacks out everything."""
        out = denoise(bright_image, CnnModel(n=4), DenoiseConfig(patch_size=3, threshold=0.05))
        assert not out.pixels.any()

    def test_wrong_model(self, small_model, gradient_image):
        with pytest.raises(ShapeMismatchError):
            denoise(gradient_image, small_model, DenoiseConfig(patch_size=3))

    def test_default_patch_size_on_small_image(self, digit_like_images):
        """Test k = 9 on an 8x8 image with a 12x12 classifier."""
        model = CnnModel.initialize(12, seed=0)
        out = denoise(digit_like_images[0], model, DenoiseConfig())

        assert out.shape == (8, 8)


class TestSelectThreshold:
    """Test cases for threshold selection."""

    @pytest.fixture
    def pairs(self, gradient_image, bright_image):
        return [(quantum_corrupt(image, 0.1), image) for image in (gradient_image, bright_image)]

    def test_table_covers_grid(self, patch_model, pairs):
        grid = ThresholdGrid.default()
        best, table = select_threshold(patch_model, pairs, grid, DenoiseConfig(patch_size=3))

        assert [t for t, _ in table] == list(grid.values)
        assert best in grid.values
        assert min(v for _, v in table) == dict(table)[best]

    def test_grid_order_does_not_matter(self, patch_model, pairs):
        cfg = DenoiseConfig(patch_size=3)
        values = list(ThresholdGrid.default().values)
        shuffled = values[::2] + values[1::2]

        assert select_threshold(patch_model, pairs, values, cfg) == select_threshold(patch_model, pairs, shuffled, cfg)

    def test_ties_take_smallest_threshold(self, pairs):
        """Test that a constant classifier picks the first of the tied thresholds."""
        best, table = select_threshold(CnnModel(n=4), pairs, ThresholdGrid.default(), DenoiseConfig(patch_size=3))

        assert best == -1.0
        assert dict(table)[-1.0] == dict(table)[0.0]

    def test_single_value_grid(self, patch_model, pairs):
        best, table = select_threshold(patch_model, pairs, [0.3], DenoiseConfig(patch_size=3))

        assert best == 0.3
        assert len(table) == 1

    def test_table_matches_direct_evaluation(self, patch_model, pairs):
        """Test every table entry against denoising from scratch."""
        cfg = DenoiseConfig(patch_size=3)
        _, table = select_threshold(patch_model, pairs, [-0.5, 0.0, 0.5], cfg)

        for threshold, value in table:
            errors = [mse(denoise(noisy, patch_model, cfg.with_threshold(threshold)), original)
                      for noisy, original in pairs]
            assert value == pytest.approx(np.mean(errors))

    def test_empty_pairs(self, patch_model):
        with pytest.raises(ValueError, match="at least one"):
            select_threshold(patch_model, [], ThresholdGrid.default(), DenoiseConfig(patch_size=3))

    def test_write_table(self, tmp_path):
        path = tmp_path / "thresholds.csv"
        write_threshold_table([(-0.5, 12.25), (0.0, 3.5)], path)

        with open(path, newline="") as f:
            rows = list(csv.reader(f))
        assert rows == [["T", "mean_mse"], ["-0.5", "12.25"], ["0.0", "3.5"]]


class TestSamplePatchExamples:
    """Test cases for patch classifier training data."""

    def test_structure(self, gradient_image):
        pairs = [(quantum_corrupt(gradient_image, 0.1), gradient_image)]
        examples = sample_patch_examples(pairs, 9, per_image=5, seed=0)

        assert len(examples) == 10
        assert [e.label for e in examples[:2]] == [ImageClass.CLASSICAL, ImageClass.QUANTUM]
        assert all(e.image.shape == (12, 12) for e in examples)
        assert examples[0].pair_id == examples[1].pair_id

    def test_deterministic(self, gradient_image):
        pairs = [(quantum_corrupt(gradient_image, 0.1), gradient_image)]
        a = sample_patch_examples(pairs, 3, per_image=4, seed=2)
        b = sample_patch_examples(pairs, 3, per_image=4, seed=2)

        assert a == b

    def test_shape_mismatch(self, gradient_image, tiny_image):
        with pytest.raises(ShapeMismatchError):
            sample_patch_examples([(tiny_image, gradient_image)], 3, per_image=1, seed=0)

    def test_positive_count(self, gradient_image):
        with pytest.raises(ValueError, match="must be positive"):
            sample_patch_examples([(gradient_image, gradient_image)], 3, per_image=0, seed=0)


def _stroke_images(count, seed, side=16):
    """Black images with two full-width bars, three rows thick and apart from each other."""
    rng = np.random.default_rng(seed)
    images = []
    for _ in range(count):
        pixels = np.zeros((side, side), dtype=np.uint8)
        upper = rng.integers(1, side // 2 - 4)
        lower = rng.integers(side // 2, side - 3)
        pixels[upper:upper + 3, :] = rng.integers(150, 256)
        pixels[lower:lower + 3, :] = rng.integers(150, 256)
        images.append(Image.from_array(pixels))
    return images


def _salt_pepper_pairs(images, seed):
    return [(salt_pepper(image, 0.05, seed=seed + i), image) for i, image in enumerate(images)]


class TestDenoisingEfficacy:
    """Test that the trained, tuned denoiser improves salt-and-pepper images."""

    def test_tuned_denoising_beats_noisy_input(self):
        k = 3
        train_pairs = _salt_pepper_pairs(_stroke_images(24, seed=1), seed=100)
        validation_pairs = _salt_pepper_pairs(_stroke_images(6, seed=2), seed=200)
        test_pairs = _salt_pepper_pairs(_stroke_images(8, seed=3), seed=300)

        patches = sample_patch_examples(train_pairs, k, per_image=16, seed=4)
        model, _ = train(CnnModel.initialize(model_input_size(k), seed=5), split(patches, seed=6),
                         TrainConfig(epochs=2, batch_size=32, lr=0.002, seed=7))
        threshold, table = select_threshold(model, validation_pairs, ThresholdGrid.default(),
                                            DenoiseConfig(patch_size=k))

        noisy_validation = np.mean([mse(noisy, original) for noisy, original in validation_pairs])
        assert dict(table)[threshold] < noisy_validation

        cfg = DenoiseConfig(patch_size=k, threshold=threshold)
        noisy = mean_report([quality_report(original, noisy) for noisy, original in test_pairs])
        denoised = mean_report([quality_report(original, denoise(noisy, model, cfg))
                                for noisy, original in test_pairs])

        assert denoised.mse < noisy.mse
        assert denoised.psnr_db > noisy.psnr_db
