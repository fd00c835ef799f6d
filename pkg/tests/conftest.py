"""
Pytest configuration and shared fixtures for the quantum image denoising tests.
"""

import numpy as np
import pytest

from quantum_image_denoising.config.settings import Settings, reset_settings
from quantum_image_denoising.config.integrity import IntegrityConfig, reset_integrity_config
from quantum_image_denoising.models.image import Image, ImageClass, LabeledExample
from quantum_image_denoising.models.network import CnnModel, TrainConfig
from quantum_image_denoising.models.noise_spec import NoiseKind, NoiseSpec


@pytest.fixture(autouse=True)
def reset_global_config():
    """Reset global configuration before each test."""
    reset_settings()
    reset_integrity_config()
    yield
    reset_settings()
    reset_integrity_config()


@pytest.fixture
def tiny_image():
    """2x2 image with pixels (1, 2, 3, 4)."""
    return Image(width=2, height=2, pixels=[1, 2, 3, 4])


@pytest.fixture
def gradient_image():
    """16x16 horizontal ramp."""
    row = np.linspace(0, 255, 16).round().astype(np.uint8)
    return Image.from_array(np.tile(row, (16, 1)))


@pytest.fixture
def digit_like_images():
    """
    Twelve 8x8 sparse images resembling strokes on a black background.
    """
    images = []
    for i in range(12):
        pixels = np.zeros((8, 8), dtype=np.uint8)
        pixels[1 + i % 5, 1:7] = 200 + i
        pixels[1:7, 2 + i % 4] = 255
        images.append(Image.from_array(pixels))
    return images


@pytest.fixture
def depolarizing_spec():
    """Depolarizing noise at the default probability."""
    return NoiseSpec(kind=NoiseKind.DEPOLARIZING, p=0.1)


@pytest.fixture
def labeled_examples(digit_like_images):
    """Clean images labelled 0 and inverted images labelled 1."""
    examples = []
    for i, image in enumerate(digit_like_images):
        examples.append(LabeledExample(image=image, label=ImageClass.CLASSICAL, pair_id=i))
        inverted = Image.from_array(255 - image.pixels)
        examples.append(LabeledExample(image=inverted, label=ImageClass.QUANTUM, pair_id=i))
    return examples


@pytest.fixture
def small_model():
    """Seeded classifier for 8x8 inputs."""
    return CnnModel.initialize(8, seed=7)


@pytest.fixture
def quick_train_config():
    """Two short epochs."""
    return TrainConfig(epochs=2, batch_size=4, lr=0.01, seed=3)


@pytest.fixture
def test_settings():
    """Create test settings configuration."""
    return Settings(
        environment="test",
        debug=True,
        log_level="DEBUG"
    )


@pytest.fixture
def signing_config():
    """Integrity config with a fixed signing key."""
    return IntegrityConfig(signing_key=bytes(range(32)))

