"""
Unit tests for the depolarizing channel and classical noise models.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quantum_image_denoising.models.image import Image
from quantum_image_denoising.models.noise_spec import NoiseKind, NoiseSpec
from quantum_image_denoising.models.quantum_state import DensityMatrix
from quantum_image_denoising.noise_channels import (
    PAULI_X, PAULI_Y, conjugate_qubit, corrupt, depolarize_all, depolarize_qubit, gaussian_noise,
    quantum_corrupt, salt_pepper
)
from quantum_image_denoising.quantum_image import encode, purity, validate


def _ket0():
    return DensityMatrix(np.diag([1.0, 0.0]))


def _random_state(q, seed):
    """Pure state with real positive amplitudes on q qubits."""
    rng = np.random.default_rng(seed)
    psi = rng.random(1 << q) + 0.1
    psi /= np.linalg.norm(psi)
    return DensityMatrix(np.outer(psi, psi))


def _random_complex_state(q, seed, rank=None):
    """Random complex density matrix A A^dagger / tr on q qubits."""
    rng = np.random.default_rng(seed)
    d = 1 << q
    rank = d if rank is None else rank
    a = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = a @ a.conj().T
    return DensityMatrix(rho / np.trace(rho).real)


class TestDepolarizeQubit:
    """Test cases for the single-qubit channel."""

    def test_three_quarters_gives_maximally_mixed(self):
        """Test that p = 3/4 maps |0><0| to I/2."""
        out = depolarize_qubit(_ket0(), 0, 0.75)
        assert out.allclose(DensityMatrix(np.eye(2) / 2))

    @pytest.mark.parametrize("p", [0.0, 0.1, 0.5, 1.0])
    def test_ground_population(self, p):
        """Test <0|E(|0><0|)|0> = 1 - 2p/3."""
        out = depolarize_qubit(_ket0(), 0, p)
        assert out.entries[0, 0].real == pytest.approx(1 - 2 * p / 3)

    def test_zero_probability_is_identity(self):
        rho = _random_state(2, 0)
        assert depolarize_qubit(rho, 1, 0.0).allclose(rho, atol=0.0)

    def test_bit_order(self):
        """Test that qubit 0 is the most significant index bit."""
        rho = DensityMatrix(np.diag([1.0, 0.0, 0.0, 0.0]))

        flipped_high = conjugate_qubit(rho, PAULI_X, 0)
        flipped_low = conjugate_qubit(rho, PAULI_X, 1)

        assert flipped_high.entries[2, 2] == pytest.approx(1.0)
        assert flipped_low.entries[1, 1] == pytest.approx(1.0)

    def test_invalid_qubit(self):
        with pytest.raises(ValueError, match="out of range"):
            depolarize_qubit(_ket0(), 1, 0.1)

    def test_invalid_probability(self):
        with pytest.raises(ValueError, match="between 0.0 and 1.0"):
            depolarize_qubit(_ket0(), 0, -0.1)

    @given(p=st.floats(min_value=0.0, max_value=1.0), k=st.integers(min_value=0, max_value=2))
    @settings(max_examples=30, deadline=None)
    def test_preserves_density_properties(self, p, k):
        """Test that the output stays Hermitian, unit-trace, and positive."""
        out = depolarize_qubit(_random_state(3, 1), k, p)
        assert validate(out).is_valid(tolerance=1e-9, eigen_tolerance=1e-9)


class TestChannelAlgebra:
    """Test cases for linearity, ordering and complex states."""

    def test_pauli_y_conjugation_on_complex_state(self):
        """Test P rho P^dagger against the explicit Kronecker embedding."""
        rho = _random_complex_state(2, 10)
        for k, full in ((0, np.kron(PAULI_Y, np.eye(2))), (1, np.kron(np.eye(2), PAULI_Y))):
            expected = full @ rho.entries @ full.conj().T
            assert np.allclose(conjugate_qubit(rho, PAULI_Y, k).entries, expected)

    @pytest.mark.parametrize("alpha", [0.0, 0.3, 0.8])
    def test_linearity(self, alpha):
        """Test E(a rho1 + (1 - a) rho2) = a E(rho1) + (1 - a) E(rho2)."""
        rho1 = _random_complex_state(2, 11)
        rho2 = _random_complex_state(2, 12, rank=1)
        mixed = DensityMatrix(alpha * rho1.entries + (1 - alpha) * rho2.entries)

        left = depolarize_all(mixed, 0.3)
        right = alpha * depolarize_all(rho1, 0.3).entries + (1 - alpha) * depolarize_all(rho2, 0.3).entries

        assert np.allclose(left.entries, right)

    def test_qubit_order_does_not_matter(self):
        """Test that depolarizing qubits in reverse order matches depolarize_all."""
        rho = _random_complex_state(3, 13)
        reversed_order = rho
        for k in reversed(range(3)):
            reversed_order = depolarize_qubit(reversed_order, k, 0.25)

        assert depolarize_all(rho, 0.25).allclose(reversed_order)

    def test_three_quarters_on_random_pure_state(self):
        """Test that p = 3/4 sends any pure state to the maximally mixed state."""
        rho = _random_complex_state(2, 14, rank=1)
        assert depolarize_all(rho, 0.75).allclose(DensityMatrix(np.eye(4) / 4))
        assert depolarize_qubit(_random_complex_state(1, 15, rank=1), 0, 0.75).allclose(
            DensityMatrix(np.eye(2) / 2))

    def test_complex_state_stays_valid(self):
        out = depolarize_all(_random_complex_state(3, 16), 0.4)
        assert validate(out).is_valid(tolerance=1e-9, eigen_tolerance=1e-9)


class TestDepolarizeAll:
    """Test cases for the all-qubit channel."""

    def test_input_is_not_modified(self):
        rho = _random_state(2, 2)
        before = rho.entries.copy()
        depolarize_all(rho, 0.3)

        assert np.array_equal(rho.entries, before)

    def test_full_depolarization_of_product_state(self):
        """Test that p = 3/4 on every qubit yields the maximally mixed state."""
        rho = DensityMatrix(np.diag([1.0, 0.0, 0.0, 0.0]))
        out = depolarize_all(rho, 0.75)

        assert out.allclose(DensityMatrix(np.eye(4) / 4))

    def test_reduces_purity(self, tiny_image):
        rho = encode(tiny_image).state
        assert purity(depolarize_all(rho, 0.1)) < purity(rho)

    def test_matches_sequential_application(self):
        rho = _random_state(3, 3)
        expected = rho
        for k in range(3):
            expected = depolarize_qubit(expected, k, 0.2)

        assert depolarize_all(rho, 0.2).allclose(expected)


class TestQuantumCorrupt:
    """Test cases for image-level depolarizing corruption."""

    def test_p_zero_is_identity(self, gradient_image):
        assert quantum_corrupt(gradient_image, 0.0) == gradient_image

    def test_changes_image(self, gradient_image):
        noisy = quantum_corrupt(gradient_image, 0.1)

        assert noisy.shape == gradient_image.shape
        assert noisy != gradient_image

    def test_lifts_dark_pixels(self, digit_like_images):
        """Test that depolarization moves weight into dark pixels."""
        noisy = quantum_corrupt(digit_like_images[0], 0.1)
        dark = digit_like_images[0].pixels == 0

        assert noisy.pixels[dark].sum() > 0

    def test_deterministic(self, gradient_image):
        assert quantum_corrupt(gradient_image, 0.1, seed=1) == quantum_corrupt(gradient_image, 0.1, seed=2)


class TestGaussianNoise:
    """Test cases for Gaussian noise."""

    def test_reproducible(self, gradient_image):
        a = gaussian_noise(gradient_image, 0.0, 20.0, seed=5)
        b = gaussian_noise(gradient_image, 0.0, 20.0, seed=5)
        c = gaussian_noise(gradient_image, 0.0, 20.0, seed=6)

        assert a == b
        assert a != c

    def test_zero_sigma_is_identity(self, gradient_image):
        assert gaussian_noise(gradient_image, 0.0, 0.0, seed=1) == gradient_image

    def test_zero_sigma_shifts_by_mean(self, gradient_image):
        """Test that sigma = 0, mean = 10 adds exactly 10 (clamped at 255)."""
        shifted = gaussian_noise(gradient_image, 10.0, 0.0, seed=2)
        expected = np.minimum(gradient_image.pixels.astype(int) + 10, 255)

        assert np.array_equal(shifted.pixels, expected)

    def test_sample_moments(self):
        """Test mean 128 +- 0.2 and std 20 +- 0.5 over 10^5 pixels."""
        gray = Image.from_array(np.full((250, 400), 128, dtype=np.uint8))
        values = gaussian_noise(gray, 0.0, 20.0, seed=17).pixels.astype(np.float64)

        assert abs(values.mean() - 128.0) < 0.2
        assert abs(values.std() - 20.0) < 0.5

    def test_clamps(self):
        white = Image.from_array(np.full((4, 4), 250, dtype=np.uint8))
        assert gaussian_noise(white, 100.0, 0.0, seed=0).pixels.min() == 255

    def test_negative_sigma(self, tiny_image):
        with pytest.raises(ValueError, match="sigma must be non-negative"):
            gaussian_noise(tiny_image, 0.0, -1.0, seed=0)


class TestSaltPepper:
    """Test cases for salt-and-pepper noise."""

    def test_density_one_saturates_every_pixel(self, gradient_image):
        noisy = salt_pepper(gradient_image, 1.0, seed=3)
        assert set(np.unique(noisy.pixels).tolist()) <= {0, 255}

    def test_density_zero_is_identity(self, gradient_image):
        assert salt_pepper(gradient_image, 0.0, seed=3) == gradient_image

    def test_fraction(self):
        gray = Image.from_array(np.full((64, 64), 128, dtype=np.uint8))
        changed = np.mean(salt_pepper(gray, 0.2, seed=8).pixels != 128)

        assert abs(changed - 0.2) < 0.03

    def test_invalid_density(self, tiny_image):
        with pytest.raises(ValueError, match="density must be between"):
            salt_pepper(tiny_image, 1.5, seed=0)


class TestCorrupt:
    """Test cases for the dispatcher."""

    def test_dispatch(self, gradient_image):
        gaussian = NoiseSpec(kind=NoiseKind.GAUSSIAN, sigma=10.0)
        salt = NoiseSpec(kind=NoiseKind.SALT_PEPPER, density=0.2)
        quantum = NoiseSpec(kind=NoiseKind.DEPOLARIZING, p=0.2)

        assert corrupt(gradient_image, gaussian, 4) == gaussian_noise(gradient_image, 0.0, 10.0, 4)
        assert corrupt(gradient_image, salt, 4) == salt_pepper(gradient_image, 0.2, 4)
        assert corrupt(gradient_image, quantum, 4) == quantum_corrupt(gradient_image, 0.2)
