"""
Quantum and classical noise models.

The depolarizing channel acts on one qubit of a density matrix as

    E(rho) = (1 - p) rho + (p / 3) (X rho X + Y rho Y + Z rho Z)

with the Pauli matrices embedded on that qubit and identity elsewhere.
Qubit 0 is the most significant bit of the amplitude index. The channel is
tracked exactly on the density matrix, so it needs no random numbers;
Gaussian and salt-and-pepper noise draw from the portable generator and are
reproducible from their seed.
"""

import logging

import numpy as np

from .models.image import Image
from .models.noise_spec import NoiseKind, NoiseSpec
from .models.quantum_state import DensityMatrix
from .quantum_image import decode, encode
from .rng import PortableRandom

logger = logging.getLogger(__name__)

PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
PAULIS = (PAULI_X, PAULI_Y, PAULI_Z)

DEFAULT_DEPOLARIZING_P = 0.1


def _apply_on_axis(tensor: np.ndarray, matrix: np.ndarray, axis: int) -> np.ndarray:
    """Contract a 2x2 matrix into one binary axis of a (2,)*2q tensor."""
    return np.moveaxis(np.tensordot(matrix, tensor, axes=([1], [axis])), 0, axis)


def conjugate_qubit(rho: DensityMatrix, pauli: np.ndarray, k: int) -> DensityMatrix:
    """P_k rho P_k^dagger with P acting on qubit k."""
    q = rho.qubits
    tensor = rho.entries.reshape((2,) * (2 * q))
    tensor = _apply_on_axis(tensor, pauli, k)
    # right multiplication by P^dagger acts on the column index with conj(P)
    tensor = _apply_on_axis(tensor, pauli.conj(), q + k)
    return DensityMatrix(tensor.reshape(rho.dimension, rho.dimension))


def _check_probability(p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise ValueError("Depolarizing probability must be between 0.0 and 1.0")


def depolarize_qubit(rho: DensityMatrix, k: int, p: float) -> DensityMatrix:
    """
    Apply the single-qubit depolarizing channel to qubit k.

    Args:
        rho: Input density matrix
        k: Qubit index, 0 <= k < rho.qubits
        p: Depolarizing probability in [0, 1]

    Returns:
        DensityMatrix: (1 - p) rho + (p/3)(X rho X + Y rho Y + Z rho Z)

    Raises:
        ValueError: If k or p is out of range
    """
    _check_probability(p)
    if not 0 <= k < rho.qubits:
        raise ValueError(f"Qubit index {k} out of range for {rho.qubits} qubits")

    if p == 0.0:
        return DensityMatrix(rho.entries.copy())

    flipped = sum(conjugate_qubit(rho, pauli, k).entries for pauli in PAULIS)
    return DensityMatrix((1.0 - p) * rho.entries + (p / 3.0) * flipped)


def depolarize_all(rho: DensityMatrix, p: float = DEFAULT_DEPOLARIZING_P) -> DensityMatrix:
    """Depolarize every qubit, ascending from qubit 0."""
    _check_probability(p)
    out = DensityMatrix(rho.entries.copy())
    for k in range(rho.qubits):
        out = depolarize_qubit(out, k, p)
    return out


def gaussian_noise(image: Image, mean: float, sigma: float, seed: int) -> Image:
    """
    Add independent N(mean, sigma) noise to every pixel, then round and clamp.

    Raises:
        ValueError: If sigma is negative
    """
    if sigma < 0:
        raise ValueError("Gaussian sigma must be non-negative")
    rng = PortableRandom(seed)
    noise = rng.normal(image.n_pixels, mean=mean, sigma=sigma).reshape(image.shape)
    noisy = np.floor(image.pixels.astype(np.float64) + noise + 0.5)
    saturated = int(np.sum((noisy < 0) | (noisy > 255)))
    if saturated:
        logger.debug("Gaussian noise saturated %d pixels", saturated)
    return Image.from_array(np.clip(noisy, 0, 255).astype(np.uint8))


def salt_pepper(image: Image, density: float, seed: int) -> Image:
    """
    Set each pixel, with probability density, to 0 or 255 (equally likely).

    Raises:
        ValueError: If density is outside [0, 1]
    """
    if not 0.0 <= density <= 1.0:
        raise ValueError("Salt-and-pepper density must be between 0.0 and 1.0")
    rng = PortableRandom(seed)
    selected = rng.uniform(image.n_pixels) < density
    salt = rng.uniform(image.n_pixels) < 0.5
    out = image.flat().copy()
    out[selected & salt] = 255
    out[selected & ~salt] = 0
    return Image(width=image.width, height=image.height, pixels=out)


def quantum_corrupt(image: Image, p: float, seed: int = 0) -> Image:
    """
    Encode, depolarize every qubit, and decode.

    The channel is applied exactly to the density matrix, so seed does not
    influence the result; it is accepted so every corruption shares one
    calling convention.

    Raises:
        EncodingError: For all-zero images or images above the qubit ceiling
    """
    qimg = encode(image)
    qimg.state = depolarize_all(qimg.state, p)
    logger.debug("Depolarized %d-qubit image state, trace %.12f", qimg.qubits, qimg.state.trace().real)
    return decode(qimg)


def corrupt(image: Image, spec: NoiseSpec, seed: int) -> Image:
    """Apply the corruption described by spec."""
    if spec.kind is NoiseKind.DEPOLARIZING:
        return quantum_corrupt(image, spec.p, seed)
    if spec.kind is NoiseKind.GAUSSIAN:
        return gaussian_noise(image, spec.mean, spec.sigma, seed)
    return salt_pepper(image, spec.density, seed)
