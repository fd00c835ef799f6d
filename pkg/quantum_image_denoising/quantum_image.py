"""
Amplitude encoding of images into density matrices, and readout back to
images.

An image with N pixels occupies q = ceil(log2 N) qubits. Row-major
intensities are zero-padded to 2^q, divided by their Euclidean norm, and
the resulting pure state |psi> becomes the density matrix |psi><psi|.
Decoding reads the diagonal: pixel_i = round(sqrt(rho_ii) * norm).
"""

import logging
from pathlib import Path
from typing import Union

import numpy as np

from .config.settings import get_settings
from .exceptions import EncodingError
from .models.image import Image
from .models.quantum_state import (
    DensityDiagnostics,
    DensityMatrix,
    QuantumImage,
    StateVector,
    is_power_of_two,
)

logger = logging.getLogger(__name__)


def qubit_count(n_pixels: int) -> int:
    """
    Number of qubits needed to index n_pixels amplitudes.

    Args:
        n_pixels: Positive pixel count

    Returns:
        int: ceil(log2(n_pixels)), 0 for a single pixel
    """
    if n_pixels < 1:
        raise ValueError("Pixel count must be positive")
    return (n_pixels - 1).bit_length()


def encode_state(image: Image) -> StateVector:
    """
    Normalized, zero-padded amplitude vector of an image.

    Raises:
        EncodingError: If every pixel is zero or the image exceeds the
            simulation qubit ceiling
    """
    q = qubit_count(image.n_pixels)
    max_qubits = get_settings().simulation.max_qubits
    if q > max_qubits:
        raise EncodingError(
            f"{image.width}x{image.height} image needs {q} qubits; the dense "
            f"simulator is limited to {max_qubits}"
        )

    values = image.flat().astype(np.float64)
    norm = float(np.linalg.norm(values))
    if norm == 0.0:
        raise EncodingError("All-zero image has no normalizable amplitude state")

    amplitudes = np.zeros(1 << q, dtype=np.complex128)
    amplitudes[:values.size] = values / norm
    return StateVector(amplitudes=amplitudes, norm_scale=norm)


def density_matrix(state: StateVector) -> DensityMatrix:
    """Outer product |psi><psi|."""
    psi = state.amplitudes
    return DensityMatrix(np.outer(psi, psi.conj()))


def encode(image: Image) -> QuantumImage:
    """
    Encode an image as the density matrix of its amplitude state.

    Raises:
        EncodingError: For all-zero images or images above the qubit ceiling
    """
    state = encode_state(image)
    rho = density_matrix(state)
    return QuantumImage(
        state=rho,
        width=image.width,
        height=image.height,
        norm_scale=state.norm_scale,
        pad_length=rho.dimension - image.n_pixels
    )


def decode(qimg: QuantumImage) -> Image:
    """
    Read an image back from the diagonal of its density matrix.

    Negative diagonal entries (numerical noise) are clamped to zero before
    the square root; padded slots are dropped.
    """
    diagonal = qimg.state.diagonal()[:qimg.width * qimg.height]
    if np.any(diagonal < 0):
        logger.debug("Clamping %d negative diagonal entries", int(np.sum(diagonal < 0)))
    values = np.sqrt(np.maximum(diagonal, 0.0)) * qimg.norm_scale
    pixels = np.clip(np.floor(values + 0.5), 0, 255)
    return Image(width=qimg.width, height=qimg.height, pixels=pixels.astype(np.uint8))


def validate(rho: Union[DensityMatrix, np.ndarray]) -> DensityDiagnostics:
    """
    Measure how far a matrix is from a physical density matrix.

    Args:
        rho: Density matrix or square complex array with power-of-two side

    Returns:
        DensityDiagnostics with the largest |rho - rho^dagger| entry, the
        trace deviation |tr(rho) - 1| and, for registers up to the configured
        eigenvalue limit, the smallest eigenvalue of the Hermitian part

    Raises:
        ValueError: If the side is not a power of two
    """
    entries = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=np.complex128)
    if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
        raise ValueError("Density matrix must be square")
    if not is_power_of_two(entries.shape[0]):
        raise ValueError("Density matrix side must be a power of two")

    qubits = entries.shape[0].bit_length() - 1
    hermiticity = float(np.max(np.abs(entries - entries.conj().T)))
    trace_deviation = float(abs(np.trace(entries) - 1.0))

    min_eigenvalue = None
    if qubits <= get_settings().simulation.eigenvalue_check_max_qubits:
        hermitian_part = 0.5 * (entries + entries.conj().T)
        min_eigenvalue = float(np.min(np.linalg.eigvalsh(hermitian_part)))

    return DensityDiagnostics(
        qubits=qubits,
        hermiticity_deviation=hermiticity,
        trace_deviation=trace_deviation,
        min_eigenvalue=min_eigenvalue
    )


def purity(rho: DensityMatrix) -> float:
    """tr(rho^2); 1 for pure states, 1/2^q for the maximally mixed state."""
    # tr(A A) = sum_ij A_ij A_ji
    return float(np.real(np.sum(rho.entries * rho.entries.T)))


def dump_density_matrix(rho: DensityMatrix, path: Union[str, Path]) -> None:
    """Write a plain-text dump (real block, blank line, imaginary block)."""
    path = Path(path)
    with open(path, 'w') as f:
        f.write(f"# density matrix, {rho.qubits} qubits, {rho.dimension}x{rho.dimension}\n")
        f.write("# real part\n")
        np.savetxt(f, np.real(rho.entries), fmt="%.17g")
        f.write("\n# imaginary part\n")
        np.savetxt(f, np.imag(rho.entries), fmt="%.17g")
