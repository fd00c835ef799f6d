"""
Quantum state data models: amplitude vectors, density matrices, and
images encoded as density matrices.
"""

from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np

from ..config.settings import get_settings


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(eq=False)
class StateVector:
    """
    Normalized amplitude vector of a q-qubit pure state.

    norm_scale is the Euclidean norm of the intensity vector the state was
    built from; multiplying amplitudes by it recovers the intensities.
    """
    amplitudes: np.ndarray
    norm_scale: float = 1.0

    def __post_init__(self):
        """Validate length and normalization."""
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128).reshape(-1)
        if not is_power_of_two(self.amplitudes.size):
            raise ValueError("State vector length must be a power of two")
        if self.norm_scale <= 0:
            raise ValueError("Norm scale must be positive")
        norm_sq = float(np.sum(np.abs(self.amplitudes) ** 2))
        if abs(norm_sq - 1.0) > get_settings().simulation.state_tolerance:
            raise ValueError(f"State vector is not normalized (sum |a|^2 = {norm_sq})")

    @property
    def qubits(self) -> int:
        return self.amplitudes.size.bit_length() - 1


@dataclass(eq=False)
class DensityMatrix:
    """
    Dense 2^q x 2^q complex matrix describing a (possibly mixed) state.

    Only the shape is enforced here; physical validity (Hermitian, unit
    trace, positive semidefinite) is checked by quantum_image.validate.
    """
    entries: np.ndarray

    def __post_init__(self):
        """Validate the matrix shape."""
        self.entries = np.asarray(self.entries, dtype=np.complex128)
        if self.entries.ndim != 2 or self.entries.shape[0] != self.entries.shape[1]:
            raise ValueError("Density matrix must be square")
        if not is_power_of_two(self.entries.shape[0]):
            raise ValueError("Density matrix side must be a power of two")

    @property
    def qubits(self) -> int:
        return self.entries.shape[0].bit_length() - 1

    @property
    def dimension(self) -> int:
        return self.entries.shape[0]

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def diagonal(self) -> np.ndarray:
        """Real part of the diagonal (measurement probabilities)."""
        return np.real(np.diagonal(self.entries)).copy()

    def allclose(self, other: 'DensityMatrix', atol: float = 1e-10) -> bool:
        return self.entries.shape == other.entries.shape and np.allclose(
            self.entries, other.entries, rtol=0.0, atol=atol
        )


@dataclass(eq=False)
class QuantumImage:
    """
    An image held as a density matrix over its zero-padded pixel index.
    """
    state: DensityMatrix
    width: int
    height: int
    norm_scale: float
    pad_length: int

    def __post_init__(self):
        """Validate that the image fits the register."""
        if self.width < 1 or self.height < 1:
            raise ValueError("Image dimensions must be positive")
        if self.norm_scale <= 0:
            raise ValueError("Norm scale must be positive")
        capacity = self.state.dimension
        if self.width * self.height > capacity:
            raise ValueError("Image does not fit in the quantum register")
        if self.pad_length != capacity - self.width * self.height:
            raise ValueError("Pad length must equal 2^qubits - width * height")

    @property
    def qubits(self) -> int:
        return self.state.qubits


@dataclass
class DensityDiagnostics:
    """
    Physical-validity report for a density matrix.

    min_eigenvalue is None when the register is too large for the
    eigenvalue check.
    """
    qubits: int
    hermiticity_deviation: float
    trace_deviation: float
    min_eigenvalue: Optional[float] = None

    def is_valid(self, tolerance: Optional[float] = None, eigen_tolerance: float = 1e-8) -> bool:
        """True when every measured deviation is within tolerance (default: STATE_TOLERANCE)."""
        if tolerance is None:
            tolerance = get_settings().simulation.state_tolerance
        if self.hermiticity_deviation > tolerance or self.trace_deviation > tolerance:
            return False
        return self.min_eigenvalue is None or self.min_eigenvalue >= -eigen_tolerance

    def to_dict(self) -> Dict[str, Any]:
        return {
            "qubits": self.qubits,
            "hermiticity_deviation": self.hermiticity_deviation,
            "trace_deviation": self.trace_deviation,
            "min_eigenvalue": self.min_eigenvalue
        }
