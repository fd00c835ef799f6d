"""
Denoiser configuration data models.
"""

from dataclasses import dataclass
from typing import Any, Dict, Iterable, Tuple

ESTIMATOR_NAMES: Tuple[str, ...] = ("median3", "identity")


@dataclass
class DenoiseConfig:
    """
    Patch size, confidence threshold, and value estimator for the denoiser.

    Pixels whose confidence c = P_q - P_c reaches threshold receive the
    estimator's value; the rest are set to black.
    """
    patch_size: int = 9
    threshold: float = 0.0
    estimator: str = "median3"

    def __post_init__(self):
        """Validate the configuration."""
        if self.patch_size < 3 or self.patch_size % 2 == 0:
            raise ValueError("Patch size must be odd and at least 3")
        if not -1.0 <= self.threshold <= 1.0:
            raise ValueError("Threshold must be between -1.0 and 1.0")
        if self.estimator not in ESTIMATOR_NAMES:
            raise ValueError(f"Unknown estimator: {self.estimator}")

    def with_threshold(self, threshold: float) -> 'DenoiseConfig':
        return DenoiseConfig(self.patch_size, threshold, self.estimator)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "patch_size": self.patch_size,
            "threshold": self.threshold,
            "estimator": self.estimator
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'DenoiseConfig':
        return cls(**data)


@dataclass(frozen=True)
class ThresholdGrid:
    """Strictly ascending candidate thresholds in [-1, 1]."""
    values: Tuple[float, ...]

    def __post_init__(self):
        """Validate the grid."""
        if len(self.values) == 0:
            raise ValueError("Threshold grid must not be empty")
        if any(not -1.0 <= v <= 1.0 for v in self.values):
            raise ValueError("Thresholds must be between -1.0 and 1.0")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError("Threshold grid must be strictly ascending")

    @classmethod
    def default(cls) -> 'ThresholdGrid':
        """41 values from -1.0 to 1.0 in steps of 0.05."""
        return cls(tuple(round(-1.0 + 0.05 * i, 10) for i in range(41)))

    @classmethod
    def from_values(cls, values: Iterable[float]) -> 'ThresholdGrid':
        """Build a grid from thresholds in any order (duplicates dropped)."""
        return cls(tuple(sorted(set(float(v) for v in values))))

    def __iter__(self):
        return iter(self.values)

    def __len__(self) -> int:
        return len(self.values)
