"""
Image and dataset data models for the quantum image denoising lab.
"""

import base64
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Any, Dict, Iterator, List, Optional, Tuple

import numpy as np


class ImageClass(IntEnum):
    """Classifier labels: clean images are classical, corrupted ones quantum."""
    CLASSICAL = 0
    QUANTUM = 1


class Subset(str, Enum):
    """Dataset subsets, in split order."""
    TRAIN = "train"
    VALIDATION = "validation"
    TEST = "test"


@dataclass(eq=False)
class Image:
    """
    8-bit grayscale image.

    Pixels are held as a (height, width) uint8 array in row-major order;
    a flat sequence of width * height intensities is accepted as well.
    """
    width: int
    height: int
    pixels: np.ndarray

    def __post_init__(self):
        """Validate dimensions and intensities."""
        if self.width < 1 or self.height < 1:
            raise ValueError("Image dimensions must be positive")

        values = np.asarray(self.pixels)
        if values.size != self.width * self.height:
            raise ValueError(
                f"Pixel count {values.size} does not match {self.width}x{self.height}"
            )
        if values.dtype != np.uint8:
            if values.size and (values.min() < 0 or values.max() > 255):
                raise ValueError("Pixel intensities must be between 0 and 255")
            if not np.all(np.equal(np.mod(values, 1), 0)):
                raise ValueError("Pixel intensities must be integers")
        self.pixels = values.astype(np.uint8).reshape(self.height, self.width)

    @classmethod
    def from_array(cls, array: np.ndarray) -> 'Image':
        """Create an image from a 2-D intensity array."""
        array = np.asarray(array)
        if array.ndim != 2:
            raise ValueError("Image array must be two-dimensional")
        return cls(width=array.shape[1], height=array.shape[0], pixels=array)

    @property
    def shape(self) -> Tuple[int, int]:
        """(height, width), numpy order."""
        return (self.height, self.width)

    @property
    def n_pixels(self) -> int:
        return self.width * self.height

    def flat(self) -> np.ndarray:
        """Row-major intensities as a 1-D uint8 array."""
        return self.pixels.reshape(-1)

    def to_unit_range(self) -> np.ndarray:
        """Intensities rescaled to [0, 1] as float64 (network input)."""
        return self.pixels.astype(np.float64) / 255.0

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Image):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.pixels, other.pixels)

    def __hash__(self) -> int:
        return hash((self.width, self.height, self.pixels.tobytes()))

    def to_dict(self) -> Dict[str, Any]:
        """Convert image to dictionary for serialization."""
        return {
            "width": self.width,
            "height": self.height,
            "pixels": base64.b64encode(self.pixels.tobytes()).decode('utf-8')
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Image':
        """Create image from dictionary."""
        raw = np.frombuffer(base64.b64decode(data["pixels"]), dtype=np.uint8)
        return cls(width=data["width"], height=data["height"], pixels=raw.copy())


@dataclass(eq=False)
class LabeledExample:
    """
    Image with its classical/quantum label.

    pair_id links a corrupted image to the clean image it was made from;
    source is the file the image was read from or written to, if any.
    """
    image: Image
    label: ImageClass
    pair_id: Optional[int] = None
    source: Optional[str] = None

    def __post_init__(self):
        """Validate the label."""
        if self.image is None:
            raise ValueError("Image is required for a labeled example")
        try:
            self.label = ImageClass(int(self.label))
        except ValueError:
            raise ValueError("Label must be 0 (classical) or 1 (quantum)")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LabeledExample):
            return NotImplemented
        return (self.image == other.image and self.label == other.label
                and self.pair_id == other.pair_id and self.source == other.source)


DEFAULT_RATIOS: Tuple[float, float, float] = (0.8, 0.1, 0.1)


@dataclass
class DatasetSplit:
    """
    Train / validation / test partition of labeled examples.

    Records the seed and ratios that produced it so the split can be
    regenerated.
    """
    train: List[LabeledExample] = field(default_factory=list)
    validation: List[LabeledExample] = field(default_factory=list)
    test: List[LabeledExample] = field(default_factory=list)
    seed: int = 0
    ratios: Tuple[float, float, float] = DEFAULT_RATIOS

    def __post_init__(self):
        """Validate seed and ratios."""
        validate_ratios(self.ratios)
        self.ratios = tuple(float(r) for r in self.ratios)
        if self.seed < 0:
            raise ValueError("Seed must be a non-negative integer")

    def subset(self, name: Subset) -> List[LabeledExample]:
        """Examples of one subset."""
        return getattr(self, Subset(name).value)

    def items(self) -> Iterator[Tuple[Subset, LabeledExample]]:
        """(subset, example) pairs in split order."""
        for name in Subset:
            for example in self.subset(name):
                yield name, example

    def sizes(self) -> Tuple[int, int, int]:
        return (len(self.train), len(self.validation), len(self.test))

    def __len__(self) -> int:
        return sum(self.sizes())


def validate_ratios(ratios: Tuple[float, float, float]) -> None:
    """Raise ValueError unless ratios are three non-negative fractions summing to 1."""
    if len(ratios) != 3:
        raise ValueError("Ratios must have three entries (train, validation, test)")
    if any(r < 0 for r in ratios):
        raise ValueError("Ratios must be non-negative")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError("Ratios must sum to 1")
