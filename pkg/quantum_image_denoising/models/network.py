"""
Neural network data models: CNN parameters, Adam optimizer state, and the
training recipe.
"""

import base64
from dataclasses import dataclass, field
from typing import Any, Dict, Tuple

import numpy as np

from ..rng import PortableRandom

KERNEL_SIZE = 3
CONV1_FILTERS = 32
CONV2_FILTERS = 64
HIDDEN_UNITS = 256
NUM_CLASSES = 2

PARAMETER_NAMES: Tuple[str, ...] = (
    "conv1_weight", "conv1_bias",
    "conv2_weight", "conv2_bias",
    "fc1_weight", "fc1_bias",
    "fc2_weight", "fc2_bias",
)


def flatten_size(n: int) -> int:
    """Length of the flattened second pooling output: 64 * n^2 / 16."""
    return CONV2_FILTERS * n * n // 16


def parameter_shapes(n: int) -> Dict[str, Tuple[int, ...]]:
    """Shapes of every parameter of a model with n x n input."""
    return {
        "conv1_weight": (CONV1_FILTERS, 1, KERNEL_SIZE, KERNEL_SIZE),
        "conv1_bias": (CONV1_FILTERS,),
        "conv2_weight": (CONV2_FILTERS, CONV1_FILTERS, KERNEL_SIZE, KERNEL_SIZE),
        "conv2_bias": (CONV2_FILTERS,),
        "fc1_weight": (HIDDEN_UNITS, flatten_size(n)),
        "fc1_bias": (HIDDEN_UNITS,),
        "fc2_weight": (NUM_CLASSES, HIDDEN_UNITS),
        "fc2_bias": (NUM_CLASSES,),
    }


def encode_array(array: np.ndarray) -> Dict[str, Any]:
    """Serialize a float64 array bit-exactly (little-endian, base64)."""
    data = np.ascontiguousarray(array, dtype='<f8')
    return {
        "shape": list(data.shape),
        "data": base64.b64encode(data.tobytes()).decode('utf-8')
    }


def decode_array(data: Dict[str, Any]) -> np.ndarray:
    """Inverse of encode_array."""
    raw = np.frombuffer(base64.b64decode(data["data"]), dtype='<f8')
    return raw.astype(np.float64).reshape(tuple(data["shape"]))


@dataclass(eq=False)
class CnnModel:
    """
    Parameters of the two-convolution, two-dense-layer classifier.

    conv1: 32 filters 3x3x1, conv2: 64 filters 3x3x32, fc1: 256 x (64 n^2 / 16),
    fc2: 2 x 256, each with a bias vector. n must be divisible by 4 so both
    pooling stages halve evenly.
    """
    n: int
    params: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        """Validate the input size and every parameter shape."""
        if self.n < 4 or self.n % 4 != 0:
            raise ValueError("Input side n must be a positive multiple of 4")

        shapes = parameter_shapes(self.n)
        if not self.params:
            self.params = {name: np.zeros(shape) for name, shape in shapes.items()}
        if set(self.params) != set(PARAMETER_NAMES):
            raise ValueError("Model parameters must be exactly " + ", ".join(PARAMETER_NAMES))
        for name, shape in shapes.items():
            value = np.asarray(self.params[name], dtype=np.float64)
            if value.shape != shape:
                raise ValueError(f"Parameter {name} has shape {value.shape}, expected {shape}")
            self.params[name] = value

    @classmethod
    def initialize(cls, n: int, seed: int) -> 'CnnModel':
        """
        Seeded He-style uniform initialization with zero biases.

        Weights are drawn from U(-b, b) with b = sqrt(6 / fan_in).
        """
        rng = PortableRandom(seed)
        params = {}
        for name, shape in parameter_shapes(n).items():
            if name.endswith("_bias"):
                params[name] = np.zeros(shape)
                continue
            fan_in = int(np.prod(shape[1:]))
            bound = np.sqrt(6.0 / fan_in)
            size = int(np.prod(shape))
            params[name] = ((rng.uniform(size) * 2.0 - 1.0) * bound).reshape(shape)
        return cls(n=n, params=params)

    @property
    def flatten_size(self) -> int:
        return flatten_size(self.n)

    def copy(self) -> 'CnnModel':
        return CnnModel(n=self.n, params={k: v.copy() for k, v in self.params.items()})

    def parameter_count(self) -> int:
        return sum(v.size for v in self.params.values())

    def equals(self, other: 'CnnModel') -> bool:
        """Bitwise equality of size and all parameters."""
        return self.n == other.n and all(
            np.array_equal(self.params[name], other.params[name]) for name in PARAMETER_NAMES
        )

    def to_dict(self) -> Dict[str, Any]:
        """Convert model to dictionary for serialization."""
        return {
            "n": self.n,
            "params": {name: encode_array(self.params[name]) for name in PARAMETER_NAMES}
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'CnnModel':
        """Create model from dictionary."""
        return cls(
            n=data["n"],
            params={name: decode_array(value) for name, value in data["params"].items()}
        )


@dataclass
class TrainConfig:
    """
    Training recipe: Adam with lr 0.001, batches of 32, 10 epochs.

    The Adam moment decay rates and epsilon are the optimizer's usual
    defaults.
    """
    epochs: int = 10
    batch_size: int = 32
    lr: float = 0.001
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        """Validate the recipe."""
        if self.epochs < 1:
            raise ValueError("Epochs must be positive")
        if self.batch_size < 1:
            raise ValueError("Batch size must be positive")
        if self.lr <= 0:
            raise ValueError("Learning rate must be positive")
        if self.seed < 0:
            raise ValueError("Seed must be a non-negative integer")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("Adam betas must be in [0, 1)")
        if self.epsilon <= 0:
            raise ValueError("Adam epsilon must be positive")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "lr": self.lr,
            "seed": self.seed,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "epsilon": self.epsilon
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'TrainConfig':
        return cls(**data)


@dataclass(eq=False)
class AdamState:
    """First/second moment buffers and step counter for Adam."""
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    t: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        """Validate hyperparameters and buffer pairing."""
        if self.t < 0:
            raise ValueError("Step counter must be non-negative")
        if self.lr <= 0:
            raise ValueError("Learning rate must be positive")
        if set(self.m) != set(self.v):
            raise ValueError("First and second moment buffers must cover the same parameters")
        for name in self.m:
            if self.m[name].shape != self.v[name].shape:
                raise ValueError(f"Moment buffers for {name} differ in shape")

    @classmethod
    def for_params(cls, params: Dict[str, np.ndarray], cfg: TrainConfig = None) -> 'AdamState':
        """Zero moments matching params, hyperparameters from cfg."""
        cfg = cfg or TrainConfig()
        return cls(
            lr=cfg.lr,
            beta1=cfg.beta1,
            beta2=cfg.beta2,
            epsilon=cfg.epsilon,
            m={k: np.zeros_like(p) for k, p in params.items()},
            v={k: np.zeros_like(p) for k, p in params.items()}
        )

    def to_dict(self) -> Dict[str, Any]:
        names = sorted(self.m)
        return {
            "lr": self.lr,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "epsilon": self.epsilon,
            "t": self.t,
            "m": {k: encode_array(self.m[k]) for k in names},
            "v": {k: encode_array(self.v[k]) for k in names}
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'AdamState':
        return cls(
            lr=data["lr"],
            beta1=data["beta1"],
            beta2=data["beta2"],
            epsilon=data["epsilon"],
            t=data["t"],
            m={k: decode_array(v) for k, v in data["m"].items()},
            v={k: decode_array(v) for k, v in data["v"].items()}
        )
