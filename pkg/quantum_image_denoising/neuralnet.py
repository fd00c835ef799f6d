"""
From-scratch convolutional classifier: layers, reverse-mode gradients, Adam,
the training loop, and checkpoints.

Architecture for an n x n input (n divisible by 4):

    (1, n, n) -conv 3x3, 32-> relu -> maxpool 2 -> (32, n/2, n/2)
              -conv 3x3, 64-> relu -> maxpool 2 -> (64, n/4, n/4)
              -flatten-> 64 n^2 / 16 -fc-> 256 -> relu -fc-> 2 -> softmax

Arrays are float64 numpy arrays; batched tensors are (B, C, H, W). Class 0
is classical (clean), class 1 quantum (corrupted).
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .config.integrity import get_integrity_config
from .config.settings import get_settings
from .exceptions import CheckpointError, ShapeMismatchError
from .models.image import DatasetSplit, Image, LabeledExample
from .models.network import AdamState, CnnModel, TrainConfig
from .rng import PortableRandom

logger = logging.getLogger(__name__)

PROBABILITY_FLOOR = 1e-12
CHECKPOINT_FORMAT = "quantum-image-denoising/checkpoint/1"

Gradients = Dict[str, np.ndarray]


# ============================================================================
# Layers
# ============================================================================

def conv2d(input: np.ndarray, filters: np.ndarray, biases: np.ndarray,
           stride: int = 1, pad: int = 1) -> np.ndarray:
    """
    Zero-padded 2-D cross-correlation.

    Args:
        input: (C_in, H, W) or batched (B, C_in, H, W)
        filters: (C_out, C_in, kh, kw)
        biases: (C_out,)
        stride: Step between output positions
        pad: Zero padding on every side

    Returns:
        (C_out, H_out, W_out), batched when the input was

    Raises:
        ShapeMismatchError: If channel counts or bias length disagree
    """
    single = input.ndim == 3
    x = input[None] if single else input
    if x.ndim != 4 or filters.ndim != 4:
        raise ShapeMismatchError("conv2d expects (C, H, W) or (B, C, H, W) input and 4-D filters")
    if filters.shape[1] != x.shape[1]:
        raise ShapeMismatchError(
            f"Input has {x.shape[1]} channels, filters expect {filters.shape[1]}"
        )
    if biases.shape != (filters.shape[0],):
        raise ShapeMismatchError("Bias length must equal the number of filters")
    if stride < 1 or pad < 0:
        raise ValueError("Stride must be positive and padding non-negative")

    kh, kw = filters.shape[2:]
    padded = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    if padded.shape[2] < kh or padded.shape[3] < kw:
        raise ShapeMismatchError("Kernel larger than padded input")
    windows = sliding_window_view(padded, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]
    out = np.tensordot(windows, filters, axes=([1, 4, 5], [1, 2, 3]))  # (B, Ho, Wo, C_out)
    out = out.transpose(0, 3, 1, 2) + biases[None, :, None, None]
    return out[0] if single else out


def conv2d_backward(grad_output: np.ndarray, input: np.ndarray, filters: np.ndarray,
                    pad: int = 1) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Gradients of a stride-1 conv2d with respect to input, filters and biases.

    The input gradient is the full transposed cross-correlation: the output
    gradient correlated with the spatially flipped, channel-swapped kernel.

    Args:
        grad_output: (B, C_out, H_out, W_out)
        input: (B, C_in, H, W) as given to the forward pass
        filters: (C_out, C_in, kh, kw)

    Returns:
        (grad_input, grad_filters, grad_biases)
    """
    kh, kw = filters.shape[2:]
    padded = np.pad(input, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    windows = sliding_window_view(padded, (kh, kw), axis=(2, 3))
    grad_filters = np.tensordot(grad_output, windows, axes=([0, 2, 3], [0, 2, 3]))
    grad_biases = grad_output.sum(axis=(0, 2, 3))

    flipped = filters[:, :, ::-1, ::-1].transpose(1, 0, 2, 3)
    grad_input = conv2d(grad_output, flipped, np.zeros(filters.shape[1]), stride=1, pad=kh - 1 - pad)
    return grad_input, grad_filters, grad_biases


def maxpool2(input: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    2x2 max pooling with stride 2.

    Returns:
        (pooled, argmax) where argmax holds, per output cell, the row-major
        offset 0..3 of the winning element in its block (first maximum on ties)

    Raises:
        ShapeMismatchError: If a spatial extent is odd
    """
    single = input.ndim == 3
    x = input[None] if single else input
    b, c, h, w = x.shape
    if h % 2 or w % 2:
        raise ShapeMismatchError(f"Max pooling needs even extents, got {h}x{w}")

    blocks = x.reshape(b, c, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(b, c, h // 2, w // 2, 4)
    argmax = blocks.argmax(axis=-1)
    pooled = np.take_along_axis(blocks, argmax[..., None], axis=-1)[..., 0]
    return (pooled[0], argmax[0]) if single else (pooled, argmax)


def maxpool2_backward(grad_output: np.ndarray, argmax: np.ndarray,
                      input_shape: Tuple[int, ...]) -> np.ndarray:
    """Route each pooled gradient to the recorded argmax position."""
    b, c, h, w = input_shape
    blocks = np.zeros((b, c, h // 2, w // 2, 4))
    np.put_along_axis(blocks, argmax[..., None], grad_output[..., None], axis=-1)
    return blocks.reshape(b, c, h // 2, w // 2, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(b, c, h, w)


def relu(t: np.ndarray) -> np.ndarray:
    return np.maximum(t, 0.0)


def softmax2(v: np.ndarray) -> np.ndarray:
    """Softmax over the last axis (length 2), max-subtracted."""
    v = np.asarray(v, dtype=np.float64)
    shifted = v - v.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(probs: np.ndarray, label: int) -> float:
    """-log(probs[label]) with the probability floored at 1e-12."""
    if label not in (0, 1):
        raise ValueError("Label must be 0 or 1")
    return float(-np.log(max(float(probs[label]), PROBABILITY_FLOOR)))


# ============================================================================
# Forward / backward
# ============================================================================

@dataclass
class ForwardCache:
    """Activations kept for the backward pass."""
    x: np.ndarray
    z1: np.ndarray
    a1: np.ndarray
    p1: np.ndarray
    i1: np.ndarray
    z2: np.ndarray
    a2: np.ndarray
    p2: np.ndarray
    i2: np.ndarray
    flat: np.ndarray
    z3: np.ndarray
    a3: np.ndarray
    probs: np.ndarray


def _as_input(model: CnnModel, image: Union[Image, np.ndarray]) -> np.ndarray:
    """Network input in [0, 1]; Images are rescaled, arrays taken as already scaled."""
    x = image.to_unit_range() if isinstance(image, Image) else np.asarray(image, dtype=np.float64)
    if x.shape != (model.n, model.n):
        raise ShapeMismatchError(f"Input is {x.shape}, model expects ({model.n}, {model.n})")
    return x


def stack_inputs(model: CnnModel, examples: Sequence[LabeledExample]) -> Tuple[np.ndarray, np.ndarray]:
    """(B, n, n) inputs and (B,) labels for a list of examples."""
    x = np.stack([_as_input(model, e.image) for e in examples])
    y = np.array([int(e.label) for e in examples], dtype=np.int64)
    return x, y


def forward_batch(model: CnnModel, x: np.ndarray) -> ForwardCache:
    """Forward pass over a (B, n, n) batch."""
    p = model.params
    x4 = x[:, None, :, :]
    z1 = conv2d(x4, p["conv1_weight"], p["conv1_bias"])
    a1 = relu(z1)
    p1, i1 = maxpool2(a1)
    z2 = conv2d(p1, p["conv2_weight"], p["conv2_bias"])
    a2 = relu(z2)
    p2, i2 = maxpool2(a2)
    flat = p2.reshape(p2.shape[0], -1)
    z3 = flat @ p["fc1_weight"].T + p["fc1_bias"]
    a3 = relu(z3)
    logits = a3 @ p["fc2_weight"].T + p["fc2_bias"]
    return ForwardCache(x4, z1, a1, p1, i1, z2, a2, p2, i2, flat, z3, a3, softmax2(logits))


def forward(model: CnnModel, image: Union[Image, np.ndarray]) -> Tuple[float, float]:
    """
    Class probabilities (P_c, P_q) for one n x n input.

    Raises:
        ShapeMismatchError: If the input side differs from model.n
    """
    probs = forward_batch(model, _as_input(model, image)[None]).probs[0]
    return float(probs[0]), float(probs[1])


def predict_proba(model: CnnModel, x: np.ndarray) -> np.ndarray:
    """(B, 2) probabilities for a (B, n, n) batch, evaluated in chunks."""
    if x.ndim != 3 or x.shape[1:] != (model.n, model.n):
        raise ShapeMismatchError(f"Batch is {x.shape}, model expects (B, {model.n}, {model.n})")
    chunk = get_settings().runtime.inference_batch_size
    if len(x) == 0:
        return np.zeros((0, 2))
    return np.concatenate([forward_batch(model, x[i:i + chunk]).probs for i in range(0, len(x), chunk)])


def batch_loss(model: CnnModel, x: np.ndarray, labels: np.ndarray) -> float:
    """Mean cross-entropy over a batch."""
    probs = forward_batch(model, x).probs
    picked = np.maximum(probs[np.arange(len(labels)), labels], PROBABILITY_FLOOR)
    return float(-np.mean(np.log(picked)))


def _backward_from_cache(model: CnnModel, cache: ForwardCache, labels: np.ndarray) -> Gradients:
    p = model.params
    batch = len(labels)
    one_hot = np.zeros_like(cache.probs)
    one_hot[np.arange(batch), labels] = 1.0
    d_logits = (cache.probs - one_hot) / batch

    grads: Gradients = {
        "fc2_weight": d_logits.T @ cache.a3,
        "fc2_bias": d_logits.sum(axis=0),
    }
    d_z3 = (d_logits @ p["fc2_weight"]) * (cache.z3 > 0)
    grads["fc1_weight"] = d_z3.T @ cache.flat
    grads["fc1_bias"] = d_z3.sum(axis=0)

    d_p2 = (d_z3 @ p["fc1_weight"]).reshape(cache.p2.shape)
    d_z2 = maxpool2_backward(d_p2, cache.i2, cache.a2.shape) * (cache.z2 > 0)
    d_p1, grads["conv2_weight"], grads["conv2_bias"] = conv2d_backward(d_z2, cache.p1, p["conv2_weight"])

    d_z1 = maxpool2_backward(d_p1, cache.i1, cache.a1.shape) * (cache.z1 > 0)
    _, grads["conv1_weight"], grads["conv1_bias"] = conv2d_backward(d_z1, cache.x, p["conv1_weight"])
    return grads


def loss_and_gradients(model: CnnModel, x: np.ndarray, labels: np.ndarray) -> Tuple[float, Gradients]:
    """Mean cross-entropy of a (B, n, n) batch and its parameter gradients."""
    cache = forward_batch(model, x)
    picked = np.maximum(cache.probs[np.arange(len(labels)), labels], PROBABILITY_FLOOR)
    return float(-np.mean(np.log(picked))), _backward_from_cache(model, cache, labels)


def backward(model: CnnModel, image: Union[Image, np.ndarray], label: int) -> Gradients:
    """
    Gradients of cross_entropy(forward(model, image), label) for every parameter.

    Returns:
        Dict keyed by parameter name, each gradient shaped like its parameter
    """
    if label not in (0, 1):
        raise ValueError("Label must be 0 or 1")
    x = _as_input(model, image)[None]
    return loss_and_gradients(model, x, np.array([label]))[1]


def numerical_gradient(f: Callable[[], float], array: np.ndarray, step: float = 1e-4,
                       indices: Optional[Sequence[Tuple[int, ...]]] = None) -> np.ndarray:
    """
    Central finite differences of f with respect to entries of array.

    array is perturbed in place and restored. When indices is given only
    those entries are evaluated; the rest of the result stays zero.
    """
    grad = np.zeros_like(array)
    targets = indices if indices is not None else list(np.ndindex(array.shape))
    for idx in targets:
        original = array[idx]
        array[idx] = original + step
        plus = f()
        array[idx] = original - step
        minus = f()
        array[idx] = original
        grad[idx] = (plus - minus) / (2.0 * step)
    return grad


# ============================================================================
# Optimization
# ============================================================================

def adam_step(params: Dict[str, np.ndarray], grads: Gradients, state: AdamState) -> Dict[str, np.ndarray]:
    """
    One bias-corrected Adam update, applied to params in place.

    Missing moment buffers are created as zeros on first use.

    Raises:
        ShapeMismatchError: If a gradient or buffer does not match its parameter
    """
    state.t += 1
    correction1 = 1.0 - state.beta1 ** state.t
    correction2 = 1.0 - state.beta2 ** state.t
    for name, grad in grads.items():
        param = params[name]
        if grad.shape != param.shape:
            raise ShapeMismatchError(f"Gradient for {name} is {grad.shape}, parameter is {param.shape}")
        m = state.m.setdefault(name, np.zeros_like(param))
        v = state.v.setdefault(name, np.zeros_like(param))
        if m.shape != param.shape or v.shape != param.shape:
            raise ShapeMismatchError(f"Adam buffers for {name} do not match the parameter")
        m *= state.beta1
        m += (1.0 - state.beta1) * grad
        v *= state.beta2
        v += (1.0 - state.beta2) * grad * grad
        param -= state.lr * (m / correction1) / (np.sqrt(v / correction2) + state.epsilon)
    return params


def predict(model: CnnModel, examples: Sequence[LabeledExample]) -> List[int]:
    """Predicted labels; exact ties go to class 0."""
    if len(examples) == 0:
        return []
    x, _ = stack_inputs(model, examples)
    probs = predict_proba(model, x)
    return [int(q > c) for c, q in probs]


def accuracy(model: CnnModel, examples: Sequence[LabeledExample]) -> float:
    """
    Fraction of examples whose predicted label matches.

    Raises:
        ValueError: If examples is empty
    """
    if len(examples) == 0:
        raise ValueError("Cannot compute accuracy of an empty list")
    predictions = predict(model, examples)
    correct = sum(int(p == int(e.label)) for p, e in zip(predictions, examples))
    return correct / len(examples)


def train(model: CnnModel, split: DatasetSplit, cfg: TrainConfig,
          state: Optional[AdamState] = None) -> Tuple[CnnModel, List[float]]:
    """
    Mini-batch Adam training with per-epoch validation accuracy.

    Each epoch visits the training set in an order drawn from a generator
    seeded with cfg.seed; the last short batch is kept. The input model is
    not modified. When state is given it is used and advanced in place.

    Returns:
        (trained model, validation accuracy after each epoch)

    Raises:
        ValueError: If the training or validation subset is empty
        ShapeMismatchError: If an image is not n x n
    """
    if not split.train:
        raise ValueError("Training subset is empty")
    if not split.validation:
        raise ValueError("Validation subset is empty")

    model = model.copy()
    x, y = stack_inputs(model, split.train)
    if state is None:
        state = AdamState.for_params(model.params, cfg)
    rng = PortableRandom(cfg.seed)

    accuracies: List[float] = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(x))
        losses = []
        for start in range(0, len(order), cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            loss, grads = loss_and_gradients(model, x[batch], y[batch])
            adam_step(model.params, grads, state)
            losses.append(loss)
        accuracies.append(accuracy(model, split.validation))
        logger.info("Epoch %d/%d: mean loss %.4f, validation accuracy %.4f",
                    epoch + 1, cfg.epochs, float(np.mean(losses)), accuracies[-1])
    return model, accuracies


# ============================================================================
# Checkpoints
# ============================================================================

@dataclass
class Checkpoint:
    """A saved model with the recipe and optimizer state that produced it."""
    model: CnnModel
    train_config: TrainConfig
    optimizer: Optional[AdamState] = None
    metadata: Optional[Dict] = None


def _checkpoint_payload(document: Dict) -> bytes:
    body = {k: v for k, v in document.items() if k not in ("digest", "digest_algorithm")}
    return json.dumps(body, sort_keys=True).encode("utf-8")


def save_checkpoint(path: Union[str, Path], checkpoint: Checkpoint) -> None:
    """
    Write a checkpoint as a JSON document with a content digest.

    Parameters are stored as base64 little-endian float64, so a load returns
    bit-identical arrays.
    """
    config = get_integrity_config()
    document = {
        "format": CHECKPOINT_FORMAT,
        "model": checkpoint.model.to_dict(),
        "train_config": checkpoint.train_config.to_dict(),
        "optimizer": checkpoint.optimizer.to_dict() if checkpoint.optimizer else None,
        "metadata": checkpoint.metadata or {},
    }
    document["digest_algorithm"] = config.algorithm_tag
    document["digest"] = config.digest(_checkpoint_payload(document))
    Path(path).write_text(json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    """
    Read and verify a checkpoint.

    Raises:
        CheckpointError: Unreadable file, unknown format tag, or digest mismatch
    """
    try:
        document = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise CheckpointError(f"{path}: cannot read checkpoint: {e}") from e

    if document.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"{path}: unsupported checkpoint format {document.get('format')!r}")
    if not get_integrity_config().verify(_checkpoint_payload(document), document.get("digest", "")):
        raise CheckpointError(f"{path}: checkpoint digest does not match its content")

    try:
        return Checkpoint(
            model=CnnModel.from_dict(document["model"]),
            train_config=TrainConfig.from_dict(document["train_config"]),
            optimizer=AdamState.from_dict(document["optimizer"]) if document.get("optimizer") else None,
            metadata=document.get("metadata") or {}
        )
    except (KeyError, ValueError) as e:
        raise CheckpointError(f"{path}: malformed checkpoint: {e}") from e

