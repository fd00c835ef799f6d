"""
Confidence-threshold denoising.

Every pixel is classified through the k x k patch around it: the patch
classifier returns (P_c, P_q) and the pixel's confidence is c = P_q - P_c.
Pixels with c >= T take the estimator's value (median of the 3x3
neighbourhood by default); pixels below T are set to 0, which is black.
The threshold is chosen on validation pairs by minimizing mean MSE against
the originals.

The classifier has input side n = 4 * ceil(k / 4); patches are widened from
k to n by edge replication, split as evenly as possible on both sides.
"""

import csv
import logging
import math
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Sequence, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .exceptions import ShapeMismatchError
from .metrics import mse
from .models.denoising import DenoiseConfig, ThresholdGrid
from .models.image import Image, ImageClass, LabeledExample
from .models.network import CnnModel
from .neuralnet import forward, predict_proba
from .rng import PortableRandom

logger = logging.getLogger(__name__)

ThresholdTable = List[Tuple[float, float]]


def model_input_size(k: int) -> int:
    """Smallest multiple of 4 that holds a k x k patch."""
    return 4 * math.ceil(k / 4)


def _check_patch_size(image: Image, k: int) -> None:
    if k < 1 or k % 2 == 0:
        raise ValueError("Patch size must be odd")
    if k > 2 * min(image.width, image.height):
        raise ValueError(f"Patch size {k} exceeds twice the image side")


def extract_patch(image: Image, x: int, y: int, k: int) -> np.ndarray:
    """
    k x k intensities centred on column x, row y, edge-replicated at borders.

    Raises:
        ValueError: If k is even, larger than twice the image, or (x, y) is outside
    """
    _check_patch_size(image, k)
    if not (0 <= x < image.width and 0 <= y < image.height):
        raise ValueError(f"Pixel ({x}, {y}) is outside the {image.width}x{image.height} image")
    padded = np.pad(image.pixels.astype(np.float64), k // 2, mode="edge")
    return padded[y:y + k, x:x + k].copy()


def fit_patch(patch: np.ndarray, n: int) -> np.ndarray:
    """Widen a square patch (or a stack of them) to n x n by edge replication."""
    k = patch.shape[-1]
    extra = n - k
    if extra < 0:
        raise ShapeMismatchError(f"Patch side {k} exceeds model input {n}")
    before, after = extra // 2, extra - extra // 2
    widths = [(0, 0)] * (patch.ndim - 2) + [(before, after), (before, after)]
    return np.pad(patch, widths, mode="edge")


def pixel_confidence(model: CnnModel, patch: np.ndarray) -> float:
    """
    c = P_q - P_c for one n x n intensity patch.

    Raises:
        ShapeMismatchError: If the patch side differs from model.n
    """
    if patch.shape != (model.n, model.n):
        raise ShapeMismatchError(f"Patch is {patch.shape}, model expects ({model.n}, {model.n})")
    p_c, p_q = forward(model, patch / 255.0)
    return p_q - p_c


def confidence_map(image: Image, model: CnnModel, k: int) -> np.ndarray:
    """
    Confidence of every pixel, (height, width), evaluated in batches.

    Raises:
        ShapeMismatchError: If model.n does not match the patch size
    """
    _check_patch_size(image, k)
    if model.n != model_input_size(k):
        raise ShapeMismatchError(
            f"Patch size {k} needs a model with n = {model_input_size(k)}, got {model.n}"
        )
    padded = np.pad(image.pixels.astype(np.float64), k // 2, mode="edge")
    patches = sliding_window_view(padded, (k, k)).reshape(-1, k, k)
    probs = predict_proba(model, fit_patch(patches, model.n) / 255.0)
    return (probs[:, 1] - probs[:, 0]).reshape(image.shape)


def median_filter(image: Image) -> np.ndarray:
    """3x3 median of every pixel with edge replication."""
    padded = np.pad(image.pixels, 1, mode="edge")
    return np.median(sliding_window_view(padded, (3, 3)), axis=(-2, -1))


def estimate_value(image: Image, x: int, y: int) -> int:
    """Median of the 3x3 edge-replicated neighbourhood of (x, y)."""
    if not (0 <= x < image.width and 0 <= y < image.height):
        raise ValueError(f"Pixel ({x}, {y}) is outside the {image.width}x{image.height} image")
    padded = np.pad(image.pixels, 1, mode="edge")
    return int(np.median(padded[y:y + 3, x:x + 3]))


ESTIMATORS: Dict[str, Callable[[Image], np.ndarray]] = {
    "median3": median_filter,
    "identity": lambda image: image.pixels.astype(np.float64),
}


def _restore(confidence: np.ndarray, estimate: np.ndarray, threshold: float) -> Image:
    out = np.where(confidence >= threshold, estimate, 0.0)
    return Image.from_array(np.clip(out, 0, 255).astype(np.uint8))


def denoise(image: Image, model: CnnModel, cfg: DenoiseConfig) -> Image:
    """
    Restore an image: estimated value where c >= T, black elsewhere.

    Raises:
        ShapeMismatchError: If the model does not fit cfg.patch_size
    """
    confidence = confidence_map(image, model, cfg.patch_size)
    return _restore(confidence, ESTIMATORS[cfg.estimator](image), cfg.threshold)


def select_threshold(model: CnnModel, pairs: Sequence[Tuple[Image, Image]],
                     grid: Union[ThresholdGrid, Iterable[float]],
                     cfg: DenoiseConfig) -> Tuple[float, ThresholdTable]:
    """
    Grid-search the threshold minimizing mean MSE over (noisy, original) pairs.

    The grid is sorted first, so the result does not depend on its order;
    ties go to the smallest threshold.

    Returns:
        (best threshold, [(threshold, mean MSE), ...] in ascending order)

    Raises:
        ValueError: If pairs or grid is empty
    """
    if len(pairs) == 0:
        raise ValueError("Threshold selection needs at least one (noisy, original) pair")
    grid = ThresholdGrid.from_values(grid)

    # confidence and estimates do not depend on T
    prepared = [
        (confidence_map(noisy, model, cfg.patch_size), ESTIMATORS[cfg.estimator](noisy), original)
        for noisy, original in pairs
    ]

    table: ThresholdTable = []
    for threshold in grid:
        errors = [mse(_restore(c, est, threshold), original) for c, est, original in prepared]
        table.append((threshold, float(np.mean(errors))))

    best, best_mse = table[0]
    for threshold, value in table[1:]:
        if value < best_mse:
            best, best_mse = threshold, value
    logger.info("Selected threshold %.2f (mean MSE %.3f) from %d candidates", best, best_mse, len(table))
    return best, table


def write_threshold_table(table: ThresholdTable, path: Union[str, Path]) -> None:
    """CSV with columns T, mean_mse."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["T", "mean_mse"])
        for threshold, value in table:
            writer.writerow([repr(threshold), repr(value)])


def sample_patch_examples(pairs: Sequence[Tuple[Image, Image]], k: int, per_image: int,
                          seed: int) -> List[LabeledExample]:
    """
    Training examples for the patch classifier.

    For each (noisy, original) pair, per_image pixel positions are drawn and
    the patch at each position becomes a label-0 example from the original
    and a label-1 example from the noisy image. Patches are widened to the
    classifier input size.
    """
    if per_image < 1:
        raise ValueError("Patches per image must be positive")
    n = model_input_size(k)
    rng = PortableRandom(seed)
    examples: List[LabeledExample] = []
    pair_id = 0
    for noisy, original in pairs:
        if noisy.shape != original.shape:
            raise ShapeMismatchError("Noisy and original images differ in size")
        xs = rng.integers(original.width, per_image)
        ys = rng.integers(original.height, per_image)
        for x, y in zip(xs, ys):
            for source, label in ((original, ImageClass.CLASSICAL), (noisy, ImageClass.QUANTUM)):
                patch = fit_patch(extract_patch(source, int(x), int(y), k), n)
                examples.append(LabeledExample(
                    image=Image.from_array(patch.astype(np.uint8)), label=label, pair_id=pair_id
                ))
            pair_id += 1
    return examples
