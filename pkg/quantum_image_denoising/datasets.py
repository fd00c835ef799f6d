"""
Dataset ingestion, clean/corrupted pair construction, stratified splitting,
and manifest persistence.

IDX files are big-endian: a 4-byte magic (0x00000803 for images,
0x00000801 for labels), 32-bit counts and dimensions, then unsigned bytes.
PGM support covers binary P5 graymaps with maxval 255.
"""

import json
import logging
import math
import struct
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .config.integrity import derive_seed, get_integrity_config
from .exceptions import ImageFormatError, ManifestError, TruncatedDataError
from .models.image import (
    DEFAULT_RATIOS,
    DatasetSplit,
    Image,
    ImageClass,
    LabeledExample,
    Subset,
    validate_ratios,
)
from .models.noise_spec import NoiseSpec
from .noise_channels import corrupt
from .rng import PortableRandom

logger = logging.getLogger(__name__)

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801
MANIFEST_FORMAT = "quantum-image-denoising/manifest/1"

PathLike = Union[str, Path]


# ============================================================================
# IDX
# ============================================================================

def _read_idx_header(data: bytes, magic: int, n_dims: int, path: PathLike) -> Tuple[int, ...]:
    header_size = 4 * (1 + n_dims)
    if len(data) < header_size:
        raise TruncatedDataError(f"{path}: file shorter than the IDX header")
    found, *dims = struct.unpack(f">{1 + n_dims}I", data[:header_size])
    if found != magic:
        raise ImageFormatError(f"{path}: magic number {found:#010x}, expected {magic:#010x}")
    return tuple(dims)


def read_idx_images(path: PathLike, limit: Optional[int] = None) -> List[Image]:
    """
    Read an IDX image file (e.g. MNIST train-images-idx3-ubyte).

    Args:
        path: File to read
        limit: Read at most this many images

    Returns:
        List of images, dimensions taken from the header

    Raises:
        ImageFormatError: Wrong magic number
        TruncatedDataError: Payload shorter than the header announces
    """
    data = Path(path).read_bytes()
    count, rows, cols = _read_idx_header(data, IDX_IMAGE_MAGIC, 3, path)
    if limit is not None:
        count = min(count, limit)

    expected = 16 + count * rows * cols
    if len(data) < expected:
        raise TruncatedDataError(f"{path}: expected {expected} bytes, found {len(data)}")

    payload = np.frombuffer(data, dtype=np.uint8, count=count * rows * cols, offset=16)
    stack = payload.reshape(count, rows, cols)
    logger.info("Read %d %dx%d images from %s", count, cols, rows, path)
    return [Image.from_array(stack[i].copy()) for i in range(count)]


def read_idx_labels(path: PathLike, limit: Optional[int] = None) -> List[int]:
    """
    Read an IDX label file (e.g. MNIST train-labels-idx1-ubyte).

    Raises:
        ImageFormatError: Wrong magic number
        TruncatedDataError: Fewer labels than the header announces
    """
    data = Path(path).read_bytes()
    (count,) = _read_idx_header(data, IDX_LABEL_MAGIC, 1, path)
    if limit is not None:
        count = min(count, limit)
    if len(data) < 8 + count:
        raise TruncatedDataError(f"{path}: expected {8 + count} bytes, found {len(data)}")
    return [int(v) for v in data[8:8 + count]]


# ============================================================================
# PGM
# ============================================================================

def _pgm_tokens(data: bytes, count: int) -> Tuple[List[bytes], int]:
    """Split the first count whitespace-separated header tokens, skipping comments."""
    tokens: List[bytes] = []
    pos = 0
    while len(tokens) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ImageFormatError("Incomplete PGM header")
        tokens.append(data[start:pos])
    # exactly one whitespace byte separates maxval from the raster
    return tokens, pos + 1


def read_pgm(path: PathLike) -> Image:
    """
    Read a binary (P5) portable graymap with maxval 255.

    Raises:
        ImageFormatError: Not P5, bad dimensions, or maxval other than 255
        TruncatedDataError: Fewer pixel bytes than width * height
    """
    data = Path(path).read_bytes()
    if not data.startswith(b"P5"):
        raise ImageFormatError(f"{path}: only binary P5 graymaps are supported")
    tokens, offset = _pgm_tokens(data, 4)
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise ImageFormatError(f"{path}: non-numeric PGM header field")
    if maxval != 255:
        raise ImageFormatError(f"{path}: maxval {maxval} is not supported (expected 255)")
    if width < 1 or height < 1:
        raise ImageFormatError(f"{path}: invalid dimensions {width}x{height}")

    payload = data[offset:offset + width * height]
    if len(payload) < width * height:
        raise TruncatedDataError(
            f"{path}: expected {width * height} pixel bytes, found {len(payload)}"
        )
    return Image(width=width, height=height, pixels=np.frombuffer(payload, dtype=np.uint8).copy())


def write_pgm(image: Image, path: PathLike) -> None:
    """Write an image as a binary P5 graymap."""
    header = f"P5\n{image.width} {image.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + image.pixels.tobytes())


def read_pgm_directory(directory: PathLike) -> List[Tuple[str, Image]]:
    """Every *.pgm file of a directory as (file name, image), sorted by name."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"Not a directory: {directory}")
    return [(p.name, read_pgm(p)) for p in sorted(directory.glob("*.pgm"))]


# ============================================================================
# Pairs and splits
# ============================================================================

def build_pairs(clean: Sequence[Image], noise: NoiseSpec, seed: int) -> List[LabeledExample]:
    """
    Label every clean image 0 and its corrupted counterpart 1.

    Each pair shares pair_id = index of the clean image. The corruption of
    image i is seeded from (seed, noise.seed, i), so output is reproducible.

    Returns:
        2 * len(clean) examples ordered clean_0, noisy_0, clean_1, noisy_1, ...

    Raises:
        EncodingError: For images the depolarizing path cannot encode
    """
    examples: List[LabeledExample] = []
    for i, image in enumerate(clean):
        image_seed = derive_seed(seed, f"noise-{noise.seed}-image-{i}")
        noisy = corrupt(image, noise, image_seed)
        examples.append(LabeledExample(image=image, label=ImageClass.CLASSICAL, pair_id=i))
        examples.append(LabeledExample(image=noisy, label=ImageClass.QUANTUM, pair_id=i))
    logger.info("Built %d labeled examples with %s noise", len(examples), noise.kind.value)
    return examples


def split_sizes(n: int, ratios: Tuple[float, float, float] = DEFAULT_RATIOS) -> Tuple[int, int, int]:
    """Floor for train and validation, remainder to test."""
    validate_ratios(ratios)
    n_train = int(math.floor(ratios[0] * n + 1e-9))
    n_validation = int(math.floor(ratios[1] * n + 1e-9))
    n_validation = min(n_validation, n - n_train)
    return n_train, n_validation, n - n_train - n_validation


def split(examples: Sequence[LabeledExample],
          ratios: Tuple[float, float, float] = DEFAULT_RATIOS,
          seed: int = 0) -> DatasetSplit:
    """
    Stratified, seeded split into train / validation / test.

    Each class is shuffled independently, the shuffled classes are
    interleaved round-robin (class 0 first), and the interleaved sequence is
    cut at the split sizes. Every subset therefore holds the classes in
    proportion, up to one example.

    Raises:
        ValueError: Empty input or invalid ratios
    """
    if len(examples) == 0:
        raise ValueError("Cannot split an empty list of examples")
    validate_ratios(ratios)

    rng = PortableRandom(seed)
    by_class: Dict[int, List[int]] = {}
    for index, example in enumerate(examples):
        by_class.setdefault(int(example.label), []).append(index)

    shuffled = []
    for label in sorted(by_class):
        members = by_class[label]
        shuffled.append([members[j] for j in rng.permutation(len(members))])

    order: List[int] = []
    for j in range(max(len(members) for members in shuffled)):
        for members in shuffled:
            if j < len(members):
                order.append(members[j])

    n_train, n_validation, _ = split_sizes(len(order), ratios)
    picked = [examples[i] for i in order]
    return DatasetSplit(
        train=picked[:n_train],
        validation=picked[n_train:n_train + n_validation],
        test=picked[n_train + n_validation:],
        seed=seed,
        ratios=tuple(ratios)
    )


# ============================================================================
# Manifest
# ============================================================================

class ManifestEntry(BaseModel):
    """One example reference in a manifest."""
    model_config = ConfigDict(extra="forbid")

    path: str
    label: Literal[0, 1]
    subset: Subset
    pair_id: Optional[int] = None


class Manifest(BaseModel):
    """On-disk manifest document."""
    model_config = ConfigDict(extra="forbid")

    format: Literal["quantum-image-denoising/manifest/1"] = MANIFEST_FORMAT
    seed: int = Field(ge=0)
    ratios: Tuple[float, float, float]
    entries: List[ManifestEntry]
    config: Optional[Dict[str, Any]] = None
    digest: Optional[str] = None


def _entries_payload(entries: List[ManifestEntry]) -> bytes:
    return json.dumps([e.model_dump(mode="json") for e in entries], sort_keys=True).encode("utf-8")


def _relative_source(source: str, root: Path) -> str:
    candidate = Path(source)
    if candidate.is_absolute():
        try:
            return candidate.relative_to(root.resolve()).as_posix()
        except ValueError:
            return candidate.as_posix()
    return candidate.as_posix()


def write_manifest(split_: DatasetSplit, path: PathLike,
                   config: Optional[Dict[str, Any]] = None) -> None:
    """
    Persist a split as a JSON manifest referencing the example files.

    Paths are stored relative to the manifest's directory when possible;
    config, when given, is echoed into the document.

    Raises:
        ManifestError: If an example has no source file
    """
    path = Path(path)
    root = path.parent
    entries = []
    for subset, example in split_.items():
        if not example.source:
            raise ManifestError("Every example needs a source file to be written to a manifest")
        entries.append(ManifestEntry(
            path=_relative_source(example.source, root),
            label=int(example.label),
            subset=subset,
            pair_id=example.pair_id
        ))
    manifest = Manifest(
        seed=split_.seed,
        ratios=split_.ratios,
        entries=entries,
        config=config,
        digest=get_integrity_config().digest(_entries_payload(entries))
    )
    text = json.dumps(manifest.model_dump(mode="json"), indent=2, sort_keys=True)
    path.write_text(text + "\n", encoding="utf-8")


def load_manifest(path: PathLike) -> Manifest:
    """
    Parse and verify a manifest without loading its images.

    Raises:
        ManifestError: Unreadable JSON, schema mismatch, or digest mismatch
    """
    path = Path(path)
    try:
        manifest = Manifest.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as e:
        raise ManifestError(f"{path}: schema mismatch: {e.error_count()} error(s)") from e
    except OSError as e:
        raise ManifestError(f"{path}: cannot read manifest: {e}") from e
    if manifest.digest is not None and not get_integrity_config().verify(
            _entries_payload(manifest.entries), manifest.digest):
        raise ManifestError(f"{path}: entry digest does not match")
    return manifest


def read_manifest(path: PathLike) -> DatasetSplit:
    """
    Load a manifest and every image it references.

    Raises:
        ManifestError: Schema mismatch, digest mismatch, or missing files
    """
    path = Path(path)
    manifest = load_manifest(path)
    subsets: Dict[Subset, List[LabeledExample]] = {s: [] for s in Subset}
    for entry in manifest.entries:
        file = path.parent / entry.path
        if not file.is_file():
            raise ManifestError(f"{path}: referenced file not found: {entry.path}")
        subsets[entry.subset].append(LabeledExample(
            image=read_pgm(file),
            label=entry.label,
            pair_id=entry.pair_id,
            source=entry.path
        ))
    return DatasetSplit(
        train=subsets[Subset.TRAIN],
        validation=subsets[Subset.VALIDATION],
        test=subsets[Subset.TEST],
        seed=manifest.seed,
        ratios=manifest.ratios
    )


def pairs_for_subset(split_: DatasetSplit, subset: Subset) -> List[Tuple[LabeledExample, LabeledExample]]:
    """
    (noisy, original) pairs for the corrupted images of one subset.

    Stratified shuffling separates pair halves, so originals are looked up
    by pair_id across the whole split.
    """
    originals = {
        e.pair_id: e for _, e in split_.items()
        if e.label == ImageClass.CLASSICAL and e.pair_id is not None
    }
    return [
        (e, originals[e.pair_id]) for e in split_.subset(subset)
        if e.label == ImageClass.QUANTUM and e.pair_id in originals
    ]
