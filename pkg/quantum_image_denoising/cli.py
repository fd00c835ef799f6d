"""
Command-line pipeline: generate, train, tune, denoise, evaluate, pipeline.

Every command reads one JSON run configuration; --seed and --out override
the corresponding fields. All randomness comes from the global seed through
stage-keyed sub-seeds, so any stage can be re-run alone and reproduce.

Exit status: 0 on success, 1 on a runtime failure, 2 on an invalid
configuration or usage.

Output directory layout:

    manifest.json                     dataset manifest
    dataset/<subset>/<pair>_<label>.pgm
    checkpoints/classifier.json       whole-image classifier
    checkpoints/patch_classifier.json patch classifier used by the denoiser
    accuracy.csv, patch_accuracy.csv  per-epoch validation accuracy
    train.json, tune.json             stage summaries
    thresholds.csv                    T, mean_mse
    denoised/<name>.pgm
    report.json, report.csv
"""

import argparse
import csv
import json
import logging
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .config.integrity import derive_seed
from .config.settings import get_settings
from .datasets import (
    build_pairs,
    pairs_for_subset,
    read_idx_images,
    read_manifest,
    read_pgm,
    read_pgm_directory,
    split,
    write_manifest,
    write_pgm,
)
from .denoiser import (
    denoise,
    model_input_size,
    sample_patch_examples,
    select_threshold,
    write_threshold_table,
)
from .exceptions import ConfigError
from .metrics import quality_report
from .models.denoising import DenoiseConfig, ThresholdGrid
from .models.image import DatasetSplit, Image, Subset, validate_ratios
from .models.network import AdamState, CnnModel, TrainConfig
from .models.noise_spec import NoiseSpec
from .models.reports import ImageEvaluation, RunReport, encode_psnr
from .neuralnet import Checkpoint, load_checkpoint, save_checkpoint, train

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


# ============================================================================
# Configuration
# ============================================================================

class PathsSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    source: Optional[str] = None  # IDX image file or directory of .pgm files
    limit: Optional[int] = Field(default=None, ge=1)
    output_dir: str = "runs/latest"
    checkpoint: Optional[str] = None


class NoiseSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["depolarizing", "gaussian", "salt_pepper"] = "depolarizing"
    p: float = Field(default=0.1, ge=0.0, le=1.0)
    mean: float = 0.0
    sigma: float = Field(default=20.0, ge=0.0)
    density: float = Field(default=0.1, ge=0.0, le=1.0)
    seed: int = Field(default=0, ge=0)


class TrainSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    epochs: int = Field(default=10, ge=1)
    batch_size: int = Field(default=32, ge=1)
    lr: float = Field(default=0.001, gt=0.0)
    beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    epsilon: float = Field(default=1e-8, gt=0.0)
    whole_image: bool = True


class DenoiseSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    patch_size: int = Field(default=9, ge=3)
    threshold: float = Field(default=0.0, ge=-1.0, le=1.0)
    estimator: Literal["median3", "identity"] = "median3"
    patches_per_image: int = Field(default=32, ge=1)


class RunConfig(BaseModel):
    """The JSON run configuration document."""
    model_config = ConfigDict(extra="forbid")

    seed: int = Field(default=0, ge=0)
    ratios: Tuple[float, float, float] = (0.8, 0.1, 0.1)
    paths: PathsSection = PathsSection()
    noise: NoiseSection = NoiseSection()
    train: TrainSection = TrainSection()
    denoise: DenoiseSection = DenoiseSection()
    threshold_grid: List[float] = Field(default_factory=lambda: list(ThresholdGrid.default().values))

    @field_validator("ratios")
    @classmethod
    def _check_ratios(cls, value):
        validate_ratios(value)
        return value

    def echo(self) -> Dict[str, Any]:
        """Config as embedded in every artifact."""
        return self.model_dump(mode="json")

    def stage_seed(self, stage: str) -> int:
        return derive_seed(self.seed, stage)

    def noise_spec(self) -> NoiseSpec:
        return _checked(lambda: NoiseSpec.from_dict(self.noise.model_dump()))

    def train_config(self, stage: str) -> TrainConfig:
        section = self.train.model_dump(exclude={"whole_image"})
        return _checked(lambda: TrainConfig(seed=self.stage_seed(stage), **section))

    def denoise_config(self, threshold: Optional[float] = None) -> DenoiseConfig:
        cfg = _checked(lambda: DenoiseConfig(
            patch_size=self.denoise.patch_size,
            threshold=self.denoise.threshold,
            estimator=self.denoise.estimator
        ))
        return cfg if threshold is None else cfg.with_threshold(threshold)

    def grid(self) -> ThresholdGrid:
        return _checked(lambda: ThresholdGrid.from_values(self.threshold_grid))


def _checked(build):
    """Turn value-type validation failures into configuration errors."""
    try:
        return build()
    except ValueError as e:
        raise ConfigError(str(e)) from e


def load_run_config(path: Optional[str] = None, seed: Optional[int] = None,
                    out: Optional[str] = None) -> RunConfig:
    """
    Read a run configuration; flags override file values, which override defaults.

    Raises:
        ConfigError: Unreadable file or schema violation
    """
    data: Dict[str, Any] = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"Cannot read config {path}: {e}") from e
    if seed is not None:
        data["seed"] = seed
    if out is not None:
        data.setdefault("paths", {})["output_dir"] = out
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(p) for p in first["loc"])
        raise ConfigError(f"Invalid config field {location}: {first['msg']}") from e


@dataclass
class RunLayout:
    """Artifact paths under the output directory."""
    root: Path

    @property
    def manifest(self) -> Path:
        return self.root / "manifest.json"

    @property
    def dataset(self) -> Path:
        return self.root / "dataset"

    @property
    def classifier(self) -> Path:
        return self.root / "checkpoints" / "classifier.json"

    @property
    def patch_classifier(self) -> Path:
        return self.root / "checkpoints" / "patch_classifier.json"

    @property
    def accuracy_csv(self) -> Path:
        return self.root / "accuracy.csv"

    @property
    def patch_accuracy_csv(self) -> Path:
        return self.root / "patch_accuracy.csv"

    @property
    def train_summary(self) -> Path:
        return self.root / "train.json"

    @property
    def thresholds_csv(self) -> Path:
        return self.root / "thresholds.csv"

    @property
    def tune_summary(self) -> Path:
        return self.root / "tune.json"

    @property
    def denoised(self) -> Path:
        return self.root / "denoised"

    @property
    def report_json(self) -> Path:
        return self.root / "report.json"

    @property
    def report_csv(self) -> Path:
        return self.root / "report.csv"


def layout(config: RunConfig) -> RunLayout:
    return RunLayout(Path(config.paths.output_dir))


def _write_json(path: Path, data: Dict[str, Any]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _read_json(path: Path) -> Dict[str, Any]:
    if not path.is_file():
        raise ConfigError(f"Missing artifact {path}; run the earlier stage first")
    return json.loads(path.read_text(encoding="utf-8"))


def _load_split(config: RunConfig) -> DatasetSplit:
    manifest = layout(config).manifest
    if not manifest.is_file():
        raise ConfigError(f"No manifest at {manifest}; run generate first")
    return read_manifest(manifest)


# ============================================================================
# Commands
# ============================================================================

def _load_sources(config: RunConfig) -> List[Image]:
    source = config.paths.source
    if source is None:
        raise ConfigError("paths.source is required to generate a dataset")
    path = Path(source)
    if path.is_dir():
        images = [image for _, image in read_pgm_directory(path)]
        if config.paths.limit is not None:
            images = images[:config.paths.limit]
    elif path.is_file():
        images = read_idx_images(path, limit=config.paths.limit)
    else:
        raise ConfigError(f"Source {source} does not exist")
    if not images:
        raise ConfigError(f"Source {source} holds no images")
    return images


def cmd_generate(config: RunConfig) -> Path:
    """
    Corrupt the source images, split, and write images plus a manifest.

    Returns:
        Path of the written manifest
    """
    out = layout(config)
    clean = _load_sources(config)
    examples = build_pairs(clean, config.noise_spec(), config.stage_seed("generate"))
    dataset = split(examples, config.ratios, config.stage_seed("split"))

    for subset, example in dataset.items():
        relative = Path("dataset") / subset.value / f"{example.pair_id:05d}_{int(example.label)}.pgm"
        (out.root / relative).parent.mkdir(parents=True, exist_ok=True)
        write_pgm(example.image, out.root / relative)
        example.source = relative.as_posix()

    write_manifest(dataset, out.manifest, config=config.echo())
    logger.info("Wrote %d examples (%d/%d/%d) to %s", len(dataset), *dataset.sizes(), out.manifest)
    return out.manifest


def _write_accuracy_csv(path: Path, accuracies: List[float]) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["epoch", "validation_accuracy"])
        for epoch, value in enumerate(accuracies, start=1):
            writer.writerow([epoch, repr(value)])


def _train_and_save(config: RunConfig, stage: str, dataset: DatasetSplit, n: int,
                    checkpoint: Path, accuracy_csv: Path) -> List[float]:
    cfg = config.train_config(f"{stage}-train")
    model = CnnModel.initialize(n, config.stage_seed(f"{stage}-init"))
    state = AdamState.for_params(model.params, cfg)
    trained, accuracies = train(model, dataset, cfg, state)

    checkpoint.parent.mkdir(parents=True, exist_ok=True)
    save_checkpoint(checkpoint, Checkpoint(
        model=trained,
        train_config=cfg,
        optimizer=state,
        metadata={"stage": stage, "seed": config.seed, "config": config.echo()}
    ))
    _write_accuracy_csv(accuracy_csv, accuracies)
    return accuracies


def _patch_checkpoint(config: RunConfig, checkpoint: Optional[str] = None) -> Path:
    if checkpoint is not None:
        return Path(checkpoint)
    if config.paths.checkpoint is not None:
        return Path(config.paths.checkpoint)
    return layout(config).patch_classifier


def cmd_train(config: RunConfig) -> Dict[str, List[float]]:
    """
    Train the whole-image classifier and the denoiser's patch classifier.

    Returns:
        Per-epoch validation accuracies keyed by classifier name
    """
    out = layout(config)
    dataset = _load_split(config)
    accuracies: Dict[str, List[float]] = {}

    if config.train.whole_image:
        first = dataset.train[0].image
        if first.width != first.height or first.width % 4 != 0:
            raise ConfigError(
                f"Whole-image training needs square images with side divisible by 4, "
                f"got {first.width}x{first.height}; set train.whole_image to false"
            )
        logger.info("Training whole-image classifier (n=%d)", first.width)
        accuracies["classifier"] = _train_and_save(
            config, "classifier", dataset, first.width, out.classifier, out.accuracy_csv
        )

    k = config.denoise.patch_size
    pairs = [(noisy.image, original.image) for noisy, original in pairs_for_subset(dataset, Subset.TRAIN)]
    if not pairs:
        raise ConfigError("Training subset holds no corrupted image with a known original")
    patches = sample_patch_examples(pairs, k, config.denoise.patches_per_image, config.stage_seed("patches"))
    patch_split = split(patches, config.ratios, config.stage_seed("patch-split"))
    logger.info("Training patch classifier on %d patches (k=%d, n=%d)", len(patches), k, model_input_size(k))
    accuracies["patch_classifier"] = _train_and_save(
        config, "patch_classifier", patch_split, model_input_size(k),
        _patch_checkpoint(config), out.patch_accuracy_csv
    )

    _write_json(out.train_summary, {"seed": config.seed, "config": config.echo(), "accuracies": accuracies})
    return accuracies


def cmd_tune(config: RunConfig, checkpoint: Optional[str] = None) -> float:
    """
    Choose the threshold on validation pairs; write thresholds.csv and tune.json.

    Returns:
        The selected threshold
    """
    out = layout(config)
    dataset = _load_split(config)
    model = load_checkpoint(_patch_checkpoint(config, checkpoint)).model
    pairs = [(noisy.image, original.image)
             for noisy, original in pairs_for_subset(dataset, Subset.VALIDATION)]
    if not pairs:
        raise ConfigError("Validation subset holds no corrupted image with a known original")

    best, table = select_threshold(model, pairs, config.grid(), config.denoise_config())
    write_threshold_table(table, out.thresholds_csv)
    _write_json(out.tune_summary, {
        "seed": config.seed,
        "config": config.echo(),
        "threshold": best,
        "table": [[t, value] for t, value in table]
    })
    return best


def _tuned_threshold(config: RunConfig) -> float:
    summary = layout(config).tune_summary
    if summary.is_file():
        return float(_read_json(summary)["threshold"])
    return config.denoise.threshold


def cmd_denoise(config: RunConfig, checkpoint: Optional[str] = None,
                inputs: Optional[Sequence[str]] = None,
                threshold: Optional[float] = None) -> List[Path]:
    """
    Denoise images into <out>/denoised/, mirroring input file names.

    Without explicit inputs the corrupted test images of the manifest are
    used; without an explicit threshold the tuned one (or the configured
    default) applies.
    """
    out = layout(config)
    model = load_checkpoint(_patch_checkpoint(config, checkpoint)).model
    cfg = config.denoise_config(_tuned_threshold(config) if threshold is None else threshold)

    if inputs is None:
        dataset = _load_split(config)
        files = [out.manifest.parent / noisy.source for noisy, _ in pairs_for_subset(dataset, Subset.TEST)]
    else:
        files = [Path(p) for p in inputs]
    for file in files:
        if not file.is_file():
            raise ConfigError(f"Input image {file} does not exist")

    out.denoised.mkdir(parents=True, exist_ok=True)
    written = []
    for file in files:
        target = out.denoised / file.name
        write_pgm(denoise(read_pgm(file), model, cfg), target)
        written.append(target)
    logger.info("Denoised %d images with T=%.2f", len(written), cfg.threshold)
    return written


def _psnr_cell(value: float) -> str:
    """Exact float text, or the literal inf for identical images."""
    encoded = encode_psnr(value)
    return encoded if isinstance(encoded, str) else repr(encoded)


def _write_report_csv(path: Path, report: RunReport) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["name", "noisy_mse", "noisy_psnr_db", "noisy_ssim",
                         "denoised_mse", "denoised_psnr_db", "denoised_ssim"])
        for row in report.rows:
            writer.writerow([
                row.name,
                repr(row.noisy.mse), _psnr_cell(row.noisy.psnr_db), repr(row.noisy.ssim),
                repr(row.denoised.mse), _psnr_cell(row.denoised.psnr_db), repr(row.denoised.ssim),
            ])


def cmd_evaluate(config: RunConfig, originals: Optional[Sequence[str]] = None,
                 noisy: Optional[Sequence[str]] = None,
                 denoised: Optional[Sequence[str]] = None,
                 timings: Optional[Dict[str, float]] = None) -> RunReport:
    """
    Score noisy and denoised images against their originals.

    The three lists are matched by position. Without them the manifest's
    test pairs and the matching files in <out>/denoised/ are used.

    Returns:
        The report also written to report.json and report.csv
    """
    out = layout(config)
    if originals is None or noisy is None or denoised is None:
        dataset = _load_split(config)
        pairs = pairs_for_subset(dataset, Subset.TEST)
        originals = [out.manifest.parent / o.source for _, o in pairs]
        noisy = [out.manifest.parent / n.source for n, _ in pairs]
        denoised = [out.denoised / Path(n.source).name for n, _ in pairs]
    if not (len(originals) == len(noisy) == len(denoised)) or not originals:
        raise ConfigError("Evaluation needs equally many (at least one) originals, noisy and denoised images")

    rows = []
    for original_path, noisy_path, denoised_path in zip(originals, noisy, denoised):
        for p in (original_path, noisy_path, denoised_path):
            if not Path(p).is_file():
                raise ConfigError(f"Image {p} does not exist")
        original = read_pgm(original_path)
        rows.append(ImageEvaluation(
            name=Path(noisy_path).name,
            noisy=quality_report(original, read_pgm(noisy_path)),
            denoised=quality_report(original, read_pgm(denoised_path))
        ))

    accuracies = _read_json(out.train_summary)["accuracies"] if out.train_summary.is_file() else {}
    threshold = _read_json(out.tune_summary)["threshold"] if out.tune_summary.is_file() else None
    report = RunReport(
        rows=rows,
        threshold=threshold,
        accuracies=accuracies,
        config=config.echo(),
        seed=config.seed,
        timings=timings or {}
    )
    _write_json(out.report_json, report.to_dict())
    _write_report_csv(out.report_csv, report)
    noisy_mean, denoised_mean = report.aggregate_noisy(), report.aggregate_denoised()
    logger.info("Mean PSNR noisy %.2f dB -> denoised %.2f dB", noisy_mean.psnr_db, denoised_mean.psnr_db)
    return report


def cmd_pipeline(config: RunConfig) -> RunReport:
    """generate -> train -> tune -> denoise -> evaluate under one seed."""
    timings: Dict[str, float] = {}

    def timed(stage, fn, *args):
        start = time.perf_counter()
        result = fn(*args)
        timings[stage] = time.perf_counter() - start
        return result

    timed("generate", cmd_generate, config)
    timed("train", cmd_train, config)
    timed("tune", cmd_tune, config)
    timed("denoise", cmd_denoise, config)
    return cmd_evaluate(config, timings=timings)


# ============================================================================
# Entry point
# ============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quantum-image-denoising",
        description="Quantum image noise simulation, classification and denoising"
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=int, help="global seed (overrides the config)")
    common.add_argument("--out", help="output directory (overrides the config)")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("generate", parents=[common], help="build and split the labeled dataset")
    sub.add_parser("train", parents=[common], help="train the classifiers")
    tune = sub.add_parser("tune", parents=[common], help="select the denoising threshold")
    tune.add_argument("--checkpoint", help="patch classifier checkpoint")
    den = sub.add_parser("denoise", parents=[common], help="denoise images")
    den.add_argument("--checkpoint", help="patch classifier checkpoint")
    den.add_argument("--threshold", type=float, help="confidence threshold T")
    den.add_argument("inputs", nargs="*", help="PGM images (default: manifest test images)")
    ev = sub.add_parser("evaluate", parents=[common], help="score denoised images")
    ev.add_argument("--originals", nargs="+")
    ev.add_argument("--noisy", nargs="+")
    ev.add_argument("--denoised", nargs="+")
    sub.add_parser("pipeline", parents=[common], help="run every stage")
    return parser


def _configure_logging() -> None:
    logging.basicConfig(
        level=get_settings().logging_level(),
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s"
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one command; returns the process exit status."""
    args = build_parser().parse_args(argv)
    try:
        _configure_logging()
        config = load_run_config(args.config, seed=args.seed, out=args.out)
        if args.command == "generate":
            cmd_generate(config)
        elif args.command == "train":
            cmd_train(config)
        elif args.command == "tune":
            cmd_tune(config, args.checkpoint)
        elif args.command == "denoise":
            cmd_denoise(config, args.checkpoint, args.inputs or None, args.threshold)
        elif args.command == "evaluate":
            cmd_evaluate(config, args.originals, args.noisy, args.denoised)
        else:
            cmd_pipeline(config)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as e:
        logger.debug("Command failed", exc_info=True)
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
