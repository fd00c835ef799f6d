"""
Data models for the quantum image denoising lab.

This module contains the value types shared across the pipeline: images and
dataset splits, quantum states, noise specifications, network parameters,
denoiser configuration, and evaluation reports.
"""

from .image import Image, ImageClass, LabeledExample, DatasetSplit, Subset, DEFAULT_RATIOS
from .quantum_state import StateVector, DensityMatrix, QuantumImage, DensityDiagnostics
from .noise_spec import NoiseKind, NoiseSpec
from .network import CnnModel, AdamState, TrainConfig, PARAMETER_NAMES
from .denoising import DenoiseConfig, ThresholdGrid
from .reports import QualityReport, ImageEvaluation, RunReport

__all__ = [
    "Image",
    "ImageClass",
    "LabeledExample",
    "DatasetSplit",
    "Subset",
    "DEFAULT_RATIOS",
    "StateVector",
    "DensityMatrix",
    "QuantumImage",
    "DensityDiagnostics",
    "NoiseKind",
    "NoiseSpec",
    "CnnModel",
    "AdamState",
    "TrainConfig",
    "PARAMETER_NAMES",
    "DenoiseConfig",
    "ThresholdGrid",
    "QualityReport",
    "ImageEvaluation",
    "RunReport"
]
