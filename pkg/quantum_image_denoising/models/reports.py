"""
Evaluation report data models.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

PSNR_INFINITY = "inf"


def encode_psnr(value: float) -> Any:
    """PSNR for JSON/CSV: the literal string "inf" for identical images."""
    return PSNR_INFINITY if math.isinf(value) else value


def decode_psnr(value: Any) -> float:
    return math.inf if value == PSNR_INFINITY else float(value)


@dataclass(frozen=True)
class QualityReport:
    """
    MSE / PSNR / SSIM of a candidate image against its reference.
    """
    mse: float
    psnr_db: float
    ssim: float

    def __post_init__(self):
        """Validate metric ranges."""
        if self.mse < 0:
            raise ValueError("MSE must be non-negative")
        if math.isinf(self.psnr_db) != (self.mse == 0):
            raise ValueError("PSNR must be infinite exactly when MSE is zero")
        if self.ssim > 1.0 + 1e-12 or self.ssim < -1.0 - 1e-12:
            raise ValueError("SSIM must be between -1 and 1")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mse": self.mse,
            "psnr_db": encode_psnr(self.psnr_db),
            "ssim": self.ssim
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'QualityReport':
        return cls(
            mse=float(data["mse"]),
            psnr_db=decode_psnr(data["psnr_db"]),
            ssim=float(data["ssim"])
        )


def mean_report(reports: List[QualityReport]) -> QualityReport:
    """
    Componentwise mean of several reports.

    Infinite PSNR rows are left out of the PSNR mean unless every row is
    infinite.
    """
    if not reports:
        raise ValueError("Cannot average an empty list of reports")
    n = len(reports)
    finite = [r.psnr_db for r in reports if not math.isinf(r.psnr_db)]
    psnr = sum(finite) / len(finite) if finite else math.inf
    return QualityReport(
        mse=sum(r.mse for r in reports) / n,
        psnr_db=psnr,
        ssim=sum(r.ssim for r in reports) / n
    )


@dataclass
class ImageEvaluation:
    """Per-image row: noisy and denoised quality against the original."""
    name: str
    noisy: QualityReport
    denoised: QualityReport

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "noisy": self.noisy.to_dict(),
            "denoised": self.denoised.to_dict()
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ImageEvaluation':
        return cls(
            name=data["name"],
            noisy=QualityReport.from_dict(data["noisy"]),
            denoised=QualityReport.from_dict(data["denoised"])
        )


@dataclass
class RunReport:
    """
    Outcome of an evaluation run.

    Aggregates are recomputed from rows, never stored independently.
    timings holds wall-clock seconds per stage and is kept out of the
    content that reproducibility checks compare.
    """
    rows: List[ImageEvaluation] = field(default_factory=list)
    threshold: Optional[float] = None
    accuracies: Dict[str, List[float]] = field(default_factory=dict)
    config: Dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    timings: Dict[str, float] = field(default_factory=dict)

    def aggregate_noisy(self) -> QualityReport:
        return mean_report([r.noisy for r in self.rows])

    def aggregate_denoised(self) -> QualityReport:
        return mean_report([r.denoised for r in self.rows])

    def content_dict(self) -> Dict[str, Any]:
        """Everything except timings."""
        data: Dict[str, Any] = {
            "seed": self.seed,
            "threshold": self.threshold,
            "accuracies": self.accuracies,
            "config": self.config,
            "rows": [r.to_dict() for r in self.rows],
        }
        if self.rows:
            data["aggregate"] = {
                "noisy": self.aggregate_noisy().to_dict(),
                "denoised": self.aggregate_denoised().to_dict()
            }
        return data

    def to_dict(self) -> Dict[str, Any]:
        data = self.content_dict()
        data["timings"] = self.timings
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'RunReport':
        return cls(
            rows=[ImageEvaluation.from_dict(r) for r in data.get("rows", [])],
            threshold=data.get("threshold"),
            accuracies=data.get("accuracies", {}),
            config=data.get("config", {}),
            seed=data.get("seed", 0),
            timings=data.get("timings", {})
        )
