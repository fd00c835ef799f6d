"""
Environment-driven settings: simulation limits, inference batching, and logging.
"""

import logging
import os
from dataclasses import dataclass
from typing import Optional


@dataclass
class SimulationConfig:
    """Dense density-matrix simulation limits."""
    max_qubits: int = 12
    eigenvalue_check_max_qubits: int = 10
    state_tolerance: float = 1e-10

    def __post_init__(self):
        """Validate simulation limits."""
        if self.max_qubits < 1:
            raise ValueError("Max qubits must be at least 1")
        if self.state_tolerance <= 0:
            raise ValueError("State tolerance must be positive")

    @classmethod
    def from_env(cls) -> 'SimulationConfig':
        """Create simulation config from environment variables."""
        return cls(
            max_qubits=int(os.getenv("MAX_QUBITS", "12")),
            eigenvalue_check_max_qubits=int(os.getenv("EIGENVALUE_CHECK_MAX_QUBITS", "10")),
            state_tolerance=float(os.getenv("STATE_TOLERANCE", "1e-10"))
        )


@dataclass
class RuntimeConfig:
    """Batching knobs for inference."""
    inference_batch_size: int = 256

    def __post_init__(self):
        """Validate runtime settings."""
        if self.inference_batch_size < 1:
            raise ValueError("Inference batch size must be positive")

    @classmethod
    def from_env(cls) -> 'RuntimeConfig':
        """Create runtime config from environment variables."""
        return cls(
            inference_batch_size=int(os.getenv("INFERENCE_BATCH_SIZE", "256"))
        )


@dataclass
class Settings:
    """
    Main settings class for the quantum image denoising lab.

    Aggregates all configuration sections and provides environment-based
    initialization.
    """
    environment: str = "development"
    debug: bool = False
    log_level: str = "INFO"

    simulation: SimulationConfig = None
    runtime: RuntimeConfig = None

    def __post_init__(self):
        """Initialize sub-configurations if not provided."""
        if self.simulation is None:
            self.simulation = SimulationConfig.from_env()
        if self.runtime is None:
            self.runtime = RuntimeConfig.from_env()

    @classmethod
    def from_env(cls) -> 'Settings':
        """Create settings from environment variables."""
        return cls(
            environment=os.getenv("ENVIRONMENT", "development"),
            debug=os.getenv("DEBUG", "false").lower() == "true",
            log_level=os.getenv("LOG_LEVEL", "INFO"),
        )

    def logging_level(self) -> int:
        """Resolve log_level to a logging module constant (DEBUG wins when debug is set)."""
        if self.debug:
            return logging.DEBUG
        level = logging.getLevelName(self.log_level.upper())
        if not isinstance(level, int):
            raise ValueError(f"Unknown log level: {self.log_level}")
        return level


# Global settings instance
_settings: Optional[Settings] = None


def get_settings() -> Settings:
    """Get the global settings instance."""
    global _settings
    if _settings is None:
        _settings = Settings.from_env()
    return _settings


def reset_settings() -> None:
    """Reset the global settings instance (mainly for testing)."""
    global _settings
    _settings = None
