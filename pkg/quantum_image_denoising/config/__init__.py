"""
Configuration management for the quantum image denoising lab.

This module handles simulation limits, runtime settings, artifact integrity,
and environment-specific configuration.
"""

from .settings import Settings, get_settings, reset_settings
from .integrity import IntegrityConfig, get_integrity_config, reset_integrity_config, derive_seed

__all__ = [
    "Settings",
    "get_settings",
    "reset_settings",
    "IntegrityConfig",
    "get_integrity_config",
    "reset_integrity_config",
    "derive_seed"
]
