"""
Error types for the quantum image denoising lab.

All of them derive from ValueError so callers that only care about
"bad input" can keep catching ValueError.
"""


class ImageFormatError(ValueError):
    """Header or magic number does not describe a supported image file."""


class TruncatedDataError(ValueError):
    """A file ended before the payload its header announced."""


class EncodingError(ValueError):
    """An image cannot be represented as a quantum state."""


class ShapeMismatchError(ValueError):
    """Array extents disagree with what an operation requires."""


class ManifestError(ValueError):
    """A dataset manifest is malformed or references missing files."""


class CheckpointError(ValueError):
    """A model checkpoint has the wrong format tag or fails its digest check."""


class ConfigError(ValueError):
    """The run configuration is invalid (CLI exit status 2)."""
