"""
Content digests, optional checkpoint signing, and stage seed derivation.
"""

import os
from dataclasses import dataclass
from typing import Optional

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import hashes, hmac


@dataclass
class IntegrityConfig:
    """
    Integrity configuration for persisted artifacts.

    Checkpoints and manifests carry a SHA-256 digest of their content. When
    CHECKPOINT_SIGNING_KEY is set the digest becomes an HMAC-SHA256 keyed
    with it, so artifacts from a foreign key fail verification.
    """
    signing_key: Optional[bytes] = None
    key_size: int = 32  # 256 bits
    algorithm: str = "SHA-256"

    def __post_init__(self):
        """Load the signing key from the environment if not provided."""
        if self.signing_key is None:
            self.signing_key = self._get_key("CHECKPOINT_SIGNING_KEY")
        elif len(self.signing_key) != self.key_size:
            raise ValueError("Invalid key size for signing key")

    def _get_key(self, env_var: str) -> Optional[bytes]:
        """Get a hex key from the environment, or None when unset."""
        key_hex = os.getenv(env_var)
        if not key_hex:
            return None
        try:
            key = bytes.fromhex(key_hex)
        except ValueError:
            raise ValueError(f"Invalid hex key format for {env_var}")
        if len(key) != self.key_size:
            raise ValueError(f"Invalid key size for {env_var}")
        return key

    @property
    def algorithm_tag(self) -> str:
        """Name of the digest scheme written next to each digest."""
        return "HMAC-SHA256" if self.signing_key else "SHA256"

    def digest(self, payload: bytes) -> str:
        """Hex digest of payload (keyed when a signing key is configured)."""
        if self.signing_key:
            mac = hmac.HMAC(self.signing_key, hashes.SHA256())
            mac.update(payload)
            return mac.finalize().hex()
        return sha256_hex(payload)

    def verify(self, payload: bytes, expected: str) -> bool:
        """Check payload against a previously recorded digest."""
        if self.signing_key:
            mac = hmac.HMAC(self.signing_key, hashes.SHA256())
            mac.update(payload)
            try:
                mac.verify(bytes.fromhex(expected))
            except (InvalidSignature, ValueError):
                return False
            return True
        return sha256_hex(payload) == expected


def sha256_hex(payload: bytes) -> str:
    """Unkeyed SHA-256 hex digest."""
    h = hashes.Hash(hashes.SHA256())
    h.update(payload)
    return h.finalize().hex()


def derive_seed(seed: int, stage: str) -> int:
    """
    Derive a 64-bit sub-seed for a named pipeline stage.

    Args:
        seed: Global non-negative seed
        stage: Stage name, e.g. "generate" or "split"

    Returns:
        int: First 8 bytes (big-endian) of SHA-256("<seed>:<stage>")
    """
    if seed < 0:
        raise ValueError("Seed must be a non-negative integer")
    h = hashes.Hash(hashes.SHA256())
    h.update(f"{seed}:{stage}".encode("utf-8"))
    return int.from_bytes(h.finalize()[:8], "big")


# Global integrity config instance
_integrity_config: Optional[IntegrityConfig] = None


def get_integrity_config() -> IntegrityConfig:
    """Get the global integrity configuration instance."""
    global _integrity_config
    if _integrity_config is None:
        _integrity_config = IntegrityConfig()
    return _integrity_config


def reset_integrity_config() -> None:
    """Reset the global integrity config instance (mainly for testing)."""
    global _integrity_config
    _integrity_config = None
