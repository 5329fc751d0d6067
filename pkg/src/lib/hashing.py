"""SHA-256 helpers for case-directory manifests."""

import hashlib
from pathlib import Path

_CHUNK_SIZE = 1 << 16


def compute_bytes_hash(data: bytes) -> str:
    """Compute the SHA-256 hex digest of raw bytes."""
    return hashlib.sha256(data).hexdigest()


def compute_string_hash(text: str) -> str:
    """Compute the SHA-256 hex digest of a UTF-8 string."""
    return compute_bytes_hash(text.encode("utf-8"))


def compute_file_hash(file_path: Path) -> str:
    """
    Compute the SHA-256 hex digest of a file, streaming it in chunks.

    Args:
        file_path: File to hash

    Returns:
        Hex digest
    """
    digest = hashlib.sha256()
    with open(file_path, "rb") as f:
        for chunk in iter(lambda: f.read(_CHUNK_SIZE), b""):
            digest.update(chunk)
    return digest.hexdigest()


def verify_file_hash(file_path: Path, expected_hash: str) -> bool:
    """
    Check a file against an expected SHA-256 digest.

    Args:
        file_path: File to check
        expected_hash: Expected hex digest

    Returns:
        True if the digests match
    """
    return compute_file_hash(file_path) == expected_hash.lower()
