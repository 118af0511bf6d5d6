"""Seed derivation and file hashing helpers used across the pipeline.

Every random decision in the pipeline flows from named integer seeds, and
sub-seeds are derived by hashing, never by wall-clock entropy, so that any
command re-run on unchanged inputs reproduces its outputs byte for byte.
"""

import hashlib
from pathlib import Path


def derive_seed(*parts) -> int:
    """Derive a stable 63-bit seed from a sequence of labels and integers.

    The derivation is sha256-based and therefore identical across platforms
    and interpreter invocations, unlike ``hash()``.
    """
    key = ":".join(str(p) for p in parts).encode("utf-8")
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "little") & (2**63 - 1)


def sha256_file(path) -> str:
    """Hex sha256 digest of a file's contents."""
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def sha256_tree(paths) -> dict:
    """Map each path to its digest, keyed by string path, sorted."""
    return {str(p): sha256_file(p) for p in sorted(paths, key=str)}


class VerbTensorError(Exception):
    """Base class for errors raised by this package."""


class ValidationError(VerbTensorError):
    """Bad configuration or inputs, detected before any real work."""


class DataError(VerbTensorError):
    """A dataset construction step cannot proceed (unknown verb, empty data)."""


class TrainingDiverged(VerbTensorError):
    """The training objective became non-finite."""

    def __init__(self, message: str, epoch: int | None = None):
        super().__init__(message)
        self.epoch = epoch


def ensure_dir(path) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path
