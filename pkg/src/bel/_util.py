"""Shared plumbing: deterministic RNG streams, content digests, CSV formatting."""

from __future__ import annotations

import hashlib
import json
from fractions import Fraction

import numpy as np


class ConfigError(ValueError):
    """Invalid model, filter or experiment configuration."""


def stream(master_seed: int, *key: int) -> np.random.Generator:
    """Independent generator for (master_seed, key).

    Streams with distinct keys are statistically independent and do not
    depend on the order in which they are created, so parallel work can be
    scheduled freely without changing any output bits.
    """
    ss = np.random.SeedSequence(master_seed, spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(ss)


def _jsonable(x):
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, Fraction):
        return {"fraction": [x.numerator, x.denominator]}
    if isinstance(x, tuple):
        return list(x)
    raise TypeError(f"not serializable: {type(x)!r}")


def canonical_json(obj) -> str:
    """Canonical (sorted, compact) JSON encoding used for digests."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_jsonable)


def digest(obj) -> str:
    """sha256 hex digest of the canonical JSON encoding of ``obj``."""
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def fmt(x) -> str:
    """Format a number with 17 significant digits ('.' decimal separator)."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_csv(path, header, rows) -> None:
    """Write a comma-separated table; numbers carry 17 significant digits."""
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(v if isinstance(v, str) else fmt(v) for v in row) + "\n")
