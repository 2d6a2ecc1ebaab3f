"""Writer for FMX feature files.

Layout (little-endian): magic "FMX1" | dtype u8 (1 = float32) | flags u8
(bit 0 = labels present) | reserved u16 = 0 | M u64 | d u64 | M*d float32
row-major | optionally M int32 labels.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import ExtractorError

MAGIC = b"FMX1"
DTYPE_FLOAT32 = 1
FLAG_LABELS = 0x01
_HEADER = struct.Struct("<4sBBHQQ")


def write_fmx(features: np.ndarray, path: str | Path, labels: np.ndarray | None = None) -> None:
    """Write one row per sample; labels are optional non-negative ints."""
    features = np.ascontiguousarray(features, dtype="<f4")
    if features.ndim != 2 or features.size == 0:
        raise ExtractorError(f"features must be a non-empty 2-D array, got shape {features.shape}")
    if not np.isfinite(features).all():
        raise ExtractorError("features contain NaN or Inf")
    m, d = features.shape

    flags = 0
    label_bytes = b""
    if labels is not None:
        labels = np.ascontiguousarray(labels, dtype="<i4")
        if labels.shape != (m,):
            raise ExtractorError(f"need one label per row, got {labels.shape} for {m} rows")
        if (labels < 0).any():
            raise ExtractorError("labels must be non-negative")
        flags |= FLAG_LABELS
        label_bytes = labels.tobytes()

    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, DTYPE_FLOAT32, flags, 0, m, d))
        fh.write(features.tobytes())
        fh.write(label_bytes)
