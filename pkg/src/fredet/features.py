"""Feature matrices on disk and in memory.

The FMX file layout (all little-endian):

    offset  size  field
    0       4     magic, ASCII "FMX1"
    4       1     dtype code (u8); 1 = float32
    5       1     flags (u8); bit 0 = label block present
    6       2     reserved (u16), written as 0
    8       8     M, number of rows (u64)
    16      8     d, number of columns (u64)
    24      M*d*4 row-major float32 payload
    ...     M*4   int32 labels, only if flag bit 0 is set

Score files are plain CSV: one header line ``index,score`` followed by one
row per sample. Values are written with ``repr`` so they round-trip to the
exact same float.
"""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    BadMagicError,
    ClassEmptiedError,
    EmptyMatrixError,
    LabelLengthError,
    LabelValueError,
    NonFiniteValueError,
    TruncatedPayloadError,
    UnsupportedDtypeError,
)

MAGIC = b"FMX1"
DTYPE_FLOAT32 = 1
FLAG_LABELS = 0x01

_HEADER = struct.Struct("<4sBBHQQ")  # magic, dtype, flags, reserved, M, d


@dataclass(frozen=True)
class FeatureMatrix:
    """An M x d matrix of float32 feature rows with optional class labels.

    Immutable after construction; safe to share across threads. All values
    are guaranteed finite and labels, when present, are non-negative ints
    of length M.
    """

    data: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self) -> None:
        data = np.ascontiguousarray(self.data, dtype=np.float32)
        if data.ndim != 2:
            raise ValueError(f"feature data must be 2-D, got shape {data.shape}")
        if data.shape[0] == 0 or data.shape[1] == 0:
            raise EmptyMatrixError(f"empty feature matrix: shape {data.shape}")
        if not np.isfinite(data).all():
            raise NonFiniteValueError("feature data contains NaN or Inf")
        data.flags.writeable = False
        object.__setattr__(self, "data", data)

        if self.labels is not None:
            labels = np.ascontiguousarray(self.labels, dtype=np.int32)
            if labels.ndim != 1 or labels.shape[0] != data.shape[0]:
                raise LabelLengthError(
                    f"labels length {labels.shape} does not match {data.shape[0]} rows"
                )
            if (labels < 0).any():
                raise LabelValueError("labels must be non-negative class ids")
            labels.flags.writeable = False
            object.__setattr__(self, "labels", labels)

    @property
    def n_samples(self) -> int:
        return self.data.shape[0]

    @property
    def n_features(self) -> int:
        return self.data.shape[1]

    @property
    def n_classes(self) -> int:
        """1 + max(label), or 0 when the matrix is unlabeled."""
        if self.labels is None:
            return 0
        return int(self.labels.max()) + 1

    def class_ids(self) -> list[int]:
        """Sorted list of the distinct labels present."""
        if self.labels is None:
            return []
        return [int(c) for c in np.unique(self.labels)]

    def rows_for(self, class_id: int) -> np.ndarray:
        """Row indices belonging to one class."""
        if self.labels is None:
            raise ValueError("matrix has no labels")
        return np.flatnonzero(self.labels == class_id)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FeatureMatrix):
            return NotImplemented
        if self.data.shape != other.data.shape:
            return False
        if not np.array_equal(self.data, other.data):
            return False
        if (self.labels is None) != (other.labels is None):
            return False
        if self.labels is not None:
            return bool(np.array_equal(self.labels, other.labels))
        return True


@dataclass(frozen=True)
class ScoreVector:
    """Per-sample uncertainty scores; larger means more out-of-distribution."""

    scores: np.ndarray
    tag: str = ""

    def __post_init__(self) -> None:
        scores = np.ascontiguousarray(self.scores, dtype=np.float64)
        if scores.ndim != 1:
            raise ValueError(f"scores must be 1-D, got shape {scores.shape}")
        if not np.isfinite(scores).all():
            raise NonFiniteValueError("scores contain NaN or Inf")
        if (scores < 0).any():
            raise ValueError("scores must be non-negative")
        scores.flags.writeable = False
        object.__setattr__(self, "scores", scores)

    def __len__(self) -> int:
        return self.scores.shape[0]


def read_features(path: str | Path) -> FeatureMatrix:
    """Read an FMX file into a FeatureMatrix.

    Raises:
        BadMagicError: first four bytes are not ``FMX1``.
        UnsupportedDtypeError: dtype code is not 1 (float32).
        EmptyMatrixError: header declares M == 0 or d == 0.
        TruncatedPayloadError: payload or label block size is wrong.
        NonFiniteValueError: payload contains NaN/Inf.
        LabelValueError: a stored label is negative.
    """
    raw = Path(path).read_bytes()
    if len(raw) < 4 or raw[:4] != MAGIC:
        raise BadMagicError(f"{path}: not an FMX file (bad magic)")
    if len(raw) < _HEADER.size:
        raise TruncatedPayloadError(f"{path}: truncated header")
    _, dtype_code, flags, _reserved, m, d = _HEADER.unpack_from(raw)
    if dtype_code != DTYPE_FLOAT32:
        raise UnsupportedDtypeError(f"{path}: unsupported dtype code {dtype_code}")
    if m == 0 or d == 0:
        raise EmptyMatrixError(f"{path}: header declares empty matrix ({m} x {d})")

    offset = _HEADER.size
    payload_bytes = m * d * 4
    expected = offset + payload_bytes + (m * 4 if flags & FLAG_LABELS else 0)
    if len(raw) != expected:
        raise TruncatedPayloadError(
            f"{path}: expected {expected} bytes, found {len(raw)}"
        )

    data = np.frombuffer(raw, dtype="<f4", count=m * d, offset=offset).reshape(m, d)
    if not np.isfinite(data).all():
        raise NonFiniteValueError(f"{path}: payload contains NaN or Inf")

    labels = None
    if flags & FLAG_LABELS:
        labels = np.frombuffer(raw, dtype="<i4", count=m, offset=offset + payload_bytes)
        if (labels < 0).any():
            raise LabelValueError(f"{path}: negative label in label block")
    return FeatureMatrix(data=data, labels=labels)


def write_features(matrix: FeatureMatrix, path: str | Path) -> None:
    """Write a FeatureMatrix as an FMX file; read_features inverts it bit-exactly."""
    flags = FLAG_LABELS if matrix.labels is not None else 0
    header = _HEADER.pack(
        MAGIC, DTYPE_FLOAT32, flags, 0, matrix.n_samples, matrix.n_features
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(matrix.data.astype("<f4", copy=False).tobytes())
        if matrix.labels is not None:
            fh.write(matrix.labels.astype("<i4", copy=False).tobytes())


def subsample(matrix: FeatureMatrix, fraction: float, seed: int) -> FeatureMatrix:
    """Seeded, stratified row subsample.

    Per class c the result keeps exactly ceil(fraction * M_c) rows (the whole
    matrix counts as one class when unlabeled), selected without replacement
    by a PCG64 generator seeded with `seed`, and returned in their original
    row order. fraction == 1.0 returns the matrix unchanged.

    Raises:
        ValueError: fraction outside (0, 1].
        ClassEmptiedError: fraction * M_c < 1 for some class.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    if fraction == 1.0:
        return matrix

    if matrix.labels is None:
        groups = [np.arange(matrix.n_samples)]
    else:
        groups = [matrix.rows_for(c) for c in matrix.class_ids()]

    rng = np.random.default_rng(seed)
    kept: list[np.ndarray] = []
    for rows in groups:
        if fraction * rows.size < 1.0:
            raise ClassEmptiedError(
                f"fraction {fraction} empties a class of {rows.size} rows"
            )
        n_keep = math.ceil(fraction * rows.size)
        kept.append(rng.choice(rows, size=n_keep, replace=False))
    idx = np.sort(np.concatenate(kept))
    labels = matrix.labels[idx] if matrix.labels is not None else None
    return FeatureMatrix(data=matrix.data[idx], labels=labels)


def write_scores(scores: ScoreVector, path: str | Path) -> None:
    """Write scores as ``index,score`` CSV with full-precision floats."""
    with open(path, "w", newline="") as fh:
        fh.write("index,score\n")
        for i, s in enumerate(scores.scores):
            fh.write(f"{i},{float(s)!r}\n")


def read_scores(path: str | Path, tag: str = "") -> ScoreVector:
    """Read an ``index,score`` CSV produced by write_scores."""
    values: list[float] = []
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["index", "score"]:
            raise ValueError(f"{path}: expected 'index,score' header, got {header}")
        for row in reader:
            if not row:
                continue
            if len(row) != 2:
                raise ValueError(f"{path}: malformed row {row}")
            values.append(float(row[1]))
    return ScoreVector(scores=np.asarray(values, dtype=np.float64), tag=tag)
