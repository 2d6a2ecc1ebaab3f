"""Model banks: one subspace model per class (or one global model), score
aggregation, and the FREB container format.

A sample's bank score is the minimum over the per-class model scores: it is
in-distribution if at least one class subspace reconstructs it well. In
global mode the bank holds a single model under key 0.

FREB file layout (little-endian):

    magic "FREB" (4 bytes) | version u16 | header_len u32
    | header: UTF-8 JSON of {mode, method, classes, config, provenance}
    | one binary model block per class id, in ascending class order

PCA block:   d u64 | m u64 | mean d*f64 | components m*d*f64
             | singular_values m*f64 | explained_variance_ratio m*f64
kPCA block:  M u64 | d u64 | m u64 | kernel u8 (0=rbf, 1=linear) | gamma f64
             | train_points M*d*f64 | alphas m*M*f64 | eigenvalues m*f64
             | row_means M*f64 | total_mean f64

The container doubles as the on-disk form of the Mahalanobis baseline
(method "mahalanobis", one block, no bank semantics):

baseline block: N u64 | d u64 | ridge f64 | class_ids N*i32
                | class_means N*d*f64 | shared_precision d*d*f64

All model parameters are stored as float64, so a loaded bank reproduces
every score bit-exactly.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .baselines import MahalanobisModel
from .errors import (
    BankFileError,
    ClassTooSmallError,
    CorruptBankError,
    DimensionMismatchError,
    MissingLabelsError,
    VersionMismatchError,
)
from .features import FeatureMatrix, ScoreVector
from .kernel import KERNEL_LINEAR, KERNEL_RBF, KpcaModel, fit_kpca, kfre_score
from .linear import DEFAULT_VARIANCE_RETENTION, PcaModel, fit_pca, fre_score

BANK_MAGIC = b"FREB"
BANK_VERSION = 1

MODE_GLOBAL = "global"
MODE_PER_CLASS = "per-class"
METHOD_PCA = "pca"
METHOD_KPCA = "kpca"
METHOD_MAHALANOBIS = "mahalanobis"

VARIANT_PREIMAGE = "preimage"
VARIANT_RKHS = "rkhs"

_KERNEL_CODES = {KERNEL_RBF: 0, KERNEL_LINEAR: 1}
_KERNEL_NAMES = {v: k for k, v in _KERNEL_CODES.items()}


@dataclass(frozen=True)
class BankConfig:
    """Hyperparameters shared by every model in a bank."""

    variance_retention: float = DEFAULT_VARIANCE_RETENTION
    gamma: float | None = None            # None = median heuristic at fit time
    kernel: str = KERNEL_RBF
    kfre_variant: str = VARIANT_PREIMAGE
    preimage_max_iter: int = 100
    preimage_tol: float = 1e-6


@dataclass
class ModelBank:
    mode: str
    method: str
    models: dict[int, PcaModel | KpcaModel]
    config: BankConfig = field(default_factory=BankConfig)
    provenance: dict[str, str] = field(default_factory=dict)

    @property
    def n_features(self) -> int:
        return next(iter(self.models.values())).n_features

    def class_ids(self) -> list[int]:
        return sorted(self.models)


def fit_bank(
    train: FeatureMatrix,
    mode: str = MODE_GLOBAL,
    method: str = METHOD_PCA,
    config: BankConfig | None = None,
    provenance: dict[str, str] | None = None,
) -> ModelBank:
    """Fit one model per class, or a single global model.

    Per-class mode requires labels and at least 2 samples in every class;
    each class model is fit on that class's rows only.

    Raises:
        MissingLabelsError: per-class mode on an unlabeled matrix.
        ClassTooSmallError: a class has fewer than 2 samples.
        ValueError: unknown mode or method.
    """
    if mode not in (MODE_GLOBAL, MODE_PER_CLASS):
        raise ValueError(f"unknown mode {mode!r}")
    if method not in (METHOD_PCA, METHOD_KPCA):
        raise ValueError(f"unknown method {method!r}")
    config = config or BankConfig()

    if mode == MODE_PER_CLASS:
        if train.labels is None:
            raise MissingLabelsError("per-class mode requires a labeled matrix")
        groups = {c: train.rows_for(c) for c in train.class_ids()}
        for c, rows in groups.items():
            if rows.size < 2:
                raise ClassTooSmallError(
                    f"class {c} has {rows.size} sample(s); need at least 2"
                )
    else:
        groups = {0: np.arange(train.n_samples)}

    models: dict[int, PcaModel | KpcaModel] = {}
    for c in sorted(groups):
        subset = FeatureMatrix(data=train.data[groups[c]])
        if method == METHOD_PCA:
            models[c] = fit_pca(subset, config.variance_retention)
        else:
            models[c] = fit_kpca(
                subset, config.variance_retention, config.gamma, config.kernel
            )
    return ModelBank(
        mode=mode,
        method=method,
        models=models,
        config=config,
        provenance=dict(provenance or {}),
    )


def _model_scores(
    bank: ModelBank, model: PcaModel | KpcaModel, rows: np.ndarray, variant: str
) -> np.ndarray:
    if bank.method == METHOD_PCA:
        return np.atleast_1d(fre_score(model, rows))
    return np.atleast_1d(
        kfre_score(
            model,
            rows,
            variant=variant,
            max_iter=bank.config.preimage_max_iter,
            tol=bank.config.preimage_tol,
        )
    )


def score_bank(
    bank: ModelBank, test: FeatureMatrix, variant: str | None = None
) -> ScoreVector:
    """Score every row: minimum reconstruction error over the bank's models.

    `variant` overrides the bank's configured kernel-score variant
    ("preimage" or "rkhs"); it is ignored for PCA banks.
    """
    if test.n_features != bank.n_features:
        raise DimensionMismatchError(
            f"bank expects {bank.n_features} features, matrix has {test.n_features}"
        )
    variant = variant or bank.config.kfre_variant
    rows = test.data.astype(np.float64)
    per_model = np.stack(
        [_model_scores(bank, bank.models[c], rows, variant) for c in bank.class_ids()]
    )
    tag = f"{bank.method}:{bank.mode}"
    if bank.method == METHOD_KPCA:
        tag += f":{variant}"
    return ScoreVector(scores=per_model.min(axis=0), tag=tag)


# -- serialization --------------------------------------------------------


def _pack_array(arr: np.ndarray) -> bytes:
    return np.ascontiguousarray(arr, dtype="<f8").tobytes()


def _pca_block(model: PcaModel) -> bytes:
    parts = [
        struct.pack("<QQ", model.n_features, model.n_components),
        _pack_array(model.mean),
        _pack_array(model.components),
        _pack_array(model.singular_values),
        _pack_array(model.explained_variance_ratio),
    ]
    return b"".join(parts)


def _kpca_block(model: KpcaModel) -> bytes:
    parts = [
        struct.pack(
            "<QQQBd",
            model.n_train,
            model.n_features,
            model.n_components,
            _KERNEL_CODES[model.kernel],
            model.gamma,
        ),
        _pack_array(model.train_points),
        _pack_array(model.alphas),
        _pack_array(model.eigenvalues),
        _pack_array(model.row_means),
        struct.pack("<d", model.total_mean),
    ]
    return b"".join(parts)


class _Cursor:
    """Sequential reader that turns short reads into CorruptBankError."""

    def __init__(self, buf: bytes, start: int):
        self.buf = buf
        self.pos = start

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise CorruptBankError("bank file ends mid-block")
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str) -> tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def array(self, count: int, shape: tuple[int, ...], dtype: str = "<f8") -> np.ndarray:
        dt = np.dtype(dtype)
        return (
            np.frombuffer(self.take(count * dt.itemsize), dtype=dt)
            .reshape(shape)
            .copy()
        )


def _read_pca_block(cur: _Cursor) -> PcaModel:
    d, m = cur.unpack("<QQ")
    return PcaModel(
        mean=cur.array(d, (d,)),
        components=cur.array(m * d, (m, d)),
        singular_values=cur.array(m, (m,)),
        explained_variance_ratio=cur.array(m, (m,)),
    )


def _read_kpca_block(cur: _Cursor) -> KpcaModel:
    n, d, m, kernel_code, gamma = cur.unpack("<QQQBd")
    if kernel_code not in _KERNEL_NAMES:
        raise CorruptBankError(f"unknown kernel code {kernel_code}")
    return KpcaModel(
        train_points=cur.array(n * d, (n, d)),
        gamma=gamma,
        alphas=cur.array(m * n, (m, n)),
        eigenvalues=cur.array(m, (m,)),
        row_means=cur.array(n, (n,)),
        total_mean=cur.unpack("<d")[0],
        kernel=_KERNEL_NAMES[kernel_code],
    )


def _mahalanobis_block(model: MahalanobisModel) -> bytes:
    n, d = model.class_means.shape
    parts = [
        struct.pack("<QQd", n, d, model.ridge),
        np.ascontiguousarray(model.class_ids, dtype="<i4").tobytes(),
        _pack_array(model.class_means),
        _pack_array(model.shared_precision),
    ]
    return b"".join(parts)


def _read_mahalanobis_block(cur: _Cursor) -> MahalanobisModel:
    n, d, ridge = cur.unpack("<QQd")
    return MahalanobisModel(
        class_ids=cur.array(n, (n,), dtype="<i4"),
        class_means=cur.array(n * d, (n, d)),
        shared_precision=cur.array(d * d, (d, d)),
        ridge=ridge,
    )


def _write_container(path: str | Path, header: dict, blocks: list[bytes]) -> None:
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    with open(path, "wb") as fh:
        fh.write(BANK_MAGIC)
        fh.write(struct.pack("<HI", BANK_VERSION, len(header_bytes)))
        fh.write(header_bytes)
        for block in blocks:
            fh.write(block)


def save_bank(bank: ModelBank, path: str | Path) -> None:
    """Serialize a bank; load_bank restores it score-identically."""
    header = {
        "mode": bank.mode,
        "method": bank.method,
        "classes": bank.class_ids(),
        "config": asdict(bank.config),
        "provenance": bank.provenance,
    }
    block = _pca_block if bank.method == METHOD_PCA else _kpca_block
    _write_container(path, header, [block(bank.models[c]) for c in bank.class_ids()])


def save_baseline(
    model: MahalanobisModel, path: str | Path, provenance: dict[str, str] | None = None
) -> None:
    """Serialize a Mahalanobis baseline into the same container format."""
    header = {
        "mode": MODE_PER_CLASS,
        "method": METHOD_MAHALANOBIS,
        "classes": [int(c) for c in model.class_ids],
        "config": {},
        "provenance": dict(provenance or {}),
    }
    _write_container(path, header, [_mahalanobis_block(model)])


def _parse_container(path: str | Path) -> tuple[dict, _Cursor, int]:
    raw = Path(path).read_bytes()
    if len(raw) < 4 or raw[:4] != BANK_MAGIC:
        raise CorruptBankError(f"{path}: not a bank file (bad magic)")
    if len(raw) < 10:
        raise CorruptBankError(f"{path}: truncated bank header")
    version, header_len = struct.unpack_from("<HI", raw, 4)
    if version != BANK_VERSION:
        raise VersionMismatchError(
            f"{path}: bank version {version}, reader supports {BANK_VERSION}"
        )
    if 10 + header_len > len(raw):
        raise CorruptBankError(f"{path}: header length overruns the file")
    try:
        header = json.loads(raw[10 : 10 + header_len].decode())
    except ValueError as exc:
        raise CorruptBankError(f"{path}: malformed bank header: {exc}") from exc
    return header, _Cursor(raw, 10 + header_len), len(raw)


def load_artifact(path: str | Path) -> ModelBank | MahalanobisModel:
    """Read any FREB container: a subspace bank or a Mahalanobis baseline.

    Raises:
        CorruptBankError: bad magic, malformed header, or damaged payload.
        VersionMismatchError: file version differs from BANK_VERSION.
    """
    header, cur, total = _parse_container(path)
    try:
        mode = header["mode"]
        method = header["method"]
        classes = [int(c) for c in header["classes"]]
        provenance = dict(header["provenance"])
        config = (
            BankConfig(**header["config"]) if method != METHOD_MAHALANOBIS else None
        )
    except (ValueError, KeyError, TypeError) as exc:
        raise CorruptBankError(f"{path}: malformed bank header: {exc}") from exc

    if method == METHOD_MAHALANOBIS:
        model = _read_mahalanobis_block(cur)
    elif method in (METHOD_PCA, METHOD_KPCA):
        read = _read_pca_block if method == METHOD_PCA else _read_kpca_block
        models: dict[int, PcaModel | KpcaModel] = {c: read(cur) for c in classes}
    else:
        raise CorruptBankError(f"{path}: unknown method {method!r}")
    if cur.pos != total:
        raise CorruptBankError(f"{path}: {total - cur.pos} trailing bytes")

    if method == METHOD_MAHALANOBIS:
        return model
    return ModelBank(
        mode=mode, method=method, models=models, config=config, provenance=provenance
    )


def load_bank(path: str | Path) -> ModelBank:
    """Read a FREB file back into a ModelBank.

    Raises:
        CorruptBankError: bad magic, malformed header, or damaged payload.
        VersionMismatchError: file version differs from BANK_VERSION.
        BankFileError: the file holds a baseline, not a subspace bank.
    """
    artifact = load_artifact(path)
    if not isinstance(artifact, ModelBank):
        raise BankFileError(
            f"{path}: holds a {METHOD_MAHALANOBIS} baseline, not a subspace bank"
        )
    return artifact
