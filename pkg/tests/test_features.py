"""FMX file round-trips, malformed-file rejection, stratified subsampling,
and the score CSV format."""

from __future__ import annotations

import math
import struct

import numpy as np
import pytest

from fredet import (
    BadMagicError,
    ClassEmptiedError,
    EmptyMatrixError,
    FeatureMatrix,
    LabelLengthError,
    LabelValueError,
    NonFiniteValueError,
    ScoreVector,
    TruncatedPayloadError,
    UnsupportedDtypeError,
    read_features,
    read_scores,
    subsample,
    write_features,
    write_scores,
)

from conftest import gaussian_matrix

HEADER = struct.Struct("<4sBBHQQ")


def make_file_bytes(m, d, payload, labels=None, magic=b"FMX1", dtype=1):
    flags = 1 if labels is not None else 0
    blob = HEADER.pack(magic, dtype, flags, 0, m, d)
    blob += np.asarray(payload, dtype="<f4").tobytes()
    if labels is not None:
        blob += np.asarray(labels, dtype="<i4").tobytes()
    return blob


def test_round_trip_2x3(tmp_path):
    matrix = FeatureMatrix(data=np.array([[1, 2, 3], [4, 5, 6]], dtype=np.float32))
    path = tmp_path / "m.fmx"
    write_features(matrix, path)
    back = read_features(path)
    assert back.n_samples == 2 and back.n_features == 3
    assert np.array_equal(back.data, matrix.data)
    assert back.labels is None


def test_round_trip_is_bit_exact(tmp_path):
    matrix = gaussian_matrix(0, 10, 4)
    a, b = tmp_path / "a.fmx", tmp_path / "b.fmx"
    write_features(matrix, a)
    write_features(read_features(a), b)
    assert a.read_bytes() == b.read_bytes()
    assert read_features(a) == matrix


def test_label_block_written(tmp_path):
    matrix = FeatureMatrix(
        data=np.ones((3, 2), dtype=np.float32), labels=np.array([0, 1, 0])
    )
    path = tmp_path / "lab.fmx"
    write_features(matrix, path)
    raw = path.read_bytes()
    assert raw[5] == 1  # labels flag
    assert len(raw) == HEADER.size + 3 * 2 * 4 + 3 * 4
    back = read_features(path)
    assert np.array_equal(back.labels, [0, 1, 0])


def test_single_value_file_layout(tmp_path):
    """A 1x1 matrix serializes to the 24-byte header plus one float32."""
    path = tmp_path / "one.fmx"
    write_features(FeatureMatrix(data=np.array([[0.5]], dtype=np.float32)), path)
    expected = HEADER.pack(b"FMX1", 1, 0, 0, 1, 1) + struct.pack("<f", 0.5)
    assert path.read_bytes() == expected
    assert len(expected) == 28


def test_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.fmx"
    path.write_bytes(make_file_bytes(1, 1, [1.0], magic=b"NOPE"))
    with pytest.raises(BadMagicError):
        read_features(path)


def test_rejects_unknown_dtype(tmp_path):
    path = tmp_path / "dtype.fmx"
    path.write_bytes(make_file_bytes(1, 1, [1.0], dtype=7))
    with pytest.raises(UnsupportedDtypeError):
        read_features(path)


def test_rejects_empty_matrix_header(tmp_path):
    path = tmp_path / "empty.fmx"
    path.write_bytes(HEADER.pack(b"FMX1", 1, 0, 0, 0, 3))
    with pytest.raises(EmptyMatrixError):
        read_features(path)


def test_rejects_truncated_payload(tmp_path):
    path = tmp_path / "short.fmx"
    path.write_bytes(make_file_bytes(2, 3, [1.0] * 6)[:-5])
    with pytest.raises(TruncatedPayloadError):
        read_features(path)


def test_rejects_truncated_label_block(tmp_path):
    path = tmp_path / "shortlab.fmx"
    path.write_bytes(make_file_bytes(2, 2, [1.0] * 4, labels=[0, 1])[:-4])
    with pytest.raises(TruncatedPayloadError):
        read_features(path)


def test_rejects_nan_payload(tmp_path):
    path = tmp_path / "nan.fmx"
    path.write_bytes(make_file_bytes(2, 2, [1.0, math.nan, 3.0, 4.0]))
    with pytest.raises(NonFiniteValueError):
        read_features(path)


def test_rejects_negative_label(tmp_path):
    path = tmp_path / "neg.fmx"
    path.write_bytes(make_file_bytes(2, 1, [1.0, 2.0], labels=[0, -1]))
    with pytest.raises(LabelValueError):
        read_features(path)


def test_matrix_invariants():
    with pytest.raises(ValueError):
        FeatureMatrix(data=np.ones(3, dtype=np.float32))  # 1-D
    with pytest.raises(NonFiniteValueError):
        FeatureMatrix(data=np.array([[np.inf]], dtype=np.float32))
    with pytest.raises(LabelLengthError):
        FeatureMatrix(
            data=np.ones((3, 1), dtype=np.float32), labels=np.array([0, 1])
        )
    with pytest.raises(EmptyMatrixError):
        FeatureMatrix(data=np.empty((0, 4), dtype=np.float32))


def test_matrix_is_immutable_and_classes_enumerate():
    matrix = FeatureMatrix(
        data=np.ones((4, 2), dtype=np.float32), labels=np.array([3, 1, 3, 1])
    )
    with pytest.raises(ValueError):
        matrix.data[0, 0] = 9.0
    assert matrix.class_ids() == [1, 3]
    assert matrix.n_classes == 4  # 1 + max(label)
    assert list(matrix.rows_for(3)) == [0, 2]


def test_score_vector_invariants():
    ScoreVector(scores=np.array([0.0, 1.5]))
    with pytest.raises(ValueError):
        ScoreVector(scores=np.array([-0.1]))
    with pytest.raises(NonFiniteValueError):
        ScoreVector(scores=np.array([np.nan]))


def test_subsample_full_fraction_is_identity():
    matrix = gaussian_matrix(1, 12, 3, labels=True)
    out = subsample(matrix, 1.0, seed=99)
    assert np.array_equal(out.data, matrix.data)
    assert np.array_equal(out.labels, matrix.labels)


def test_subsample_counts_single_class():
    matrix = FeatureMatrix(
        data=np.arange(10, dtype=np.float32).reshape(10, 1),
        labels=np.zeros(10, dtype=np.int64),
    )
    out = subsample(matrix, 0.2, seed=7)
    assert out.n_samples == 2


def test_subsample_stratified_counts():
    rng = np.random.default_rng(5)
    matrix = FeatureMatrix(
        data=rng.standard_normal((100, 2)).astype(np.float32),
        labels=np.repeat([0, 1], 50),
    )
    out = subsample(matrix, 0.2, seed=3)
    assert out.n_samples == 20
    assert int((out.labels == 0).sum()) == 10
    assert int((out.labels == 1).sum()) == 10


def test_subsample_ceil_rule_and_order():
    matrix = FeatureMatrix(
        data=np.arange(14, dtype=np.float32).reshape(7, 2),
        labels=np.array([0, 0, 0, 1, 1, 1, 1]),
    )
    out = subsample(matrix, 0.5, seed=0)
    # ceil(0.5*3)=2, ceil(0.5*4)=2; original row order means first column
    # values stay strictly increasing
    assert out.n_samples == 4
    assert int((out.labels == 0).sum()) == 2
    first_col = out.data[:, 0]
    assert np.all(np.diff(first_col) > 0)


def test_subsample_unlabeled_and_determinism():
    matrix = gaussian_matrix(2, 40, 3)
    a = subsample(matrix, 0.5, seed=11)
    b = subsample(matrix, 0.5, seed=11)
    c = subsample(matrix, 0.5, seed=12)
    assert a.n_samples == 20
    assert np.array_equal(a.data, b.data)
    assert not np.array_equal(a.data, c.data)


def test_subsample_validation():
    matrix = gaussian_matrix(3, 10, 2, labels=True)
    for bad in (0.0, -0.2, 1.5):
        with pytest.raises(ValueError):
            subsample(matrix, bad, seed=0)
    tiny = FeatureMatrix(
        data=np.ones((4, 1), dtype=np.float32), labels=np.array([0, 0, 0, 1])
    )
    with pytest.raises(ClassEmptiedError):
        subsample(tiny, 0.3, seed=0)  # 0.3*1 < 1 empties class 1


def test_scores_csv_round_trip(tmp_path):
    scores = ScoreVector(scores=np.array([0.0, 1.25, 3.3e-17, 7.0]), tag="t")
    path = tmp_path / "s.csv"
    write_scores(scores, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "index,score"
    assert lines[1] == "0,0.0"
    back = read_scores(path)
    assert np.array_equal(back.scores, scores.scores)  # repr round-trip
