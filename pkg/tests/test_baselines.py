"""Mahalanobis distance to tied-covariance class means, and the softmax
confidence score."""

from __future__ import annotations

import numpy as np
import pytest
from scipy.linalg import cho_factor, cho_solve

from fredet import (
    ClassTooSmallError,
    DimensionMismatchError,
    FeatureMatrix,
    MahalanobisModel,
    MissingLabelsError,
    fit_mahalanobis,
    mahalanobis_score,
    softmax_score,
)


def labeled_gaussians(seed, per_class, means, cov_chol):
    """Samples from N(mean_c, L L^T) for each class c."""
    rng = np.random.default_rng(seed)
    means = np.asarray(means, dtype=np.float64)
    d = means.shape[1]
    blocks, labels = [], []
    for c, mu in enumerate(means):
        blocks.append(mu + rng.standard_normal((per_class, d)) @ cov_chol.T)
        labels.append(np.full(per_class, c))
    return FeatureMatrix(
        data=np.concatenate(blocks).astype(np.float32),
        labels=np.concatenate(labels),
    )


def manual_model(means, cov, ridge=0.0):
    means = np.atleast_2d(np.asarray(means, dtype=np.float64))
    return MahalanobisModel(
        class_means=means,
        shared_precision=np.linalg.inv(np.asarray(cov, dtype=np.float64)),
        ridge=ridge,
        class_ids=np.arange(means.shape[0], dtype=np.int32),
    )


def test_fit_recovers_means_and_covariance():
    true_means = [[0.0, 0.0, 0.0], [5.0, 0.0, 0.0], [0.0, 5.0, 0.0]]
    chol = np.linalg.cholesky([[2.0, 0.5, 0.0], [0.5, 1.0, 0.2], [0.0, 0.2, 0.5]])
    train = labeled_gaussians(0, 20_000, true_means, chol)
    model = fit_mahalanobis(train)
    assert np.abs(model.class_means - true_means).max() < 0.05
    cov_hat = np.linalg.inv(model.shared_precision) - model.ridge * np.eye(3)
    assert np.abs(cov_hat - chol @ chol.T).max() < 0.05
    assert np.array_equal(model.class_ids, [0, 1, 2])


def test_single_class_matches_biased_sample_covariance():
    rng = np.random.default_rng(1)
    data = rng.standard_normal((200, 4))
    train = FeatureMatrix(data=data.astype(np.float32), labels=np.zeros(200, dtype=int))
    model = fit_mahalanobis(train)
    x = train.data.astype(np.float64)
    cov = np.cov(x.T, bias=True) + model.ridge * np.eye(4)
    assert np.abs(model.shared_precision - np.linalg.inv(cov)).max() < 1e-8


def test_precision_inverts_the_ridged_covariance():
    train = labeled_gaussians(2, 100, [[0.0, 0.0], [3.0, 1.0]], np.eye(2))
    model = fit_mahalanobis(train)
    x = train.data.astype(np.float64)
    scatter = np.zeros((2, 2))
    for c in (0, 1):
        members = x[train.rows_for(c)]
        centered = members - members.mean(axis=0)
        scatter += centered.T @ centered
    regularized = scatter / train.n_samples + model.ridge * np.eye(2)
    assert np.abs(model.shared_precision @ regularized - np.eye(2)).max() < 1e-8
    # quadratic form agrees with a cholesky solve
    rng = np.random.default_rng(3)
    q = rng.standard_normal(2)
    diff = q - model.class_means[0]
    ref = diff @ cho_solve(cho_factor(regularized), diff)
    direct = diff @ model.shared_precision @ diff
    assert direct == pytest.approx(ref, rel=1e-10)


def test_fit_validation():
    unlabeled = FeatureMatrix(data=np.ones((4, 2), dtype=np.float32))
    with pytest.raises(MissingLabelsError):
        fit_mahalanobis(unlabeled)
    lone = FeatureMatrix(
        data=np.random.default_rng(4).standard_normal((3, 2)).astype(np.float32),
        labels=np.array([0, 0, 1]),
    )
    with pytest.raises(ClassTooSmallError):
        fit_mahalanobis(lone)


def test_score_at_a_class_mean_is_zero():
    train = labeled_gaussians(5, 50, [[0.0, 0.0], [4.0, 4.0]], np.eye(2))
    model = fit_mahalanobis(train)
    for mu in model.class_means:
        assert mahalanobis_score(model, mu) == 0.0


def test_identity_precision_reduces_to_nearest_mean_distance():
    model = manual_model([[0.0, 0.0], [10.0, 0.0]], np.eye(2))
    x = np.array([3.0, 4.0])
    assert mahalanobis_score(model, x) == pytest.approx(25.0, abs=1e-12)
    assert mahalanobis_score(model, np.array([9.0, 0.0])) == pytest.approx(1.0)


def test_diagonal_covariance_hand_case():
    model = manual_model([[0.0, 0.0]], np.diag([1.0, 4.0]))
    assert mahalanobis_score(model, np.array([2.0, 2.0])) == pytest.approx(5.0, abs=1e-12)


def test_score_shapes_and_dim_check():
    model = manual_model([[0.0, 0.0]], np.eye(2))
    assert isinstance(mahalanobis_score(model, np.zeros(2)), float)
    batch = mahalanobis_score(model, np.zeros((5, 2)))
    assert batch.shape == (5,)
    with pytest.raises(DimensionMismatchError):
        mahalanobis_score(model, np.zeros(3))


def test_invariance_under_rotation_and_scaling():
    train = labeled_gaussians(6, 300, [[0.0, 0.0, 0.0], [4.0, 0.0, 0.0]], np.eye(3))
    rng = np.random.default_rng(7)
    q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    a = 2.5 * q
    mapped = FeatureMatrix(
        data=(train.data.astype(np.float64) @ a.T).astype(np.float32),
        labels=train.labels,
    )
    base = fit_mahalanobis(train)
    moved = fit_mahalanobis(mapped)
    queries = rng.standard_normal((40, 3))
    s0 = mahalanobis_score(base, queries)
    s1 = mahalanobis_score(moved, queries @ a.T)
    # a similarity transform rescales the ridge in step, so the match is tight
    assert np.allclose(s0, s1, rtol=1e-6)

    shear = np.array([[1.0, 0.7, 0.0], [0.0, 1.0, 0.3], [0.2, 0.0, 1.0]])
    sheared = FeatureMatrix(
        data=(train.data.astype(np.float64) @ shear.T).astype(np.float32),
        labels=train.labels,
    )
    s2 = mahalanobis_score(fit_mahalanobis(sheared), queries @ shear.T)
    # general affine maps distort the ridge, so only near-invariance holds
    assert np.allclose(s0, s2, rtol=1e-3)


def test_softmax_score_values():
    assert softmax_score(np.array([0.0, 0.0])) == pytest.approx(0.5, abs=1e-15)
    one_hot = softmax_score(np.array([100.0, 0.0, 0.0]))
    assert one_hot == pytest.approx(0.0, abs=1e-12)
    # two logits (2, 1): confidence = e / (e + 1)
    expected = 1.0 - np.e / (np.e + 1.0)
    assert softmax_score(np.array([2.0, 1.0])) == pytest.approx(expected, abs=1e-15)


def test_softmax_score_shift_invariance():
    logits = np.array([3.0, 1.0, -2.0])
    base = softmax_score(logits)
    assert softmax_score(logits + 7.0) == base  # integer shift is exact
    assert softmax_score(logits + 0.123) == pytest.approx(base, abs=1e-12)


def test_softmax_score_overflow_safety():
    huge = np.array([[1000.0, 999.0, 0.0], [-1000.0, -1000.0, -1000.0]])
    out = softmax_score(huge)
    assert np.isfinite(out).all()
    assert out[0] == pytest.approx(1.0 - np.e / (np.e + 1.0), abs=1e-12)
    assert out[1] == pytest.approx(2.0 / 3.0, abs=1e-12)


def test_softmax_score_shapes_and_validation():
    assert isinstance(softmax_score(np.array([1.0, 2.0])), float)
    batch = softmax_score(np.zeros((4, 3)))
    assert batch.shape == (4,)
    assert np.all(batch == pytest.approx(2.0 / 3.0))
    with pytest.raises(ValueError):
        softmax_score(np.array([]))


def test_scores_are_bounded():
    rng = np.random.default_rng(8)
    logits = rng.standard_normal((100, 5))
    s = softmax_score(logits)
    assert np.all((s >= 0.0) & (s < 1.0))
    train = labeled_gaussians(9, 40, [[0.0, 0.0], [2.0, 2.0]], np.eye(2))
    model = fit_mahalanobis(train)
    m = mahalanobis_score(model, rng.standard_normal((100, 2)))
    assert np.all(m >= 0.0)
