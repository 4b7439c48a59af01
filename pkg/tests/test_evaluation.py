import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.metrics import adjusted_rand_score

from ordinal_uq.errors import DisconnectedGraphError, ShapeError
from ordinal_uq.evaluation import (
    adjusted_rand_index,
    knn_error,
    procrustes_distance,
    spectral_clustering,
    triplet_prediction_error,
    true_triplet_error,
)
from ordinal_uq.triplets import pairwise_distances


def random_orthogonal(d, rng):
    Q, R = np.linalg.qr(rng.normal(size=(d, d)))
    return Q * np.sign(np.diag(R))


def test_procrustes_distance_invariances():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(15, 3))
    assert procrustes_distance(X, X) < 1e-20
    for _ in range(5):
        Q = random_orthogonal(3, rng)
        assert procrustes_distance(X @ Q, X) < 1e-10
    assert procrustes_distance(X @ np.diag([1, -1, 1]), X) < 1e-10


def test_procrustes_distance_scaled_copy():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(10, 2))
    X -= X.mean(0)
    X /= np.linalg.norm(X)
    assert procrustes_distance(2 * X, X) == pytest.approx(1.0, abs=1e-8)
    assert procrustes_distance(2 * X, X, scaling=True) < 1e-20


def test_procrustes_distance_brute_force_2d():
    rng = np.random.default_rng(2)
    X, Y = rng.normal(size=(9, 2)), rng.normal(size=(9, 2))
    Xc, Yc = X - X.mean(0), Y - Y.mean(0)
    best = np.inf
    for flip in (1.0, -1.0):
        for t in np.linspace(0, 2 * np.pi, 20001):
            U = np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]]) @ np.diag([1.0, flip])
            best = min(best, np.sum((Xc @ U - Yc) ** 2))
    assert procrustes_distance(X, Y) == pytest.approx(best, rel=1e-6)
    with pytest.raises(ShapeError):
        procrustes_distance(X, Y[:5])


def test_triplet_prediction_error_cases():
    assert triplet_prediction_error([0, 0, 0]) == (0.0, 1.0)
    assert triplet_prediction_error([1, 1, -1, 0]) == (pytest.approx(1 / 3), 0.25)
    assert triplet_prediction_error([]) == (0.0, 0.0)


def brute_knn_error(X, labels, k):
    n = len(X)
    wrong = 0
    for p in range(n):
        others = sorted((np.linalg.norm(X[p] - X[q]), q) for q in range(n) if q != p)
        votes = {}
        for _, q in others[:k]:
            votes[labels[q]] = votes.get(labels[q], 0) + 1
        top = max(votes.values())
        pred = min(c for c, v in votes.items() if v == top)
        wrong += pred != labels[p]
    return wrong / n


def test_knn_error_brute_force():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(8, 2))
    labels = rng.integers(0, 3, size=8)
    for k in (1, 2, 3, 5):
        assert knn_error(X, labels, k) == pytest.approx(brute_knn_error(X, labels, k))


def test_knn_error_trivial_cases():
    X = np.vstack([np.zeros((5, 2)), np.full((5, 2), 50.0)]) + np.random.default_rng(4).normal(size=(10, 2)) * 0.1
    labels = np.array([0] * 5 + [1] * 5)
    assert knn_error(X, labels, 1) == 0.0
    assert knn_error(X, np.zeros(10, dtype=int), 3) == 0.0
    Q = random_orthogonal(2, np.random.default_rng(5))
    assert knn_error(X @ Q + 3, labels, 3) == knn_error(X, labels, 3)
    with pytest.raises(ValueError):
        knn_error(X, labels, 10)


def test_ari_examples():
    assert adjusted_rand_index([0, 0, 1, 1], [0, 0, 1, 1]) == 1.0
    assert adjusted_rand_index([0, 0, 1, 1], [1, 1, 0, 0]) == 1.0
    assert adjusted_rand_index([0, 0, 1, 1], [0, 1, 0, 1]) == pytest.approx(-0.5)
    assert adjusted_rand_index([3, 3, 3], [1, 1, 1]) == 1.0


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 5)), min_size=2, max_size=40))
def test_ari_matches_sklearn(pairs):
    a, b = map(list, zip(*pairs))
    ours = adjusted_rand_index(a, b)
    ref = adjusted_rand_score(a, b)
    assert ours == pytest.approx(ref, abs=1e-12)
    assert adjusted_rand_index(b, a) == pytest.approx(ours, abs=1e-12)


def test_spectral_clustering_separated_blobs():
    rng = np.random.default_rng(6)
    X = np.vstack([rng.normal(size=(30, 2)), rng.normal(size=(30, 2)) + [10.0, 0.0]])
    truth = np.array([0] * 30 + [1] * 30)
    pred = spectral_clustering(X, 2, graph_k=10, rng=0)
    assert pred.shape == (60,)
    assert adjusted_rand_index(truth, pred) == 1.0
    assert np.array_equal(pred, spectral_clustering(X, 2, graph_k=10, rng=0))


def test_spectral_clustering_every_point_its_own_cluster():
    X = np.random.default_rng(7).normal(size=(6, 2))
    pred = spectral_clustering(X, 6, graph_k=5, rng=0)
    assert len(set(pred.tolist())) == 6


def test_spectral_clustering_disconnected():
    rng = np.random.default_rng(8)
    X = np.vstack([rng.normal(size=(10, 2)) + 100 * k for k in range(4)])
    with pytest.raises(DisconnectedGraphError):
        spectral_clustering(X, 2, graph_k=3, rng=0)


def test_true_triplet_error_brute_force():
    rng = np.random.default_rng(9)
    X_true, X = rng.normal(size=(7, 2)), rng.normal(size=(7, 2))
    Dt, De = pairwise_distances(X_true), pairwise_distances(X)
    wrong = total = 0
    for i in range(7):
        for j, l in itertools.combinations([p for p in range(7) if p != i], 2):
            total += 1
            wrong += (Dt[i, j] < Dt[i, l]) != (De[i, j] < De[i, l])
    assert true_triplet_error(Dt, X) == pytest.approx(wrong / total)
    assert true_triplet_error(Dt, X_true) == 0.0
