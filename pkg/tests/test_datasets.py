import numpy as np
import pytest

from ordinal_uq.datasets import (
    MixtureSpec,
    full_rank_gaussian,
    is_spd,
    three_gaussian_mixture,
    pca_project,
    read_features,
    sample_mixture,
    separated_clusters,
    write_features,
)
from ordinal_uq.errors import ParseError, RankError


def test_three_gaussian_mixture_parameters():
    spec = three_gaussian_mixture()
    assert [m.tolist() for m in spec.means] == [[2, 2], [-2, -1], [4, -2]]
    assert spec.covariances[2].tolist() == [[1, 0.7], [0.7, 2]]
    assert np.allclose(spec.weights, 1 / 3)
    assert all(is_spd(c) for c in spec.covariances)


def test_mixture_rejects_bad_covariance():
    with pytest.raises(ValueError):
        MixtureSpec([[0, 0]], [[[1, 2], [2, 1]]])
    with pytest.raises(ValueError):
        MixtureSpec([[0, 0]], [np.eye(2)], weights=[0.5])


def test_sample_mixture_reproducible_and_moments():
    spec = three_gaussian_mixture()
    a = sample_mixture(spec, 50, rng=3)
    b = sample_mixture(spec, 50, rng=3)
    assert np.array_equal(a.points, b.points) and np.array_equal(a.labels, b.labels)
    big = sample_mixture(spec, 60_000, rng=0)
    pts = big.points[big.labels == 2]
    assert np.allclose(pts.mean(axis=0), [4, -2], atol=0.05)
    assert np.allclose(np.cov(pts.T), [[1, 0.7], [0.7, 2]], atol=0.08)


def test_pca_matches_eigh_oracle():
    F = full_rank_gaussian(400, 8, rng=1)
    P = pca_project(F, 3).points
    Fc = F - F.mean(axis=0)
    w, V = np.linalg.eigh(np.cov(Fc.T))
    top = V[:, ::-1][:, :3]
    # compare up to sign per axis
    ref = Fc @ top
    for k in range(3):
        assert min(np.abs(P[:, k] - ref[:, k]).max(), np.abs(P[:, k] + ref[:, k]).max()) < 1e-9
    C = np.cov(P.T)
    assert np.all(np.abs(C - np.diag(np.diag(C))) < 1e-8 * C[0, 0])
    assert np.all(np.diff(np.diag(C)) <= 0)


def test_pca_sign_convention_is_deterministic():
    F = full_rank_gaussian(100, 5, rng=2)
    a = pca_project(F, 2).points
    b = pca_project(-F, 2).points
    assert np.allclose(a, -b) or np.allclose(np.abs(a), np.abs(b))
    assert np.array_equal(pca_project(F, 2).points, a)


def test_pca_rank_error():
    F = np.outer(np.arange(10.0), [1.0, 2.0, 3.0])
    with pytest.raises(RankError):
        pca_project(F, 2)


def test_separated_clusters_layout():
    P = separated_clusters(200, 6, 5, rng=4)
    assert P.points.shape == (200, 5)
    assert set(np.unique(P.labels)) <= set(range(6))
    centres = np.array([P.points[P.labels == k].mean(axis=0) for k in np.unique(P.labels)])
    gaps = np.linalg.norm(centres[:, None] - centres[None], axis=-1)
    assert gaps[np.triu_indices(len(centres), 1)].min() > 7


def test_feature_csv_round_trip_and_labels(tmp_path):
    F = np.array([[1.5, -2.0, 0.25], [3.0, 4.0, 1e-17]])
    p = tmp_path / "f.csv"
    write_features(p, F, labels=[1, 0])
    feats, labels = read_features(p, label_column=-1)
    assert np.array_equal(feats, F)
    assert labels.tolist() == [1, 0]
    feats, labels = read_features(p)
    assert feats.shape == (2, 4) and labels is None


def test_feature_csv_header_and_errors(tmp_path):
    p = tmp_path / "f.csv"
    p.write_text("# a,b,c\n1,2,3\n4,5,6\n")
    feats, _ = read_features(p)
    assert feats.shape == (2, 3)
    p.write_text("1,2,3\n4,x,6\n")
    with pytest.raises(ParseError) as info:
        read_features(p)
    assert (info.value.line, info.value.column) == (2, 2)
    p.write_text("1,2,3\n4,5\n")
    with pytest.raises(ParseError):
        read_features(p)
