import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from bandgcn.balance import (
    PROVENANCE_REAL,
    PROVENANCE_SYNTHETIC,
    FeatureDataset,
    SmoteOversampler,
    knn_minority,
    smote,
)

from _oracles import brute_knn


def imbalanced_dataset(n_major=40, n_minor=12, d=5, seed=0):
    rng = np.random.default_rng(seed)
    X_major = rng.standard_normal((n_major, d)) + 4.0
    X_minor = rng.standard_normal((n_minor, d))
    X = np.vstack([X_major, X_minor])
    y = np.concatenate([np.zeros(n_major, dtype=int),
                        np.ones(n_minor, dtype=int)])
    order = rng.permutation(len(y))
    return FeatureDataset.from_arrays(X[order], y[order])


class TestKnn:
    def test_matches_brute_force(self):
        rng = np.random.default_rng(1)
        X = rng.standard_normal((30, 4))
        for i in (0, 7, 29):
            for k in (1, 3, 7):
                assert list(knn_minority(X, i, k)) == brute_knn(X.tolist(), i, k)

    def test_exact_distance_ties_take_lower_index(self):
        # rows 1, 2, 3 all sit at distance 1 from row 0
        X = np.array([[0.0, 0.0],
                      [1.0, 0.0],
                      [0.0, 1.0],
                      [-1.0, 0.0],
                      [5.0, 5.0]])
        assert list(knn_minority(X, 0, 2)) == [1, 2]
        assert list(knn_minority(X, 0, 3)) == [1, 2, 3]

    def test_duplicate_points(self):
        X = np.array([[2.0], [2.0], [2.0], [9.0]])
        assert list(knn_minority(X, 1, 2)) == [0, 2]

    def test_bounds_checked(self):
        X = np.zeros((4, 2))
        with pytest.raises(ValueError, match="0 < k"):
            knn_minority(X, 0, 4)
        with pytest.raises(ValueError, match="0 < k"):
            knn_minority(X, 0, 0)
        with pytest.raises(ValueError, match="out of range"):
            knn_minority(X, 4, 2)


class TestSmote:
    def test_exact_parity(self):
        dataset = imbalanced_dataset()
        balanced = smote(dataset, k=5, seed=3)
        _, counts = np.unique(balanced.y, return_counts=True)
        assert counts[0] == counts[1] == 40
        assert len(balanced.X) == 80

    def test_originals_kept_bit_identical(self):
        dataset = imbalanced_dataset()
        balanced = smote(dataset, k=5, seed=3)
        n = len(dataset.X)
        assert_array_equal(balanced.X[:n], dataset.X)
        assert_array_equal(balanced.y[:n], dataset.y)
        assert all(p == PROVENANCE_REAL for p in balanced.provenance[:n])
        assert all(p == PROVENANCE_SYNTHETIC for p in balanced.provenance[n:])

    def test_synthetic_rows_interpolate_minority_pairs(self):
        dataset = imbalanced_dataset(n_major=25, n_minor=10, d=3, seed=4)
        k = 4
        balanced = smote(dataset, k=k, seed=9)
        X_min = dataset.X[dataset.y == 1]
        n_min = len(X_min)
        synthetic = balanced.X[len(dataset.X):]
        assert all(balanced.y[len(dataset.X):] == 1)
        for s, row in enumerate(synthetic):
            base = X_min[s % n_min]
            candidates = brute_knn(X_min.tolist(), s % n_min, k)
            found = False
            for j in candidates:
                delta = X_min[j] - base
                mask = delta != 0
                if not mask.any():
                    if np.array_equal(row, base):
                        found = True
                        break
                    continue
                lams = (row - base)[mask] / delta[mask]
                lam = lams[0]
                if np.allclose(lams, lam, rtol=1e-9, atol=1e-12) and 0.0 <= lam < 1.0:
                    assert_allclose(row, base + lam * delta, rtol=1e-12)
                    found = True
                    break
            assert found, f"synthetic row {s} is not on a base-neighbor segment"

    def test_replay_from_seed(self):
        dataset = imbalanced_dataset()
        first = smote(dataset, k=5, seed=11)
        second = smote(dataset, k=5, seed=11)
        assert_array_equal(first.X, second.X)
        assert_array_equal(first.y, second.y)

    def test_seed_matters(self):
        dataset = imbalanced_dataset()
        a = smote(dataset, k=5, seed=0)
        b = smote(dataset, k=5, seed=1)
        assert not np.array_equal(a.X, b.X)

    def test_documented_draw_order(self):
        # replaying the generator with the documented per-row order
        # (neighbor index first, then lambda) must reproduce every row
        dataset = imbalanced_dataset(n_major=20, n_minor=8, d=4, seed=5)
        k, seed = 3, 21
        balanced = smote(dataset, k=k, seed=seed)
        X_min = dataset.X[dataset.y == 1]
        n_min = len(X_min)
        need = len(balanced.X) - len(dataset.X)

        rng = np.random.default_rng(seed)
        expected = []
        for s in range(need):
            base = X_min[s % n_min]
            ranked = brute_knn(X_min.tolist(), s % n_min, k)
            nn = X_min[ranked[rng.integers(k)]]
            lam = rng.uniform()
            expected.append(base + lam * (nn - base))
        assert_array_equal(balanced.X[len(dataset.X):], np.array(expected))

    def test_majority_class_can_be_label_one(self):
        X = np.vstack([np.zeros((10, 2)), np.ones((30, 2))])
        X += np.random.default_rng(6).standard_normal(X.shape) * 0.1
        y = np.array([0] * 10 + [1] * 30)
        balanced = smote(FeatureDataset.from_arrays(X, y), k=3, seed=0)
        _, counts = np.unique(balanced.y, return_counts=True)
        assert counts[0] == counts[1] == 30
        assert all(balanced.y[40:] == 0)

    def test_balanced_input_returned_unchanged(self):
        X = np.random.default_rng(7).standard_normal((20, 3))
        y = np.array([0, 1] * 10)
        dataset = FeatureDataset.from_arrays(X, y)
        out = smote(dataset, k=3, seed=0)
        assert_array_equal(out.X, dataset.X)
        assert out.X is not dataset.X  # a copy, not the same buffer

    def test_single_class_rejected(self):
        dataset = FeatureDataset.from_arrays(np.zeros((5, 2)), np.ones(5))
        with pytest.raises(ValueError, match="both classes"):
            smote(dataset, k=2, seed=0)

    def test_non_binary_rejected(self):
        dataset = FeatureDataset.from_arrays(np.zeros((6, 2)), [0, 1, 2, 0, 1, 2])
        with pytest.raises(ValueError, match="binary"):
            smote(dataset, k=2, seed=0)

    def test_tiny_minority_rejected(self):
        X = np.random.default_rng(8).standard_normal((10, 2))
        y = np.array([0] * 7 + [1] * 3)
        with pytest.raises(ValueError, match="needs more"):
            smote(FeatureDataset.from_arrays(X, y), k=5, seed=0)


class TestFeatureDataset:
    def test_alignment_enforced(self):
        with pytest.raises(ValueError, match="aligned"):
            FeatureDataset(X=np.zeros((3, 2)), y=np.zeros(2),
                           provenance=np.array(["real"] * 3, dtype=object))

    def test_requires_2d(self):
        with pytest.raises(ValueError, match="2-D"):
            FeatureDataset(X=np.zeros(3), y=np.zeros(3),
                           provenance=np.array(["real"] * 3, dtype=object))


class TestSmoteOversampler:
    def test_matches_functional_form(self):
        dataset = imbalanced_dataset()
        sampler = SmoteOversampler(k_neighbors=5, random_state=13)
        X_out, y_out = sampler.fit_resample(dataset.X, dataset.y)
        expected = smote(dataset, k=5, seed=13)
        assert_array_equal(X_out, expected.X)
        assert_array_equal(y_out, expected.y)

    def test_get_params(self):
        sampler = SmoteOversampler(k_neighbors=7, random_state=2)
        assert sampler.get_params() == {"k_neighbors": 7, "random_state": 2}
