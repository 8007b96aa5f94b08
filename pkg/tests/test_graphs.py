import csv
import hashlib

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from bandgcn.graphs import (
    MONTAGE_CHANNELS,
    EegGraph,
    Montage,
    adjacency_sha256,
    build_adjacency,
    build_montage_graph,
    normalize,
    validate,
    write_edge_csv,
)
from bandgcn.signal_io import ChannelLabel


def montage_index(raw):
    return MONTAGE_CHANNELS.index(raw)


class TestMontage:
    def test_canonical_has_23_unique_channels(self):
        montage = Montage.canonical()
        assert montage.n_nodes == 23
        assert len(MONTAGE_CHANNELS) == 23
        assert len(set(MONTAGE_CHANNELS)) == 23

    def test_duplicate_labels_rejected(self):
        channel = ChannelLabel.parse("C3-P3")
        with pytest.raises(ValueError, match="unique"):
            Montage(channels=(channel, channel))


class TestBuildAdjacency:
    def setup_method(self):
        self.A = build_adjacency(Montage.canonical())

    def test_structure(self):
        assert self.A.dtype == np.uint8
        assert self.A.shape == (23, 23)
        assert_array_equal(self.A, self.A.T)
        assert_array_equal(np.diag(self.A), np.zeros(23, dtype=np.uint8))
        assert np.isin(self.A, (0, 1)).all()

    def test_shared_electrode_edges(self):
        # chain neighbors share one electrode
        assert self.A[montage_index("FP1-F7"), montage_index("F7-T7")] == 1
        # parasagittal split from the same front electrode
        assert self.A[montage_index("FP1-F7"), montage_index("FP1-F3")] == 1
        # duplicate pair shares both electrodes
        assert self.A[montage_index("T8-P8-0"), montage_index("T8-P8-1")] == 1

    def test_midline_edges(self):
        # FZ-CZ touches the lateral central chains through FZ~F3/F4, CZ~C3/C4
        assert self.A[montage_index("FZ-CZ"), montage_index("F3-C3")] == 1
        assert self.A[montage_index("FZ-CZ"), montage_index("F4-C4")] == 1
        assert self.A[montage_index("CZ-PZ"), montage_index("C3-P3")] == 1
        assert self.A[montage_index("CZ-PZ"), montage_index("P4-O2")] == 1

    def test_distant_channels_not_linked(self):
        assert self.A[montage_index("FP1-F7"), montage_index("P4-O2")] == 0
        assert self.A[montage_index("FP2-F8"), montage_index("P7-O1")] == 0

    def test_every_node_has_a_neighbor(self):
        assert (self.A.sum(axis=1) >= 1).all()


class TestNormalize:
    def test_path_graph_by_hand(self):
        # 3-node path: degrees with self-loops are (2, 3, 2); each S entry
        # is 1/sqrt(d_i d_j) where A~ has a one
        A = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]])
        graph = normalize(A)
        expected = np.array([
            [1 / 2, 1 / np.sqrt(6), 0],
            [1 / np.sqrt(6), 1 / 3, 1 / np.sqrt(6)],
            [0, 1 / np.sqrt(6), 1 / 2],
        ])
        assert_allclose(graph.S, expected, rtol=1e-15)
        assert_array_equal(graph.degrees, [2, 3, 2])
        assert_array_equal(graph.A_tilde, A + np.eye(3))

    def test_complete_graph_is_uniform(self):
        n = 6
        A = np.ones((n, n), dtype=int) - np.eye(n, dtype=int)
        graph = normalize(A)
        assert_allclose(graph.S, np.full((n, n), 1.0 / n), atol=1e-15)

    def test_single_node(self):
        graph = normalize(np.zeros((1, 1), dtype=int))
        assert_array_equal(graph.S, [[1.0]])

    def test_input_validation(self):
        with pytest.raises(ValueError, match="square"):
            normalize(np.zeros((2, 3)))
        with pytest.raises(ValueError, match="symmetric"):
            normalize(np.array([[0, 1], [0, 0]]))
        with pytest.raises(ValueError, match="zero diagonal"):
            normalize(np.eye(2, dtype=int))
        with pytest.raises(ValueError, match="binary"):
            normalize(np.array([[0, 2], [2, 0]]))


class TestMontageGraph:
    def setup_method(self):
        self.graph = build_montage_graph()

    def test_validation_passes(self):
        report = validate(self.graph)
        assert report.passed
        assert report.failures == []
        assert report.connected

    def test_spectral_radius_bound(self):
        report = validate(self.graph)
        assert report.spectral_radius <= 1 + 1e-9
        # S always has eigenvalue 1 (vector sqrt(d)), so the radius is
        # exactly 1 up to iteration error
        assert report.spectral_radius == pytest.approx(1.0, abs=1e-9)

    def test_eigenvector_sqrt_degrees(self):
        v = np.sqrt(self.graph.degrees)
        assert_allclose(self.graph.S @ v, v, rtol=1e-12)

    def test_row_normalization_identity(self):
        # S_ij * sqrt(d_i d_j) recovers A~ exactly
        d = self.graph.degrees
        recovered = self.graph.S * np.sqrt(np.outer(d, d))
        assert_allclose(recovered, self.graph.A_tilde, rtol=1e-12)


class TestValidateDetectsDamage:
    def test_asymmetry_reported_with_location(self):
        graph = build_montage_graph()
        graph.S = graph.S.copy()
        graph.S[2, 5] += 1e-6
        report = validate(graph)
        assert not report.passed
        assert any("asymmetric at (2, 5)" in f for f in report.failures)

    def test_disconnected_reported(self):
        A = np.zeros((4, 4), dtype=int)
        A[0, 1] = A[1, 0] = 1
        A[2, 3] = A[3, 2] = 1
        report = validate(normalize(A))
        assert not report.connected
        assert any("not connected" in f for f in report.failures)

    def test_inflated_radius_reported(self):
        graph = build_montage_graph()
        graph.S = graph.S * 1.5
        report = validate(graph)
        assert not report.passed
        assert any("spectral radius" in f for f in report.failures)

    def test_negative_entry_reported(self):
        graph = build_montage_graph()
        graph.S = graph.S.copy()
        graph.S[1, 1] = -0.5
        report = validate(graph)
        assert any("negative" in f for f in report.failures)


class TestFingerprint:
    def test_matches_documented_serialization(self):
        A = build_adjacency(Montage.canonical())
        expected = hashlib.sha256(A.astype(np.uint8).tobytes()).hexdigest()
        assert adjacency_sha256(A) == expected

    def test_sensitive_to_any_edge(self):
        A = build_adjacency(Montage.canonical())
        fingerprint = adjacency_sha256(A)
        B = A.copy()
        B[0, 22] ^= 1
        B[22, 0] ^= 1
        assert adjacency_sha256(B) != fingerprint

    def test_dtype_independent(self):
        A = build_adjacency(Montage.canonical())
        assert adjacency_sha256(A.astype(np.float64)) == adjacency_sha256(A)


class TestEdgeCsv:
    def test_round_trip(self, tmp_path):
        montage = Montage.canonical()
        A = build_adjacency(montage)
        path = tmp_path / "edges.csv"
        write_edge_csv(path, montage, A)
        with open(path) as handle:
            rows = list(csv.reader(handle))
        assert rows[0] == ["node_i", "node_j"]
        edges = rows[1:]
        assert len(edges) == int(A.sum()) // 2
        raw_index = {name: i for i, name in enumerate(MONTAGE_CHANNELS)}
        for a, b in edges:
            i, j = raw_index[a], raw_index[b]
            assert i < j
            assert A[i, j] == 1
