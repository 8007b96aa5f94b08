"""The 23-node bipolar montage graph and its normalized propagation matrix.

Two channels are adjacent when they share an electrode (after stripping
the -0/-1 duplicate tag) or when one contains a midline electrode and the
other its lateral 10-20 neighbor (FZ~F3/F4, CZ~C3/C4, PZ~P3/P4).  The
midline rule encodes physical scalp adjacency; without it the FZ-CZ/CZ-PZ
chain would be an isolated component.  The propagation operator is the
self-loop symmetric normalization S = D~^(-1/2) (A + I) D~^(-1/2).
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .signal_io import ChannelLabel

MONTAGE_CHANNELS = (
    "FP1-F7", "F7-T7", "T7-P7", "P7-O1",
    "FP1-F3", "F3-C3", "C3-P3", "P3-O1",
    "FP2-F4", "F4-C4", "C4-P4", "P4-O2",
    "FP2-F8", "F8-T8", "T8-P8-0", "P8-O2",
    "FZ-CZ", "CZ-PZ", "P7-T7", "T7-FT9",
    "FT9-FT10", "FT10-T8", "T8-P8-1",
)

_MIDLINE_NEIGHBORS = {
    "FZ": frozenset({"F3", "F4"}),
    "CZ": frozenset({"C3", "C4"}),
    "PZ": frozenset({"P3", "P4"}),
}


@dataclass(frozen=True)
class Montage:
    """Ordered channel list defining the graph's node set."""

    channels: tuple[ChannelLabel, ...]

    def __post_init__(self):
        raws = [ch.raw for ch in self.channels]
        if len(set(raws)) != len(raws):
            raise ValueError("montage channel labels must be unique")

    @classmethod
    def canonical(cls) -> "Montage":
        return cls(channels=tuple(ChannelLabel.parse(name)
                                  for name in MONTAGE_CHANNELS))

    @property
    def n_nodes(self) -> int:
        return len(self.channels)


@dataclass
class EegGraph:
    """Adjacency A, self-loop form A~ = A + I, its degrees, and S."""

    A: np.ndarray
    A_tilde: np.ndarray
    degrees: np.ndarray
    S: np.ndarray


@dataclass
class GraphValidationReport:
    passed: bool
    failures: list[str]
    connected: bool
    spectral_radius: float


def _physically_adjacent(a: frozenset[str], b: frozenset[str]) -> bool:
    if a & b:
        return True
    for midline, lateral in _MIDLINE_NEIGHBORS.items():
        if (midline in a and lateral & b) or (midline in b and lateral & a):
            return True
    return False


def build_adjacency(montage: Montage) -> np.ndarray:
    """Binary adjacency over the montage channels (zero diagonal, symmetric)."""
    electrode_sets = [ch.electrodes() for ch in montage.channels]
    n = montage.n_nodes
    A = np.zeros((n, n), dtype=np.uint8)
    for i in range(n):
        for j in range(i + 1, n):
            if _physically_adjacent(electrode_sets[i], electrode_sets[j]):
                A[i, j] = A[j, i] = 1
    return A


def normalize(A: np.ndarray) -> EegGraph:
    """Symmetric self-loop normalization S_ij = A~_ij / sqrt((d_i+1)(d_j+1))."""
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A must be square")
    if not np.array_equal(A, A.T):
        raise ValueError("A must be symmetric")
    if np.any(np.diag(A) != 0):
        raise ValueError("A must have a zero diagonal")
    if not np.isin(A, (0, 1)).all():
        raise ValueError("A must be binary")
    A = A.astype(np.float64)
    A_tilde = A + np.eye(len(A))
    degrees = A_tilde.sum(axis=1)
    S = A_tilde / np.sqrt(np.outer(degrees, degrees))
    return EegGraph(A=A, A_tilde=A_tilde, degrees=degrees, S=S)


def build_montage_graph(montage: Montage | None = None) -> EegGraph:
    """Normalized graph for the canonical (or given) montage."""
    return normalize(build_adjacency(montage or Montage.canonical()))


def _connected(A: np.ndarray) -> bool:
    n = len(A)
    seen = np.zeros(n, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        node = stack.pop()
        for neighbor in np.nonzero(A[node])[0]:
            if not seen[neighbor]:
                seen[neighbor] = True
                stack.append(int(neighbor))
    return bool(seen.all())


def _power_iteration_radius(S: np.ndarray, iterations: int = 200) -> float:
    # Deterministic start with a small ramp so no eigenvector is missed
    # by symmetry.
    n = len(S)
    v = np.ones(n) + np.arange(n) / (10.0 * n)
    v /= np.linalg.norm(v)
    radius = 0.0
    for _ in range(iterations):
        w = S @ v
        norm = np.linalg.norm(w)
        if norm == 0:
            return 0.0
        radius = norm
        v = w / norm
    return float(radius)


def validate(graph: EegGraph) -> GraphValidationReport:
    """Check symmetry, connectivity, and the spectral radius bound of S."""
    failures = []
    for name, M in (("A", graph.A), ("S", graph.S)):
        delta = np.abs(M - M.T)
        if delta.max() > 1e-12:
            i, j = np.unravel_index(np.argmax(delta), delta.shape)
            failures.append(f"{name} is asymmetric at ({i}, {j}): "
                            f"{M[i, j]!r} vs {M[j, i]!r}")
    if np.any(graph.S < 0):
        i, j = np.unravel_index(np.argmin(graph.S), graph.S.shape)
        failures.append(f"S has a negative entry at ({i}, {j})")
    connected = _connected(graph.A)
    if not connected:
        failures.append("graph is not connected")
    radius = _power_iteration_radius(graph.S)
    if radius > 1 + 1e-9:
        failures.append(f"spectral radius {radius} exceeds 1")
    return GraphValidationReport(passed=not failures, failures=failures,
                                 connected=connected, spectral_radius=radius)


def adjacency_sha256(A: np.ndarray) -> str:
    """Fingerprint of the binary adjacency, for checkpoint/graph matching."""
    payload = np.ascontiguousarray(A, dtype=np.uint8).tobytes()
    return hashlib.sha256(payload).hexdigest()


def write_edge_csv(path: str | Path, montage: Montage, A: np.ndarray) -> None:
    """Export the edge list as ``node_i,node_j`` rows of raw channel labels."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["node_i", "node_j"])
        for i in range(len(A)):
            for j in range(i + 1, len(A)):
                if A[i, j]:
                    writer.writerow([montage.channels[i].raw,
                                     montage.channels[j].raw])
