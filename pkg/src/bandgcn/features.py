"""Per-second, per-channel time and spectral features of EEG windows.

Eleven features are computed over one-second frames and assembled, six
frames per window, into a 23x66 node-feature matrix per window (column
block [11*t, 11*t + 10] holds second t's feature vector).

Conventions: all moments are population moments (1/M); skewness and
kurtosis are standardized third/fourth moments; any feature normalized by
a zero variance is defined as 0; spectral entropy uses the one-sided
magnitude-squared spectrum with the DC bin excluded, zero bins contribute
nothing, and an all-zero frame scores 0.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array

from .preprocess import WindowSegment

FEATURE_NAMES = (
    "spectral_entropy", "activity", "mobility", "complexity", "kurtosis",
    "skewness", "std", "max_amp", "variance", "median", "mean",
)

N_FEATURES = len(FEATURE_NAMES)


@dataclass
class SegmentFeatureMatrix:
    """Node-feature matrix for one window: channels x (11 * seconds)."""

    node_features: np.ndarray
    label: int
    band: str


def _safe_divide(numerator: np.ndarray, denominator: np.ndarray) -> np.ndarray:
    # 0/0 and x/0 both resolve to 0 by the zero-variance convention.
    out = np.zeros(np.broadcast_shapes(numerator.shape, denominator.shape))
    np.divide(numerator, denominator, out=out, where=denominator > 0)
    return out


def _frame_features(frames: np.ndarray) -> np.ndarray:
    """Feature kernel: (..., M) frames -> (..., 11) in FEATURE_NAMES order."""
    frames = np.asarray(frames, dtype=np.float64)
    mean = frames.mean(axis=-1)
    variance = frames.var(axis=-1)
    std = np.sqrt(variance)
    median = np.median(frames, axis=-1)
    max_amp = frames.max(axis=-1)

    d1 = np.diff(frames, axis=-1)
    d2 = np.diff(d1, axis=-1)
    var_d1 = d1.var(axis=-1)
    var_d2 = d2.var(axis=-1)
    mobility = np.sqrt(_safe_divide(var_d1, variance))
    mobility_d1 = np.sqrt(_safe_divide(var_d2, var_d1))
    complexity = _safe_divide(mobility_d1, mobility)

    z = _safe_divide(frames - mean[..., None], std[..., None])
    skewness = (z ** 3).mean(axis=-1)
    kurtosis = (z ** 4).mean(axis=-1)

    power = np.abs(np.fft.rfft(frames, axis=-1)) ** 2
    power = power[..., 1:]  # one-sided bins excluding DC
    total = power.sum(axis=-1)
    p = _safe_divide(power, total[..., None])
    log_p = np.zeros_like(p)
    np.log2(p, out=log_p, where=p > 0)
    spectral_entropy = -(p * log_p).sum(axis=-1)

    return np.stack([spectral_entropy, variance, mobility, complexity,
                     kurtosis, skewness, std, max_amp, variance, median,
                     mean], axis=-1)


def _as_frame(frame) -> np.ndarray:
    arr = np.asarray(frame, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("frame must be a non-empty 1-D sample vector")
    return arr


def moments(frame) -> tuple[float, float, float, float, float]:
    """Return (mean, std, variance, median, max_amp) of one frame.

    Population variance (1/M); median by the sorted-middle rule; max_amp is
    the signed maximum sample.
    """
    values = _frame_features(_as_frame(frame)[None])[0]
    return (float(values[10]), float(values[6]), float(values[8]),
            float(values[9]), float(values[7]))


def shape_stats(frame) -> tuple[float, float]:
    """Return (skewness, kurtosis): standardized third/fourth population
    moments; both 0 for a zero-variance frame."""
    values = _frame_features(_as_frame(frame)[None])[0]
    return float(values[5]), float(values[4])


def hjorth(frame) -> tuple[float, float, float]:
    """Return Hjorth (activity, mobility, complexity).

    activity = var(y); mobility = sqrt(var(dy)/var(y)) with dy the first
    difference; complexity = mobility(dy)/mobility(y); zero-variance
    denominators give 0.
    """
    arr = _as_frame(frame)
    if arr.size < 3:
        raise ValueError("Hjorth parameters need at least 3 samples")
    values = _frame_features(arr[None])[0]
    return float(values[1]), float(values[2]), float(values[3])


def spectral_entropy(frame) -> float:
    """Shannon entropy (bits) of the normalized one-sided power spectrum.

    The DC bin is excluded and zero bins contribute nothing; an all-zero
    frame scores 0.  For a 256-sample frame the spectrum spans bins 1..128.
    """
    arr = _as_frame(frame)
    if arr.size < 2:
        raise ValueError("spectral entropy needs at least 2 samples")
    return float(_frame_features(arr[None])[0][0])


def window_features(windows: np.ndarray, fs: float) -> np.ndarray:
    """Features for a batch of windows.

    windows: (n_windows, n_channels, L) with L divisible by fs.  Returns
    (n_windows, n_channels, 11 * L/fs) with the per-second column layout.
    """
    windows = np.asarray(windows, dtype=np.float64)
    if windows.ndim != 3:
        raise ValueError("windows must have shape (n_windows, n_channels, L)")
    frame_len = int(fs)
    if frame_len != fs or frame_len < 2:
        raise ValueError("fs must be an integer >= 2")
    n_windows, n_channels, L = windows.shape
    if L % frame_len != 0:
        raise ValueError(f"window length {L} is not divisible by fs {frame_len}")
    n_frames = L // frame_len
    frames = windows.reshape(n_windows, n_channels, n_frames, frame_len)
    feats = _frame_features(frames)
    return feats.reshape(n_windows, n_channels, n_frames * N_FEATURES)


def extract_segment_features(seg: WindowSegment) -> SegmentFeatureMatrix:
    """Feature matrix for one 23-channel window.

    Each channel contributes one FeatureVector11 per one-second frame;
    frame t occupies columns [11*t, 11*t + 10].
    """
    if seg.samples.shape[0] != 23:
        raise ValueError(f"expected 23 channels, got {seg.samples.shape[0]}")
    matrix = window_features(seg.samples[None], seg.fs)[0]
    return SegmentFeatureMatrix(node_features=matrix, label=seg.label,
                                band=seg.band)


class SegmentFeatureExtractor(BaseEstimator, TransformerMixin):
    """Stateless transformer from raw windows to per-second features.

    Input (n_windows, n_channels, L); output (n_windows, n_channels * cols)
    flattened channel-major, or (n_windows, n_channels, cols) with
    flatten=False.
    """

    def __init__(self, fs: float = 256.0, flatten: bool = True):
        self.fs = fs
        self.flatten = flatten

    def fit(self, X, y=None):
        check_array(X, allow_nd=True, dtype=np.float64)
        return self

    def transform(self, X) -> np.ndarray:
        X = check_array(X, allow_nd=True, dtype=np.float64)
        feats = window_features(X, self.fs)
        if self.flatten:
            return feats.reshape(feats.shape[0], -1)
        return feats


def feature_csv_header(n_columns: int) -> list[str]:
    return ["source_file", "band", "window_k", "label"] + [
        f"f_{i}" for i in range(n_columns)]


def write_feature_csv(path: str | Path, band: str, source_files: list[str],
                      window_ks: list[int], labels: np.ndarray,
                      X: np.ndarray) -> None:
    """Write one row per window: source_file, band, window_k, label, f_0...

    Floats use shortest round-trip decimal formatting so rereads are exact
    and reruns are byte-identical.
    """
    X = np.asarray(X, dtype=np.float64)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(feature_csv_header(X.shape[1]))
        for src, k, label, row in zip(source_files, window_ks, labels, X):
            writer.writerow([src, band, int(k), int(label)]
                            + [repr(float(v)) for v in row])


def read_feature_csv(path: str | Path) -> tuple[list[str], np.ndarray,
                                                np.ndarray, np.ndarray, str]:
    """Read a feature CSV back: (source_files, window_ks, labels, X, band)."""
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        if header[:4] != ["source_file", "band", "window_k", "label"]:
            raise ValueError(f"{path}: not a feature CSV (header {header[:4]})")
        sources, ks, labels, rows, band = [], [], [], [], ""
        for record in reader:
            sources.append(record[0])
            band = record[1]
            ks.append(int(record[2]))
            labels.append(int(record[3]))
            rows.append([float(v) for v in record[4:]])
    return (sources, np.asarray(ks, dtype=int), np.asarray(labels, dtype=int),
            np.asarray(rows, dtype=np.float64), band)
