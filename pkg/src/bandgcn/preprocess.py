"""Band-pass filtering, 6-second windowing, and ictal labeling.

Each frequency band is isolated with a 4th-order Butterworth band-pass
applied forward and backward (zero phase).  Recordings are tiled into
non-overlapping windows of T_w seconds; a window is labeled ictal when its
sample range intersects any annotated seizure interval.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import butter, sosfiltfilt

from .signal_io import Recording, SeizureAnnotation

logger = logging.getLogger(__name__)

# Even-reflection padding, 3x the effective filter order (a 4th-order
# band-pass design has effective order 8), trimmed after filtering.
PAD_LEN = 24


@dataclass(frozen=True)
class BandDefinition:
    name: str
    f_lo: float
    f_hi: float

    def __post_init__(self):
        if not 0 < self.f_lo < self.f_hi:
            raise ValueError(f"need 0 < f_lo < f_hi, got ({self.f_lo}, {self.f_hi})")

    def contains(self, frequency_hz: float) -> bool:
        return self.f_lo <= frequency_hz <= self.f_hi


CANONICAL_BANDS = (
    BandDefinition("Delta", 0.5, 4.0),
    BandDefinition("Theta", 4.0, 8.0),
    BandDefinition("Alpha", 8.0, 13.0),
    BandDefinition("LowerBeta", 13.0, 22.0),
    BandDefinition("HigherBeta", 22.0, 30.0),
    BandDefinition("Broadband", 0.5, 40.0),
)

BAND_BY_NAME = {band.name: band for band in CANONICAL_BANDS}


@dataclass
class WindowSegment:
    """One fixed-length window of a (band-filtered) recording."""

    band: str
    index_k: int
    samples: np.ndarray  # channels x L
    L: int
    label: int
    source_file: str
    fs: float


def bandpass(recording: Recording, band: BandDefinition) -> Recording:
    """Zero-phase 4th-order Butterworth band-pass, each channel independently.

    Output length equals input length; edge transients are handled by
    even-reflection padding of PAD_LEN samples on both ends, trimmed after
    the backward pass.
    """
    nyquist = recording.fs / 2.0
    if band.f_hi >= nyquist:
        raise ValueError(
            f"band {band.name} upper edge {band.f_hi} Hz reaches the Nyquist "
            f"frequency {nyquist} Hz")
    if recording.n_samples <= PAD_LEN:
        raise ValueError(
            f"recording has {recording.n_samples} samples; need more than "
            f"{PAD_LEN} for edge padding")
    sos = butter(4, [band.f_lo, band.f_hi], btype="bandpass",
                 fs=recording.fs, output="sos")
    filtered = sosfiltfilt(sos, recording.data, axis=-1,
                           padtype="even", padlen=PAD_LEN)
    return Recording(channels=list(recording.channels), fs=recording.fs,
                     data=filtered, duration_s=recording.duration_s,
                     file_id=recording.file_id)


def segment(recording: Recording, t_w_s: float = 6.0,
            band: str = "Broadband") -> list[WindowSegment]:
    """Tile a recording into non-overlapping windows of t_w_s seconds.

    Window k covers sample indices [k*L, k*L + L - 1]; the trailing
    remainder shorter than L is discarded.  A recording shorter than one
    window yields an empty list with a logged warning.
    """
    length_exact = t_w_s * recording.fs
    L = int(round(length_exact))
    if not math.isclose(length_exact, L):
        raise ValueError(f"window length {t_w_s} s x {recording.fs} Hz is not "
                         f"an integer sample count")
    n_windows = recording.n_samples // L
    if n_windows == 0:
        logger.warning("recording %r (%d samples) is shorter than one %d-sample "
                       "window; no segments produced",
                       recording.file_id, recording.n_samples, L)
        return []
    return [WindowSegment(band=band, index_k=k,
                          samples=recording.data[:, k * L:(k + 1) * L],
                          L=L, label=0, source_file=recording.file_id,
                          fs=recording.fs)
            for k in range(n_windows)]


def label_windows(segments: list[WindowSegment],
                  annotations: list[SeizureAnnotation]) -> list[WindowSegment]:
    """Assign binary ictal labels by sample-range intersection.

    For each annotation, n_s = floor(t_s * fs) and n_e = floor(t_e * fs);
    window k is ictal when [k*L, (k+1)*L - 1] intersects [n_s, n_e] for any
    annotation.  Callers pass annotations already filtered to the segments'
    source file.  Returns relabeled copies; no annotations means all zeros.
    """
    labeled = []
    for seg in segments:
        spans = [(math.floor(a.t_s * seg.fs), math.floor(a.t_e * seg.fs))
                 for a in annotations]
        first = seg.index_k * seg.L
        last = first + seg.L - 1
        ictal = any(first <= n_e and last >= n_s for n_s, n_e in spans)
        labeled.append(replace(seg, label=int(ictal)))
    return labeled


def extract_ictal_only(segments: list[WindowSegment]) -> list[WindowSegment]:
    """Return the label-1 subset, order preserved."""
    return [seg for seg in segments if seg.label == 1]
