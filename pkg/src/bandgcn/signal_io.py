"""EDF ingestion, seizure annotation loading, and synthetic EEG generation.

The EDF reader implements the classic 16-bit container: a 256-byte ASCII
fixed header, ``ns`` per-signal headers of 256 bytes laid out field-major,
and data records of little-endian two's-complement samples, channel-major
within each record.  Digital values map to physical units through the
per-signal affine calibration

    phys = physMin + (dig - digMin) * (physMax - physMin) / (digMax - digMin)

Annotation pseudo-channels (label "EDF Annotations") are skipped; embedded
EDF+ annotations are not parsed.  Seizure timings come from a sidecar CSV.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

_FIXED_HEADER_BYTES = 256
_SIGNAL_HEADER_BYTES = 256
_NS_OFFSET = 252


class EdfParseError(ValueError):
    """Malformed EDF content; ``offset`` is the byte position at fault."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class AnnotationError(ValueError):
    """Malformed annotation CSV; ``line`` is the 1-based line at fault."""

    def __init__(self, message: str, line: int):
        super().__init__(f"{message} (line {line})")
        self.line = line


@dataclass(frozen=True)
class ChannelLabel:
    """A montage channel name split into its electrode pair.

    Bipolar labels split on the first ``-``; a trailing ``-0``/``-1``
    disambiguator (as in ``T8-P8-0``) is stripped from ``electrode_b`` and
    retained in ``duplicate_tag`` so duplicate montage pairs stay distinct.
    Labels without a separator keep ``electrode_b`` empty.
    """

    raw: str
    electrode_a: str
    electrode_b: str
    duplicate_tag: str = ""

    @classmethod
    def parse(cls, raw: str) -> "ChannelLabel":
        text = raw.strip()
        if not text:
            raise ValueError("empty channel label")
        if "-" not in text:
            return cls(raw=text, electrode_a=text.upper(), electrode_b="")
        a, b = text.split("-", 1)
        tag = ""
        if b.endswith(("-0", "-1")):
            b, tag = b[:-2], b[-1]
        a, b = a.strip().upper(), b.strip().upper()
        if not a or not b:
            raise ValueError(f"channel label {text!r} has an empty electrode name")
        return cls(raw=text, electrode_a=a, electrode_b=b, duplicate_tag=tag)

    def electrodes(self) -> frozenset[str]:
        names = {self.electrode_a}
        if self.electrode_b:
            names.add(self.electrode_b)
        return frozenset(names)


@dataclass
class Recording:
    """Multichannel sampled EEG in physical units (microvolts)."""

    channels: list[ChannelLabel]
    fs: float
    data: np.ndarray  # channels x samples
    duration_s: float
    file_id: str = ""

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2:
            raise ValueError("data must be a channels x samples matrix")
        if len(self.channels) != self.data.shape[0]:
            raise ValueError("channel list length does not match data rows")
        if not self.fs > 0:
            raise ValueError("sampling rate must be positive")
        if round(self.duration_s * self.fs) != self.data.shape[1]:
            raise ValueError("duration_s * fs does not match sample count")

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class SeizureAnnotation:
    file_id: str
    t_s: float
    t_e: float


@dataclass(frozen=True)
class SynthesisSpec:
    """Recipe for a reproducible synthetic EEG recording."""

    duration_s: float
    fs: float
    n_channels: int
    seizure_intervals: tuple[tuple[float, float], ...] = ()
    burst_frequencies_hz: tuple[float, ...] = (3.0, 20.0)
    burst_amplitude_ratio: float = 5.0
    noise_seed: int = 0


def _ascii(raw: bytes, offset: int, length: int) -> str:
    return raw[offset:offset + length].decode("latin-1").strip()


def _ascii_int(raw: bytes, offset: int, length: int, what: str) -> int:
    text = _ascii(raw, offset, length)
    try:
        return int(text)
    except ValueError:
        raise EdfParseError(f"non-numeric {what}: {text!r}", offset) from None


def _ascii_float(raw: bytes, offset: int, length: int, what: str) -> float:
    text = _ascii(raw, offset, length)
    try:
        return float(text)
    except ValueError:
        raise EdfParseError(f"non-numeric {what}: {text!r}", offset) from None


def parse_edf(raw: bytes) -> Recording:
    """Parse EDF bytes into a physically calibrated Recording.

    Raises EdfParseError (with the offending byte offset) on a truncated
    header, a data region longer than the file, or digMax <= digMin.
    Annotation pseudo-channels are dropped; the retained channels must
    share one sampling rate.
    """
    if len(raw) < _FIXED_HEADER_BYTES:
        raise EdfParseError(
            f"fixed header truncated: need 256 bytes, have {len(raw)}", len(raw))

    ns = _ascii_int(raw, _NS_OFFSET, 4, "signal count")
    if ns < 1:
        raise EdfParseError(f"signal count must be >= 1, got {ns}", _NS_OFFSET)
    n_records = _ascii_int(raw, 236, 8, "record count")
    if n_records < 0:
        raise EdfParseError("record count unknown (-1) is unsupported", 236)
    record_duration = _ascii_float(raw, 244, 8, "record duration")
    if not record_duration > 0:
        raise EdfParseError(f"record duration must be positive, got {record_duration}", 244)

    header_len = _FIXED_HEADER_BYTES + ns * _SIGNAL_HEADER_BYTES
    if len(raw) < header_len:
        raise EdfParseError(
            f"signal headers truncated: need {header_len} bytes, have {len(raw)}",
            len(raw))

    # Per-signal header fields are laid out field-major after the fixed header.
    base = _FIXED_HEADER_BYTES
    off_label = base
    off_phys_min = base + ns * (16 + 80 + 8)
    off_phys_max = off_phys_min + ns * 8
    off_dig_min = off_phys_max + ns * 8
    off_dig_max = off_dig_min + ns * 8
    off_spr = off_dig_max + ns * 8 + ns * 80

    labels = [_ascii(raw, off_label + 16 * i, 16) for i in range(ns)]
    phys_min = [_ascii_float(raw, off_phys_min + 8 * i, 8, "physical minimum") for i in range(ns)]
    phys_max = [_ascii_float(raw, off_phys_max + 8 * i, 8, "physical maximum") for i in range(ns)]
    dig_min = [_ascii_int(raw, off_dig_min + 8 * i, 8, "digital minimum") for i in range(ns)]
    dig_max = [_ascii_int(raw, off_dig_max + 8 * i, 8, "digital maximum") for i in range(ns)]
    spr = [_ascii_int(raw, off_spr + 8 * i, 8, "samples per record") for i in range(ns)]

    for i in range(ns):
        if dig_max[i] <= dig_min[i]:
            raise EdfParseError(
                f"signal {i} ({labels[i]!r}): digMax {dig_max[i]} <= digMin {dig_min[i]}",
                off_dig_max + 8 * i)
        if spr[i] < 1:
            raise EdfParseError(
                f"signal {i} ({labels[i]!r}): samples per record must be >= 1",
                off_spr + 8 * i)

    total_spr = sum(spr)
    declared_end = header_len + n_records * total_spr * 2
    if declared_end > len(raw):
        raise EdfParseError(
            f"data region truncated: records declare {declared_end} bytes, "
            f"file has {len(raw)}", len(raw))

    flat = np.frombuffer(raw, dtype="<i2", count=n_records * total_spr,
                         offset=header_len)
    records = flat.reshape(n_records, total_spr)

    keep = [i for i in range(ns) if labels[i] != "EDF Annotations"]
    if not keep:
        raise EdfParseError("no signal channels (annotation channels only)", off_label)
    if len({spr[i] for i in keep}) != 1:
        raise EdfParseError("mixed sampling rates across signal channels are "
                            "unsupported", off_spr)

    starts = np.concatenate(([0], np.cumsum(spr)))
    channels = []
    rows = []
    for i in keep:
        dig = records[:, starts[i]:starts[i + 1]].reshape(-1).astype(np.float64)
        gain = (phys_max[i] - phys_min[i]) / (dig_max[i] - dig_min[i])
        rows.append(phys_min[i] + (dig - dig_min[i]) * gain)
        channels.append(ChannelLabel.parse(labels[i]))

    fs = spr[keep[0]] / record_duration
    return Recording(channels=channels, fs=fs, data=np.vstack(rows),
                     duration_s=n_records * record_duration)


def read_edf(path: str | Path) -> Recording:
    """Parse an EDF file from disk; file_id is the file's base name."""
    path = Path(path)
    recording = parse_edf(path.read_bytes())
    recording.file_id = path.name
    return recording


def _format_physical(value: float) -> str:
    # Header numeric fields are 8 ASCII chars; keep one for a minus sign.
    for fmt in ("%.7g", "%.6g", "%.5g", "%.4g", "%.3g", "%.2g", "%.1g"):
        text = fmt % value
        if len(text) <= 7:
            return text
    raise ValueError(f"cannot format {value} in 7 characters")


def serialize_recording(recording: Recording,
                        patient_id: str = "X",
                        recording_id: str = "bandgcn") -> bytes:
    """Serialize a Recording to EDF bytes (1-second data records).

    Each channel is quantized symmetrically into digital range
    [-32767, 32767]; parse_edf(serialize_recording(r)) reproduces samples
    within one digital quantization step.  Requires an integer sampling
    rate and a whole number of seconds.
    """
    fs = recording.fs
    if fs != int(fs):
        raise ValueError("EDF serialization requires an integer sampling rate")
    spr = int(fs)
    n_samples = recording.n_samples
    if n_samples % spr != 0:
        raise ValueError("EDF serialization requires a whole number of seconds")
    n_records = n_samples // spr
    ns = len(recording.channels)

    labels, pmin_txt, pmax_txt, scaled = [], [], [], []
    for ch, row in zip(recording.channels, recording.data):
        label = ch.raw
        if len(label) > 16 or not label.isascii():
            raise ValueError(f"channel label {label!r} does not fit EDF's 16 ASCII chars")
        labels.append(label)
        peak = float(np.max(np.abs(row))) if row.size else 0.0
        if peak == 0.0:
            peak = 1.0
        text = _format_physical(peak)
        phys_max = float(text)
        pmax_txt.append(text)
        pmin_txt.append("-" + text)
        dig = np.clip(np.rint(row * (32767.0 / phys_max)), -32767, 32767)
        scaled.append(dig.astype("<i2"))

    def fixed(text: str, width: int) -> bytes:
        raw = text.encode("ascii")
        if len(raw) > width:
            raise ValueError(f"header field {text!r} exceeds {width} bytes")
        return raw.ljust(width)

    header_len = _FIXED_HEADER_BYTES + ns * _SIGNAL_HEADER_BYTES
    parts = [
        fixed("0", 8),
        fixed(patient_id, 80),
        fixed(recording_id, 80),
        fixed("01.01.00", 8),
        fixed("00.00.00", 8),
        fixed(str(header_len), 8),
        fixed("", 44),
        fixed(str(n_records), 8),
        fixed("1", 8),
        fixed(str(ns), 4),
    ]
    parts += [fixed(lab, 16) for lab in labels]
    parts += [fixed("", 80)] * ns                      # transducer type
    parts += [fixed("uV", 8)] * ns                     # physical dimension
    parts += [fixed(t, 8) for t in pmin_txt]
    parts += [fixed(t, 8) for t in pmax_txt]
    parts += [fixed("-32767", 8)] * ns
    parts += [fixed("32767", 8)] * ns
    parts += [fixed("", 80)] * ns                      # prefiltering
    parts += [fixed(str(spr), 8)] * ns
    parts += [fixed("", 32)] * ns

    digital = np.stack(scaled)                         # ns x n_samples
    records = digital.reshape(ns, n_records, spr).transpose(1, 0, 2)
    return b"".join(parts) + records.tobytes()


def write_edf(path: str | Path, recording: Recording) -> None:
    Path(path).write_bytes(serialize_recording(recording))


def load_annotations(text: str) -> list[SeizureAnnotation]:
    """Parse seizure annotations from CSV text ``file_id,start_s,end_s``.

    A header line is optional.  Rows violating t_s >= 0 or t_e > t_s are
    rejected individually with a logged diagnostic; non-numeric data rows
    raise AnnotationError.  Empty input yields an empty list.
    """
    annotations = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != 3:
            raise AnnotationError(
                f"expected 3 comma-separated fields, got {len(fields)}", line_no)
        file_id, start_txt, end_txt = fields
        try:
            t_s, t_e = float(start_txt), float(end_txt)
        except ValueError:
            if line_no == 1:
                continue  # optional header line
            raise AnnotationError(
                f"non-numeric interval {start_txt!r},{end_txt!r}", line_no) from None
        if t_s < 0 or t_e <= t_s:
            logger.warning("annotation line %d rejected: interval [%s, %s] of %r "
                           "is empty or negative", line_no, start_txt, end_txt, file_id)
            continue
        annotations.append(SeizureAnnotation(file_id=file_id, t_s=t_s, t_e=t_e))
    return annotations


def _validate_spec(spec: SynthesisSpec) -> None:
    if spec.n_channels < 1:
        raise ValueError("n_channels must be >= 1")
    if not spec.duration_s > 0 or not spec.fs > 0:
        raise ValueError("duration_s and fs must be positive")
    if spec.burst_frequencies_hz and spec.fs < 2 * max(spec.burst_frequencies_hz):
        raise ValueError("fs must be at least twice the highest burst frequency")
    if not spec.burst_amplitude_ratio > 0:
        raise ValueError("burst_amplitude_ratio must be positive")
    previous_end = None
    for t_s, t_e in sorted(spec.seizure_intervals):
        if t_s < 0 or t_e > spec.duration_s or t_e <= t_s:
            raise ValueError(f"interval ({t_s}, {t_e}) is outside [0, {spec.duration_s}]")
        if previous_end is not None and t_s < previous_end:
            raise ValueError("seizure intervals must be disjoint")
        previous_end = t_e


def synthesize_recording(spec: SynthesisSpec,
                         file_id: str = "synthetic.edf",
                         ) -> tuple[Recording, list[SeizureAnnotation]]:
    """Generate a labeled synthetic EEG recording.

    Background: per-channel 1/f-shaped noise from the seeded generator
    (spectral amplitude 1/sqrt(max(f, 0.5)), flattened below 0.5 Hz to keep
    the DC region bounded).  Within each seizure interval, sinusoidal bursts
    at the requested frequencies are added on every channel, scaled to
    burst_amplitude_ratio times that channel's background standard
    deviation.  Identical spec + seed gives bit-identical output.
    """
    _validate_spec(spec)
    n = int(round(spec.duration_s * spec.fs))
    rng = np.random.default_rng(spec.noise_seed)
    shaping = 1.0 / np.sqrt(np.maximum(np.fft.rfftfreq(n, 1.0 / spec.fs), 0.5))

    sample_intervals = [(int(math.floor(t_s * spec.fs)), int(math.floor(t_e * spec.fs)))
                        for t_s, t_e in spec.seizure_intervals]
    t = np.arange(n) / spec.fs

    data = np.empty((spec.n_channels, n))
    for c in range(spec.n_channels):  # channel-by-channel keeps memory bounded
        white = rng.standard_normal(n)
        channel = np.fft.irfft(np.fft.rfft(white) * shaping, n=n)
        amplitude = spec.burst_amplitude_ratio * channel.std()
        for i0, i1 in sample_intervals:
            for f in spec.burst_frequencies_hz:
                channel[i0:i1] += amplitude * np.sin(2 * np.pi * f * t[i0:i1])
        data[c] = channel

    channels = [ChannelLabel.parse(name) for name in _synthetic_labels(spec.n_channels)]
    recording = Recording(channels=channels, fs=spec.fs, data=data,
                          duration_s=n / spec.fs, file_id=file_id)
    annotations = [SeizureAnnotation(file_id=file_id, t_s=t_s, t_e=t_e)
                   for t_s, t_e in spec.seizure_intervals]
    return recording, annotations


def _synthetic_labels(n_channels: int) -> list[str]:
    if n_channels == 23:
        from .graphs import MONTAGE_CHANNELS
        return list(MONTAGE_CHANNELS)
    return [f"CH{i:02d}-REF" for i in range(n_channels)]


def random_seizure_intervals(n_intervals: int,
                             duration_s: float,
                             min_len_s: float,
                             max_len_s: float,
                             seed: int,
                             lead_in_s: float = 30.0,
                             min_gap_s: float = 10.0,
                             ) -> tuple[tuple[float, float], ...]:
    """Place disjoint seizure intervals of random length along a recording.

    Lengths are uniform on [min_len_s, max_len_s].  The remaining free time
    after the lead-in and mandatory gaps is split into random extra spacings,
    so any duration with room for the intervals themselves works, short test
    recordings included.  Deterministic for a given seed.
    """
    if n_intervals < 0:
        raise ValueError("n_intervals must be >= 0")
    if not 0 < min_len_s <= max_len_s:
        raise ValueError("need 0 < min_len_s <= max_len_s")
    if n_intervals == 0:
        return ()
    rng = np.random.default_rng(seed)
    lengths = rng.uniform(min_len_s, max_len_s, n_intervals)
    slack = duration_s - lead_in_s - float(lengths.sum()) - n_intervals * min_gap_s
    if slack < 0:
        raise ValueError(
            f"{n_intervals} intervals of up to {max_len_s:g} s do not fit in "
            f"{duration_s:g} s with a {lead_in_s:g} s lead-in and "
            f"{min_gap_s:g} s gaps")
    extras = np.diff(np.concatenate(([0.0], np.sort(rng.uniform(0.0, slack, n_intervals)))))
    intervals = []
    cursor = lead_in_s
    for length, extra in zip(lengths, extras):
        start = cursor + float(extra)
        intervals.append((start, start + float(length)))
        cursor = start + float(length) + min_gap_s
    return tuple(intervals)
