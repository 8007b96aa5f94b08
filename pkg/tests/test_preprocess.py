import logging

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from bandgcn.preprocess import (
    BAND_BY_NAME,
    CANONICAL_BANDS,
    BandDefinition,
    bandpass,
    extract_ictal_only,
    label_windows,
    segment,
)
from bandgcn.signal_io import ChannelLabel, Recording, SeizureAnnotation

from _oracles import butter_bandpass_power_gain


def make_recording(data, fs=256.0, file_id="r.edf"):
    data = np.atleast_2d(np.asarray(data, dtype=np.float64))
    labels = [ChannelLabel.parse(f"CH{i:02d}-REF") for i in range(data.shape[0])]
    return Recording(channels=labels, fs=fs, data=data,
                     duration_s=data.shape[1] / fs, file_id=file_id)


def sine_recording(freq_hz, fs=256.0, duration_s=8.0, channels=1):
    t = np.arange(int(duration_s * fs)) / fs
    wave = np.sin(2 * np.pi * freq_hz * t)
    return make_recording(np.tile(wave, (channels, 1)), fs=fs)


def steady_amplitude(row, fs):
    # RMS over the central half avoids the filter's edge transients;
    # amplitude = RMS * sqrt(2) for a sine
    n = len(row)
    core = row[n // 4: 3 * n // 4]
    return float(np.sqrt(2.0) * np.sqrt(np.mean(core ** 2)))


class TestBandTable:
    def test_canonical_ranges(self):
        expected = {
            "Delta": (0.5, 4.0),
            "Theta": (4.0, 8.0),
            "Alpha": (8.0, 13.0),
            "LowerBeta": (13.0, 22.0),
            "HigherBeta": (22.0, 30.0),
            "Broadband": (0.5, 40.0),
        }
        assert {b.name: (b.f_lo, b.f_hi) for b in CANONICAL_BANDS} == expected
        assert list(BAND_BY_NAME) == [b.name for b in CANONICAL_BANDS]

    def test_contains_is_inclusive(self):
        alpha = BAND_BY_NAME["Alpha"]
        assert alpha.contains(8.0) and alpha.contains(13.0)
        assert not alpha.contains(7.999) and not alpha.contains(13.001)

    def test_invalid_edges_rejected(self):
        with pytest.raises(ValueError):
            BandDefinition("bad", 4.0, 4.0)
        with pytest.raises(ValueError):
            BandDefinition("bad", 0.0, 4.0)


class TestBandpass:
    @pytest.mark.parametrize("band", CANONICAL_BANDS, ids=lambda b: b.name)
    def test_gain_matches_analytic_response(self, band):
        # probe each band at its geometric center and one octave above the
        # upper edge; forward-backward filtering squares the magnitude
        fs = 256.0
        centre = float(np.sqrt(band.f_lo * band.f_hi))
        for freq in (centre, min(2.0 * band.f_hi, 100.0)):
            recording = sine_recording(freq, fs=fs, duration_s=16.0)
            filtered = bandpass(recording, band)
            measured = steady_amplitude(filtered.data[0], fs)
            expected = butter_bandpass_power_gain(freq, band.f_lo, band.f_hi, fs)
            assert measured == pytest.approx(expected, abs=0.02), (band.name, freq)

    def test_preserves_shape_and_metadata(self):
        recording = sine_recording(10.0, duration_s=4.0, channels=3)
        filtered = bandpass(recording, BAND_BY_NAME["Alpha"])
        assert filtered.data.shape == recording.data.shape
        assert filtered.fs == recording.fs
        assert filtered.file_id == recording.file_id
        assert [c.raw for c in filtered.channels] == [
            c.raw for c in recording.channels]

    def test_channels_filtered_independently(self):
        rng = np.random.default_rng(0)
        both = make_recording(rng.standard_normal((2, 1024)))
        alone = make_recording(both.data[:1].copy())
        band = BAND_BY_NAME["Theta"]
        assert_array_equal(bandpass(both, band).data[0],
                           bandpass(alone, band).data[0])

    def test_zero_phase(self):
        # zero-phase filtering keeps an in-band sine aligned with itself
        band = BAND_BY_NAME["Alpha"]
        recording = sine_recording(10.0, duration_s=16.0)
        filtered = bandpass(recording, band)
        core = slice(1024, 3072)
        original = recording.data[0, core]
        result = filtered.data[0, core]
        shift_zero = float(np.dot(original, result))
        shift_three = float(np.dot(np.roll(original, 3), result))
        assert shift_zero > abs(shift_three)

    def test_band_above_nyquist_rejected(self):
        recording = sine_recording(5.0, fs=64.0, duration_s=4.0)
        with pytest.raises(ValueError, match="Nyquist"):
            bandpass(recording, BAND_BY_NAME["Broadband"])

    def test_too_short_for_padding_rejected(self):
        recording = make_recording(np.zeros((1, 24)), fs=24.0)
        with pytest.raises(ValueError, match="padding"):
            bandpass(recording, BandDefinition("toy", 2.0, 6.0))


class TestSegment:
    def test_tiling_and_remainder(self):
        fs = 4.0
        data = np.arange(2 * 35, dtype=float).reshape(2, 35)
        recording = make_recording(data, fs=fs)
        segments = segment(recording, t_w_s=2.0)
        assert len(segments) == 4  # 35 samples, L=8, remainder 3 dropped
        for k, seg in enumerate(segments):
            assert seg.index_k == k
            assert seg.L == 8
            assert seg.label == 0
            assert seg.source_file == "r.edf"
            assert seg.fs == fs
            assert_array_equal(seg.samples, data[:, k * 8:(k + 1) * 8])

    def test_band_name_recorded(self):
        recording = make_recording(np.zeros((1, 16)), fs=4.0)
        segments = segment(recording, t_w_s=1.0, band="Delta")
        assert all(seg.band == "Delta" for seg in segments)

    def test_non_integer_window_rejected(self):
        recording = make_recording(np.zeros((1, 100)), fs=3.0)
        with pytest.raises(ValueError, match="integer sample count"):
            segment(recording, t_w_s=2.5)

    def test_short_recording_warns_and_returns_empty(self, caplog):
        recording = make_recording(np.zeros((1, 10)), fs=4.0)
        with caplog.at_level(logging.WARNING):
            assert segment(recording, t_w_s=6.0) == []
        assert any("shorter than one" in r.message for r in caplog.records)


class TestLabelWindows:
    def make_segments(self, n_windows, fs=256.0, t_w_s=6.0):
        L = int(t_w_s * fs)
        data = np.zeros((1, n_windows * L))
        recording = make_recording(data, fs=fs)
        return segment(recording, t_w_s=t_w_s)

    def labels(self, segments, intervals, fs=256.0):
        anns = [SeizureAnnotation(file_id="r.edf", t_s=a, t_e=b)
                for a, b in intervals]
        return [seg.label for seg in label_windows(segments, anns)]

    def test_interior_interval(self):
        # [8, 10] s touches only window 1 of 6 s windows
        segments = self.make_segments(3)
        assert self.labels(segments, [(8.0, 10.0)]) == [0, 1, 0]

    def test_interval_spanning_boundary(self):
        segments = self.make_segments(3)
        assert self.labels(segments, [(5.0, 7.0)]) == [1, 1, 0]

    def test_end_exactly_on_window_start(self):
        # floor(6.0 * 256) = 1536 = first sample of window 1: the closed
        # sample-range rule marks window 1 as touched
        segments = self.make_segments(3)
        assert self.labels(segments, [(2.0, 6.0)]) == [1, 1, 0]

    def test_end_one_sample_before_boundary(self):
        # t_e chosen so floor(t_e * fs) = 1535, the last sample of window 0
        segments = self.make_segments(3)
        assert self.labels(segments, [(2.0, 1535.0 / 256.0)]) == [1, 0, 0]

    def test_start_exactly_on_window_end(self):
        # floor(t_s * fs) = 3071 is still inside window 1
        segments = self.make_segments(3)
        assert self.labels(segments, [(3071.0 / 256.0, 13.0)]) == [0, 1, 1]

    def test_multiple_annotations_union(self):
        segments = self.make_segments(4)
        assert self.labels(segments, [(1.0, 2.0), (19.0, 20.0)]) == [1, 0, 0, 1]

    def test_no_annotations(self):
        segments = self.make_segments(2)
        assert self.labels(segments, []) == [0, 0]

    def test_originals_unmodified(self):
        segments = self.make_segments(2)
        label_windows(segments, [SeizureAnnotation("r.edf", 0.0, 50.0)])
        assert [seg.label for seg in segments] == [0, 0]


class TestExtractIctalOnly:
    def test_filters_and_preserves_order(self):
        recording = make_recording(np.zeros((1, 4 * 1536)))
        segments = segment(recording)
        anns = [SeizureAnnotation("r.edf", 0.0, 7.0),
                SeizureAnnotation("r.edf", 19.0, 20.0)]
        labeled = label_windows(segments, anns)
        ictal = extract_ictal_only(labeled)
        assert [seg.index_k for seg in ictal] == [0, 1, 3]
