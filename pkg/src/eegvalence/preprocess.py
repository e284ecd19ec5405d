"""Re-referencing, band-pass filtering, epoching, baseline z-scoring and windowing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal

from .dataset.model import Recording


class PreprocessError(ValueError):
    pass


@dataclass(frozen=True)
class PreprocessConfig:
    car: bool = True
    low_hz: float = 0.5
    high_hz: float = 45.0
    filter_order: int = 4
    skip_s: float = 1.0
    analysis_len_s: float = 27.0


@dataclass(frozen=True, eq=False)
class Epoch:
    data: np.ndarray  # channels x time
    sample_rate_hz: float
    subject_id: str
    clip_id: str
    kind: str  # "baseline" | "stimulus"
    channel_labels: tuple = ()

    @property
    def n_samples(self):
        return self.data.shape[1]

    @property
    def duration_s(self):
        return self.n_samples / self.sample_rate_hz


@dataclass(frozen=True, eq=False)
class Trial:
    data: np.ndarray  # channels x time, z-score units
    sample_rate_hz: float
    window_size_s: int
    window_index: int
    subject_id: str
    clip_id: str
    channel_labels: tuple = ()
    label: str | None = None


def common_average_reference(rec: Recording) -> Recording:
    x = np.asarray(rec.samples, dtype=float)
    if x.shape[0] < 2:
        raise PreprocessError(f"recording {rec.subject_id}/{rec.clip_id}: CAR needs >= 2 channels")
    return rec.replace_samples(x - x.mean(axis=0, keepdims=True))


def design_bandpass(low_hz, high_hz, sample_rate_hz, order=4):
    if not 0 < low_hz < high_hz:
        raise PreprocessError(f"band-pass edges must satisfy 0 < low < high, got {low_hz}, {high_hz}")
    if not sample_rate_hz > 2 * high_hz:
        raise PreprocessError(f"sample rate {sample_rate_hz} Hz violates Nyquist for {high_hz} Hz")
    return signal.butter(order, [low_hz, high_hz], btype="bandpass", fs=sample_rate_hz, output="sos")


def filtfilt(x, sos, order=4):
    # bandpass of order N is a 2N-order filter; pad 3x that, mirrored
    return signal.sosfiltfilt(sos, x, axis=-1, padtype="even", padlen=min(3 * 2 * order, x.shape[-1] - 1))


def bandpass_filter(rec: Recording, low_hz: float = 0.5, high_hz: float = 45.0,
                    order: int = 4) -> Recording:
    """Zero-phase Butterworth band-pass (forward-backward)."""
    sos = design_bandpass(low_hz, high_hz, rec.sample_rate_hz, order)
    return rec.replace_samples(filtfilt(np.asarray(rec.samples, dtype=float), sos, order))


def _cut(rec, span, kind, analysis_len_s, skip_s):
    fs = rec.sample_rate_hz
    start, stop = span
    skip = int(round(skip_s * fs))
    length = int(round(analysis_len_s * fs))
    if length < 1:
        raise PreprocessError("analysis length must be positive")
    if stop - start < skip + length:
        raise PreprocessError(
            f"recording {rec.subject_id}/{rec.clip_id}: {kind} span too short "
            f"({(stop - start) / fs:g} s < {skip_s + analysis_len_s:g} s)")
    data = np.asarray(rec.samples[:, start + skip:start + skip + length], dtype=float)
    return Epoch(data, fs, rec.subject_id, rec.clip_id, kind, tuple(rec.channel_labels))


def extract_epochs(rec: Recording, analysis_len_s: float = 27.0, skip_s: float = 1.0):
    """Baseline and stimulus epochs: seconds ``[skip_s, skip_s + analysis_len_s)`` of each span."""
    return (_cut(rec, rec.baseline_span, "baseline", analysis_len_s, skip_s),
            _cut(rec, rec.stimulus_span, "stimulus", analysis_len_s, skip_s))


def zscore_against_baseline(stimulus: Epoch, baseline: Epoch) -> Epoch:
    """Per-channel ``(s - mean(b)) / std(b)`` with population std."""
    if stimulus.data.shape[0] != baseline.data.shape[0] or (
            stimulus.channel_labels and baseline.channel_labels
            and tuple(stimulus.channel_labels) != tuple(baseline.channel_labels)):
        raise PreprocessError("stimulus and baseline channel sets differ")
    mu = baseline.data.mean(axis=1, keepdims=True)
    sd = baseline.data.std(axis=1, keepdims=True)
    dead = np.flatnonzero(sd[:, 0] == 0)
    if dead.size:
        names = [stimulus.channel_labels[i] if stimulus.channel_labels else str(i) for i in dead]
        raise PreprocessError(f"zero baseline variance on channel(s) {', '.join(names)}")
    return Epoch((stimulus.data - mu) / sd, stimulus.sample_rate_hz, stimulus.subject_id,
                 stimulus.clip_id, stimulus.kind, stimulus.channel_labels)


def segment_windows(epoch: Epoch, window_size_s: int, label=None) -> list[Trial]:
    """Contiguous non-overlapping windows from the start; the tail remainder is dropped."""
    if int(window_size_s) != window_size_s or window_size_s < 1:
        raise PreprocessError(f"window size must be a positive integer, got {window_size_s}")
    width = int(round(window_size_s * epoch.sample_rate_hz))
    count = epoch.n_samples // width
    if count == 0:
        raise PreprocessError(f"window of {window_size_s} s is longer than the {epoch.duration_s:g} s epoch")
    return [Trial(epoch.data[:, i * width:(i + 1) * width], epoch.sample_rate_hz, int(window_size_s), i,
                  epoch.subject_id, epoch.clip_id, epoch.channel_labels, label)
            for i in range(count)]


def preprocess_recording(rec: Recording, config: PreprocessConfig | None = None) -> Epoch:
    """CAR -> band-pass -> epochs -> baseline z-score; returns the standardized stimulus epoch."""
    cfg = config or PreprocessConfig()
    if cfg.car:
        rec = common_average_reference(rec)
    rec = bandpass_filter(rec, cfg.low_hz, cfg.high_hz, cfg.filter_order)
    baseline, stimulus = extract_epochs(rec, cfg.analysis_len_s, cfg.skip_s)
    return zscore_against_baseline(stimulus, baseline)
