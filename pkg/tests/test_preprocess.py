import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eegvalence.dataset.model import Recording
from eegvalence.preprocess import (Epoch, PreprocessConfig, PreprocessError, bandpass_filter,
                                   common_average_reference, extract_epochs, preprocess_recording,
                                   segment_windows, zscore_against_baseline)


def _rec(x, fs=1000.0, base=(0, 0), stim=None):
    x = np.atleast_2d(np.asarray(x, float))
    labels = tuple(f"c{i}" for i in range(x.shape[0]))
    return Recording("s", "c", fs, labels, x, base, stim or (0, x.shape[1]))


def _epoch(x, fs=1.0, kind="stimulus"):
    x = np.atleast_2d(np.asarray(x, float))
    return Epoch(x, fs, "s", "c", kind, tuple(f"c{i}" for i in range(x.shape[0])))


def _fft_amplitude(x, fs, f):
    spec = np.abs(np.fft.rfft(x)) * 2 / x.size
    return spec[int(round(f * x.size / fs))]


def test_car_hand_example():
    out = common_average_reference(_rec([[1, 1, 1], [3, 3, 3]])).samples
    np.testing.assert_array_equal(out, [[-1, -1, -1], [1, 1, 1]])


def test_car_single_channel_rejected():
    with pytest.raises(PreprocessError):
        common_average_reference(_rec([[1.0, 2.0]]))


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 8), st.integers(1, 50), st.integers(0, 2 ** 31 - 1))
def test_car_zero_mean_and_idempotent(n_ch, n, seed):
    x = np.random.default_rng(seed).normal(0, 100, (n_ch, n))
    once = common_average_reference(_rec(x)).samples
    assert np.all(np.abs(once.mean(axis=0)) <= 1e-9 * (1 + np.abs(x).max()))
    twice = common_average_reference(_rec(once)).samples
    np.testing.assert_allclose(twice, once, atol=1e-9 * (1 + np.abs(x).max()))


def test_car_leaves_zero_mean_input_unchanged():
    x = np.array([[1.0, -2.0, 0.5], [-1.0, 2.0, -0.5]])
    np.testing.assert_allclose(common_average_reference(_rec(x)).samples, x)


def test_bandpass_passes_10hz_sine():
    fs, n = 1000.0, 20000
    t = np.arange(n) / fs
    y = bandpass_filter(_rec(np.sin(2 * np.pi * 10 * t)[None], fs)).samples[0]
    trim = y[2000:-2000]
    amp = _fft_amplitude(trim, fs, 10)
    assert abs(amp - 1) < 0.05


def test_bandpass_rejects_100hz_and_dc():
    fs, n = 1000.0, 20000
    t = np.arange(n) / fs
    x = np.sin(2 * np.pi * 100 * t)
    y = bandpass_filter(_rec(x[None], fs)).samples[0]
    assert np.sqrt(np.mean(y ** 2)) < 0.1 * np.sqrt(np.mean(x ** 2))
    dc = bandpass_filter(_rec(np.full((1, n), 3.0), fs)).samples[0]
    assert np.sqrt(np.mean(dc ** 2)) < 0.05 * 3.0


def test_bandpass_attenuation_at_band_edges_oracle():
    # magnitude of the forward-backward response is |H|^2; check >= 20 dB at 0.1 and 100 Hz
    fs, n = 1000.0, 2 ** 17
    imp = np.zeros(n)
    imp[n // 2] = 1.0
    h = bandpass_filter(_rec(imp[None], fs)).samples[0]
    H = np.abs(np.fft.rfft(h))
    f = np.fft.rfftfreq(n, 1 / fs)
    for probe in (0.1, 100.0):
        assert 20 * np.log10(H[np.argmin(np.abs(f - probe))]) <= -20
    assert abs(H[np.argmin(np.abs(f - 10.0))] - 1) < 0.01


def test_bandpass_is_zero_phase():
    fs, n = 1000.0, 8000
    t = np.arange(n) / fs
    x = np.sin(2 * np.pi * 10 * t)
    y = bandpass_filter(_rec(x[None], fs)).samples[0]
    mid = slice(2000, 6000)
    lag = np.argmax(np.correlate(y[mid], x[mid], "full")) - (4000 - 1)
    assert lag == 0


@settings(max_examples=15, deadline=None)
@given(st.floats(-10, 10), st.floats(-10, 10), st.integers(0, 2 ** 31 - 1))
def test_bandpass_is_linear(a, b, seed):
    rng = np.random.default_rng(seed)
    x, y = rng.standard_normal((2, 1, 3000))
    f = lambda z: bandpass_filter(_rec(z, 1000.0)).samples
    lhs, rhs = f(a * x + b * y), a * f(x) + b * f(y)
    assert np.max(np.abs(lhs - rhs)) <= 1e-6 * (np.max(np.abs(rhs)) + 1e-12) + 1e-12


def test_bandpass_parameter_errors():
    with pytest.raises(PreprocessError):
        bandpass_filter(_rec(np.zeros((1, 100))), 45, 0.5)
    with pytest.raises(PreprocessError, match="Nyquist"):
        bandpass_filter(_rec(np.zeros((1, 100)), fs=80.0))


def test_epochs_have_exactly_27000_samples():
    fs = 1000
    n_base, n_clip = 30 * fs, 43 * fs
    rec = _rec(np.arange(n_base + n_clip, dtype=float)[None], fs, (0, n_base), (n_base, n_base + n_clip))
    base, stim = extract_epochs(rec)
    assert base.n_samples == stim.n_samples == 27000
    assert base.data[0, 0] == 1000 and stim.data[0, 0] == n_base + 1000


def test_epoch_span_too_short():
    rec = _rec(np.zeros((1, 50000)), 1000, (0, 20000), (20000, 50000))
    with pytest.raises(PreprocessError, match="span too short"):
        extract_epochs(rec)


def test_epoch_identity_when_whole_span():
    x = np.random.default_rng(0).standard_normal((2, 300))
    rec = _rec(x, 100.0, (0, 100), (100, 300))
    base, _ = extract_epochs(rec, analysis_len_s=1.0, skip_s=0)
    np.testing.assert_array_equal(base.data, x[:, :100])
    rec2 = _rec(x, 100.0, (0, 200), (200, 300))
    _, stim = extract_epochs(rec2, analysis_len_s=1.0, skip_s=0)
    np.testing.assert_array_equal(stim.data, x[:, 200:])


def test_zscore_hand_examples():
    out = zscore_against_baseline(_epoch([[3.0]]), _epoch([[0.0, 2.0]], kind="baseline"))
    assert out.data[0, 0] == 2.0
    b = _epoch([[1.0, -1.0, 1.0, -1.0]], kind="baseline")
    s = np.array([[0.3, -7.0, 2.5]])
    np.testing.assert_array_equal(zscore_against_baseline(_epoch(s), b).data, s)
    const = zscore_against_baseline(_epoch([[4.0, 4.0]]), _epoch([[3.0, 5.0]], kind="baseline"))
    np.testing.assert_array_equal(const.data, 0.0)


def test_zscore_zero_variance_names_channel():
    b = Epoch(np.array([[1.0, 2.0], [5.0, 5.0]]), 1.0, "s", "c", "baseline", ("Fz", "Cz"))
    s = Epoch(np.zeros((2, 3)), 1.0, "s", "c", "stimulus", ("Fz", "Cz"))
    with pytest.raises(PreprocessError, match="Cz"):
        zscore_against_baseline(s, b)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(2, 200), st.integers(0, 2 ** 31 - 1))
def test_zscoring_baseline_against_itself(n_ch, n, seed):
    b = _epoch(np.random.default_rng(seed).normal(3, 7, (n_ch, n)), kind="baseline")
    z = zscore_against_baseline(b, b).data
    np.testing.assert_allclose(z.mean(axis=1), 0, atol=1e-9)
    np.testing.assert_allclose(z.std(axis=1), 1, atol=1e-9)


@pytest.mark.parametrize("w,count", [(12, 2), (1, 27), (27, 1), (5, 5)])
def test_window_counts(w, count):
    ep = _epoch(np.random.default_rng(0).standard_normal((2, 27 * 10)), fs=10.0)
    trials = segment_windows(ep, w)
    assert len(trials) == count
    assert [t.window_index for t in trials] == list(range(count))
    if w == 27:
        np.testing.assert_array_equal(trials[0].data, ep.data)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 12), st.integers(12, 40))
def test_windows_partition_epoch_prefix(w, dur):
    ep = _epoch(np.arange(dur * 4, dtype=float)[None], fs=4.0)
    trials = segment_windows(ep, w)
    cat = np.concatenate([t.data for t in trials], axis=1)
    np.testing.assert_array_equal(cat, ep.data[:, :cat.shape[1]])
    assert cat.shape[1] == (dur // w) * w * 4


def test_window_errors():
    ep = _epoch(np.zeros((1, 50)), fs=10.0)
    with pytest.raises(PreprocessError, match="longer"):
        segment_windows(ep, 6)
    with pytest.raises(PreprocessError):
        segment_windows(ep, 0)


def test_preprocess_recording_is_label_independent():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((3, 6000))
    rec = _rec(x, 100.0, (0, 3000), (3000, 6000))
    cfg = PreprocessConfig(analysis_len_s=27.0, skip_s=1.0)
    a = preprocess_recording(rec, cfg)
    relabeled = Recording("other", "clip9", rec.sample_rate_hz, rec.channel_labels, x,
                          rec.baseline_span, rec.stimulus_span)
    b = preprocess_recording(relabeled, cfg)
    np.testing.assert_array_equal(a.data, b.data)
    assert a.n_samples == 2700
