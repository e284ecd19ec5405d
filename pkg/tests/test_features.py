import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eegvalence.dataset import layout
from eegvalence.dataset.labels import derive_labels
from eegvalence.dataset.synth import SynthConfig, generate_synthetic_dataset
from eegvalence.features.bandpower import (FeatureError, FeatureKey, band_power, band_power_matrix,
                                           extract_feature_vector, leaf_band_map, region_indices)
from eegvalence.features.extract import extract_trialsets
from eegvalence.features.trialset import TrialSet
from eegvalence.features.wavelets import WaveletSpec, leaf_intervals, wpd_decompose
from eegvalence.preprocess import Trial

import oracles

FS = 1000.0


def _tone(f, seconds=12.0, fs=FS, phase=0.0):
    t = np.arange(int(seconds * fs)) / fs
    return np.sin(2 * np.pi * f * t + phase)


def _trial(data, fs=FS):
    labels = tuple(layout.all_channels())
    return Trial(data, fs, int(data.shape[1] / fs), 0, "s", "c", labels)


def test_leaf_width_and_alpha_leaves():
    iv = leaf_intervals(WaveletSpec(), FS)
    assert iv[0, 1] == pytest.approx(500 / 256)
    bmap = leaf_band_map(WaveletSpec(), FS, layout.BANDS)
    assert bmap["Alpha"].tolist() == [4, 5]
    centers = iv.mean(axis=1)
    assert centers[4] == pytest.approx(8.79, abs=0.01) and centers[5] == pytest.approx(10.74, abs=0.01)


def test_leaves_above_gamma_belong_to_no_band():
    bmap = leaf_band_map(WaveletSpec(), FS, layout.BANDS)
    used = np.concatenate(list(bmap.values()))
    centers = leaf_intervals(WaveletSpec(), FS).mean(axis=1)
    assert centers[used].max() < 45 and centers[used].min() >= 1
    assert len(set(used.tolist())) == used.size


def test_band_errors():
    with pytest.raises(FeatureError, match="empty band"):
        leaf_band_map(WaveletSpec(), FS, {"x": (0.0, 0.0)})
    with pytest.raises(FeatureError, match="overlapping"):
        leaf_band_map(WaveletSpec(), FS, {"a": (1.0, 10.0), "b": (8.0, 12.0)})
    with pytest.raises(FeatureError):
        leaf_band_map(WaveletSpec(), FS, {"a": (1.0, 600.0)})


def test_constant_signal_lands_in_lowest_leaf():
    # dyadic length: no padding, so the constant is exactly periodic
    e = wpd_decompose(np.full(12288, 3.0), sample_rate_hz=FS).energies()
    assert e[1:].max() < 1e-8 * e.sum()
    # otherwise the tail is zero-padded and the step is decomposed too
    short = wpd_decompose(np.full(12000, 3.0), sample_rate_hz=FS).leaves
    padded = wpd_decompose(np.r_[np.full(12000, 3.0), np.zeros(32)], sample_rate_hz=FS).leaves
    np.testing.assert_array_equal(short, padded)


def test_ten_hz_sine_energy_oracle():
    pytest.importorskip("pywt")
    x = _tone(10.0)
    spec = wpd_decompose(x, sample_rate_hz=FS)
    e = spec.energies()
    ref = (oracles.pywt_leaves(x) ** 2).sum(-1)
    np.testing.assert_allclose(e, ref, rtol=1e-9, atol=1e-9 * ref.sum())
    lo, hi = spec.leaf_band_hz[np.argmax(e)]
    assert lo <= 10.0 < hi
    # FFT check of the input itself: the tone's energy sits within 8-12 Hz
    fft = np.abs(np.fft.rfft(x)) ** 2
    f = np.fft.rfftfreq(x.size, 1 / FS)
    assert fft[(f >= 8) & (f <= 12)].sum() / fft.sum() > 0.99


def test_band_power_examples():
    spec = wpd_decompose(np.zeros(4096), sample_rate_hz=FS)
    assert band_power(spec, [4, 5]) == 0.0
    with pytest.raises(FeatureError):
        band_power(spec, [])
    pytest.importorskip("pywt")
    bmap = leaf_band_map(WaveletSpec(), FS, layout.BANDS)
    x = _tone(10.0)
    s = wpd_decompose(x, sample_rate_hz=FS)
    ref = oracles.pywt_leaves(x)
    powers = {}
    for name, leaves in bmap.items():
        powers[name] = band_power(s, leaves)
        expect = np.mean([np.mean(ref[i] ** 2) for i in leaves])
        assert powers[name] == pytest.approx(expect, rel=1e-9, abs=1e-12)
    assert max(powers, key=powers.get) == "Alpha"


@settings(max_examples=20, deadline=None)
@given(st.floats(0.01, 100), st.integers(0, 2 ** 31 - 1))
def test_band_power_quadratic_homogeneity(k, seed):
    x = np.random.default_rng(seed).standard_normal(4096)
    bmap = leaf_band_map(WaveletSpec(), FS, layout.BANDS)
    a, b = wpd_decompose(x, sample_rate_hz=FS), wpd_decompose(k * x, sample_rate_hz=FS)
    for leaves in bmap.values():
        p = band_power(a, leaves)
        assert band_power(b, leaves) == pytest.approx(k * k * p, rel=1e-9)
        assert p >= 0


def test_feature_vector_shape_and_zero_trial():
    fv = extract_feature_vector(_trial(np.zeros((52, 12000))))
    assert len(fv.values) == 78
    assert all(v == 0 for v in fv.values.values())
    assert FeatureKey.parse("Gamma-Fm") in fv.values


def test_planted_burst_in_one_region_is_maximal():
    rng = np.random.default_rng(0)
    chans = layout.all_channels()
    data = 0.1 * rng.standard_normal((52, 12000))
    for c in layout.REGION_MAP["Pr"]:
        data[chans.index(c)] += _tone(10.0, phase=rng.uniform(0, 6))
    fv = extract_feature_vector(_trial(data))
    alpha = {k.region: v for k, v in fv.values.items() if k.band == "Alpha"}
    assert max(alpha, key=alpha.get) == "Pr"


def test_region_average_equals_mean_of_channel_powers():
    # per-channel powers are computed first, then averaged: a brute-force rebuild
    rng = np.random.default_rng(4)
    data = rng.standard_normal((52, 4096))
    labels = layout.all_channels()
    got = band_power_matrix(data[None], FS, labels)[0]
    bmap = leaf_band_map(WaveletSpec(), FS, layout.BANDS)
    names = layout.feature_names()
    for band, leaves in bmap.items():
        for region, chans in layout.REGION_MAP.items():
            per = [band_power(wpd_decompose(data[labels.index(c)], sample_rate_hz=FS), leaves)
                   for c in chans]
            assert got[names.index(f"{band}-{region}")] == pytest.approx(np.mean(per), rel=1e-12)


@settings(max_examples=10, deadline=None)
@given(st.randoms(), st.sampled_from(layout.REGIONS))
def test_channel_permutation_within_region_is_invariant(rnd, region):
    rng = np.random.default_rng(rnd.randint(0, 2 ** 31))
    data = rng.standard_normal((52, 2048))
    labels = layout.all_channels()
    idx = [labels.index(c) for c in layout.REGION_MAP[region]]
    perm = idx[:]
    rnd.shuffle(perm)
    swapped = data.copy()
    swapped[idx] = data[perm]
    a = band_power_matrix(data[None], FS, labels)[0]
    b = band_power_matrix(swapped[None], FS, labels)[0]
    np.testing.assert_allclose(a, b, rtol=1e-12)


def test_missing_region_raises():
    with pytest.raises(FeatureError, match="region Cm"):
        region_indices(["Fz"], {"Cm": ["Cz"]})


def _small_corpus():
    cfg = SynthConfig(n_subjects=2, clips_per_class=2, channels_per_region=1, sample_rate_hz=256.0)
    return generate_synthetic_dataset(cfg, 0)


def test_extract_trialsets_counts_and_provenance():
    ds = _small_corpus()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        sets = extract_trialsets(ds, [12, 5])
    assert sorted(sets) == [5, 12]
    ts = sets[12]
    assert ts.X.shape == (2 * 4 * 2, 78)
    assert ts.feature_names == tuple(layout.feature_names())
    assert ts.window_index.tolist()[:2] == [0, 1]
    assert len(sets[5]) == 2 * 4 * 5
    labeled = ts.with_labels(derive_labels(ds, "PR"))
    assert set(labeled.y.tolist()) == {0, 1}
    assert labeled.for_subject("S02").subject_ids == ["S02"]


def test_parallel_extraction_matches_serial():
    ds = _small_corpus()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        a = extract_trialsets(ds, [12])[12]
        b = extract_trialsets(ds, [12], jobs=2)[12]
    assert a.X.tobytes() == b.X.tobytes()


def test_trialset_roundtrips(tmp_path):
    ds = _small_corpus()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        ts = extract_trialsets(ds, [12])[12].with_labels(derive_labels(ds, "SR"))
    ts.save_npz(tmp_path / "t.npz")
    back = TrialSet.load_npz(tmp_path / "t.npz")
    assert back.X.tobytes() == ts.X.tobytes() and back.labels.tolist() == ts.labels.tolist()
    ts.to_csv(tmp_path / "t.csv")
    back = TrialSet.from_csv(tmp_path / "t.csv", 12)
    assert back.X.tobytes() == ts.X.tobytes()
    assert back.feature_names == ts.feature_names
    header = (tmp_path / "t.csv").read_text().splitlines()[0].split(",")
    assert "B1-Cm" in header and header[-4:] == ["subject", "clip", "window_index", "label"]
    sub = ts.select(["Gamma-Fm", "B1-Cm"])
    assert sub.X.shape[1] == 2
    np.testing.assert_array_equal(sub.X[:, 1], ts.X[:, ts.feature_names.index("B1-Cm")])
    both = TrialSet.concatenate([ts.for_subject("S01"), ts.for_subject("S02")])
    assert both.X.tobytes() == ts.X.tobytes()
