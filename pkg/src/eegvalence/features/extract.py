"""Dataset-level feature extraction: one TrialSet per window size."""

from __future__ import annotations

import logging

import numpy as np
from joblib import Parallel, delayed

from ..dataset import layout
from ..preprocess import PreprocessConfig, preprocess_recording, segment_windows
from .bandpower import band_power_matrix
from .trialset import TrialSet
from .wavelets import WaveletSpec

log = logging.getLogger(__name__)


def _recording_features(dataset, key, windows, pre, spec, region_map, bands):
    rec = dataset.recording(*key)
    epoch = preprocess_recording(rec, pre)
    out = {}
    for w in windows:
        trials = segment_windows(epoch, w)
        stack = np.stack([t.data for t in trials])
        out[w] = band_power_matrix(stack, epoch.sample_rate_hz, epoch.channel_labels,
                                   region_map, bands, spec)
    return key, out


def extract_trialsets(dataset, windows, preprocess: PreprocessConfig | None = None,
                      spec: WaveletSpec | None = None, jobs: int = 1) -> dict:
    """Preprocess every recording once and extract band powers for each window size.

    Returns ``{window_s: TrialSet}`` with unlabeled trials in dataset order.
    """
    windows = sorted({int(w) for w in windows})
    pre = preprocess or PreprocessConfig()
    spec = spec or WaveletSpec()
    region_map, bands = dataset.region_map, dataset.band_definitions
    names = tuple(layout.feature_names(bands, region_map))
    keys = dataset.keys()
    if jobs == 1:
        results = []
        for n, key in enumerate(keys):
            results.append(_recording_features(dataset, key, windows, pre, spec, region_map, bands))
            if (n + 1) % 50 == 0:
                log.info("features: %d/%d recordings", n + 1, len(keys))
    else:
        results = Parallel(n_jobs=jobs)(
            delayed(_recording_features)(dataset, key, windows, pre, spec, region_map, bands)
            for key in keys)
    out = {}
    for w in windows:
        X, subj, clip, widx = [], [], [], []
        for (s, c), feats in results:
            m = feats[w]
            X.append(m)
            subj += [s] * len(m)
            clip += [c] * len(m)
            widx += list(range(len(m)))
        out[w] = TrialSet(np.vstack(X), names, np.array(subj), np.array(clip), np.array(widx), w)
    return out
