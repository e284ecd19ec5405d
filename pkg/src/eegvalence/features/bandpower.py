"""Band powers from wavelet-packet leaves, aggregated over scalp regions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dataset import layout
from .wavelets import LeafSpectrum, WaveletSpec, leaf_intervals, wpd_decompose


class FeatureError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureKey:
    band: str
    region: str

    @property
    def name(self):
        return layout.feature_name(self.band, self.region)

    @classmethod
    def parse(cls, name):
        return cls(*layout.split_feature_name(name))

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class FeatureVector:
    values: dict  # FeatureKey -> float
    subject_id: str = ""
    clip_id: str = ""
    window_index: int = 0
    label: str | None = None

    def as_array(self, names):
        lookup = {k.name: v for k, v in self.values.items()}
        return np.array([lookup[n] for n in names])


def leaf_band_map(spec: WaveletSpec, sample_rate_hz: float, band_definitions) -> dict:
    """Leaf indices (frequency order) whose center frequency falls in each band.

    Bands are half-open ``[low, high)``. Leaves outside every band belong
    to none of them.
    """
    nyq = sample_rate_hz / 2
    items = list(band_definitions.items())
    for name, (lo, hi) in items:
        if not lo < hi:
            raise FeatureError(f"empty band {name}: {lo}-{hi} Hz")
        if lo < 0 or hi > nyq:
            raise FeatureError(f"band {name} ({lo}-{hi} Hz) outside [0, {nyq}] Hz")
    ordered = sorted(items, key=lambda kv: kv[1][0])
    for (n0, (_, hi0)), (n1, (lo1, _)) in zip(ordered, ordered[1:]):
        if lo1 < hi0:
            raise FeatureError(f"overlapping bands {n0} and {n1}")
    centers = leaf_intervals(spec, sample_rate_hz).mean(axis=1)
    out = {}
    for name, (lo, hi) in items:
        idx = np.flatnonzero((centers >= lo) & (centers < hi))
        if idx.size == 0:
            raise FeatureError(f"band {name} contains no leaf center at level {spec.level}")
        out[name] = idx
    return out


def band_power(spectrum: LeafSpectrum, leaves) -> np.ndarray:
    """Mean over ``leaves`` of the time-averaged squared coefficients."""
    leaves = np.asarray(leaves, int)
    if leaves.size == 0:
        raise FeatureError("empty leaf set")
    coefs = spectrum.leaves[..., leaves, :]
    return np.mean(np.mean(coefs ** 2, axis=-1), axis=-1)


def region_indices(channel_labels, region_map, regions=None):
    lookup = {c: i for i, c in enumerate(channel_labels)}
    regions = list(region_map) if regions is None else list(regions)
    out = []
    for r in regions:
        idx = [lookup[c] for c in region_map[r] if c in lookup]
        if not idx:
            raise FeatureError(f"region {r} has no channels present in the trial")
        out.append(idx)
    return out


def band_power_matrix(data, sample_rate_hz, channel_labels, region_map=None,
                      band_definitions=None, spec: WaveletSpec | None = None):
    """Features for a stack of trials.

    Parameters
    ----------
    data : ndarray, shape (n_trials, n_channels, n_samples)

    Returns
    -------
    ndarray, shape (n_trials, n_bands * n_regions)
        Band-major columns, matching :func:`eegvalence.dataset.layout.feature_names`.
    """
    region_map = layout.REGION_MAP if region_map is None else region_map
    bands = layout.BANDS if band_definitions is None else band_definitions
    spec = spec or WaveletSpec()
    data = np.asarray(data, dtype=float)
    groups = region_indices(channel_labels, region_map)
    used = sorted({i for g in groups for i in g})
    bmap = leaf_band_map(spec, sample_rate_hz, bands)
    needed = np.unique(np.concatenate(list(bmap.values())))
    spectrum = wpd_decompose(data[:, used, :], spec, sample_rate_hz, leaves=needed)
    leaf_power = np.mean(spectrum.leaves[..., needed, :] ** 2, axis=-1)  # (trials, used, needed)
    pos = {leaf: j for j, leaf in enumerate(needed)}
    where = {ch: j for j, ch in enumerate(used)}
    cols = []
    for name in bands:
        per_channel = leaf_power[..., [pos[i] for i in bmap[name]]].mean(axis=-1)
        for g in groups:
            cols.append(per_channel[:, [where[i] for i in g]].mean(axis=-1))
    return np.stack(cols, axis=-1)


def extract_feature_vector(trial, region_map=None, band_definitions=None,
                           spec: WaveletSpec | None = None) -> FeatureVector:
    region_map = layout.REGION_MAP if region_map is None else region_map
    bands = layout.BANDS if band_definitions is None else band_definitions
    row = band_power_matrix(trial.data[None], trial.sample_rate_hz, trial.channel_labels,
                            region_map, bands, spec)[0]
    keys = [FeatureKey(b, r) for b in bands for r in region_map]
    return FeatureVector(dict(zip(keys, row.tolist())), trial.subject_id, trial.clip_id,
                         trial.window_index, trial.label)
