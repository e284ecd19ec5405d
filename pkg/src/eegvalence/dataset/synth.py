"""Seeded synthetic EEG corpora with planted class-dependent band power.

Each recording is 1/f Gaussian background on every channel. During the
stimulus span, every channel of a planted region also carries an
sinusoid inside the planted band whose amplitude follows a slow random
log-normal envelope; its mean power is raised for one class and lowered
for the other. Because the envelope wanders slowly, short windows see a
noisy power estimate and long windows average it out, so accuracy grows
with window length.

Recordings are generated on demand from ``(seed, subject, clip)`` so a
corpus never has to sit in memory at once.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from . import layout
from .model import (NEGATIVE, POSITIVE, ClipMetadata, Dataset, DatasetError, DatasetManifest,
                    Recording)

DEFAULT_PLANTED = (
    "Gamma-Fm", "B1-Cm", "Gamma-PFl", "B2-PFr", "Alpha-PFr",
    "B1-POm", "Gamma-Or", "B2-Or", "Gamma-Pr", "B1-PFl",
    "Theta-PFl", "Gamma-Fl", "B2-POm", "B1-Or", "Gamma-Cr",
    "Alpha-Or", "Gamma-Fr", "B1-Fm", "Gamma-Cl", "B2-Fr",
)


@dataclass(frozen=True)
class SynthConfig:
    """Parameters of a synthetic corpus.

    ``class_offset`` is the relative change of planted oscillation power:
    positive clips get ``(1 + d)`` and negative clips ``(1 - d)`` times the
    reference power ``oscillation_uv**2``. A scalar applies to every
    planted key; a sequence gives one value per key. Subjects picked by
    ``flip_fraction`` have the sign reversed; with ``flip_per_key`` the
    flip is instead drawn independently for every (subject, key) pair with
    probability ``flip_fraction``, so no direction is shared across
    subjects. ``heterogeneity`` scales a
    per-subject log-normal jitter on the offsets. The oscillation amplitude
    is ``exp(envelope_sigma * z(t))`` times a constant, with ``z`` a
    unit-variance Gaussian process band-limited to ``envelope_hz``; the
    constant keeps the expected power at the class value.
    """

    n_subjects: int = 24
    clips_per_class: int = 7
    sample_rate_hz: float = 1000.0
    baseline_s: float = 30.0
    clip_duration_s: tuple = (43.0, 78.0)
    recorded_stimulus_s: float | None = 30.0
    channels_per_region: int | None = None
    planted: tuple = DEFAULT_PLANTED
    class_offset: float | tuple = (0.5, 0.48, 0.46, 0.44, 0.42, 0.4, 0.38, 0.36, 0.34, 0.32,
                                   0.3, 0.28, 0.26, 0.24, 0.22, 0.2, 0.18, 0.16, 0.14, 0.12)
    oscillation_uv: float = 6.0
    noise_uv: float = 10.0
    heterogeneity: float = 0.0
    flip_fraction: float = 0.0
    flip_per_key: bool = False
    envelope_sigma: float = 0.5  # std of the log amplitude envelope
    envelope_hz: float = 0.2  # bandwidth of the envelope process
    misrate_prob: float = 0.0

    def offsets(self) -> np.ndarray:
        d = np.broadcast_to(np.asarray(self.class_offset, float), (len(self.planted),)).copy()
        return d

    def region_map(self):
        if self.channels_per_region is None:
            return {k: list(v) for k, v in layout.REGION_MAP.items()}
        return layout.compact_region_map(self.channels_per_region)

    def to_dict(self):
        out = asdict(self)
        out["planted"] = list(self.planted)
        out["clip_duration_s"] = list(self.clip_duration_s)
        if isinstance(self.class_offset, (tuple, list)):
            out["class_offset"] = list(self.class_offset)
        return out

    @classmethod
    def preset(cls, name: str) -> "SynthConfig":
        """Named corpora.

        ``default``
            24 subjects, 52 channels at 1000 Hz, graded offsets and a
            steady envelope (sigma 0.15), so 12 s windows separate the
            classes cleanly.
        ``snr-ramp``
            Compact layout, 8 clips per class (enough for clip-grouped
            8-fold CV), a strongly wandering envelope and stronger offsets,
            so accuracy climbs with window length.
        ``heterogeneous``
            Compact layout; every (subject, key) direction flipped at
            random, so no pattern transfers across subjects.
        ``homogeneous``
            Compact layout, identical direction for every subject.
        ``tiny``
            4 subjects, compact layout, for quick runs and tests.

        The compact layout is one channel per region sampled at 256 Hz.
        """
        compact = {"channels_per_region": 1, "sample_rate_hz": 256.0}
        presets = {
            "default": {"envelope_sigma": 0.15},
            "snr-ramp": dict(compact, clips_per_class=8, envelope_sigma=1.0,
                             class_offset=tuple(round(1.6 * d, 6) for d in cls().offsets())),
            "heterogeneous": dict(compact, flip_fraction=0.5, flip_per_key=True),
            "homogeneous": dict(compact),
            "tiny": dict(compact, n_subjects=4),
        }
        if name not in presets:
            raise DatasetError(f"unknown preset; expected one of {', '.join(presets)}", name)
        return cls(**presets[name])

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise DatasetError(f"unknown synth config field(s): {', '.join(sorted(unknown))}",
                               "synth config")
        for key in ("planted", "clip_duration_s"):
            if key in d:
                d[key] = tuple(d[key])
        if isinstance(d.get("class_offset"), list):
            d["class_offset"] = tuple(d["class_offset"])
        return cls(**d)


@dataclass(frozen=True)
class _SubjectPlan:
    offsets: np.ndarray
    sign: np.ndarray  # +1 / -1 per planted key


def _check_planted(cfg: SynthConfig, region_map, bands):
    for name in cfg.planted:
        try:
            band, region = layout.split_feature_name(name)
        except ValueError:
            raise DatasetError("malformed planted key", name) from None
        if band not in bands:
            raise DatasetError(f"planted key references unknown band {band!r}", name)
        if region not in region_map:
            raise DatasetError(f"planted key references unknown region {region!r}", name)
    d = cfg.offsets()
    if np.any(d < 0) or np.any(d > 1):
        raise DatasetError("class offsets must lie in [0, 1]", "synth config")


def _pink_gain(n, fs):
    f = np.fft.rfftfreq(n, 1 / fs)
    g = np.zeros_like(f)
    g[1:] = 1 / np.sqrt(np.maximum(f[1:], 1.0))
    return _unit_gain(g, n)


def _unit_gain(g, n):
    """Scale spectral gain ``g`` so irfft(rfft(white) * g) has unit variance."""
    w = np.full(g.size, 2.0)
    w[0] = 1.0
    if n % 2 == 0:
        w[-1] = 1.0
    return g / np.sqrt(np.sum(w * g ** 2) / n)


def slow_noise(rng, n, fs, bandwidth_hz):
    """Unit-variance Gaussian process with a Gaussian spectrum of width ``bandwidth_hz``."""
    f = np.fft.rfftfreq(n, 1 / fs)
    g = _unit_gain(np.exp(-0.5 * (f / bandwidth_hz) ** 2), n)
    return np.fft.irfft(np.fft.rfft(rng.standard_normal(n)) * g, n=n)


def pink_noise(rng, n_channels, n, fs, rms=1.0):
    white = rng.standard_normal((n_channels, n))
    spec = np.fft.rfft(white, axis=1) * _pink_gain(n, fs)
    return rms * np.fft.irfft(spec, n=n, axis=1)


def generate_synthetic_dataset(config: SynthConfig | None = None, seed: int = 0) -> Dataset:
    """Build a deterministic synthetic corpus; identical (config, seed) give identical bytes."""
    cfg = config or SynthConfig()
    if cfg.n_subjects < 1:
        raise DatasetError("no subjects", "synth config")
    if cfg.clips_per_class < 1:
        raise DatasetError("need at least one clip per class", "synth config")
    region_map = cfg.region_map()
    bands = dict(layout.BANDS)
    _check_planted(cfg, region_map, bands)
    fs = float(cfg.sample_rate_hz)
    if not fs > 2 * max(hi for _, hi in bands.values()):
        raise DatasetError("sample rate below Nyquist for the configured bands", "synth config")

    rng = np.random.default_rng([seed, 7919])
    subjects = tuple(f"S{i + 1:02d}" for i in range(cfg.n_subjects))
    n_clips = 2 * cfg.clips_per_class
    content = [POSITIVE] * cfg.clips_per_class + [NEGATIVE] * cfg.clips_per_class
    lo_d, hi_d = cfg.clip_duration_s
    durations = np.round(rng.uniform(lo_d, hi_d, n_clips), 1)
    clip_ids = tuple(f"C{j + 1:02d}" for j in range(n_clips))

    n_flip = int(round(cfg.flip_fraction * cfg.n_subjects))
    flipped = set(rng.permutation(cfg.n_subjects)[:n_flip].tolist())
    if cfg.flip_per_key:
        key_flips = rng.random((cfg.n_subjects, len(cfg.planted))) < cfg.flip_fraction
        flipped = set(np.flatnonzero(key_flips.any(axis=1)).tolist())
    else:
        key_flips = np.zeros((cfg.n_subjects, len(cfg.planted)), dtype=bool)
        key_flips[sorted(flipped)] = True
    base = cfg.offsets()
    plans = []
    for i in range(cfg.n_subjects):
        jitter = np.exp(cfg.heterogeneity * rng.standard_normal(base.size))
        plans.append(_SubjectPlan(np.clip(base * jitter, 0.0, 1.0), np.where(key_flips[i], -1, 1)))

    ratings = {cid: {} for cid in clip_ids}
    for s in subjects:
        for cid, lab in zip(clip_ids, content):
            if lab == POSITIVE:
                val = int(np.clip(np.rint(rng.normal(7.5, 1.2)), 6, 9))
                aro = int(np.clip(np.rint(rng.normal(3.8, 1.6)), 1, 9))
            else:
                val = int(np.clip(np.rint(rng.normal(3.0, 1.0)), 1, 4))
                aro = int(np.clip(np.rint(rng.normal(5.5, 1.35)), 1, 9))
            if rng.random() < cfg.misrate_prob:
                val = 10 - val
            ratings[cid][s] = (val, aro)
    clips = tuple(ClipMetadata(cid, lab, float(dur), ratings[cid])
                  for cid, lab, dur in zip(clip_ids, content, durations))

    channels = layout.all_channels(region_map)
    extra = {
        "synthetic": {
            "seed": int(seed),
            "config": cfg.to_dict(),
            "planted": list(cfg.planted),
            "flipped_subjects": [subjects[i] for i in sorted(flipped)],
        },
        "channels": channels,
    }
    manifest = DatasetManifest(subjects, clips, {}, region_map, bands, extra)

    chan_index = {c: i for i, c in enumerate(channels)}
    planted = [(layout.split_feature_name(k)) for k in cfg.planted]
    subject_index = {s: i for i, s in enumerate(subjects)}
    clip_index = {c: j for j, c in enumerate(clip_ids)}

    def load(subject_id, clip_id):
        try:
            i, j = subject_index[subject_id], clip_index[clip_id]
        except KeyError:
            raise DatasetError("not in synthetic corpus", f"recording {subject_id}/{clip_id}") from None
        return _render(cfg, seed, i, j, subject_id, clip_id, content[j], durations[j], plans[i],
                       planted, bands, region_map, channels, chan_index, fs)

    return Dataset(manifest, load)


def _render(cfg, seed, i, j, subject_id, clip_id, content, duration, plan, planted, bands,
            region_map, channels, chan_index, fs):
    rng = np.random.default_rng([seed, i, j])
    n_base = int(round(cfg.baseline_s * fs))
    stim_s = duration if cfg.recorded_stimulus_s is None else min(duration, cfg.recorded_stimulus_s)
    n_stim = int(round(stim_s * fs))
    n = n_base + n_stim
    x = pink_noise(rng, len(channels), n, fs, cfg.noise_uv) if cfg.noise_uv > 0 \
        else np.zeros((len(channels), n))
    direction = 1 if content == POSITIVE else -1
    t = np.arange(n_stim) / fs
    for (band, region), d, sign in zip(planted, plan.offsets, plan.sign * direction):
        lo, hi = bands[band]
        width = hi - lo
        f0 = rng.uniform(lo + 0.25 * width, hi - 0.25 * width)
        power = cfg.oscillation_uv ** 2 * (1 + sign * d)
        sig = cfg.envelope_sigma
        # E[exp(2 sig z - 2 sig^2)] = 1, so the mean power is `power`
        env = np.sqrt(2 * power) * np.exp(sig * slow_noise(rng, n_stim, fs, cfg.envelope_hz) - sig ** 2)
        idx = [chan_index[c] for c in region_map[region]]
        phases = rng.uniform(0, 2 * np.pi, len(idx))
        x[idx, n_base:] += env * np.sin(2 * np.pi * f0 * t[None, :] + phases[:, None])
    return Recording(subject_id, clip_id, fs, tuple(channels), x.astype(np.float32),
                     (0, n_base), (n_base, n))
