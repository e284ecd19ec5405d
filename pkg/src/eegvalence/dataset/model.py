"""Data model for recordings, clip metadata and label tables."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator, Mapping

import numpy as np

from . import layout

POSITIVE = "positive"
NEGATIVE = "negative"
EXCLUDED = "excluded"


class DatasetError(ValueError):
    """Raised for malformed manifests, missing files and invariant failures.

    ``entity`` names the offending subject, clip, recording or region.
    """

    def __init__(self, message, entity=None):
        self.entity = entity
        super().__init__(f"{entity}: {message}" if entity is not None else message)


@dataclass(frozen=True)
class Violation:
    entity: str
    rule: str
    detail: str = ""

    def __str__(self):
        return f"{self.entity}: {self.rule}" + (f" ({self.detail})" if self.detail else "")


@dataclass(frozen=True, eq=False)
class Recording:
    """Multichannel EEG for one subject watching one clip.

    ``samples`` is a channels x time array in microvolts. Spans are
    half-open sample intervals ``(start, stop)``.
    """

    subject_id: str
    clip_id: str
    sample_rate_hz: float
    channel_labels: tuple
    samples: np.ndarray
    baseline_span: tuple
    stimulus_span: tuple

    @property
    def key(self):
        return (self.subject_id, self.clip_id)

    @property
    def n_samples(self):
        return self.samples.shape[1]

    def replace_samples(self, samples) -> "Recording":
        return Recording(self.subject_id, self.clip_id, self.sample_rate_hz,
                         self.channel_labels, samples, self.baseline_span, self.stimulus_span)

    def channel_index(self, labels):
        lookup = {c: i for i, c in enumerate(self.channel_labels)}
        return [lookup[c] for c in labels]

    def violations(self, max_band_hz: float | None = None) -> list[Violation]:
        ent = f"recording {self.subject_id}/{self.clip_id}"
        out = []
        s = np.asarray(self.samples)
        if s.ndim != 2:
            out.append(Violation(ent, "samples must be channels x time", f"ndim={s.ndim}"))
            return out
        if s.shape[0] != len(self.channel_labels):
            out.append(Violation(ent, "channel count mismatch",
                                 f"{s.shape[0]} rows vs {len(self.channel_labels)} labels"))
        if len(set(self.channel_labels)) != len(self.channel_labels):
            out.append(Violation(ent, "duplicate channel labels"))
        if not self.sample_rate_hz > 0:
            out.append(Violation(ent, "sample rate must be positive"))
        elif max_band_hz is not None and not self.sample_rate_hz > 2 * max_band_hz:
            out.append(Violation(ent, "sample rate below Nyquist for configured bands",
                                 f"{self.sample_rate_hz} <= 2 x {max_band_hz}"))
        n = s.shape[1]
        for name, span in (("baseline", self.baseline_span), ("stimulus", self.stimulus_span)):
            a, b = span
            if not (0 <= a < b <= n):
                out.append(Violation(ent, f"{name} span outside sample range", f"{span} vs n={n}"))
        (a0, b0), (a1, b1) = self.baseline_span, self.stimulus_span
        if a0 < b1 and a1 < b0:
            out.append(Violation(ent, "baseline span overlaps stimulus span"))
        return out


@dataclass(frozen=True)
class ClipMetadata:
    """One stimulus clip: content label plus per-subject (valence, arousal)."""

    clip_id: str
    content_label: str
    duration_s: float
    per_subject_ratings: Mapping = field(default_factory=dict)

    def violations(self) -> list[Violation]:
        ent = f"clip {self.clip_id}"
        out = []
        if self.content_label not in (POSITIVE, NEGATIVE):
            out.append(Violation(ent, "content label must be positive or negative",
                                 repr(self.content_label)))
        for subj, pair in self.per_subject_ratings.items():
            for name, v in zip(("valence", "arousal"), pair):
                if int(v) != v or not 1 <= v <= 9:
                    out.append(Violation(ent, "rating out of 1-9", f"{subj} {name}={v}"))
        return out


@dataclass(frozen=True)
class DatasetManifest:
    subjects: tuple
    clips: tuple  # of ClipMetadata
    recordings: Mapping = field(default_factory=dict)  # (subject, clip) -> file entry
    region_map: Mapping = field(default_factory=lambda: dict(layout.REGION_MAP))
    band_definitions: Mapping = field(default_factory=lambda: dict(layout.BANDS))
    extra: Mapping = field(default_factory=dict)

    def clip(self, clip_id) -> ClipMetadata:
        for c in self.clips:
            if c.clip_id == clip_id:
                return c
        raise KeyError(clip_id)

    @property
    def clip_ids(self):
        return tuple(c.clip_id for c in self.clips)

    def violations(self) -> list[Violation]:
        out = []
        if not self.subjects:
            out.append(Violation("manifest", "no subjects"))
        if len(set(self.subjects)) != len(self.subjects):
            out.append(Violation("manifest", "duplicate subject ids"))
        if len(set(self.clip_ids)) != len(self.clip_ids):
            out.append(Violation("manifest", "duplicate clip ids"))
        for c in self.clips:
            out.extend(c.violations())
        for r, chans in self.region_map.items():
            if not chans:
                out.append(Violation(f"region {r}", "region has no channels"))
        edges = sorted(self.band_definitions.items(), key=lambda kv: kv[1][0])
        for name, (lo, hi) in edges:
            if not lo < hi:
                out.append(Violation(f"band {name}", "empty band", f"{lo}-{hi}"))
        for (n0, (_, hi0)), (n1, (lo1, _)) in zip(edges, edges[1:]):
            if lo1 < hi0:
                out.append(Violation(f"band {n1}", "bands overlap", f"{n0} ends {hi0}, {n1} starts {lo1}"))
        return out

    @property
    def max_band_hz(self):
        return max(hi for _, hi in self.band_definitions.values())


class Dataset:
    """Manifest plus lazily materialized recordings.

    ``loader(subject_id, clip_id)`` returns a :class:`Recording`. Recordings
    are not kept in memory unless ``cache=True``; a full 24 x 14 corpus at
    1 kHz does not fit comfortably otherwise.
    """

    def __init__(self, manifest: DatasetManifest, loader: Callable[[str, str], Recording],
                 cache: bool = False):
        self.manifest = manifest
        self._loader = loader
        self._cache = {} if cache else None

    @property
    def subjects(self):
        return self.manifest.subjects

    @property
    def clips(self):
        return self.manifest.clips

    @property
    def region_map(self):
        return self.manifest.region_map

    @property
    def band_definitions(self):
        return self.manifest.band_definitions

    def keys(self):
        return [(s, c.clip_id) for s in self.manifest.subjects for c in self.manifest.clips]

    def __len__(self):
        return len(self.manifest.subjects) * len(self.manifest.clips)

    def recording(self, subject_id, clip_id) -> Recording:
        if self._cache is not None and (subject_id, clip_id) in self._cache:
            return self._cache[subject_id, clip_id]
        rec = self._loader(subject_id, clip_id)
        if self._cache is not None:
            self._cache[subject_id, clip_id] = rec
        return rec

    def __iter__(self) -> Iterator[Recording]:
        for s, c in self.keys():
            yield self.recording(s, c)


def recording_violations(rec: Recording, manifest: DatasetManifest) -> list[Violation]:
    out = rec.violations(manifest.max_band_hz)
    present = set(rec.channel_labels)
    for region, chans in manifest.region_map.items():
        missing = [c for c in chans if c not in present]
        if missing:
            out.append(Violation(f"recording {rec.subject_id}/{rec.clip_id}",
                                 f"region {region} channel missing", ",".join(missing)))
    return out


def validate_dataset(dataset: Dataset) -> list[Violation]:
    """Check every type invariant; an empty list means the dataset is clean."""
    m = dataset.manifest
    out = m.violations()
    for rec in dataset:
        out.extend(recording_violations(rec, m))
    return out


@dataclass(frozen=True)
class LabelTable:
    criterion: str
    entries: Mapping  # (subject, clip) -> positive / negative / excluded

    def label(self, subject_id, clip_id):
        return self.entries[subject_id, clip_id]

    def for_subject(self, subject_id):
        return {c: v for (s, c), v in self.entries.items() if s == subject_id}
