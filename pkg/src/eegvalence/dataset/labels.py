"""Positive/negative labels from valence ratings.

PR (population rating): one label per clip from the mean valence over all
raters. SR (subjective rating): each subject's own valence decides, and a
rating of exactly 5 drops that subject/clip pair.
"""

from __future__ import annotations

import numpy as np

from .model import EXCLUDED, NEGATIVE, POSITIVE, DatasetError, LabelTable

MIDPOINT = 5


def _side(v):
    if v > MIDPOINT:
        return POSITIVE
    if v < MIDPOINT:
        return NEGATIVE
    return EXCLUDED


def derive_labels(dataset, criterion: str = "PR") -> LabelTable:
    crit = criterion.upper()
    manifest = getattr(dataset, "manifest", dataset)
    entries = {}
    if crit == "PR":
        for clip in manifest.clips:
            ratings = [v for v, _ in clip.per_subject_ratings.values()]
            if not ratings:
                raise DatasetError("no ratings for population label", f"clip {clip.clip_id}")
            # sum of integers keeps the exact-5 test exact
            total, n = int(np.sum(ratings)), len(ratings)
            if total == MIDPOINT * n:
                raise DatasetError("ambiguous clip: mean valence is exactly 5", f"clip {clip.clip_id}")
            label = POSITIVE if total > MIDPOINT * n else NEGATIVE
            for s in manifest.subjects:
                entries[s, clip.clip_id] = label
    elif crit == "SR":
        for clip in manifest.clips:
            for s in manifest.subjects:
                if s not in clip.per_subject_ratings:
                    raise DatasetError(f"subject {s} did not rate this clip", f"clip {clip.clip_id}")
                entries[s, clip.clip_id] = _side(clip.per_subject_ratings[s][0])
    else:
        raise ValueError(f"unknown label criterion {criterion!r}")
    return LabelTable(crit, entries)


def mean_valence(clip) -> float:
    return float(np.mean([v for v, _ in clip.per_subject_ratings.values()]))
