"""Feature matrix with labels and provenance for one window size."""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from ..dataset.model import EXCLUDED, NEGATIVE, POSITIVE

PROVENANCE = ("subject", "clip", "window_index", "label")


@dataclass(frozen=True, eq=False)
class TrialSet:
    """``X`` rows are trials, columns are ``feature_names``.

    ``labels`` holds "positive"/"negative" strings, or None before a label
    table is applied.
    """

    X: np.ndarray
    feature_names: tuple
    subjects: np.ndarray
    clips: np.ndarray
    window_index: np.ndarray
    window_s: int
    labels: np.ndarray | None = None

    def __len__(self):
        return self.X.shape[0]

    @property
    def y(self) -> np.ndarray:
        if self.labels is None:
            raise ValueError("trial set has no labels")
        return (self.labels == POSITIVE).astype(int)

    @property
    def groups(self) -> np.ndarray:
        return np.array([f"{s}/{c}" for s, c in zip(self.subjects, self.clips)])

    def take(self, idx) -> "TrialSet":
        idx = np.asarray(idx)
        return replace(self, X=self.X[idx], subjects=self.subjects[idx], clips=self.clips[idx],
                       window_index=self.window_index[idx],
                       labels=None if self.labels is None else self.labels[idx])

    def for_subject(self, subject_id) -> "TrialSet":
        return self.take(np.flatnonzero(self.subjects == subject_id))

    def select(self, names) -> "TrialSet":
        lookup = {n: i for i, n in enumerate(self.feature_names)}
        cols = [lookup[n] for n in names]
        return replace(self, X=self.X[:, cols], feature_names=tuple(names))

    def with_labels(self, table) -> "TrialSet":
        """Attach labels from a LabelTable; excluded trials are dropped."""
        labels = np.array([table.label(s, c) for s, c in zip(self.subjects, self.clips)])
        keep = np.flatnonzero(labels != EXCLUDED)
        out = replace(self, labels=labels)
        return out.take(keep)

    @property
    def subject_ids(self):
        return list(dict.fromkeys(self.subjects.tolist()))

    @classmethod
    def concatenate(cls, parts):
        parts = list(parts)
        first = parts[0]
        labels = None if first.labels is None else np.concatenate([p.labels for p in parts])
        return cls(np.vstack([p.X for p in parts]), first.feature_names,
                   np.concatenate([p.subjects for p in parts]),
                   np.concatenate([p.clips for p in parts]),
                   np.concatenate([p.window_index for p in parts]), first.window_s, labels)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(list(self.feature_names) + list(PROVENANCE))
            labels = self.labels if self.labels is not None else [""] * len(self)
            for row, s, c, wi, lab in zip(self.X, self.subjects, self.clips, self.window_index, labels):
                w.writerow([repr(float(v)) for v in row] + [s, c, int(wi), lab])

    @classmethod
    def from_csv(cls, path, window_s: int):
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        n_feat = len(header) - len(PROVENANCE)
        if tuple(header[n_feat:]) != PROVENANCE:
            raise ValueError(f"{path}: unexpected provenance columns {header[n_feat:]}")
        X = np.array([[float(v) for v in r[:n_feat]] for r in body]).reshape(len(body), n_feat)
        labels = np.array([r[-1] for r in body])
        has_labels = len(body) > 0 and all(l in (POSITIVE, NEGATIVE) for l in labels)
        return cls(X, tuple(header[:n_feat]), np.array([r[n_feat] for r in body]),
                   np.array([r[n_feat + 1] for r in body]),
                   np.array([int(r[n_feat + 2]) for r in body]), window_s,
                   labels if has_labels else None)

    def save_npz(self, path):
        np.savez(path, X=self.X, feature_names=np.array(self.feature_names), subjects=self.subjects,
                 clips=self.clips, window_index=self.window_index, window_s=self.window_s,
                 labels=np.array([]) if self.labels is None else self.labels)

    @classmethod
    def load_npz(cls, path):
        d = np.load(path, allow_pickle=False)
        labels = d["labels"]
        return cls(d["X"], tuple(d["feature_names"].tolist()), d["subjects"], d["clips"],
                   d["window_index"], int(d["window_s"]), labels if labels.size else None)
