"""Stratified k-fold and leave-one-subject-out evaluation.

The standardizer is always fitted on the training rows of a fold and only
applied to the held-out rows.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from ..classifiers import ClassifierError, ClassifierSpec, Standardizer, fit, predict
from .metrics import ConfusionCounts, accuracy, f1_is_degenerate, f1_score

log = logging.getLogger(__name__)


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class FoldAssignment:
    """Fold index per trial, ``0 <= fold < k``."""

    k: int
    folds: np.ndarray
    seed: int

    def __post_init__(self):
        self.folds.setflags(write=False)

    def split(self, i):
        test = np.flatnonzero(self.folds == i)
        train = np.flatnonzero(self.folds != i)
        return train, test

    def __iter__(self):
        for i in range(self.k):
            yield self.split(i)


def _deal(units_by_class, k, rng):
    """Shuffle each class's units and deal them round-robin across folds.

    Each class continues where the previous one stopped, so fold sizes stay
    within one of each other as well as per-class counts.
    """
    out = {}
    start = 0
    for units in units_by_class:
        perm = rng.permutation(len(units))
        for j, p in enumerate(perm):
            out[units[p]] = (start + j) % k
        start = (start + len(units)) % k
    return out


def stratified_kfold(labels, k: int = 8, seed: int = 0, groups=None) -> FoldAssignment:
    """Class-balanced random partition into ``k`` folds.

    Parameters
    ----------
    labels : array_like
        Class label per trial.
    k : int
        Number of folds, at least 2.
    seed : int
    groups : array_like, optional
        Group id per trial (for example the clip). When given, trials of a
        group share a fold and the balance holds over groups; every group
        must carry a single label and every class needs at least ``k``
        groups. Fold composition then depends only on the group ids, not on
        trial order.

    Raises
    ------
    EvaluationError
        ``k < 2``, too few trials or groups in a class, or a mixed-label group.
    """
    labels = np.asarray(labels)
    if k < 2:
        raise EvaluationError("k must be >= 2")
    rng = np.random.default_rng(seed)
    classes = np.unique(labels)
    if groups is None:
        units = [np.flatnonzero(labels == c) for c in classes]
        for c, u in zip(classes, units):
            if len(u) < k:
                raise EvaluationError(f"class {c!r} has {len(u)} trials, fewer than k={k}")
        dealt = _deal([list(u) for u in units], k, rng)
        folds = np.array([dealt[i] for i in range(labels.size)], dtype=np.int64)
        return FoldAssignment(k, folds, seed)
    groups = np.asarray(groups)
    if groups.shape != labels.shape:
        raise EvaluationError("groups and labels differ in length")
    group_label = {}
    for g, lab in zip(groups.tolist(), labels.tolist()):
        if group_label.setdefault(g, lab) != lab:
            raise EvaluationError(f"group {g!r} mixes labels")
    units = [sorted(g for g, lab in group_label.items() if lab == c) for c in classes.tolist()]
    for c, u in zip(classes, units):
        if len(u) < k:
            raise EvaluationError(f"class {c!r} has {len(u)} groups, fewer than k={k}")
    dealt = _deal(units, k, rng)
    folds = np.array([dealt[g] for g in groups.tolist()], dtype=np.int64)
    return FoldAssignment(k, folds, seed)


@dataclass
class FoldResult:
    fold: int
    n_train: int
    n_test: int
    counts: ConfusionCounts | None = None
    f1: float = float("nan")
    accuracy: float = float("nan")
    degenerate: bool = False
    skipped: str = ""  # reason, empty when evaluated
    standardizer: Standardizer | None = field(default=None, repr=False, compare=False)


@dataclass
class CVResult:
    folds: list

    @property
    def evaluated(self):
        return [f for f in self.folds if not f.skipped]

    def _stat(self, attr, fn):
        vals = [getattr(f, attr) for f in self.evaluated]
        return float(fn(vals)) if vals else float("nan")

    @property
    def mean_f1(self):
        return self._stat("f1", np.mean)

    @property
    def std_f1(self):
        return self._stat("f1", np.std)

    @property
    def mean_accuracy(self):
        return self._stat("accuracy", np.mean)

    @property
    def std_accuracy(self):
        return self._stat("accuracy", np.std)

    @property
    def n_skipped(self):
        return sum(1 for f in self.folds if f.skipped)


def _positive(y):
    return 1 if np.issubdtype(np.asarray(y).dtype, np.number) else "positive"


def evaluate_split(X, y, train, test, spec, fold=0, positive=None) -> FoldResult:
    """Fit on ``train`` rows and score ``test`` rows; never raises on a bad fold."""
    res = FoldResult(fold, int(train.size), int(test.size))
    if np.unique(y[train]).size < 2:
        res.skipped = "single class in training fold"
        log.warning("fold %s skipped: %s", fold, res.skipped)
        return res
    if test.size == 0:
        res.skipped = "empty test fold"
        return res
    std = Standardizer.fit(X[train])
    res.standardizer = std
    try:
        model = fit(spec, std.apply(X[train]), y[train])
        pred = predict(model, std.apply(X[test]))
    except (ClassifierError, np.linalg.LinAlgError) as exc:
        res.skipped = f"fit failed: {exc}"
        log.warning("fold %s skipped: %s", fold, res.skipped)
        return res
    pos = _positive(y) if positive is None else positive
    c = ConfusionCounts.from_labels(y[test], pred, pos)
    res.counts = c
    res.f1 = f1_score(c)
    res.accuracy = accuracy(c)
    res.degenerate = f1_is_degenerate(c)
    return res


def _columns(X, features):
    X = np.asarray(X, dtype=float)
    return X if features is None else X[:, np.asarray(features, dtype=np.int64)]


def cross_validate(X, y, spec: ClassifierSpec, folds: FoldAssignment, features=None,
                   jobs: int = 1) -> CVResult:
    """Per-fold F1 and accuracy for one classifier.

    ``features`` optionally selects column indices of ``X``.
    """
    X = _columns(X, features)
    y = np.asarray(y)
    if folds.folds.size != y.size:
        raise EvaluationError("fold assignment does not match the number of trials")
    splits = list(folds)
    if jobs == 1:
        res = [evaluate_split(X, y, tr, te, spec, i) for i, (tr, te) in enumerate(splits)]
    else:
        res = Parallel(n_jobs=jobs)(delayed(evaluate_split)(X, y, tr, te, spec, i)
                                    for i, (tr, te) in enumerate(splits))
    return CVResult(res)


def loso_evaluate(X, y, subjects, spec: ClassifierSpec, features=None, jobs: int = 1) -> dict:
    """Leave-one-subject-out: one fold per subject, keyed by subject id."""
    X = _columns(X, features)
    y = np.asarray(y)
    subjects = np.asarray(subjects)
    ids = list(dict.fromkeys(subjects.tolist()))
    if len(ids) < 2:
        raise EvaluationError("leave-one-subject-out needs at least 2 subjects")
    splits = [(np.flatnonzero(subjects != s), np.flatnonzero(subjects == s)) for s in ids]
    if jobs == 1:
        res = [evaluate_split(X, y, tr, te, spec, s) for s, (tr, te) in zip(ids, splits)]
    else:
        res = Parallel(n_jobs=jobs)(delayed(evaluate_split)(X, y, tr, te, spec, s)
                                    for s, (tr, te) in zip(ids, splits))
    return dict(zip(ids, res))


def subject_cv(trials, spec: ClassifierSpec, k: int = 8, seed: int = 0,
               group_by_clip: bool = False, features=None) -> CVResult:
    """Stratified k-fold CV within one subject's labeled TrialSet.

    ``features`` are feature names; None keeps every column.
    """
    if features is not None:
        trials = trials.select(features)
    y = trials.y
    folds = stratified_kfold(y, k, seed, trials.clips if group_by_clip else None)
    return cross_validate(trials.X, y, spec, folds)
