"""Confusion counts, F1 score and accuracy."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self):
        for name in ("tp", "tn", "fp", "fn"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise MetricError(f"{name} must be a non-negative integer, got {v!r}")
            object.__setattr__(self, name, int(v))

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    @classmethod
    def from_labels(cls, y_true, y_pred, positive=1) -> "ConfusionCounts":
        t = np.asarray(y_true) == positive
        p = np.asarray(y_pred) == positive
        if t.shape != p.shape:
            raise MetricError("label arrays differ in shape")
        return cls(int(np.sum(t & p)), int(np.sum(~t & ~p)), int(np.sum(~t & p)), int(np.sum(t & ~p)))

    def __add__(self, other):
        return ConfusionCounts(self.tp + other.tp, self.tn + other.tn,
                               self.fp + other.fp, self.fn + other.fn)


def f1_is_degenerate(c: ConfusionCounts) -> bool:
    """True when precision or recall is undefined, or both are zero."""
    return c.tp == 0


def f1_score(c: ConfusionCounts) -> float:
    """Harmonic mean of precision and recall.

    Written as ``2TP / (2TP + FP + FN)``, which equals ``2PR / (P + R)``
    whenever the latter is defined. Degenerate counts (no true positives)
    give 0; check :func:`f1_is_degenerate` for the flag.

    Examples
    --------
    >>> f1_score(ConfusionCounts(tp=4, tn=0, fp=1, fn=3))
    0.6666666666666666
    """
    if c.tp == 0:
        return 0.0
    return 2 * c.tp / (2 * c.tp + c.fp + c.fn)


def accuracy(c: ConfusionCounts) -> float:
    if c.total == 0:
        raise MetricError("accuracy of zero evaluated trials")
    return (c.tp + c.tn) / c.total
