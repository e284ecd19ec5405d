"""Recursive feature elimination with a linear SVM and cross-subject aggregation."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from ..classifiers import ClassifierSpec, Standardizer, fit


class SelectionError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureRanking:
    """Feature names ordered from most to least important."""

    subject_id: str
    order: tuple
    k: int = 20

    def __post_init__(self):
        if len(set(self.order)) != len(self.order):
            raise SelectionError("ranking contains duplicate features")
        if not 1 <= self.k <= len(self.order):
            raise SelectionError(f"k={self.k} outside 1..{len(self.order)}")

    @property
    def selected(self) -> tuple:
        return self.order[:self.k]

    def rank_of(self, name) -> int:
        """1-based rank."""
        return self.order.index(name) + 1

    def to_dict(self):
        return {"subject": self.subject_id, "k": self.k, "order": list(self.order),
                "selected": list(self.selected)}

    @classmethod
    def from_dict(cls, d):
        return cls(d["subject"], tuple(d["order"]), int(d["k"]))


def rfe_rank(X, y, feature_names, k: int = 20, subject_id: str = "",
             spec: ClassifierSpec | None = None) -> FeatureRanking:
    """Rank every feature by recursive elimination, one feature per round.

    Each round refits the standardizer and a linear SVM on the surviving
    columns and removes the column with the smallest ``|w|``. Exact ties
    remove the later column first, so among equals the earlier one ranks
    higher. Constant columns are removed before any fitting and therefore
    rank last. Exact duplicate columns leave together, so they occupy
    adjacent ranks; otherwise the surviving copy would inherit the summed
    weight and its rank would depend on how many copies exist.

    Raises
    ------
    SelectionError
        Single-class input or fewer than 2 samples in a class.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    names = tuple(feature_names)
    if X.shape[1] != len(names):
        raise SelectionError("feature names do not match the matrix columns")
    classes, counts = np.unique(y, return_counts=True)
    if classes.size < 2:
        raise SelectionError("RFE needs both classes")
    if counts.min() < 2:
        raise SelectionError("RFE needs at least 2 samples per class")
    spec = spec or ClassifierSpec("SVM_linear")
    std = Standardizer.fit(X)
    remaining = [j for j in range(X.shape[1]) if not std.constant[j]]
    eliminated = [j for j in range(X.shape[1]) if std.constant[j]][::-1]
    twin = {}
    for j in remaining:
        twin.setdefault(X[:, j].tobytes(), []).append(j)
    copies = {j: g for g in twin.values() for j in g}
    while len(remaining) > 1:
        Xr = X[:, remaining]
        Xs = Standardizer.fit(Xr).apply(Xr)
        w = np.abs(fit(spec, Xs, y).params["coef"])
        smallest = np.flatnonzero(w == w.min())
        j = remaining[int(smallest[-1])]
        for c in sorted(copies[j], reverse=True):
            if c in remaining:
                remaining.remove(c)
                eliminated.append(c)
    eliminated += remaining
    order = tuple(names[j] for j in reversed(eliminated))
    return FeatureRanking(str(subject_id), order, min(k, len(order)))


@dataclass(frozen=True)
class CommonFeatureSet:
    keys: tuple
    support: dict = field(default_factory=dict)  # name -> number of subjects selecting it
    mean_rank: dict = field(default_factory=dict)
    criterion: str = "PR"

    def to_dict(self):
        return {"criterion": self.criterion, "keys": list(self.keys),
                "support": {k: self.support[k] for k in self.keys},
                "mean_rank": {k: self.mean_rank[k] for k in self.keys}}


def aggregate_common_features(rankings, size: int = 20, criterion: str = "PR") -> CommonFeatureSet:
    """The ``size`` features selected by the most subjects.

    Ordering: descending support, then ascending mean rank across subjects,
    then name.
    """
    rankings = list(rankings)
    if not rankings:
        raise SelectionError("no rankings to aggregate")
    universe = set(rankings[0].order)
    if any(set(r.order) != universe for r in rankings):
        raise SelectionError("rankings cover different feature sets")
    if size > len(universe):
        raise SelectionError(f"size {size} exceeds the {len(universe)} available features")
    if size < 1:
        raise SelectionError("size must be >= 1")
    support = Counter(name for r in rankings for name in r.selected)
    mean_rank = {n: sum(r.rank_of(n) for r in rankings) / len(rankings) for n in universe}
    ordered = sorted(universe, key=lambda n: (-support[n], mean_rank[n], n))[:size]
    return CommonFeatureSet(tuple(ordered), {n: support[n] for n in ordered},
                            {n: mean_rank[n] for n in ordered}, criterion)


def rankings_to_json(rankings, criterion: str = "PR") -> str:
    return json.dumps({"criterion": criterion, "rankings": [r.to_dict() for r in rankings]},
                      indent=2, sort_keys=True) + "\n"


def rankings_from_json(text):
    doc = json.loads(text)
    return [FeatureRanking.from_dict(d) for d in doc["rankings"]], doc.get("criterion", "PR")
