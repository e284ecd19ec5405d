"""Classifier specification, the train-side standardizer and the fitted-model record."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

ALGORITHMS = ("LDA", "QDA", "SVM_linear", "SVM_rbf", "KNN", "GNB", "GB", "RF")

_ALIASES = {
    "lda": "LDA", "qda": "QDA", "gnb": "GNB", "nb": "GNB", "knn": "KNN",
    "svm_linear": "SVM_linear", "l-svm": "SVM_linear", "linear_svm": "SVM_linear", "lsvm": "SVM_linear",
    "svm_rbf": "SVM_rbf", "nonl-svm": "SVM_rbf", "rbf_svm": "SVM_rbf", "svm": "SVM_rbf",
    "gb": "GB", "rf": "RF",
}

DEFAULT_ESTIMATORS = {"GB": 10, "RF": 100}


class ClassifierError(ValueError):
    pass


def canonical_algorithm(name: str) -> str:
    key = str(name).strip().lower()
    if key not in _ALIASES:
        raise ClassifierError(f"unknown classifier {name!r}; expected one of {', '.join(ALGORITHMS)}")
    return _ALIASES[key]


@dataclass(frozen=True)
class ClassifierSpec:
    """Algorithm tag plus every hyperparameter, used or not.

    Unused parameters are kept so the provenance of a run records the
    whole configuration.
    """

    algorithm: str
    k: int = 5
    n_estimators: int | None = None
    C: float = 1.0
    gamma: float | None = None  # None -> 1 / n_features
    reg: float = 1e-6  # covariance ridge, relative to trace / d
    var_smoothing: float = 1e-9
    learning_rate: float = 0.1
    max_depth: int = 3  # GB trees
    tol: float = 1e-3  # SMO stopping tolerance on the maximal KKT violation
    gap_tol: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "algorithm", canonical_algorithm(self.algorithm))
        if self.n_estimators is None and self.algorithm in DEFAULT_ESTIMATORS:
            object.__setattr__(self, "n_estimators", DEFAULT_ESTIMATORS[self.algorithm])
        for name in ("k", "C", "reg", "learning_rate", "max_depth", "tol", "gap_tol"):
            if not getattr(self, name) > 0:
                raise ClassifierError(f"{name} must be positive")
        if self.gamma is not None and not self.gamma > 0:
            raise ClassifierError("gamma must be positive")
        if self.n_estimators is not None and self.n_estimators < 1:
            raise ClassifierError("n_estimators must be >= 1")

    def to_dict(self):
        return asdict(self)


class Standardizer:
    """Per-feature centering and unit-variance scaling learned on training rows.

    Constant columns get scale 1 and are listed in ``constant``.
    """

    def __init__(self, mean, scale, constant):
        self.mean = np.asarray(mean, float)
        self.scale = np.asarray(scale, float)
        self.constant = np.asarray(constant, bool)
        for a in (self.mean, self.scale, self.constant):
            a.setflags(write=False)

    @classmethod
    def fit(cls, X):
        X = np.asarray(X, float)
        if X.ndim != 2 or X.shape[0] == 0:
            raise ClassifierError("cannot standardize an empty matrix")
        if X.shape[0] < 2:
            raise ClassifierError("standardizer needs at least 2 training rows")
        mean = X.mean(axis=0)
        sd = X.std(axis=0)
        constant = sd <= 1e-12 * np.maximum(1.0, np.abs(mean))
        return cls(mean, np.where(constant, 1.0, sd), constant)

    def apply(self, X):
        X = np.asarray(X, float)
        if X.shape[-1] != self.mean.size:
            raise ClassifierError(f"expected {self.mean.size} features, got {X.shape[-1]}")
        out = (X - self.mean) / self.scale
        if self.constant.any():
            out[..., self.constant] = 0.0
        return out


def standardize_fit(X) -> Standardizer:
    return Standardizer.fit(X)


def standardize_apply(std: Standardizer, X):
    return std.apply(X)


def _freeze(obj):
    if isinstance(obj, np.ndarray):
        obj.setflags(write=False)
    elif isinstance(obj, dict):
        for v in obj.values():
            _freeze(v)
    elif isinstance(obj, (list, tuple)):
        for v in obj:
            _freeze(v)
    return obj


@dataclass(frozen=True, eq=False)
class TrainedModel:
    spec: ClassifierSpec
    classes: np.ndarray
    n_features: int
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        _freeze(self.classes)
        _freeze(self.params)
