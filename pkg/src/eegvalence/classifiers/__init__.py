"""The eight-classifier battery behind a single fit / predict contract."""

from __future__ import annotations

import json

import numpy as np

from . import gaussian, knn, svm, trees
from .base import (ALGORITHMS, ClassifierError, ClassifierSpec, Standardizer, TrainedModel,
                   canonical_algorithm, standardize_apply, standardize_fit)

__all__ = [
    "ALGORITHMS", "ClassifierError", "ClassifierSpec", "Standardizer", "TrainedModel",
    "canonical_algorithm", "standardize_apply", "standardize_fit", "fit", "predict",
    "decision_scores", "model_to_json", "model_from_json",
]

FORMAT_VERSION = 1

_FIT = {
    "LDA": gaussian.fit_lda,
    "QDA": gaussian.fit_qda,
    "GNB": gaussian.fit_gnb,
    "KNN": knn.fit_knn,
    "SVM_linear": lambda s, X, y, k: svm.fit_svm(s, X, y, k, "linear"),
    "SVM_rbf": lambda s, X, y, k: svm.fit_svm(s, X, y, k, "rbf"),
    "RF": trees.fit_rf,
    "GB": trees.fit_gb,
}

_SCORE = {
    "LDA": gaussian.score_lda,
    "QDA": gaussian.score_qda,
    "GNB": gaussian.score_gnb,
    "KNN": knn.score_knn,
    "SVM_linear": svm.score_svm,
    "SVM_rbf": svm.score_svm,
    "RF": trees.score_rf,
    "GB": trees.score_gb,
}


def _as_matrix(X):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ClassifierError(f"expected a 2-D feature matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ClassifierError("feature matrix contains non-finite values")
    return X


def fit(spec: ClassifierSpec, X, y) -> TrainedModel:
    """Fit ``spec`` on a standardized matrix ``X`` with binary labels ``y``.

    Raises
    ------
    ClassifierError
        If only one class is present, the shapes disagree, or the model
        cannot be fitted (for example a singular covariance).
    """
    if isinstance(spec, str):
        spec = ClassifierSpec(spec)
    X = _as_matrix(X)
    y = np.asarray(y)
    if y.shape != (X.shape[0],):
        raise ClassifierError(f"labels have shape {y.shape}, expected ({X.shape[0]},)")
    classes, y_int = np.unique(y, return_inverse=True)
    if classes.size < 2:
        raise ClassifierError("training data contains a single class")
    if classes.size > 2:
        raise ClassifierError("only binary classification is supported")
    params = _FIT[spec.algorithm](spec, X, y_int, classes.size)
    return TrainedModel(spec, classes, X.shape[1], params)


def decision_scores(model: TrainedModel, X) -> np.ndarray:
    """Per-class scores, shape (n, 2); the predicted class is the argmax."""
    X = _as_matrix(X)
    if X.shape[1] != model.n_features:
        raise ClassifierError(f"model expects {model.n_features} features, got {X.shape[1]}")
    return _SCORE[model.spec.algorithm](model.params, X)


def predict(model: TrainedModel, X) -> np.ndarray:
    return model.classes[np.argmax(decision_scores(model, X), axis=1)]


def _encode(obj):
    if isinstance(obj, np.ndarray):
        return {"__ndarray__": obj.ravel().tolist(), "dtype": obj.dtype.str, "shape": list(obj.shape)}
    if isinstance(obj, dict):
        return {k: _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _decode(obj):
    if isinstance(obj, dict):
        if "__ndarray__" in obj:
            return np.array(obj["__ndarray__"], dtype=np.dtype(obj["dtype"])).reshape(obj["shape"])
        return {k: _decode(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_decode(v) for v in obj]
    return obj


def model_to_json(model: TrainedModel) -> str:
    """Versioned JSON document; floats are written with round-trip precision."""
    doc = {"format": "eegvalence-model", "version": FORMAT_VERSION,
           "spec": model.spec.to_dict(), "classes": _encode(np.asarray(model.classes)),
           "n_features": model.n_features, "params": _encode(model.params)}
    return json.dumps(doc, sort_keys=True)


def model_from_json(text: str) -> TrainedModel:
    doc = json.loads(text)
    if doc.get("format") != "eegvalence-model":
        raise ClassifierError("not a serialized model")
    if doc.get("version") != FORMAT_VERSION:
        raise ClassifierError(f"unsupported model format version {doc.get('version')}")
    return TrainedModel(ClassifierSpec(**doc["spec"]), _decode(doc["classes"]),
                        int(doc["n_features"]), _decode(doc["params"]))
