"""Gaussian class-conditional models: LDA, QDA and Gaussian naive Bayes.

Scores are log joint densities ``log p(c) + log N(x; mu_c, Sigma_c)``.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular

from .base import ClassifierError

LOG_2PI = np.log(2 * np.pi)


def _ridge(S, reg):
    d = S.shape[0]
    return S + (reg * np.trace(S) / d) * np.eye(d)


def _chol(S, what):
    try:
        return np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        raise ClassifierError(f"{what} covariance is singular beyond regularization") from None


def _mvn_logpdf(X, mean, chol):
    z = solve_triangular(chol, (X - mean).T, lower=True)
    return (-0.5 * np.sum(z ** 2, axis=0) - np.sum(np.log(np.diag(chol)))
            - 0.5 * mean.size * LOG_2PI)


def fit_lda(spec, X, y, n_classes):
    n, d = X.shape
    means = np.array([X[y == c].mean(axis=0) for c in range(n_classes)])
    resid = X - means[y]
    if n - n_classes < 1:
        raise ClassifierError("LDA needs more samples than classes")
    S = _ridge(resid.T @ resid / (n - n_classes), spec.reg)
    chol = _chol(S, "pooled")
    priors = np.bincount(y, minlength=n_classes) / n
    return {"means": means, "cov": S, "chol": chol, "priors": priors}


def score_lda(params, X):
    chol, means = params["chol"], params["means"]
    return np.column_stack([np.log(p) + _mvn_logpdf(X, m, chol)
                            for p, m in zip(params["priors"], means)])


def fit_qda(spec, X, y, n_classes):
    n, d = X.shape
    means, covs, chols = [], [], []
    for c in range(n_classes):
        Xc = X[y == c]
        if Xc.shape[0] < 2:
            raise ClassifierError(f"QDA needs at least 2 samples in class {c}")
        mu = Xc.mean(axis=0)
        R = Xc - mu
        S = _ridge(R.T @ R / (Xc.shape[0] - 1), spec.reg)
        means.append(mu)
        covs.append(S)
        chols.append(_chol(S, f"class {c}"))
    priors = np.bincount(y, minlength=n_classes) / n
    return {"means": np.array(means), "covs": np.array(covs), "chols": np.array(chols),
            "priors": priors}


def score_qda(params, X):
    return np.column_stack([np.log(p) + _mvn_logpdf(X, m, L)
                            for p, m, L in zip(params["priors"], params["means"], params["chols"])])


def fit_gnb(spec, X, y, n_classes):
    n = X.shape[0]
    eps = spec.var_smoothing * np.var(X, axis=0).max()
    means = np.array([X[y == c].mean(axis=0) for c in range(n_classes)])
    var = np.array([X[y == c].var(axis=0) for c in range(n_classes)]) + eps
    if np.any(var <= 0):
        raise ClassifierError("GNB variance is zero; all features constant")
    priors = np.bincount(y, minlength=n_classes) / n
    return {"means": means, "vars": var, "priors": priors}


def score_gnb(params, X):
    out = []
    for p, m, v in zip(params["priors"], params["means"], params["vars"]):
        ll = -0.5 * np.sum(np.log(2 * np.pi * v) + (X - m) ** 2 / v, axis=1)
        out.append(np.log(p) + ll)
    return np.column_stack(out)
