"""Soft-margin SVM trained by sequential minimal optimization.

Working-set selection uses second-order information (the WSS2 rule of
Fan, Chen and Lin, 2005) over a fully cached kernel matrix, which is
cheap at the sample sizes of this pipeline (< 1000 trials).

After the KKT violation falls under ``tol`` the duality gap is computed
with the primal-optimal bias; if it is above ``gap_tol`` the tolerance is
tightened and optimization continues.
"""

from __future__ import annotations

import logging
import warnings

import numpy as np

from .base import ClassifierError

log = logging.getLogger(__name__)

TAU = 1e-12


def kernel_matrix(A, B, kind, gamma):
    if kind == "linear":
        return A @ B.T
    sq = (np.sum(A ** 2, axis=1)[:, None] + np.sum(B ** 2, axis=1)[None, :] - 2 * A @ B.T)
    return np.exp(-gamma * np.maximum(sq, 0.0))


def _optimal_bias(g, y, C):
    """Bias minimizing sum of hinge losses for fixed w; midpoint of the argmin set."""
    cand = np.sort(y - g)
    vals = np.concatenate([
        np.maximum(0.0, 1.0 - y[None, :] * (g[None, :] + b[:, None])).sum(axis=1)
        for b in np.array_split(cand, max(1, cand.size // 512))])
    best_val = vals.min()
    sel = cand[vals <= best_val + 1e-12 * (1 + best_val)]
    lo, hi = sel[0], sel[-1]
    return 0.5 * (lo + hi), C * best_val


def duality_gap(alpha, y, K, C, b=None):
    """Primal minus dual objective; returns (gap, bias used)."""
    g = K @ (alpha * y)
    wtw = float(np.dot(alpha * y, g))
    if b is None:
        b, hinge = _optimal_bias(g, y, C)
    else:
        hinge = C * np.maximum(0.0, 1.0 - y * (g + b)).sum()
    primal = 0.5 * wtw + hinge
    dual = alpha.sum() - 0.5 * wtw
    return primal - dual, b


def _smo_loop_py(K, y, C, eps, max_iter, alpha, G, it):
    n = y.size
    diagK = np.diag(K)
    pos, neg = y > 0, y < 0
    while it < max_iter:
        up = (pos & (alpha < C)) | (neg & (alpha > 0))
        low = (pos & (alpha > 0)) | (neg & (alpha < C))
        if not up.any() or not low.any():
            break
        score = -y * G
        i = int(np.argmax(np.where(up, score, -np.inf)))
        m = score[i]
        if m - np.min(np.where(low, score, np.inf)) < eps:
            break
        bgap = m - score
        a = diagK[i] + diagK - 2 * K[i]
        a = np.where(a > 0, a, TAU)
        j = int(np.argmax(np.where(low & (bgap > 0), bgap ** 2 / a, -np.inf)))
        lam = min(bgap[j] / a[j], C - alpha[i] if y[i] > 0 else alpha[i],
                  alpha[j] if y[j] > 0 else C - alpha[j])
        alpha[i] = min(max(alpha[i] + y[i] * lam, 0.0), C)
        alpha[j] = min(max(alpha[j] - y[j] * lam, 0.0), C)
        G += lam * y * (K[i] - K[j])
        it += 1
    return it


try:
    from numba import njit
except ImportError:  # pragma: no cover
    _smo_loop = _smo_loop_py
else:
    @njit(cache=True)
    def _smo_loop(K, y, C, eps, max_iter, alpha, G, it):
        n = y.size
        while it < max_iter:
            # i: most violating index in I_up; M: smallest score in I_low
            i = -1
            m = -np.inf
            M = np.inf
            for t in range(n):
                s = -y[t] * G[t]
                if (y[t] > 0 and alpha[t] < C) or (y[t] < 0 and alpha[t] > 0):
                    if s > m:
                        m = s
                        i = t
                if (y[t] > 0 and alpha[t] > 0) or (y[t] < 0 and alpha[t] < C):
                    if s < M:
                        M = s
            if i < 0 or M == np.inf or m - M < eps:
                break
            j = -1
            best = -np.inf
            Kii = K[i, i]
            for t in range(n):
                if (y[t] > 0 and alpha[t] > 0) or (y[t] < 0 and alpha[t] < C):
                    b = m + y[t] * G[t]
                    if b > 0:
                        a = Kii + K[t, t] - 2 * K[i, t]
                        if a <= 0:
                            a = TAU
                        v = b * b / a
                        if v > best:
                            best = v
                            j = t
            a = Kii + K[j, j] - 2 * K[i, j]
            if a <= 0:
                a = TAU
            lam = (m + y[j] * G[j]) / a
            lim = C - alpha[i] if y[i] > 0 else alpha[i]
            if lim < lam:
                lam = lim
            lim = alpha[j] if y[j] > 0 else C - alpha[j]
            if lim < lam:
                lam = lim
            alpha[i] = min(max(alpha[i] + y[i] * lam, 0.0), C)
            alpha[j] = min(max(alpha[j] - y[j] * lam, 0.0), C)
            for t in range(n):
                G[t] += lam * y[t] * (K[i, t] - K[j, t])
            it += 1
        return it


def smo(K, y, C=1.0, tol=1e-3, gap_tol=1e-4, max_iter=None, loop=None):
    """Solve the SVM dual for labels ``y`` in {-1, +1}.

    The KKT tolerance starts at ``tol`` and is divided by 10 until the
    duality gap drops below ``gap_tol``.

    Returns ``(alpha, b, gap, iterations)``.
    """
    loop = loop or _smo_loop
    n = y.size
    y = np.ascontiguousarray(y, dtype=float)
    K = np.ascontiguousarray(K, dtype=float)
    alpha = np.zeros(n)
    G = -np.ones(n)  # gradient of 0.5 a'Qa - e'a
    max_iter = max_iter or max(1_000_000, 1000 * n)
    eps = tol
    it = 0
    while True:
        it = loop(K, y, float(C), eps, max_iter, alpha, G, it)
        gap, b = duality_gap(alpha, y, K, C)
        if gap < gap_tol or eps <= 1e-12 or it >= max_iter:
            break
        eps /= 10
    if gap >= gap_tol:
        warnings.warn(f"SMO stopped after {it} iterations with duality gap {gap:.3g}",
                      RuntimeWarning, stacklevel=2)
    return alpha, b, gap, it


def fit_svm(spec, X, y, n_classes, kind):
    if n_classes != 2:
        raise ClassifierError("SVM is binary only")
    ys = np.where(y == 1, 1.0, -1.0)
    gamma = spec.gamma if spec.gamma is not None else 1.0 / X.shape[1]
    K = kernel_matrix(X, X, kind, gamma)
    alpha, b, gap, it = smo(K, ys, spec.C, spec.tol, spec.gap_tol)
    sv = alpha > 0
    params = {"kernel": kind, "gamma": float(gamma), "support_vectors": X[sv].copy(),
              "dual_coef": (alpha * ys)[sv], "intercept": float(b),
              "duality_gap": float(gap), "iterations": int(it)}
    if kind == "linear":
        params["coef"] = (alpha * ys) @ X
    log.debug("SMO %s: n=%d iterations=%d gap=%.2e", kind, X.shape[0], it, gap)
    return params


def decision_function(params, X):
    if params["kernel"] == "linear" and "coef" in params:
        return X @ params["coef"] + params["intercept"]
    K = kernel_matrix(X, params["support_vectors"], params["kernel"], params["gamma"])
    return K @ params["dual_coef"] + params["intercept"]


def score_svm(params, X):
    f = decision_function(params, X)
    return np.column_stack([-f, f])
