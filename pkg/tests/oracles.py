"""Independent brute-force references used by the unit and acceptance tests.

Each oracle takes a different route from the package code: explicit
loops, matrix inverses and determinants instead of Cholesky factors,
exhaustive search instead of sorting or annealing.
"""

import itertools
import math

import numpy as np


def _class_stats(X, y):
    classes = sorted(set(y.tolist()))
    out = []
    for c in classes:
        rows = [X[i] for i in range(len(y)) if y[i] == c]
        n_c = len(rows)
        mu = sum(rows) / n_c
        out.append((c, np.array(rows), mu, n_c / len(y)))
    return out


def _logdens(x, mu, S):
    d = mu.size
    sign, logdet = np.linalg.slogdet(2 * math.pi * S)
    assert sign > 0
    diff = x - mu
    return -0.5 * diff @ np.linalg.inv(S) @ diff - 0.5 * logdet


def _ridge(S, reg):
    return S + reg * np.trace(S) / S.shape[0] * np.eye(S.shape[0])


def gaussian_scores(kind, X, y, Xq, reg=1e-6, var_smoothing=1e-9):
    """log prior + log Gaussian density per class, by the textbook formulas."""
    stats = _class_stats(X, y)
    n, d = X.shape
    if kind == "LDA":
        S = np.zeros((d, d))
        for _, rows, mu, _ in stats:
            for r in rows:
                S += np.outer(r - mu, r - mu)
        S = _ridge(S / (n - len(stats)), reg)
    cols = []
    for _, rows, mu, prior in stats:
        if kind == "QDA":
            Sc = np.zeros((d, d))
            for r in rows:
                Sc += np.outer(r - mu, r - mu)
            Sc = _ridge(Sc / (len(rows) - 1), reg)
        elif kind == "GNB":
            eps = var_smoothing * max(np.mean((X[:, j] - X[:, j].mean()) ** 2) for j in range(d))
            Sc = np.diag([np.mean((rows[:, j] - mu[j]) ** 2) + eps for j in range(d)])
        else:
            Sc = S
        cols.append([math.log(prior) + _logdens(x, mu, Sc) for x in Xq])
    return np.array(cols).T


def knn_predict(X, y, Xq, k=5):
    """Exhaustive distances; ties in distance keep training order; vote ties go to the nearest."""
    out = []
    for q in Xq:
        d = [(float(np.sum((X[i] - q) ** 2)), i) for i in range(len(X))]
        d.sort()
        nn = [i for _, i in d[:k]]
        votes = {}
        for i in nn:
            votes[y[i]] = votes.get(y[i], 0) + 1
        best = max(votes.values())
        winners = [c for c, v in votes.items() if v == best]
        out.append(winners[0] if len(winners) == 1 else y[nn[0]])
    return np.array(out)


def exhaustive_min(energy, n_features):
    """(best energy, best masks) over all 2**n subsets."""
    best, arg = math.inf, []
    for bits in itertools.product([False, True], repeat=n_features):
        m = np.array(bits)
        e = energy(m)
        if e < best - 1e-15:
            best, arg = e, [m]
        elif abs(e - best) <= 1e-15:
            arg.append(m)
    return best, arg


def friedman_statistic(M):
    """Friedman chi-square by the textbook average-rank formula with ties."""
    M = np.asarray(M, float)
    n, k = M.shape
    R = np.zeros(k)
    for row in M:
        for j in range(k):
            less = sum(1 for v in row if v < row[j])
            equal = sum(1 for v in row if v == row[j])
            R[j] += less + (equal + 1) / 2
    return 12 / (n * k * (k + 1)) * np.sum((R - n * (k + 1) / 2) ** 2)


def f1_from_labels(y_true, y_pred):
    tp = sum(1 for a, b in zip(y_true, y_pred) if a == 1 and b == 1)
    fp = sum(1 for a, b in zip(y_true, y_pred) if a == 0 and b == 1)
    fn = sum(1 for a, b in zip(y_true, y_pred) if a == 1 and b == 0)
    if tp == 0:
        return 0.0
    p, r = tp / (tp + fp), tp / (tp + fn)
    return 2 * p * r / (p + r)


def spearman(a, b):
    def ranks(v):
        order = sorted(range(len(v)), key=lambda i: v[i])
        r = [0.0] * len(v)
        i = 0
        while i < len(v):
            j = i
            while j + 1 < len(v) and v[order[j + 1]] == v[order[i]]:
                j += 1
            for t in range(i, j + 1):
                r[order[t]] = (i + j) / 2 + 1
            i = j + 1
        return np.array(r)
    ra, rb = ranks(list(a)), ranks(list(b))
    ra, rb = ra - ra.mean(), rb - rb.mean()
    return float(ra @ rb / math.sqrt((ra @ ra) * (rb @ rb)))


def pywt_leaves(x, level=8):
    """Frequency-ordered db4 packet leaves from PyWavelets on a zero-padded copy of ``x``.

    The filter bank is shifted to line up with the package's periodized
    transform; padding to a multiple of 2**level mirrors its boundary rule.
    """
    import pywt
    from eegvalence.features.wavelets import daubechies_filters

    h, g = daubechies_filters(4)
    pad = np.zeros(h.size - 2)
    dl, dh = np.r_[h[::-1], pad], np.r_[g[::-1], pad]
    wav = pywt.Wavelet("aligned", filter_bank=[dl, dh, dl[::-1], dh[::-1]])
    block = 2 ** level
    x = np.r_[np.asarray(x, float), np.zeros(-len(x) % block)]
    wp = pywt.WaveletPacket(x, wav, mode="periodization", maxlevel=level)
    return np.array([nd.data for nd in wp.get_level(level, "freq")])
