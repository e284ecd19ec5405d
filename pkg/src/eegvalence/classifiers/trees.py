"""CART trees, random forests and gradient boosting for binary labels.

Both split criteria reduce to one search. For a 0/1 target the weighted
Gini impurity of a split is ``const - 2 (s_l^2/n_l + s_r^2/n_r)`` with
``s`` the positive count, and squared error is ``const - (s_l^2/n_l +
s_r^2/n_r)`` with ``s`` the residual sum. So every split maximizes the
same score; only the target differs.
"""

from __future__ import annotations

import numpy as np

_LEAF = -1


def _seqsum(v):
    # left-to-right summation, matching the compiled grower bit for bit
    return np.cumsum(v)[-1] if v.size else 0.0


def _best_split(X, t, features):
    """Best (feature, threshold, score) among ``features``; None when no valid split."""
    n = X.shape[0]
    Xs = X[:, features]
    order = np.argsort(Xs, axis=0, kind="stable")
    xs = np.take_along_axis(Xs, order, axis=0)
    ts = t[order]
    sl = np.cumsum(ts, axis=0)[:-1]
    total = _seqsum(t)
    nl = np.arange(1, n, dtype=float)[:, None]
    sr = total - sl
    score = sl ** 2 / nl + sr ** 2 / (n - nl)
    valid = xs[1:] > xs[:-1]
    score = np.where(valid, score, -np.inf)
    best = np.max(score, axis=0)
    if not np.isfinite(best).any():
        return None
    f = int(np.argmax(best))
    pos = int(np.argmax(score[:, f]))
    thr = 0.5 * (xs[pos, f] + xs[pos + 1, f])
    if not thr < xs[pos + 1, f]:  # midpoint rounds up onto the right value
        thr = xs[pos, f]
    return int(features[f]), float(thr), float(best[f])


def build_tree(X, t, max_depth=None, max_features=None, rng=None):
    """Grow a tree on target ``t``; returns arrays (feature, threshold, left, right, value, n)."""
    d = X.shape[1]
    feat, thr, left, right, value, count = [], [], [], [], [], []

    def new_node(idx):
        feat.append(_LEAF)
        thr.append(0.0)
        left.append(_LEAF)
        right.append(_LEAF)
        value.append(float(_seqsum(t[idx]) / idx.size))
        count.append(idx.size)
        return len(feat) - 1

    root = new_node(np.arange(X.shape[0]))
    stack = [(root, np.arange(X.shape[0]), 0)]
    while stack:
        node, idx, depth = stack.pop()
        tt = t[idx]
        if idx.size < 2 or (max_depth is not None and depth >= max_depth) or np.all(tt == tt[0]):
            continue
        Xn = X[idx]
        if max_features is None or max_features >= d:
            split = _best_split(Xn, tt, np.arange(d))
        else:
            perm = rng.permutation(d)
            split = _best_split(Xn, tt, perm[:max_features])
            if split is None:
                # every sampled feature is constant here; fall back to the rest
                split = _best_split(Xn, tt, perm[max_features:])
        if split is None:
            continue
        f, th, _ = split
        go_left = Xn[:, f] <= th
        li, ri = idx[go_left], idx[~go_left]
        feat[node], thr[node] = f, th
        left[node] = new_node(li)
        right[node] = new_node(ri)
        stack.append((right[node], ri, depth + 1))
        stack.append((left[node], li, depth + 1))
    return {"feature": np.array(feat, dtype=np.int64), "threshold": np.array(thr),
            "left": np.array(left, dtype=np.int64), "right": np.array(right, dtype=np.int64),
            "value": np.array(value), "n_node": np.array(count, dtype=np.int64)}


try:
    from numba import njit
except ImportError:  # pragma: no cover
    njit = None

if njit is not None:
    @njit(cache=True)
    def _grow(X, t, max_depth, max_features, seed):
        n, d = X.shape
        cap = 2 * n + 1
        feat = np.full(cap, -1, np.int64)
        thr = np.zeros(cap)
        left = np.full(cap, -1, np.int64)
        right = np.full(cap, -1, np.int64)
        value = np.zeros(cap)
        count = np.zeros(cap, np.int64)
        depth_of = np.zeros(cap, np.int64)
        start = np.zeros(cap, np.int64)
        stop = np.zeros(cap, np.int64)
        if max_features < d:
            np.random.seed(seed)
        idx = np.arange(n)
        buf = np.empty(n, np.int64)
        xs = np.empty(n)
        ts = np.empty(n)
        feats = np.arange(d)
        value[0] = t.mean()
        count[0] = n
        start[0], stop[0] = 0, n
        n_nodes = 1
        stack = np.empty(cap, np.int64)
        top = 0
        stack[0] = 0
        top = 1
        while top > 0:
            top -= 1
            node = stack[top]
            a, b = start[node], stop[node]
            m = b - a
            if m < 2 or (max_depth >= 0 and depth_of[node] >= max_depth):
                continue
            pure = True
            for q in range(a + 1, b):
                if t[idx[q]] != t[idx[a]]:
                    pure = False
                    break
            if pure:
                continue
            if max_features < d:
                feats = np.random.permutation(d)
            best_f = -1
            best_s = -np.inf
            best_thr = 0.0
            total = 0.0
            for q in range(a, b):
                total += t[idx[q]]
            for phase in range(2):
                if phase == 0:
                    lo_c, hi_c = 0, min(max_features, d)
                else:
                    if best_f >= 0 or max_features >= d:
                        break
                    lo_c, hi_c = max_features, d
                for c in range(lo_c, hi_c):
                    f = feats[c]
                    for q in range(m):
                        xs[q] = X[idx[a + q], f]
                    o = np.argsort(xs[:m], kind="mergesort")
                    sl = 0.0
                    fb = -np.inf
                    pos = -1
                    for q in range(m - 1):
                        sl += t[idx[a + o[q]]]
                        if xs[o[q + 1]] > xs[o[q]]:
                            nl = q + 1.0
                            sr = total - sl
                            sc = sl * sl / nl + sr * sr / (m - nl)
                            if sc > fb:
                                fb = sc
                                pos = q
                    if pos >= 0 and fb > best_s:
                        best_s = fb
                        best_f = f
                        lo_v, hi_v = xs[o[pos]], xs[o[pos + 1]]
                        best_thr = 0.5 * (lo_v + hi_v)
                        if not best_thr < hi_v:
                            best_thr = lo_v
            if best_f < 0:
                continue
            # stable partition of idx[a:b]
            nl_ = 0
            for q in range(a, b):
                if X[idx[q], best_f] <= best_thr:
                    buf[nl_] = idx[q]
                    nl_ += 1
            k = nl_
            for q in range(a, b):
                if not X[idx[q], best_f] <= best_thr:
                    buf[k] = idx[q]
                    k += 1
            for q in range(m):
                idx[a + q] = buf[q]
            feat[node] = best_f
            thr[node] = best_thr
            for side in range(2):
                ch = n_nodes
                n_nodes += 1
                if side == 0:
                    left[node] = ch
                    start[ch], stop[ch] = a, a + nl_
                else:
                    right[node] = ch
                    start[ch], stop[ch] = a + nl_, b
                s_ = 0.0
                for q in range(start[ch], stop[ch]):
                    s_ += t[idx[q]]
                count[ch] = stop[ch] - start[ch]
                value[ch] = s_ / count[ch]
                depth_of[ch] = depth_of[node] + 1
            stack[top] = right[node]
            stack[top + 1] = left[node]
            top += 2
        return (feat[:n_nodes], thr[:n_nodes], left[:n_nodes], right[:n_nodes],
                value[:n_nodes], count[:n_nodes])


def grow_tree(X, t, max_depth=None, max_features=None, seed=0):
    """Compiled equivalent of :func:`build_tree`.

    With ``max_features`` below the column count the per-node feature
    draws come from the compiled RNG seeded with ``seed``, so trees differ
    from :func:`build_tree` but are reproducible.
    """
    X = np.ascontiguousarray(X, dtype=float)
    t = np.ascontiguousarray(t, dtype=float)
    d = X.shape[1]
    mf = d if max_features is None else int(max_features)
    if njit is None:
        return build_tree(X, t, max_depth, None if mf >= d else mf, np.random.default_rng(seed))
    f, th, le, ri, v, c = _grow(X, t, -1 if max_depth is None else int(max_depth), mf, int(seed))
    return {"feature": f, "threshold": th, "left": le, "right": ri, "value": v, "n_node": c}


def apply_tree(tree, X):
    """Leaf index reached by each row."""
    node = np.zeros(X.shape[0], dtype=np.int64)
    feat, thr, left, right = tree["feature"], tree["threshold"], tree["left"], tree["right"]
    rows = np.arange(X.shape[0])
    while True:
        f = feat[node]
        inner = f != _LEAF
        if not inner.any():
            return node
        go = X[rows, np.where(inner, f, 0)] <= thr[node]
        node = np.where(inner, np.where(go, left[node], right[node]), node)


def _max_features(d):
    return max(1, int(np.sqrt(d)))


def fit_rf(spec, X, y, n_classes):
    rng = np.random.default_rng(spec.seed)
    n, d = X.shape
    m = _max_features(d)
    t = (y == 1).astype(float)
    trees = []
    for _ in range(spec.n_estimators):
        boot = rng.integers(0, n, size=n)
        trees.append(grow_tree(X[boot], t[boot], None, m, int(rng.integers(2 ** 31))))
    return {"trees": trees, "max_features": m}


def score_rf(params, X):
    p = np.mean([tr["value"][apply_tree(tr, X)] for tr in params["trees"]], axis=0)
    return np.column_stack([1 - p, p])


def fit_gb(spec, X, y, n_classes):
    t = (y == 1).astype(float)
    p0 = np.clip(t.mean(), 1e-12, 1 - 1e-12)
    f0 = float(np.log(p0 / (1 - p0)))
    F = np.full(X.shape[0], f0)
    trees = []
    for _ in range(spec.n_estimators):
        p = 1 / (1 + np.exp(-F))
        resid = t - p
        tree = grow_tree(X, resid, spec.max_depth)
        leaf = apply_tree(tree, X)
        # one Newton step per leaf on the logistic loss
        num = np.bincount(leaf, weights=resid, minlength=tree["value"].size)
        den = np.bincount(leaf, weights=p * (1 - p), minlength=tree["value"].size)
        tree["value"] = np.where(den > 1e-12, num / np.maximum(den, 1e-12), 0.0)
        F = F + spec.learning_rate * tree["value"][leaf]
        trees.append(tree)
    return {"init": f0, "learning_rate": spec.learning_rate, "trees": trees}


def gb_margin(params, X):
    F = np.full(X.shape[0], params["init"])
    for tr in params["trees"]:
        F = F + params["learning_rate"] * tr["value"][apply_tree(tr, X)]
    return F


def score_gb(params, X):
    F = gb_margin(params, X)
    return np.column_stack([-F, F])
