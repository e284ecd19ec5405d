import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eegvalence.classifiers import (ALGORITHMS, ClassifierError, ClassifierSpec, Standardizer,
                                    decision_scores, fit, model_from_json, model_to_json, predict)
from eegvalence.classifiers import svm, trees
from eegvalence.classifiers.knn import neighbours

import oracles

sklearn = pytest.importorskip("sklearn")


def _blobs(seed, n=40, d=5, shift=1.0):
    rng = np.random.default_rng(seed)
    y = np.repeat([0, 1], n // 2)
    X = rng.standard_normal((n, d)) * rng.uniform(0.5, 2, d) + shift * y[:, None]
    return X, y


def _xor(seed, n=80):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, (n, 2))
    X += 0.3 * np.sign(X)  # keep a margin around the axes
    y = (np.sign(X[:, 0]) != np.sign(X[:, 1])).astype(int)
    return X, y


@pytest.mark.parametrize("kind", ["LDA", "QDA", "GNB"])
def test_gaussian_scores_match_brute_force(kind):
    for seed in range(10):
        X, y = _blobs(seed)
        Xq = np.random.default_rng(100 + seed).standard_normal((15, 5))
        got = decision_scores(fit(kind, X, y), Xq)
        ref = oracles.gaussian_scores(kind, X, y, Xq)
        np.testing.assert_allclose(got, ref, rtol=0, atol=1e-8)


def test_knn_matches_exhaustive_search():
    for seed in range(10):
        X, y = _blobs(seed)
        Xq = np.random.default_rng(seed + 7).standard_normal((20, 5))
        assert np.array_equal(predict(fit("KNN", X, y), Xq), oracles.knn_predict(X, y, Xq))


def test_knn_distance_ties_keep_training_order():
    X = np.array([[1.0], [-1.0], [1.0], [-1.0], [2.0], [3.0]])
    y = np.array([0, 1, 0, 1, 1, 1])
    m = fit(ClassifierSpec("KNN", k=2), X, y)
    assert neighbours(m.params, np.array([[0.0]])).tolist() == [[0, 1]]
    # 1-1 vote split goes to the nearest (first) neighbour
    assert predict(m, np.array([[0.0]])).tolist() == [0]


@pytest.mark.parametrize("kind", ["LDA", "QDA", "GNB"])
def test_gaussian_predictions_agree_with_sklearn(kind):
    from sklearn.discriminant_analysis import (LinearDiscriminantAnalysis,
                                               QuadraticDiscriminantAnalysis)
    from sklearn.naive_bayes import GaussianNB
    ref = {"LDA": LinearDiscriminantAnalysis(), "QDA": QuadraticDiscriminantAnalysis(),
           "GNB": GaussianNB()}[kind]
    X, y = _blobs(3, n=200)
    Xq = np.random.default_rng(9).standard_normal((300, 5)) + 0.5
    ours = predict(fit(kind, X, y), Xq)
    theirs = ref.fit(X, y).predict(Xq)
    assert np.mean(ours == theirs) >= 0.99


@pytest.mark.parametrize("kind", ["linear", "rbf"])
def test_smo_matches_reference_solver(kind):
    from sklearn.svm import SVC
    X, y = _blobs(1, n=60, shift=0.8)
    spec = ClassifierSpec("SVM_" + kind)
    m = fit(spec, X, y)
    ref = SVC(kernel=kind, C=1.0, gamma=1 / X.shape[1], tol=1e-8).fit(X, y)
    Xq = np.random.default_rng(2).standard_normal((100, 5)) + 0.4
    ours = m.params
    np.testing.assert_allclose(svm.decision_function(ours, Xq), ref.decision_function(Xq), atol=2e-3)


@pytest.mark.parametrize("seed", range(5))
def test_svm_separable_and_xor(seed):
    rng = np.random.default_rng(seed)
    w = rng.standard_normal(4)
    X = rng.standard_normal((60, 4))
    X = X[np.abs(X @ w) > 0.5]
    y = (X @ w > 0).astype(int)
    m = fit("SVM_linear", X, y)
    assert m.params["duality_gap"] < 1e-3
    assert np.array_equal(predict(m, X), y)
    Xx, yx = _xor(seed)
    m = fit(ClassifierSpec("SVM_rbf", C=10.0, gamma=2.0), Xx, yx)
    assert m.params["duality_gap"] < 1e-3
    assert np.array_equal(predict(m, Xx), yx)


def test_compiled_and_python_smo_agree():
    X, y = _blobs(4, n=80, shift=0.5)
    ys = np.where(y == 1, 1.0, -1.0)
    K = svm.kernel_matrix(X, X, "rbf", 0.2)
    a1, b1, g1, i1 = svm.smo(K, ys)
    a2, b2, g2, i2 = svm.smo(K, ys, loop=svm._smo_loop_py)
    np.testing.assert_array_equal(a1, a2)
    assert (b1, g1, i1) == (b2, g2, i2)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.floats(0.05, 20))
def test_svm_dual_feasible_and_gap_small(seed, C):
    X, y = _blobs(seed, n=30, d=3, shift=0.7)
    ys = np.where(y == 1, 1.0, -1.0)
    K = svm.kernel_matrix(X, X, "linear", None)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        alpha, b, gap, _ = svm.smo(K, ys, C)
    assert np.all(alpha >= 0) and np.all(alpha <= C)
    assert abs(alpha @ ys) < 1e-9 * max(1, C * len(ys))
    assert 0 <= gap + 1e-12 and gap < 1e-3


def test_optimal_bias_minimizes_hinge_sum():
    rng = np.random.default_rng(0)
    g = rng.standard_normal(25)
    y = np.where(rng.random(25) < 0.5, -1.0, 1.0)
    b, val = svm._optimal_bias(g, y, 2.0)
    grid = np.linspace(-5, 5, 20001)
    brute = min(2.0 * np.maximum(0, 1 - y * (g + t)).sum() for t in grid)
    assert val <= brute + 1e-9
    assert abs(2.0 * np.maximum(0, 1 - y * (g + b)).sum() - val) < 1e-9


def test_tree_numpy_and_compiled_growers_agree():
    rng = np.random.default_rng(0)
    X = np.round(rng.standard_normal((120, 6)), 1)  # many ties
    t = (X[:, 0] + 0.5 * X[:, 1] > 0).astype(float)
    for depth in (None, 1, 3):
        a = trees.build_tree(X, t, depth)
        b = trees.grow_tree(X, t, depth)
        for key in a:
            assert np.array_equal(a[key], b[key]), key
    r = rng.standard_normal(120)
    a, b = trees.build_tree(X, r, 3), trees.grow_tree(X, r, 3)
    for key in a:
        assert np.array_equal(a[key], b[key]), key


def test_tree_fits_training_data_and_matches_reference_splits():
    from sklearn.tree import DecisionTreeClassifier
    X, y = _blobs(2, n=100, shift=0.6)
    tree = trees.grow_tree(X, y.astype(float))
    leaf = trees.apply_tree(tree, X)
    assert np.array_equal((tree["value"][leaf] > 0.5).astype(int), y)
    ref = DecisionTreeClassifier(random_state=0).fit(X, y).tree_
    ours = trees.grow_tree(X, y.astype(float), 1)
    assert ours["feature"][0] == ref.feature[0]
    assert ours["threshold"][0] == pytest.approx(ref.threshold[0], abs=1e-6)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_best_split_is_exhaustively_optimal(seed):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 5, (25, 3)).astype(float)
    t = rng.integers(0, 2, 25).astype(float)
    got = trees._best_split(X, t, np.arange(3))
    best = -np.inf
    for f in range(3):
        for thr in np.unique(X[:, f])[:-1]:
            L, R = t[X[:, f] <= thr], t[X[:, f] > thr]
            best = max(best, L.sum() ** 2 / L.size + R.sum() ** 2 / R.size)
    if got is None:
        assert best == -np.inf
    else:
        assert got[2] == pytest.approx(best, rel=1e-12)


def test_ensembles_learn_and_are_seeded():
    X, y = _blobs(5, n=120, shift=1.5)
    Xq, yq = _blobs(6, n=200, shift=1.5)
    for algo in ("RF", "GB"):
        m = fit(ClassifierSpec(algo, seed=3), X, y)
        assert np.mean(predict(m, Xq) == yq) > 0.75
        again = fit(ClassifierSpec(algo, seed=3), X, y)
        assert np.array_equal(decision_scores(m, Xq), decision_scores(again, Xq))
    rf = fit(ClassifierSpec("RF"), X, y).params
    assert len(rf["trees"]) == 100 and rf["max_features"] == 2
    gb = fit(ClassifierSpec("GB"), X, y).params
    assert len(gb["trees"]) == 10
    assert max(trees.apply_tree(tr, X).max() for tr in gb["trees"]) < 2 ** 4


def test_gb_first_stage_is_log_odds():
    X, y = _blobs(1, n=30)
    y[:5] = 1
    m = fit(ClassifierSpec("GB", n_estimators=1), X, y)
    p = y.mean()
    assert m.params["init"] == pytest.approx(np.log(p / (1 - p)))


@pytest.mark.parametrize("algo", ALGORITHMS)
def test_every_algorithm_roundtrips_through_json(algo):
    X, y = _blobs(0, n=40)
    m = fit(algo, X, y)
    back = model_from_json(model_to_json(m))
    assert np.array_equal(decision_scores(m, X), decision_scores(back, X))
    assert model_to_json(back) == model_to_json(m)


@pytest.mark.parametrize("algo", ALGORITHMS)
def test_labels_can_be_any_two_values(algo):
    X, y = _blobs(2, n=40, shift=3)
    lab = np.where(y == 1, "pos", "neg")
    m = fit(algo, X, lab)
    assert set(predict(m, X)) <= {"pos", "neg"}
    assert np.mean(predict(m, X) == lab) > 0.8


def test_fit_errors():
    X, y = _blobs(0)
    with pytest.raises(ClassifierError, match="single class"):
        fit("LDA", X, np.zeros(40, int))
    with pytest.raises(ClassifierError, match="binary"):
        fit("LDA", X, np.arange(40) % 3)
    with pytest.raises(ClassifierError, match="non-finite"):
        fit("LDA", np.where(X > 2, np.nan, X), y)
    with pytest.raises(ClassifierError, match="unknown classifier"):
        ClassifierSpec("MLP")
    with pytest.raises(ClassifierError):
        ClassifierSpec("SVM_rbf", C=0)
    m = fit("LDA", X, y)
    with pytest.raises(ClassifierError, match="expects 5"):
        predict(m, X[:, :3])
    with pytest.raises(ClassifierError, match="not a serialized model"):
        model_from_json('{"format": "other"}')


def test_aliases():
    assert ClassifierSpec("nonl-svm").algorithm == "SVM_rbf"
    assert ClassifierSpec("l-svm").algorithm == "SVM_linear"
    assert ClassifierSpec("rf").n_estimators == 100
    assert ClassifierSpec("gb").n_estimators == 10


def test_standardizer():
    X = np.array([[1.0, 5.0], [3.0, 5.0], [5.0, 5.0]])
    s = Standardizer.fit(X)
    assert s.mean.tolist() == [3.0, 5.0]
    assert s.constant.tolist() == [False, True]
    out = s.apply(np.array([[3.0 + np.sqrt(8 / 3), 7.0]]))
    np.testing.assert_allclose(out, [[1.0, 0.0]])
    with pytest.raises(ValueError):
        s.mean[0] = 1
    with pytest.raises(ClassifierError):
        Standardizer.fit(X[:1])


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 40), st.integers(1, 6), st.integers(0, 2 ** 31 - 1))
def test_standardized_training_rows_have_unit_scale(n, d, seed):
    X = np.random.default_rng(seed).normal(5, 3, (n, d))
    Z = Standardizer.fit(X).apply(X)
    np.testing.assert_allclose(Z.mean(axis=0), 0, atol=1e-9)
    sd = Z.std(axis=0)
    assert np.all((np.abs(sd - 1) < 1e-9) | (sd == 0))
