import numpy as np
import pytest

from taxiassure.forest import (
    DecisionTree,
    EmissionForest,
    ForestConfig,
    _best_split,
    _stratified_sample,
    fit_forest,
    fit_tree,
    gini,
)


def test_gini():
    assert gini(np.array([5, 0])) == 0.0
    assert gini(np.array([5, 5])) == pytest.approx(0.5)
    assert gini(np.array([1, 1, 1, 1])) == pytest.approx(0.75)


def test_best_split_finds_separating_threshold():
    X = np.array([[0.1], [0.2], [0.3], [0.7], [0.8], [0.9]])
    y = np.array([0, 0, 0, 1, 1, 1])
    f, thr, _ = _best_split(X, y, 2, np.array([0]), 1)
    assert f == 0 and 0.3 <= thr < 0.7


def test_tree_respects_min_leaf():
    rng = np.random.default_rng(0)
    X = rng.random((200, 3))
    y = (X[:, 0] > 0.5).astype(int) + (X[:, 1] > 0.5)
    tree = fit_tree(X, y, 3, 10, 3, rng)
    leaves = tree.feature == -1
    assert tree.counts[leaves].sum(axis=1).min() >= 10
    assert tree.counts[0].sum() == 200


def test_tree_round_trip():
    rng = np.random.default_rng(1)
    X = rng.random((60, 2))
    y = (X[:, 0] > 0.4).astype(int)
    tree = fit_tree(X, y, 2, 5, 2, rng)
    back = DecisionTree.from_dict(tree.to_dict())
    np.testing.assert_array_equal(back.apply(X), tree.apply(X))


def test_stratified_sample_balances_classes():
    y = np.array([0] * 90 + [1] * 9 + [2] * 1)
    idx = _stratified_sample(y, 99, np.random.default_rng(0))
    assert len(idx) == 99
    np.testing.assert_array_equal(np.bincount(y[idx]), [33, 33, 33])


def test_forest_defaults():
    c = ForestConfig()
    assert (c.trees, c.min_leaf, c.samples_per_tree) == (280, 10, 100)


def _blobs(n=600, d=4, k=3, seed=0):
    rng = np.random.default_rng(seed)
    y = rng.integers(k, size=n)
    X = rng.normal(0, 0.3, (n, d)) + y[:, None]
    return X, y


def test_forest_learns_and_is_positive():
    X, y = _blobs()
    f = fit_forest(X, y, 5, ForestConfig(trees=40, seed=3))
    P = f.predict_many(X)
    assert (P.argmax(1) == y).mean() > 0.95
    assert (P > 0).all()  # includes the two never-seen states
    np.testing.assert_allclose(P.sum(1), 1.0, atol=1e-12)
    np.testing.assert_allclose(f.predict(X[7]), P[7], atol=1e-15)
    assert f.oob_accuracy(X, y) > 0.9


def test_forest_deterministic_and_serializable():
    X, y = _blobs(seed=2)
    a = fit_forest(X, y, 3, ForestConfig(trees=10, seed=5))
    b = fit_forest(X, y, 3, ForestConfig(trees=10, seed=5))
    assert a.to_dict() == b.to_dict()
    back = EmissionForest.from_dict(a.to_dict())
    np.testing.assert_array_equal(back.predict_many(X), a.predict_many(X))
    assert back.oob_accuracy(X, y) is None


def test_forest_errors():
    X, y = _blobs()
    with pytest.raises(ValueError):
        fit_forest(X, np.zeros(len(X), dtype=int), 3)
    with pytest.raises(ValueError):
        fit_forest(X, y, 2)
    f = fit_forest(X, y, 3, ForestConfig(trees=3))
    with pytest.raises(ValueError):
        f.predict(np.zeros(3))
    with pytest.raises(ValueError):
        ForestConfig(trees=0)


def test_trained_forest_accuracy(trained, train_trajs):
    model, summary = trained
    from taxiassure.statespace import locate_many
    X = np.vstack([t.features for t in train_trajs])
    p = model.cte_partition
    y = np.concatenate([locate_many(p, p.clamp(t.cte_true)) for t in train_trajs])
    assert (model.emission.predict_many(X).argmax(1) == y).mean() >= 0.9
    assert summary.oob_accuracy > 0.85


def test_larger_min_leaf_gives_shallower_trees():
    X, y = _blobs(n=800, seed=4)
    depth = []
    for leaf in (2, 10, 40, 160):
        rng = np.random.default_rng(0)
        depth.append(fit_tree(X, y, 3, leaf, X.shape[1], rng).depth())
    assert depth == sorted(depth, reverse=True)
