import numpy as np
import pytest

from figground import forest as rf
from figground.errors import ModelFormatError


def separable(n=200, seed=0, d=5):
    rng = np.random.default_rng(seed)
    X = rng.uniform(0, 1, (n, d))
    y = (X[:, 0] >= 0.5).astype(np.int64)
    return X, y


def single_leaf_tree(cls, n_samples, n_classes=8, bootstrap=None):
    counts = np.zeros((1, n_classes), dtype=np.int64)
    counts[0, cls] = 1
    return rf.DecisionTree(
        feature=np.array([-1], dtype=np.int32),
        threshold=np.zeros(1),
        left=np.array([-1], dtype=np.int32),
        right=np.array([-1], dtype=np.int32),
        counts=counts,
        leaf_class=np.array([cls], dtype=np.int32),
        bootstrap=bootstrap if bootstrap is not None else np.zeros(n_samples, dtype=np.int64),
    )


def test_single_tree_fits_bootstrap():
    X, y = separable()
    params = rf.ForestParams(n_trees=1, features_per_split=X.shape[1], seed=3)
    model = rf.train(X, y, params)
    tree = model.trees[0]
    pred = tree.predict(X[tree.bootstrap])
    assert np.array_equal(pred, y[tree.bootstrap])


def test_constant_features_majority_class():
    X = np.full((30, 4), 0.7)
    y = np.array([1] * 20 + [2] * 10)
    model = rf.train(X, y, rf.ForestParams(n_trees=5, features_per_split=4, seed=0))
    for tree in model.trees:
        assert tree.feature.size == 1  # no informative split: single leaf
    label, votes = rf.predict(model, X[0])
    assert label == 1 and votes[1] == 5


def test_forest_separable_heldout():
    X, y = separable(400, seed=1)
    Xt, yt = separable(200, seed=2)
    model = rf.train(X, y, rf.ForestParams(n_trees=60, features_per_split=2, seed=5))
    pred, votes = rf.predict_matrix(model, Xt)
    assert (pred == yt).mean() >= 0.95
    assert np.all(votes.sum(axis=1) == 60)


def test_training_points_recovered():
    X, y = separable(150, seed=4)
    model = rf.train(X, y, rf.ForestParams(n_trees=40, features_per_split=2, seed=6))
    pred, _ = rf.predict_matrix(model, X)
    assert np.array_equal(pred, y)


def test_predict_unanimous_and_tie_break():
    unanimous = rf.ForestModel(
        trees=[single_leaf_tree(3, 4) for _ in range(7)], params=rf.ForestParams(n_trees=7),
        n_features=2, n_samples=4,
    )
    label, votes = rf.predict(unanimous, np.zeros(2))
    assert label == 3 and votes[3] == 7
    tied = rf.ForestModel(
        trees=[single_leaf_tree(5, 4), single_leaf_tree(2, 4)], params=rf.ForestParams(n_trees=2),
        n_features=2, n_samples=4,
    )
    label, votes = rf.predict(tied, np.zeros(2))
    assert label == 2  # lowest category wins the 50/50 tie
    assert votes[2] == votes[5] == 1


def test_predict_rejects_wrong_shape():
    X, y = separable(50)
    model = rf.train(X, y, rf.ForestParams(n_trees=3, features_per_split=2, seed=0))
    with pytest.raises(ValueError):
        rf.predict(model, np.zeros(9))


def test_train_validates():
    X, y = separable(50)
    with pytest.raises(ValueError):
        rf.train(X, np.full_like(y, 9))
    with pytest.raises(ValueError):
        rf.train(X, y, rf.ForestParams(features_per_split=99))
    with pytest.raises(ValueError):
        rf.train(np.array([[np.inf, 0.0]]), np.array([0]))


def test_single_class_degenerates_with_warning(caplog):
    X, _ = separable(40)
    model = rf.train(X, np.zeros(40, dtype=np.int64), rf.ForestParams(n_trees=3, features_per_split=2, seed=0))
    assert all(t.feature.size == 1 for t in model.trees)


def test_oob_definition_single_tree():
    X, y = separable(80, seed=7)
    model = rf.train(X, y, rf.ForestParams(n_trees=1, features_per_split=2, seed=1))
    oob = model.oob_indices(0)
    in_bag = set(model.trees[0].bootstrap.tolist())
    assert set(oob.tolist()) == set(range(80)) - in_bag
    assert 0.0 <= rf.oob_error(model, X, y) <= 1.0


def test_oob_fraction_near_inverse_e():
    X, y = separable(120, seed=8)
    model = rf.train(X, y, rf.ForestParams(n_trees=100, features_per_split=2, seed=2))
    frac = np.mean([model.oob_indices(t).size / 120.0 for t in range(100)])
    assert 0.30 < frac < 0.45


def test_oob_tracks_heldout_error():
    X, y = separable(300, seed=9)
    Xt, yt = separable(300, seed=10)
    model = rf.train(X, y, rf.ForestParams(n_trees=120, features_per_split=2, seed=3))
    oob = rf.oob_error(model, X, y)
    pred, _ = rf.predict_matrix(model, Xt)
    heldout = float((pred != yt).mean())
    assert abs(oob - heldout) <= 0.05


def test_oob_error_guard_all_in_bag():
    X, y = separable(10)
    model = rf.ForestModel(
        trees=[single_leaf_tree(0, 10, bootstrap=np.arange(10))],
        params=rf.ForestParams(n_trees=1), n_features=X.shape[1], n_samples=10,
    )
    with pytest.raises(ValueError):
        rf.oob_error(model, X, y)


def test_gini_decrease_and_nonempty_children():
    X, y = separable(250, seed=11)
    y = (y + (X[:, 1] > 0.7)).astype(np.int64)  # three classes for variety
    model = rf.train(X, y, rf.ForestParams(n_trees=10, features_per_split=3, seed=4))
    for tree in model.trees:
        n = tree.counts.sum(axis=1).astype(np.float64)
        gini = 1.0 - (tree.counts / n[:, None]) ** 2 @ np.ones(tree.counts.shape[1])
        for k in range(tree.feature.size):
            if tree.feature[k] < 0:
                assert tree.counts[k].sum() > 0  # leaves carry samples
                continue
            left, right = tree.left[k], tree.right[k]
            assert n[left] > 0 and n[right] > 0
            weighted = n[left] * gini[left] + n[right] * gini[right]
            assert weighted < n[k] * gini[k] - 1e-12


def test_training_deterministic():
    X, y = separable(150, seed=12)
    a = rf.train(X, y, rf.ForestParams(n_trees=20, features_per_split=2, seed=9))
    b = rf.train(X, y, rf.ForestParams(n_trees=20, features_per_split=2, seed=9))
    for ta, tb in zip(a.trees, b.trees):
        assert np.array_equal(ta.feature, tb.feature)
        assert np.array_equal(ta.threshold, tb.threshold)
        assert np.array_equal(ta.bootstrap, tb.bootstrap)


# ----------------------------------------------------------- importance


def single_signal_data(n=400, seed=123):
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, n)
    X = rng.uniform(0, 1, (n, 40))
    X[:, 12] = y + rng.uniform(0, 0.3, n)
    X[:, 0] = 0.5  # constant column
    return X, y.astype(np.int64)


def test_importance_finds_signal_and_zeroes_constant():
    X, y = single_signal_data()
    model = rf.train(X, y, rf.ForestParams(n_trees=60, seed=0))
    report = rf.permutation_importance(model, X, y, seed=1)
    assert int(np.argmax(report.per_dimension)) == 12
    assert report.per_dimension[0] == 0.0
    assert np.all(report.per_dimension >= 0.0)


def test_importance_families_sum_to_one():
    X, y = single_signal_data()
    model = rf.train(X, y, rf.ForestParams(n_trees=40, seed=2))
    report = rf.permutation_importance(model, X, y, seed=3)
    assert report.per_family is not None
    assert sum(report.per_family.values()) == pytest.approx(1.0, abs=1e-6)
    assert set(report.per_family) == {"Directionality", "Density", "Building size", "Contour complexity"}
    # dim 12 sits in the density block
    assert max(report.per_family, key=report.per_family.get) == "Density"


def test_duplicated_column_importance_sum_stable():
    rng = np.random.default_rng(7)
    n = 360
    y = rng.integers(0, 2, n).astype(np.int64)
    X = rng.uniform(0, 1, (n, 10))
    signal = y + rng.uniform(0, 0.4, n)
    X[:, 3] = signal
    X[:, 7] = signal  # exact duplicate: importance may split, the sum may not
    sums = []
    for seed in range(10):
        model = rf.train(X, y, rf.ForestParams(n_trees=80, features_per_split=3, seed=seed))
        report = rf.permutation_importance(model, X, y, seed=seed + 55)
        sums.append(report.per_dimension[3] + report.per_dimension[7])
    sums = np.asarray(sums)
    assert np.all(np.abs(sums - sums.mean()) <= 0.2 * sums.mean())


def test_importance_deterministic():
    X, y = single_signal_data(200)
    model = rf.train(X, y, rf.ForestParams(n_trees=30, seed=4))
    a = rf.permutation_importance(model, X, y, seed=9).per_dimension
    b = rf.permutation_importance(model, X, y, seed=9).per_dimension
    assert a.tobytes() == b.tobytes()


# ----------------------------------------------------------- serialization


def test_save_load_round_trip(tmp_path):
    X, y = separable(120, seed=13)
    model = rf.train(X, y, rf.ForestParams(n_trees=25, features_per_split=2, seed=11))
    path = tmp_path / "model.txt"
    rf.save_model(model, path)
    loaded = rf.load_model(path)
    rng = np.random.default_rng(0)
    probes = rng.uniform(-1, 2, (100, X.shape[1]))
    p0, v0 = rf.predict_matrix(model, probes)
    p1, v1 = rf.predict_matrix(loaded, probes)
    assert np.array_equal(p0, p1)
    assert np.array_equal(v0, v1)
    r0 = rf.permutation_importance(model, X, y, seed=5).per_dimension
    r1 = rf.permutation_importance(loaded, X, y, seed=5).per_dimension
    assert r0.tobytes() == r1.tobytes()


def test_load_rejects_truncation(tmp_path):
    X, y = separable(60, seed=14)
    model = rf.train(X, y, rf.ForestParams(n_trees=4, features_per_split=2, seed=0))
    path = tmp_path / "model.txt"
    rf.save_model(model, path)
    text = path.read_text()
    (tmp_path / "cut.txt").write_text(text[: len(text) // 2])
    with pytest.raises(ModelFormatError):
        rf.load_model(tmp_path / "cut.txt")


def test_load_rejects_version_drift(tmp_path):
    X, y = separable(60, seed=15)
    model = rf.train(X, y, rf.ForestParams(n_trees=2, features_per_split=2, seed=0))
    path = tmp_path / "model.txt"
    rf.save_model(model, path)
    text = path.read_text().replace("figground-forest/1", "figground-forest/9", 1)
    path.write_text(text)
    with pytest.raises(ModelFormatError):
        rf.load_model(path)


def test_save_rejects_empty_forest(tmp_path):
    empty = rf.ForestModel(trees=[], params=rf.ForestParams(), n_features=4, n_samples=0)
    with pytest.raises(ValueError):
        rf.save_model(empty, tmp_path / "m.txt")
