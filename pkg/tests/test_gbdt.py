import json

import numpy as np
import pytest
from scipy.special import expit

from src.errors import ConfigError, DegenerateLabels, SchemaMismatch
from src.models.gbdt import (
    MODEL_FORMAT,
    GBDTModel,
    Hyperparams,
    Tree,
    gradient,
    hessian,
    leaf_weight,
    load_model,
    logistic_loss,
    predict_proba,
    save_model,
    split_gain,
    train,
)
from src.models.metrics import roc_auc

NAN = np.nan


def test_loss_derivatives():
    y = np.array([1.0, 0.0])
    p = np.array([0.8, 0.8])
    assert gradient(y, p).tolist() == pytest.approx([-0.2, 0.8])
    assert hessian(p).tolist() == pytest.approx([0.16, 0.16])
    assert logistic_loss(np.array([1.0]), np.array([0.0]))[0] == pytest.approx(np.log(2))
    assert leaf_weight(1.0, 0.5, 1.0) == pytest.approx(-2 / 3)
    assert split_gain(1.0, 0.5, -1.0, 0.5, 1.0) == pytest.approx(2 / 3)


def test_derivatives_match_finite_differences():
    rng = np.random.default_rng(17)
    raw = rng.uniform(-4.0, 4.0, size=200)
    y = rng.integers(0, 2, size=200).astype(float)
    step = 1e-5

    numeric_g = (logistic_loss(y, raw + step) - logistic_loss(y, raw - step)) / (2 * step)
    assert gradient(y, expit(raw)) == pytest.approx(numeric_g, rel=1e-6)

    # h = dg/draw, indépendant du label
    numeric_h = (gradient(y, expit(raw + step)) - gradient(y, expit(raw - step))) / (2 * step)
    assert hessian(expit(raw)) == pytest.approx(numeric_h, rel=1e-6)


def test_single_split_leaf_values():
    X = np.array([[1.0], [1.0], [0.0], [0.0]])
    y = np.array([1, 1, 0, 0])
    hp = Hyperparams(n_trees=1, max_depth=1, learning_rate=1.0, min_child_weight=0.1,
                     l2_lambda=1.0)
    model = train(X, y, hp)
    tree = model.trees[0]
    assert model.base_score == pytest.approx(0.0)
    assert tree.feature[0] == 0
    assert tree.threshold[0] == pytest.approx(0.5)
    assert tree.value[tree.left[0]] == pytest.approx(-2 / 3)
    assert tree.value[tree.right[0]] == pytest.approx(2 / 3)


def test_base_score_is_training_log_odds():
    X = np.arange(10.0).reshape(-1, 1)
    y = np.array([0, 0, 0, 0, 1, 1, 1, 1, 1, 1])
    model = train(X, y, Hyperparams(n_trees=0))
    assert model.base_score == pytest.approx(np.log(0.6 / 0.4))
    assert predict_proba(model, X) == pytest.approx(np.full(10, 0.6))


def test_missing_values_learn_default_direction():
    X = np.array([[NAN], [NAN], [0.0], [0.0], [1.0], [1.0]])
    y = np.array([1, 1, 0, 0, 1, 1])
    hp = Hyperparams(n_trees=1, max_depth=1, learning_rate=1.0, min_child_weight=0.1)
    model = train(X, y, hp)
    assert model.trees[0].default_left[0] is False
    p = predict_proba(model, np.array([[NAN], [0.0], [1.0]]))
    assert p[0] == pytest.approx(p[2])
    assert p[0] > p[1]


def test_separable_data(separable):
    X, y = separable
    model = train(X, y, Hyperparams(n_trees=20))
    assert roc_auc(predict_proba(model, X), y).auc == 1.0
    assert all(tree.depth() <= 4 for tree in model.trees)
    importances = model.feature_importances()
    assert importances[0] > importances[1]


def test_training_reduces_loss(planted):
    X, y, _ = planted
    model = train(X, y, Hyperparams(n_trees=30))
    before = logistic_loss(y, np.full(len(y), model.base_score)).mean()
    after = logistic_loss(y, model.raw_score(X)).mean()
    assert after < before


def test_seed_controls_subsampling(planted):
    X, y, _ = planted
    hp = Hyperparams(n_trees=5, subsample=0.5, seed=1)
    a = train(X, y, hp)
    b = train(X, y, hp)
    c = train(X, y, Hyperparams(n_trees=5, subsample=0.5, seed=2))
    assert a.to_json() == b.to_json()
    assert a.to_json() != c.to_json()


def test_constant_feature_never_splits():
    X = np.column_stack([np.ones(6), [0, 1, 0, 1, 0, 1]])
    y = np.array([0, 1, 0, 1, 0, 1])
    model = train(X, y, Hyperparams(n_trees=3))
    assert all(f in (-1, 1) for tree in model.trees for f in tree.feature)


@pytest.mark.parametrize("y", [[1, 1, 1], [0, 0, 0], [0, 1, 2], []])
def test_degenerate_labels(y):
    with pytest.raises(DegenerateLabels):
        train(np.zeros((len(y), 1)), y)


def test_schema_mismatch():
    with pytest.raises(SchemaMismatch):
        train(np.zeros((2, 0)), [0, 1])
    model = train(np.array([[0.0], [1.0]]), [0, 1], Hyperparams(n_trees=1))
    with pytest.raises(SchemaMismatch):
        predict_proba(model, np.zeros((1, 2)))


@pytest.mark.parametrize("params", [
    {"learning_rate": 0.0},
    {"learning_rate": 1.5},
    {"max_depth": 0},
    {"n_trees": -1},
    {"subsample": 0.0},
    {"l2_lambda": -1.0},
    {"l2_lambda": 0.0},
    {"min_child_weight": 0.0},
    {"min_child_weight": -0.5},
])
def test_invalid_hyperparams(params):
    with pytest.raises(ConfigError):
        Hyperparams(**params).validate()


def test_hyperparams_from_dict_ignores_other_keys():
    hp = Hyperparams.from_dict({"n_trees": 10, "null_threshold": 0.8})
    assert hp == Hyperparams(n_trees=10)


# =====================================================================
# SÉRIALISATION
# =====================================================================

def test_tree_record_round_trip():
    tree = Tree()
    root = tree.add_leaf(0.0)
    tree.feature[root], tree.threshold[root], tree.default_left[root] = 0, 0.5, True
    tree.left[root] = tree.add_leaf(-1.0)
    tree.right[root] = tree.add_leaf(2.0)
    copy = Tree.from_record(json.loads(json.dumps(tree.to_record())))
    X = np.array([[0.0], [1.0], [NAN]])
    assert copy.predict(X).tolist() == tree.predict(X).tolist() == [-1.0, 2.0, -1.0]


def test_model_file_round_trip(tmp_path, planted):
    X, y, names = planted
    X = X.copy()
    X[::7, 2] = NAN
    model = train(X, y, Hyperparams(n_trees=15), feature_names=names)
    path = tmp_path / "models" / "model.json"
    save_model(model, path)
    loaded = load_model(path)
    assert loaded.to_json() == model.to_json()
    assert loaded.feature_names == tuple(names)
    np.testing.assert_array_equal(predict_proba(loaded, X), predict_proba(model, X))


def test_model_document_is_self_describing(planted):
    X, y, _ = planted
    document = train(X, y, Hyperparams(n_trees=2)).to_dict()
    assert document["format"] == MODEL_FORMAT
    assert document["hyperparams"]["n_trees"] == 2
    assert len(document["trees"]) == 2

    with pytest.raises(SchemaMismatch):
        GBDTModel.from_dict({**document, "format": "xgboost"})
    with pytest.raises(SchemaMismatch):
        GBDTModel.from_dict({**document, "schema_version": "0"})
