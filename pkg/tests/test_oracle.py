import numpy as np
import pytest

from perfpac.data import gen_synthetic
from perfpac.errors import DimensionMismatch, SingleClassDataset
from perfpac.oracle import Forest, ForestConfig, fit_forest, sigmoid, synthetic_oracle


def test_synthetic_oracle_values():
    o = synthetic_oracle()
    out = o(np.array([[0.0, 0.0], [0.0, 2.0], [3.0, 0.0]]))
    assert out == pytest.approx([0.5, 0.7310585786, 0.1418510649], abs=1e-10)
    with pytest.raises(DimensionMismatch):
        o(np.zeros((2, 3)))


def test_sigmoid_extremes():
    assert sigmoid(np.array([-800.0, 800.0])) == pytest.approx([0.0, 1.0])


def test_pure_region():
    X = np.random.default_rng(0).normal(size=(50, 2))
    y = np.ones(50, dtype=int)
    y[0] = -1
    X[0] = [100, 100]
    f = fit_forest(X, y, ForestConfig(n_trees=1, bootstrap=False))
    assert np.all(f.predict_proba(X[1:]) == 1.0)


def test_single_class_rejected():
    with pytest.raises(SingleClassDataset):
        fit_forest(np.zeros((5, 2)), np.ones(5))


def test_xor_shattered():
    X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    y = np.array([-1, 1, 1, -1])
    f = fit_forest(X, y, ForestConfig(n_trees=1, max_depth=2, bootstrap=False, max_features=2))
    assert np.array_equal(np.where(f.predict_proba(X) >= 0.5, 1, -1), y)


def test_outputs_in_unit_interval():
    ds = gen_synthetic(1000, 0)
    f = fit_forest(ds.X, ds.y, ForestConfig(n_trees=5))
    q = f.predict_proba(np.random.default_rng(1).uniform(-3, 3, (1000, 2)))
    assert np.all((q >= 0) & (q <= 1))


def test_mad_against_truth():
    ds = gen_synthetic(5000, 0)
    test = gen_synthetic(2000, 1)
    mads = {}
    for k in (1, 18):
        f = fit_forest(ds.X, ds.y, ForestConfig(n_trees=k))
        mads[k] = float(np.mean(np.abs(f.predict_proba(test.X) - test.p)))
    assert mads[18] <= 0.1
    assert mads[18] <= mads[1]


def test_row_order_invariance():
    ds = gen_synthetic(300, 0)
    perm = np.random.default_rng(2).permutation(300)
    a = fit_forest(ds.X, ds.y, ForestConfig(n_trees=3))
    b = fit_forest(ds.X[perm], ds.y[perm], ForestConfig(n_trees=3))
    assert np.array_equal(a.predict_proba(ds.X), b.predict_proba(ds.X))


def test_serialisation_roundtrip(tmp_path):
    ds = gen_synthetic(300, 0)
    f = fit_forest(ds.X, ds.y, ForestConfig(n_trees=3))
    f.save(tmp_path / "f.json")
    g = Forest.load(tmp_path / "f.json")
    assert np.array_equal(f.predict_proba(ds.X), g.predict_proba(ds.X))
