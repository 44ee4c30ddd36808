import numpy as np
import pytest

from perfpac.core import ZERO_ONE, PerCoefficients, DriftParams, coefficients, family_params
from perfpac.data import gen_synthetic, split
from perfpac.errors import DomainError, EmptyDataset, NonFiniteLoss
from perfpac.learn import (
    PRESETS,
    Classifier,
    PlateauScheduler,
    TrainConfig,
    erm_finite,
    evaluate,
    loss_and_grad,
    train,
)
from perfpac.risk import exact_pr, per


def fd_check(clf, X, y, cfg, h=1e-6):
    _, grads = loss_and_grad(clf, X, y, cfg)
    flat = clf.get_flat()
    ana = np.concatenate([g.ravel() for g in grads])
    num = np.empty_like(flat)
    for i in range(flat.size):
        e = np.zeros_like(flat)
        e[i] = h
        num[i] = (loss_and_grad(clf.set_flat(flat + e), X, y, cfg)[0]
                  - loss_and_grad(clf.set_flat(flat - e), X, y, cfg)[0]) / (2 * h)
    return np.linalg.norm(ana - num) / max(np.linalg.norm(ana), np.linalg.norm(num), 1e-12)


@pytest.mark.parametrize("hidden", [(), (16,), (8, 4)])
@pytest.mark.parametrize("loss", ["logistic", "surrogate"])
def test_gradient_matches_finite_differences(hidden, loss):
    rng = np.random.default_rng(0)
    X = rng.normal(size=(40, 3))
    y = rng.choice([-1, 1], 40)
    cfg = TrainConfig(loss=loss, coeffs=coefficients(DriftParams(0.5, 0.5, 1, 0)), hidden=hidden, l2=1e-3)
    clf = Classifier.init(3, hidden, seed=1)
    assert fd_check(clf, X, y, cfg) <= 1e-4


def test_separable_two_points():
    X = np.array([[-1.0], [1.0]])
    y = np.array([-1, 1])
    model = train(X, y, TrainConfig(batch_size=2, epochs=30, lr=0.1))
    assert all(b < a for a, b in zip(model.loss_trace, model.loss_trace[1:]))
    assert evaluate(model, X, y) == 1.0


def test_identity_surrogate_trace_equals_logistic():
    ds = gen_synthetic(400, 0)
    a = train(ds.X, ds.y, TrainConfig(epochs=5))
    b = train(ds.X, ds.y, TrainConfig(loss="surrogate", coeffs=ZERO_ONE, epochs=5))
    assert np.allclose(np.array(a.param_trace), np.array(b.param_trace), atol=1e-9, rtol=0)


def test_placebo_one_predicts_positive():
    tr, te = split(gen_synthetic(5000, 0))
    params = family_params("placebo", 1.0)
    model = train(tr.X, tr.y, TrainConfig(loss="surrogate", coeffs=coefficients(params)))
    d = model.classifier.decide(te.X)
    assert np.mean(d == 1) >= 0.97
    # the all-positive table is the performative optimum on a grid of probabilities
    grid = np.linspace(0, 1, 21)
    m = np.full(21, 1 / 21)
    best = exact_pr(m, grid, np.ones(21), params)
    assert best <= exact_pr(m, grid, np.where(grid > 0.5, 1, -1), params)


def test_training_is_deterministic():
    ds = gen_synthetic(300, 2)
    cfg = TrainConfig(hidden=(4,), epochs=3)
    a = train(ds.X, ds.y, cfg).classifier.get_flat()
    assert np.array_equal(a, train(ds.X, ds.y, cfg).classifier.get_flat())


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_raises():
    # alpha1 > 0 makes the surrogate unbounded below
    X = np.array([[1e150], [-1e150]])
    cfg = TrainConfig(loss="surrogate", coeffs=PerCoefficients(1, 0, 0, 0), optimizer="sgd",
                      lr=1e100, epochs=5, batch_size=2)
    with pytest.raises(NonFiniteLoss):
        train(X, np.array([1, -1]), cfg)


def test_empty_and_bad_config():
    with pytest.raises(EmptyDataset):
        train(np.zeros((0, 2)), np.zeros(0), TrainConfig())
    with pytest.raises(DomainError):
        TrainConfig(loss="surrogate")
    with pytest.raises(DomainError):
        TrainConfig(optimizer="rmsprop")


def test_plateau_scheduler():
    s = PlateauScheduler(1.0, factor=0.5, patience=2)
    lrs = [s.step(v) for v in (1.0, 1.0, 1.0, 1.0, 1.0, 0.1)]
    assert lrs == [1.0, 1.0, 0.5, 0.5, 0.25, 0.25]


def test_presets():
    assert PRESETS["credit"]["hidden"] == (16,)
    assert PRESETS["folktables"]["hidden"] == (64, 16)
    assert PRESETS["folktables"]["batch_size"] == 1024


def test_checkpoint_roundtrip(tmp_path):
    clf = Classifier.init(3, (5,), seed=4)
    clf.save(tmp_path / "c.json")
    back = Classifier.load(tmp_path / "c.json")
    X = np.random.default_rng(0).normal(size=(10, 3))
    assert np.array_equal(clf.score(X), back.score(X))


def test_evaluate_examples():
    X = np.array([[1.0], [2.0]])
    clf = Classifier((), [np.array([[1.0]]), np.array([0.0])])
    assert evaluate(clf, X, [1, 1]) == 1.0
    assert evaluate(clf, X, [-1, -1]) == 0.0
    rng = np.random.default_rng(0)
    Xr = rng.normal(size=(10_000, 1))
    assert abs(evaluate(clf, Xr, rng.choice([-1, 1], 10_000)) - 0.5) <= 0.02


def test_erm_finite():
    y = np.array([1, 1, -1])
    h = np.array([1, 1, 1])
    assert erm_finite([h, -h], y, ZERO_ONE)[0] == 0
    assert erm_finite([h], y, ZERO_ONE)[0] == 0
    c = coefficients(DriftParams(0.5, 0.5, 1, 0))
    tables = [[1, 1], [1, -1], [-1, 1], [-1, -1]]
    labels = [1, -1]
    k, v = erm_finite(tables, labels, c)
    assert v == min(per(t, labels, c) for t in tables)
