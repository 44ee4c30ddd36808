"""Numpy classifiers (linear or small ReLU networks) and the ERM / PERM
training loops."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .core import PerCoefficients
from .errors import DomainError, EmptyDataset, NonFiniteLoss
from .risk import decide, logistic, per, surrogate

CHECKPOINT_FORMAT = "perfpac-classifier/1"


@dataclass
class Classifier:
    """Real-valued scorer; ``hidden=()`` is a linear model.

    ``params`` holds ``[W0, b0, W1, b1, ...]``; the last layer maps to one score.
    """

    hidden: tuple
    params: list

    @classmethod
    def init(cls, n_features: int, hidden=(), seed=0) -> "Classifier":
        rng = np.random.default_rng([seed, 0])
        sizes = [n_features, *hidden, 1]
        params = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            params.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            params.append(np.zeros(fan_out))
        return cls(tuple(hidden), params)

    @property
    def n_layers(self):
        return len(self.params) // 2

    @property
    def n_params(self) -> int:
        return int(sum(p.size for p in self.params))

    def _forward(self, X):
        acts = [np.asarray(X, dtype=float)]
        pre = []
        for i in range(self.n_layers):
            z = acts[-1] @ self.params[2 * i] + self.params[2 * i + 1]
            pre.append(z)
            acts.append(np.maximum(z, 0.0) if i < self.n_layers - 1 else z)
        return acts, pre

    def score(self, X):
        return self._forward(X)[0][-1][:, 0]

    def decide(self, X):
        return decide(self.score(X))

    def backward(self, X, dscore):
        """Gradients of ``sum(dscore * score(X))`` w.r.t. every parameter."""
        acts, pre = self._forward(X)
        grads = [None] * len(self.params)
        delta = np.asarray(dscore, dtype=float)[:, None]
        for i in reversed(range(self.n_layers)):
            grads[2 * i] = acts[i].T @ delta
            grads[2 * i + 1] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ self.params[2 * i].T) * (pre[i - 1] > 0)
        return acts[-1][:, 0], grads

    def get_flat(self):
        return np.concatenate([p.ravel() for p in self.params])

    def set_flat(self, flat):
        flat = np.asarray(flat, dtype=float)
        out, k = [], 0
        for p in self.params:
            out.append(flat[k:k + p.size].reshape(p.shape).copy())
            k += p.size
        return Classifier(self.hidden, out)

    def copy(self):
        return Classifier(self.hidden, [p.copy() for p in self.params])

    # -- checkpoints: JSON list of named, shaped, row-major parameter arrays --

    def to_dict(self):
        names = []
        for i in range(self.n_layers):
            names += [f"W{i}", f"b{i}"]
        return {
            "format": CHECKPOINT_FORMAT,
            "hidden": list(self.hidden),
            "params": [
                {"name": n, "shape": list(p.shape), "values": [float(v) for v in p.ravel()]}
                for n, p in zip(names, self.params)
            ],
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("format") != CHECKPOINT_FORMAT:
            raise DomainError(f"unsupported checkpoint format {d.get('format')!r}")
        params = [np.array(e["values"], dtype=float).reshape(e["shape"]) for e in d["params"]]
        return cls(tuple(d["hidden"]), params)

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True) + "\n")

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class TrainConfig:
    loss: str = "logistic"  # "logistic" | "surrogate"
    coeffs: Optional[PerCoefficients] = None
    hidden: tuple = ()
    optimizer: str = "adam"  # "adam" | "sgd"
    lr: float = 0.01
    epochs: int = 25
    batch_size: int = 32
    l2: float = 0.0
    factor: float = 0.9
    patience: int = 5
    threshold: float = 1e-4
    min_lr: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.loss not in ("logistic", "surrogate"):
            raise DomainError(f"unknown loss {self.loss!r}")
        if self.loss == "surrogate" and self.coeffs is None:
            raise DomainError("surrogate loss needs coefficients")
        if self.optimizer not in ("adam", "sgd"):
            raise DomainError(f"unknown optimizer {self.optimizer!r}")
        if self.epochs < 1 or self.batch_size < 1:
            raise DomainError("epochs and batch_size must be >= 1")
        if not 0 < self.factor < 1:
            raise DomainError("plateau factor must lie in (0, 1)")
        if self.lr <= 0 or self.l2 < 0 or self.patience < 1:
            raise DomainError("lr must be positive, l2 nonnegative, patience >= 1")
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))

    def with_(self, **kw) -> "TrainConfig":
        return replace(self, **kw)


# hyperparameters per dataset; folktables reuses the synthetic plateau settings
PRESETS = {
    "synthetic": dict(hidden=(), optimizer="adam", lr=0.01, epochs=25, batch_size=32, l2=0.0),
    "credit": dict(hidden=(16,), optimizer="adam", lr=0.01, epochs=25, batch_size=32, l2=1e-4),
    "folktables": dict(hidden=(64, 16), optimizer="adam", lr=0.05, epochs=25, batch_size=1024, l2=1e-4),
}


@dataclass
class TrainedModel:
    classifier: Classifier
    loss_trace: list = field(default_factory=list)
    lr_trace: list = field(default_factory=list)
    param_trace: list = field(default_factory=list)


def _loss_fn(config: TrainConfig):
    if config.loss == "logistic":
        return logistic
    coeffs = config.coeffs
    return lambda s, y: surrogate(s, y, coeffs)


def loss_and_grad(clf: Classifier, X, y, config: TrainConfig):
    """Mean configured loss plus ``l2 * sum(W**2)`` over weight matrices, with gradients."""
    n = len(y)
    score = clf.score(X)
    loss, dloss = _loss_fn(config)(score, y)
    _, grads = clf.backward(X, dloss / n)
    total = float(loss.mean())
    if config.l2:
        for i in range(0, len(clf.params), 2):
            total += config.l2 * float(np.sum(clf.params[i] ** 2))
            grads[i] = grads[i] + 2 * config.l2 * clf.params[i]
    return total, grads


class _Adam:
    def __init__(self, params, b1=0.9, b2=0.999, eps=1e-8):
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.b1, self.b2, self.eps, self.t = b1, b2, eps, 0

    def step(self, params, grads, lr):
        self.t += 1
        c1 = 1 - self.b1 ** self.t
        c2 = 1 - self.b2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.b1
            m += (1 - self.b1) * g
            v *= self.b2
            v += (1 - self.b2) * g * g
            p -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


class _SGD:
    def __init__(self, params):
        pass

    def step(self, params, grads, lr):
        for p, g in zip(params, grads):
            p -= lr * g


class PlateauScheduler:
    """Multiply the learning rate by ``factor`` once the monitored loss has gone
    ``patience`` consecutive epochs without a relative improvement of ``threshold``."""

    def __init__(self, lr, factor=0.9, patience=5, threshold=1e-4, min_lr=1e-6):
        self.lr = lr
        self.factor, self.patience = factor, patience
        self.threshold, self.min_lr = threshold, min_lr
        self.best = np.inf
        self.bad = 0

    def step(self, metric):
        if not np.isfinite(self.best) or metric < self.best - self.threshold * abs(self.best):
            self.best = metric
            self.bad = 0
            return self.lr
        self.bad += 1
        if self.bad >= self.patience:
            self.lr = max(self.lr * self.factor, self.min_lr)
            self.bad = 0
        return self.lr


def train(X, y, config: TrainConfig, init: Optional[Classifier] = None) -> TrainedModel:
    """Mini-batch training of the configured loss; deterministic given ``config.seed``."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(y)
    if n == 0:
        raise EmptyDataset("cannot train on an empty dataset")
    if not np.all(np.isfinite(X)):
        raise DomainError("features must be finite")
    clf = init.copy() if init is not None else Classifier.init(X.shape[1], config.hidden, config.seed)
    opt = _Adam(clf.params) if config.optimizer == "adam" else _SGD(clf.params)
    sched = PlateauScheduler(config.lr, config.factor, config.patience, config.threshold, config.min_lr)
    shuffle_rng = np.random.default_rng([config.seed, 1])
    bs = config.batch_size
    out = TrainedModel(clf)
    for _ in range(config.epochs):
        lr = sched.lr
        order = shuffle_rng.permutation(n)
        total = 0.0
        for start in range(0, n, bs):
            idx = order[start:start + bs]
            loss, grads = loss_and_grad(clf, X[idx], y[idx], config)
            if not np.isfinite(loss):
                raise NonFiniteLoss(f"loss became {loss}")
            total += loss * len(idx)
            opt.step(clf.params, grads, lr)
        epoch_loss = total / n
        out.loss_trace.append(epoch_loss)
        out.lr_trace.append(lr)
        out.param_trace.append(clf.get_flat())
        sched.step(epoch_loss)
    return out


def evaluate(model, X, labels) -> float:
    """Fraction of points whose decision equals the label."""
    labels = np.asarray(labels)
    if labels.size == 0:
        raise EmptyDataset("cannot evaluate on an empty dataset")
    clf = model.classifier if isinstance(model, TrainedModel) else model
    return float(np.mean(clf.decide(X) == labels))


def erm_finite(hyp_decisions, labels, coeffs: PerCoefficients):
    """Exact PER minimiser over an explicit hypothesis list.

    ``hyp_decisions`` has one row of +/-1 decisions per hypothesis. Ties go to
    the lowest index. Returns ``(index, per_value)``.
    """
    H = np.atleast_2d(np.asarray(hyp_decisions, dtype=float))
    y = np.asarray(labels, dtype=float)
    values = np.array([per(row, y, coeffs) for row in H])
    k = int(np.argmin(values))
    return k, float(values[k])
