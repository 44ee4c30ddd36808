"""Repeated ERM with fixed features: each round relabels the training set from
the distribution induced by the previous round's classifier and retrains.

Label randomness is coupled across rounds: every training point keeps one
uniform draw ``u_i`` and is labelled ``+1`` when ``u_i`` falls below its current
drifted probability. Each round's labels therefore have the right marginal law,
and the round-to-round map depends on the previous decisions only, so fixed
points and cycles are detected exactly.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import DriftParams
from .errors import DomainError, SupportTooLarge
from .learn import TrainConfig, train
from .risk import decide
from .shiftsim import coupled_uniforms, drifted_prob, labels_from_uniforms

MAX_SUPPORT = 16


@dataclass
class RermTrace:
    decisions: list = field(default_factory=list)
    train_accuracy: list = field(default_factory=list)
    test_accuracy: list = field(default_factory=list)
    status: str = "max_iters"  # "converged" | "cycle" | "max_iters"
    at: Optional[int] = None  # iteration where convergence / the repeat was seen
    period: Optional[int] = None
    classifiers: list = field(default_factory=list)

    def records(self):
        out = []
        for t, d in enumerate(self.decisions):
            changed = None if t == 0 else int(np.sum(d != self.decisions[t - 1]))
            out.append({
                "iteration": t,
                "train_accuracy": self.train_accuracy[t],
                "test_accuracy": self.test_accuracy[t] if self.test_accuracy else None,
                "positive_rate": float(np.mean(d == 1)),
                "n_changed": changed,
            })
        return out


def dominant_period(decisions, max_lag: Optional[int] = None) -> int:
    """Lag with the smallest mean Hamming distance between ``d_t`` and ``d_{t-lag}``
    over the second half of the trace."""
    D = np.asarray(decisions)
    T = len(D)
    if T < 3:
        return 1
    max_lag = max_lag or T // 2
    start = T // 2
    best, best_lag = np.inf, 1
    for lag in range(1, max_lag + 1):
        ts = [t for t in range(max(start, lag), T)]
        if not ts:
            break
        dist = np.mean([np.mean(D[t] != D[t - lag]) for t in ts])
        if dist < best - 1e-12:
            best, best_lag = dist, lag
    return best_lag


def rerm_run(X, probs, params: DriftParams, config: TrainConfig, max_iters: int = 20, seed=0,
             labels=None, test=None, stop: bool = True) -> RermTrace:
    """Run the adapted repeated-ERM loop with the logistic loss.

    ``probs`` are the oracle probabilities at the training features; ``labels``
    are the initial labels (drawn from ``probs`` if omitted). ``test`` is an
    optional ``(X_test, p_test)`` pair on which the performative accuracy of
    each round's classifier is measured. With ``stop=False`` all ``max_iters``
    rounds are run and the status is still derived from the full trace.
    """
    if max_iters < 1:
        raise DomainError("max_iters must be >= 1")
    X = np.asarray(X, dtype=float)
    probs = np.asarray(probs, dtype=float)
    rng = np.random.default_rng([seed, 7])
    if labels is None:
        labels = np.where(rng.random(len(probs)) < probs, 1, -1)
    u = coupled_uniforms(labels, probs, rng)
    if test is not None:
        X_test, p_test = np.asarray(test[0], dtype=float), np.asarray(test[1], dtype=float)
        u_test = rng.random(len(p_test))
    config = config.with_(loss="logistic", coeffs=None)

    trace = RermTrace()
    seen = {}
    y = np.asarray(labels)
    for t in range(max_iters + 1):
        if t > 0:
            y = labels_from_uniforms(u, drifted_prob(probs, trace.decisions[-1], params))
        clf = train(X, y, config).classifier
        d = clf.decide(X)
        trace.classifiers.append(clf)
        trace.decisions.append(d)
        trace.train_accuracy.append(float(np.mean(d == y)))
        if test is not None:
            dt = clf.decide(X_test)
            yt = labels_from_uniforms(u_test, drifted_prob(p_test, dt, params))
            trace.test_accuracy.append(float(np.mean(dt == yt)))
        key = d.tobytes()
        if trace.at is None:
            if t > 0 and np.array_equal(d, trace.decisions[-2]):
                trace.status, trace.at, trace.period = "converged", t, 1
            elif key in seen:
                trace.status, trace.at, trace.period = "cycle", t, t - seen[key]
            seen.setdefault(key, t)
        if trace.at is not None and stop:
            return trace
    if trace.at is None:
        trace.period = dominant_period(trace.decisions)
    return trace


def exact_step(probs, decisions, params: DriftParams):
    """Infinite-data round: each point takes the majority label of its drifted conditional."""
    return decide(np.asarray(drifted_prob(probs, decisions, params)) - 0.5)


def exact_orbit(probs, params: DriftParams, d0, steps: int):
    out = [np.asarray(d0)]
    for _ in range(steps):
        out.append(exact_step(probs, out[-1], params))
    return out


@dataclass
class ExactDynamics:
    fixed_points: list
    cycles: list  # each a tuple of states, period >= 2, canonically rotated
    orbits: dict  # initial state -> (steps to reach the limit set, index into limits)
    limits: list  # fixed points and cycles in discovery order


def rerm_exact(probs, params: DriftParams) -> ExactDynamics:
    """Enumerate every orbit of the infinite-data map over all decision tables on the support."""
    probs = np.asarray(probs, dtype=float)
    K = len(probs)
    if K > MAX_SUPPORT:
        raise SupportTooLarge(f"support of size {K} exceeds {MAX_SUPPORT}")
    limits, index, orbits = [], {}, {}
    for start in itertools.product((1, -1), repeat=K):
        path, pos = [start], {start: 0}
        while True:
            nxt = tuple(int(v) for v in exact_step(probs, np.array(path[-1]), params))
            if nxt in pos:
                cyc = path[pos[nxt]:]
                break
            pos[nxt] = len(path)
            path.append(nxt)
        r = cyc.index(max(cyc))
        canon = tuple(cyc[r:] + cyc[:r])
        if canon not in index:
            index[canon] = len(limits)
            limits.append(canon)
        orbits[start] = (pos[nxt], index[canon])
    fixed = [c[0] for c in limits if len(c) == 1]
    cycles = [c for c in limits if len(c) > 1]
    return ExactDynamics(fixed, cycles, orbits, limits)
