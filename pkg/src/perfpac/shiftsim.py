"""Performative distribution maps: drifted label probabilities, label
resampling under a deployed classifier, and Radon-Nikodym reweighting."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Union

import numpy as np

from .core import DriftParams
from .errors import AbsoluteContinuityViolation, DomainError, LengthMismatch, UnboundedRatio


def _as_rng(seed_or_rng) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def drifted_prob(p, decision, params: DriftParams, clamp: bool = False):
    """``P~[Y=1 | x]`` after deploying a classifier that outputs ``decision`` at ``x``.

    Works elementwise on arrays. ``clamp`` clips to [0, 1]; only meaningful for
    parameters built with :meth:`DriftParams.loose`.
    """
    p = np.asarray(p, dtype=float)
    d = np.asarray(decision)
    out = np.where(d >= 0, params.a1 * p + params.a2, params.a3 * p + params.a4)
    if clamp:
        out = np.clip(out, 0.0, 1.0)
    return out if out.ndim else float(out)


def count_out_of_range(p, decision, params: DriftParams) -> int:
    raw = np.asarray(drifted_prob(p, decision, params))
    return int(np.count_nonzero((raw < 0) | (raw > 1)))


def labels_from_uniforms(u, p_tilde):
    """Label ``+1`` exactly when ``u < p_tilde``."""
    return np.where(np.asarray(u) < np.asarray(p_tilde), 1, -1).astype(np.int64)


def resample_labels(probs, decisions, params: DriftParams, seed=None, clamp: bool = False):
    """Draw fresh +/-1 labels, each ``+1`` with its drifted probability.

    Deterministic given ``seed`` (an int or a ``numpy.random.Generator``).
    """
    probs = np.asarray(probs, dtype=float)
    decisions = np.asarray(decisions)
    if probs.shape != decisions.shape:
        raise LengthMismatch(f"{probs.shape} probabilities vs {decisions.shape} decisions")
    p_tilde = drifted_prob(probs, decisions, params, clamp=clamp)
    u = _as_rng(seed).random(probs.shape)
    return labels_from_uniforms(u, p_tilde)


def coupled_uniforms(labels, probs, seed=None):
    """Uniforms ``u`` with ``1{u < p} == (labels == 1)``.

    When ``labels ~ Bernoulli(p)`` the returned ``u`` are marginally
    Uniform(0, 1), so ``labels_from_uniforms(u, p_tilde)`` is a valid draw
    from the drifted conditional that reuses the original labels' randomness.
    """
    labels = np.asarray(labels)
    probs = np.asarray(probs, dtype=float)
    if labels.shape != probs.shape:
        raise LengthMismatch(f"{labels.shape} labels vs {probs.shape} probabilities")
    v = _as_rng(seed).random(probs.shape)
    return np.where(labels == 1, v * probs, probs + v * (1 - probs))


@dataclass(frozen=True)
class RnWeightFn:
    """Density ratio ``dP~_h / dP`` evaluated at ``(x, y, h(x))`` with a declared bound."""

    fn: Callable
    bound: float

    def __call__(self, x, y, decision):
        w = np.asarray(self.fn(x, np.asarray(y), np.asarray(decision)), dtype=float)
        if np.any(w < 0):
            raise DomainError("density ratio must be nonnegative")
        return w


@dataclass(frozen=True)
class GaussianStrategicShift:
    """Features ``N(mu1, sigma1)`` move to ``N(mu2, sigma2)`` on rejected points;
    accepted points keep their features and are reweighted by ``a``."""

    mu1: float
    sigma1: float
    mu2: float
    sigma2: float
    a: float

    def __post_init__(self):
        if not (self.sigma1 > 0 and self.sigma2 > 0):
            raise DomainError("standard deviations must be positive")
        if not 0 <= self.a <= 1:
            raise DomainError("a must lie in [0, 1]")

    def log_ratio_negative(self, x):
        x = np.asarray(x, dtype=float)
        return (math.log(self.sigma1 / self.sigma2)
                + (x - self.mu1) ** 2 / (2 * self.sigma1 ** 2)
                - (x - self.mu2) ** 2 / (2 * self.sigma2 ** 2))

    def sup_negative(self) -> float:
        """Supremum over ``x`` of the ratio on the ``h = -1`` branch."""
        s1, s2 = self.sigma1, self.sigma2
        if s2 < s1:
            x_star = (self.mu2 * s1 ** 2 - self.mu1 * s2 ** 2) / (s1 ** 2 - s2 ** 2)
            return float(np.exp(self.log_ratio_negative(x_star)))
        if s2 == s1 and self.mu1 == self.mu2:
            return 1.0
        raise UnboundedRatio(
            f"ratio unbounded for sigma1={s1}, sigma2={s2}, mu1={self.mu1}, mu2={self.mu2}")


def gaussian_rn(shift: GaussianStrategicShift) -> RnWeightFn:
    m_neg = shift.sup_negative()

    def fn(x, y, d):
        x = np.asarray(x, dtype=float).reshape(np.shape(d))
        return np.where(d >= 0, shift.a, np.exp(shift.log_ratio_negative(x)))

    return RnWeightFn(fn, max(shift.a, m_neg))


def discrete_rn(initial, shifted: Union[np.ndarray, Mapping[int, np.ndarray]]) -> RnWeightFn:
    """Ratio table ``shifted / initial`` on a finite support.

    ``initial`` has shape ``(K,)`` (atoms indexed by ``x`` alone) or ``(K, 2)``
    (columns for ``y = -1`` and ``y = +1``). ``shifted`` is one array of the
    same shape, or a mapping ``{+1: arr, -1: arr}`` giving the shifted measure
    seen by points where the classifier outputs that decision. The returned
    evaluator takes integer atom indices as ``x``.
    """
    initial = np.asarray(initial, dtype=float)
    if isinstance(shifted, Mapping):
        tables = {int(k): np.asarray(v, dtype=float) for k, v in shifted.items()}
    else:
        tables = {1: np.asarray(shifted, dtype=float), -1: np.asarray(shifted, dtype=float)}
    ratios = {}
    for d, q in tables.items():
        if q.shape != initial.shape:
            raise LengthMismatch(f"shifted table {q.shape} vs initial {initial.shape}")
        if np.any((initial <= 0) & (q > 0)):
            raise AbsoluteContinuityViolation("shifted measure charges an atom the initial one does not")
        safe = np.where(initial > 0, initial, 1.0)
        ratios[d] = np.where(initial > 0, q / safe, 0.0)
    bound = float(max(r.max() for r in ratios.values()))
    by_y = initial.ndim == 2

    def fn(x, y, d):
        x = np.asarray(x, dtype=np.int64)
        out = np.empty(x.shape, dtype=float)
        for dec, r in ratios.items():
            m = d == dec
            if by_y:
                out[m] = r[x[m], (y[m] == 1).astype(np.int64)]
            else:
                out[m] = r[x[m]]
        return out

    return RnWeightFn(fn, bound)
