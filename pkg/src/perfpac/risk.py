"""Risk functionals: exact performative risk, the performative empirical risk
(PER), its interval-proxy and density-ratio variants, and the convex
surrogate used for training."""
from __future__ import annotations

import math

import numpy as np

from .core import DriftParams, PerCoefficients
from .errors import EmptySample, LengthMismatch, MassNotNormalized, WeightExceedsBound
from .shiftsim import RnWeightFn

LN2 = math.log(2.0)


def decide(scores):
    """Sign decision rule with ``sign(0) = +1``."""
    return np.where(np.asarray(scores) >= 0, 1, -1).astype(np.int64)


def per_term_bounds(coeffs: PerCoefficients):
    """Range ``[lo, hi]`` containing every per-sample PER term."""
    return coeffs.alpha4 - coeffs.spread, coeffs.alpha4 + coeffs.spread


def exact_pr(masses, probs, decisions, params: DriftParams) -> float:
    """Performative risk of a decision table on a finite feature support.

    ``masses[k]`` is ``P[X = x_k]``, ``probs[k]`` is ``P[Y = 1 | x_k]`` under the
    initial distribution.
    """
    masses = np.asarray(masses, dtype=float)
    probs = np.asarray(probs, dtype=float)
    d = np.asarray(decisions)
    if not (masses.shape == probs.shape == d.shape):
        raise LengthMismatch("masses, probs and decisions must have equal shapes")
    if abs(masses.sum() - 1.0) > 1e-9 or np.any(masses < 0):
        raise MassNotNormalized(f"masses sum to {masses.sum()}")
    pos = d >= 0
    p_h1 = masses[pos].sum()
    p_hm = masses[~pos].sum()
    p_y1_h1 = (masses * probs)[pos].sum()
    p_y1_hm = (masses * probs)[~pos].sum()
    return float((1 - params.a2) * p_h1 - params.a1 * p_y1_h1
                 + params.a3 * p_y1_hm + params.a4 * p_hm)


def per(decisions, labels, coeffs: PerCoefficients, weights=None) -> float:
    """Average of ``alpha1*h + alpha2*y + alpha3*y*h + alpha4`` over the sample.

    ``weights`` turns the average into an expectation over a weighted support.
    """
    d = np.asarray(decisions, dtype=float)
    y = np.asarray(labels, dtype=float)
    if d.shape != y.shape:
        raise LengthMismatch(f"{d.shape} decisions vs {y.shape} labels")
    if d.size == 0:
        raise EmptySample("PER needs at least one sample")
    terms = coeffs.term(y, d)
    if weights is None:
        return float(terms.mean())
    w = np.asarray(weights, dtype=float)
    return float(np.dot(w, terms) / w.sum())


def rn_per(features, labels, decisions, weights: RnWeightFn, sample_weight=None) -> float:
    """Density-ratio reweighted misclassification rate on initial-distribution samples."""
    y = np.asarray(labels)
    d = np.asarray(decisions)
    if y.shape != d.shape:
        raise LengthMismatch(f"{y.shape} labels vs {d.shape} decisions")
    if y.size == 0:
        raise EmptySample("need at least one sample")
    w = weights(features, y, d)
    if np.any(w > weights.bound + 1e-12):
        raise WeightExceedsBound(f"ratio {w.max()} exceeds declared bound {weights.bound}")
    terms = w * (d != y)
    if sample_weight is None:
        return float(terms.mean())
    sw = np.asarray(sample_weight, dtype=float)
    return float(np.dot(sw, terms) / sw.sum())


def phi(t):
    """Base-2 logistic loss ``log(1 + e^-t) / log 2``, overflow-safe."""
    t = np.asarray(t, dtype=float)
    return (np.log1p(np.exp(-np.abs(t))) + np.maximum(-t, 0.0)) / LN2


def dphi(t):
    """Derivative of :func:`phi`: ``-sigmoid(-t) / log 2``."""
    t = np.asarray(t, dtype=float)
    e = np.exp(-np.abs(t))
    sig_neg = np.where(t >= 0, e / (1 + e), 1 / (1 + e))
    return -sig_neg / LN2


def logistic(score, y):
    """Standard logistic loss ``phi(y * score)`` and its derivative in ``score``."""
    y = np.asarray(y, dtype=float)
    m = y * np.asarray(score, dtype=float)
    return phi(m), y * dphi(m)


def surrogate(score, y, coeffs: PerCoefficients):
    """Convex surrogate of the PER term and its derivative in ``score``.

    ``alpha1 (1 - 2 phi(s)) + alpha2 y + alpha3 (1 - 2 phi(y s)) + alpha4``.
    Upper-bounds the PER term at ``sign(s)`` whenever ``alpha1, alpha3 <= 0``.
    """
    s = np.asarray(score, dtype=float)
    y = np.asarray(y, dtype=float)
    a1, a2, a3, a4 = coeffs.as_tuple()
    # constant part first: with (0, 0, -1/2, 1/2) it cancels exactly, so the
    # result is bit-identical to the logistic loss
    const = a1 + a2 * y + a3 + a4
    loss = const - 2 * a1 * phi(s) - 2 * a3 * phi(y * s)
    grad = -2 * a1 * dphi(s) + (-2 * a3) * y * dphi(y * s)
    return loss, grad
