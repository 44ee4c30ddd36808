"""Rademacher estimation, generalization-bound evaluators, and the two-world
lower-bound construction with an excess-risk simulator.

All logarithms are natural.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .core import DriftParams, IntervalParams, PerCoefficients, coefficients, coefficients_from_values
from .errors import DomainError, EmptySample, Infeasible
from .risk import exact_pr

SQRT2 = math.sqrt(2.0)
MAX_EXHAUSTIVE_N = 20


@dataclass(frozen=True)
class RademacherEstimate:
    value: float
    method: str  # "exact-enumeration" | "erm-flip-approx"
    n_sigma_draws: Optional[int]  # None means every sign vector was enumerated
    stderr: float

    @property
    def approximate(self) -> bool:
        return self.method == "erm-flip-approx"


def _sign_vectors(n):
    if n > MAX_EXHAUSTIVE_N:
        raise DomainError(f"exhaustive enumeration limited to n <= {MAX_EXHAUSTIVE_N}")
    bits = (np.arange(2 ** n)[:, None] >> np.arange(n)[None, :]) & 1
    return (2 * bits - 1).astype(np.int64)


def rademacher(source, n_sigma_draws: Optional[int] = 200, seed=0, points=None) -> RademacherEstimate:
    """Conditional Rademacher average of a +/-1 hypothesis class on fixed points.

    ``source`` is either a ``(|H|, n)`` array of hypothesis outputs (exact
    supremum by enumeration over H) or a trainer ``trainer(points, labels)``
    returning +/-1 decisions on ``points``. A trainer gives the approximation
    ``sup ~ 1 - 2 * min training error`` with ``sigma`` as labels; it can only
    under-estimate. ``n_sigma_draws=None`` enumerates all ``2^n`` sign vectors.
    """
    if callable(source):
        if points is None:
            raise DomainError("a trainer source needs the sample points")
        n = len(points)
        method = "erm-flip-approx"
    else:
        H = np.atleast_2d(np.asarray(source))
        n = H.shape[1]
        method = "exact-enumeration"
    if n == 0:
        raise EmptySample("Rademacher average needs at least one point")
    if n_sigma_draws is None:
        sigmas = _sign_vectors(n)
    else:
        rng = np.random.default_rng(seed)
        sigmas = np.where(rng.random((n_sigma_draws, n)) < 0.5, -1, 1)
    if method == "exact-enumeration":
        # integer correlations keep the exhaustive average exact
        sups = (sigmas @ H.T.astype(np.int64)).max(axis=1) / n
    else:
        sups = np.array([np.mean(s * np.asarray(source(points, s))) for s in sigmas])
    value = float(np.clip(sups.mean(), 0.0, 1.0))
    stderr = 0.0 if n_sigma_draws is None or len(sups) < 2 else float(sups.std(ddof=1) / math.sqrt(len(sups)))
    return RademacherEstimate(value, method, n_sigma_draws, stderr)


@dataclass(frozen=True)
class BoundReport:
    theorem: str
    inputs: dict
    rhs: float
    excess_rhs: Optional[float] = None
    A: Optional[float] = None
    B: Optional[float] = None
    approximate: bool = False

    def to_record(self):
        return {
            "theorem": self.theorem, "inputs": self.inputs, "rhs": self.rhs,
            "excess_rhs": self.excess_rhs, "A": self.A, "B": self.B,
            "approximate": self.approximate,
        }


def _check(n, delta):
    if not (0 < delta < 1):
        raise DomainError(f"delta={delta} must lie in (0, 1)")
    if n < 1:
        raise DomainError(f"n={n} must be >= 1")


def _rad_value(rad):
    if isinstance(rad, RademacherEstimate):
        return max(rad.value, 0.0), rad.approximate
    return max(float(rad), 0.0), False


def complexity_constants(coeffs: PerCoefficients):
    """``A = 2(|a1|+|a3|)`` and ``B = 2((1+sqrt2)|a1| + |a2| + (1+sqrt2)|a3|)`` for alpha weights."""
    a1, a2, a3 = abs(coeffs.alpha1), abs(coeffs.alpha2), abs(coeffs.alpha3)
    return 2 * (a1 + a3), 2 * ((1 + SQRT2) * a1 + a2 + (1 + SQRT2) * a3)


def _conf(n, delta):
    return math.sqrt(math.log(4 / delta) / (2 * n))


def bound_thm1(coeffs: PerCoefficients, rad, n: int, delta: float) -> BoundReport:
    """Uniform deviation ``|PR - PER_n| <= A R_n + B sqrt(ln(4/delta) / 2n)``;
    ``excess_rhs`` is the ERM excess-risk form (twice the deviation)."""
    _check(n, delta)
    R, approx = _rad_value(rad)
    A, B = complexity_constants(coeffs)
    c = _conf(n, delta)
    return BoundReport(
        "thm1", {"coeffs": list(coeffs.as_tuple()), "rademacher": R, "n": n, "delta": delta},
        A * R + B * c, 2 * A * R + 2 * B * c, A, B, approx)


def bound_thm2(coeffs: PerCoefficients, eps: float, rad, n: int, delta: float,
               midpoint: bool = False) -> BoundReport:
    """Excess risk of the proxy-PER minimiser under interval uncertainty of total length ``eps``."""
    _check(n, delta)
    if eps < 0:
        raise DomainError("eps must be nonnegative")
    R, approx = _rad_value(rad)
    A, B = complexity_constants(coeffs)
    unc = eps if midpoint else 2 * eps
    rhs = unc + (2 * A * R + 2 * B * _conf(n, delta))
    return BoundReport(
        "thm2", {"coeffs": list(coeffs.as_tuple()), "eps": eps, "midpoint": midpoint,
                 "rademacher": R, "n": n, "delta": delta},
        rhs, rhs, A, B, approx)


def bound_thm3(M: float, rad, n: int, delta: float) -> BoundReport:
    """Excess risk of the density-ratio PER minimiser with ratios bounded by ``M``."""
    _check(n, delta)
    if M < 0:
        raise DomainError("M must be nonnegative")
    R, approx = _rad_value(rad)
    rhs = 4 * M * R + 4 * M * (1 + SQRT2) * _conf(n, delta)
    return BoundReport("thm3", {"M": M, "rademacher": R, "n": n, "delta": delta},
                       rhs, rhs, approximate=approx)


def bound_finite(coeffs: PerCoefficients, n_hypotheses: int, n: int, delta: float) -> BoundReport:
    """Finite-class deviation ``sqrt(A_diff^2 (ln 2|H| + ln 1/delta) / 2n)``; excess is twice that."""
    _check(n, delta)
    if n_hypotheses < 1:
        raise DomainError("need at least one hypothesis")
    a_diff = 2 * coeffs.spread
    dev = math.sqrt(a_diff ** 2 * (math.log(2 * n_hypotheses) + math.log(1 / delta)) / (2 * n))
    return BoundReport(
        "finite", {"coeffs": list(coeffs.as_tuple()), "n_hypotheses": n_hypotheses, "n": n, "delta": delta},
        dev, 2 * dev, A=a_diff)


# -- two-world lower bound ----------------------------------------------------

@dataclass(frozen=True)
class LowerBoundInstance:
    """Single atom with ``P[Y=1] = 1/2``; only ``a1`` is uncertain, in
    ``[abar1 - eps/2, abar1 + eps/2]``. The worlds ``low`` and ``high`` take
    the two endpoints and have opposite optimal decisions."""

    abar1: float
    eps: float
    a2: float
    a3: float
    a4: float
    worlds: dict = field(default_factory=dict)  # name -> DriftParams
    risks: dict = field(default_factory=dict)  # name -> {+1: PR, -1: PR}

    @property
    def intervals(self) -> IntervalParams:
        return IntervalParams(((self.abar1 - self.eps / 2, self.abar1 + self.eps / 2),
                               (self.a2, self.a2), (self.a3, self.a3), (self.a4, self.a4)))

    def optimal(self, world) -> int:
        r = self.risks[world]
        return 1 if r[1] <= r[-1] else -1

    def excess(self, world, decision) -> float:
        r = self.risks[world]
        return r[decision] - min(r[1], r[-1])

    def proxy_coeffs(self) -> PerCoefficients:
        return coefficients_from_values(self.abar1, self.a2, self.a3, self.a4)


def _completion(abar1, eps, a2, tol=1e-12):
    lo, hi = abar1 - eps / 2, abar1 + eps / 2
    if lo < -a2 - tol or hi > 1 - a2 + tol:
        return None
    target = (1 - a2) - abar1 / 2  # required a4 + a3 / 2
    a4_lo, a4_hi = max(0.0, 2 * target - 1), min(1.0, 2 * target)
    if a4_lo > a4_hi + tol:
        return None
    a4 = a4_lo
    return a4, 2 * (target - a4)


def lower_bound_instance(abar1: float, eps: float, a2: Optional[float] = None,
                         grid: int = 101) -> LowerBoundInstance:
    """Build the two-world instance.

    With ``a2`` unset, ``a2`` is the first feasible value on an ascending grid
    over [0, 1]; ``a4`` is then the smallest feasible value and
    ``a3 = 2 * ((1 - a2) - abar1/2 - a4)`` so that deciding -1 costs exactly the
    midpoint risk of deciding +1.
    """
    if eps < 0:
        raise DomainError("eps must be nonnegative")
    candidates = [float(a2)] if a2 is not None else [float(v) for v in np.linspace(0, 1, grid)]
    for cand in candidates:
        comp = _completion(abar1, eps, cand)
        if comp is None:
            continue
        a4, a3 = comp
        worlds = {
            "low": DriftParams(abar1 - eps / 2, cand, a3, a4),
            "high": DriftParams(abar1 + eps / 2, cand, a3, a4),
        }
        risks = {
            name: {d: exact_pr([1.0], [0.5], [d], prm) for d in (1, -1)}
            for name, prm in worlds.items()
        }
        return LowerBoundInstance(abar1, eps, cand, a3, a4, worlds, risks)
    raise Infeasible(f"no (a2, a3, a4) completion for abar1={abar1}, eps={eps}")


def majority_learner(labels, rng=None) -> int:
    return 1 if np.sum(labels) >= 0 else -1


def perm_learner(coeffs: PerCoefficients) -> Callable:
    """PER minimiser over the two constant decisions; ties go to +1."""
    def learn(labels, rng=None):
        ybar = float(np.mean(labels))
        return 1 if coeffs.alpha1 + coeffs.alpha3 * ybar <= 0 else -1
    return learn


def constant_learner(decision: int) -> Callable:
    return lambda labels, rng=None: decision


@dataclass(frozen=True)
class LowerBoundResult:
    world: str
    frequency: float
    p_plus: float
    mean_excess: float
    excess: np.ndarray


def lower_bound_simulate(instance: LowerBoundInstance, learner: Callable, n: int, trials: int,
                         seed=0, world: Optional[str] = None) -> LowerBoundResult:
    """Fraction of training sets on which the learner's excess risk is at least ``eps/4``.

    Training labels are identical in law across worlds. Unless ``world`` is
    fixed, the world is picked adversarially: if the learner outputs +1 on at
    least half the trials, the world where +1 is wrong, otherwise the other.
    """
    rng = np.random.default_rng(seed)
    labels = np.where(rng.random((trials, n)) < 0.5, 1, -1)
    decisions = np.array([learner(row, rng) for row in labels])
    p_plus = float(np.mean(decisions == 1))
    if world is None:
        played = 1 if p_plus >= 0.5 else -1
        bad = [w for w in instance.worlds if instance.optimal(w) != played]
        world = bad[0] if bad else "low"  # eps = 0: the worlds coincide
    excess = np.array([instance.excess(world, int(d)) for d in decisions])
    freq = float(np.mean(excess >= instance.eps / 4 - 1e-12))
    return LowerBoundResult(world, freq, p_plus, float(excess.mean()), excess)
