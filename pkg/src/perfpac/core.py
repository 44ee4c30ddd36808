"""Drift-parameter algebra for the linear posterior performative drift.

A deployed classifier ``h`` moves the conditional label probability at ``x``
from ``p`` to ``a1 * p + a2`` where ``h(x) = +1`` and to ``a3 * p + a4``
where ``h(x) = -1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from .errors import ConstraintViolation, DomainError, ProxyOutOfInterval

TOL = 1e-12


def _check_bounds(a1, a2, a3, a4, tol=TOL):
    for name, v in (("a1", a1), ("a2", a2), ("a3", a3), ("a4", a4)):
        if not math.isfinite(v):
            raise DomainError(f"{name} must be finite, got {v!r}")
    if not (-tol <= a2 <= 1 + tol):
        raise ConstraintViolation("a2 in [0, 1]")
    if not (-tol <= a4 <= 1 + tol):
        raise ConstraintViolation("a4 in [0, 1]")
    if not (-a2 - tol <= a1 <= 1 - a2 + tol):
        raise ConstraintViolation("a1 in [-a2, 1 - a2]")
    if not (-a4 - tol <= a3 <= 1 - a4 + tol):
        raise ConstraintViolation("a3 in [-a4, 1 - a4]")


@dataclass(frozen=True)
class DriftParams:
    """Branch constants ``(a1, a2)`` for ``h = +1`` and ``(a3, a4)`` for ``h = -1``.

    Construction validates that every drifted probability stays in [0, 1].
    Use :meth:`loose` to skip validation (clamp mode only).
    """

    a1: float
    a2: float
    a3: float
    a4: float
    checked: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        for name in ("a1", "a2", "a3", "a4"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.checked:
            _check_bounds(self.a1, self.a2, self.a3, self.a4)

    @classmethod
    def loose(cls, a1, a2, a3, a4) -> "DriftParams":
        return cls(a1, a2, a3, a4, checked=False)

    @property
    def is_valid(self) -> bool:
        try:
            _check_bounds(self.a1, self.a2, self.a3, self.a4)
        except (ConstraintViolation, DomainError):
            return False
        return True

    def as_tuple(self):
        return (self.a1, self.a2, self.a3, self.a4)

    def indicator_terms(self):
        """Per-cell performative loss ``{(y, h): value}`` in indicator form."""
        return {
            (1, 1): (1 - self.a2) - self.a1,
            (-1, 1): 1 - self.a2,
            (1, -1): self.a3 + self.a4,
            (-1, -1): self.a4,
        }


IDENTITY = DriftParams(1.0, 0.0, 1.0, 0.0)


def validate_drift(a1, a2, a3, a4) -> DriftParams:
    """Return validated parameters or raise ``ConstraintViolation`` naming the first failure."""
    return DriftParams(a1, a2, a3, a4)


@dataclass(frozen=True)
class PerCoefficients:
    """Weights of ``h(x)``, ``y``, ``y * h(x)`` and the constant in the per-sample loss."""

    alpha1: float
    alpha2: float
    alpha3: float
    alpha4: float

    def term(self, y, d):
        """Per-sample loss ``alpha1*d + alpha2*y + alpha3*y*d + alpha4`` (vectorised)."""
        return self.alpha1 * d + self.alpha2 * y + self.alpha3 * y * d + self.alpha4

    def as_tuple(self):
        return (self.alpha1, self.alpha2, self.alpha3, self.alpha4)

    @property
    def spread(self) -> float:
        """``|alpha1| + |alpha2| + |alpha3|``; the per-sample loss lies within alpha4 +/- spread."""
        return abs(self.alpha1) + abs(self.alpha2) + abs(self.alpha3)

    @property
    def surrogate_is_upper_bound(self) -> bool:
        # tolerance absorbs rounding in families whose alpha1 is exactly 0
        return self.alpha1 <= TOL and self.alpha3 <= TOL


ZERO_ONE = PerCoefficients(0.0, 0.0, -0.5, 0.5)


def coefficients_from_values(a1, a2, a3, a4) -> PerCoefficients:
    # no validation: interval proxies need not be feasible
    return PerCoefficients(
        (2 - a1 - 2 * a2 - a3 - 2 * a4) / 4,
        (a3 - a1) / 4,
        (-a1 - a3) / 4,
        (2 - a1 - 2 * a2 + a3 + 2 * a4) / 4,
    )


def coefficients(params: DriftParams) -> PerCoefficients:
    return coefficients_from_values(*params.as_tuple())


@dataclass(frozen=True)
class IntervalParams:
    """Closed intervals known to contain ``a1..a4``."""

    intervals: tuple

    def __post_init__(self):
        ivs = tuple((float(lo), float(hi)) for lo, hi in self.intervals)
        if len(ivs) != 4:
            raise DomainError("need exactly four intervals")
        for i, (lo, hi) in enumerate(ivs, 1):
            if not lo <= hi:
                raise DomainError(f"interval I{i} has lower > upper")
        object.__setattr__(self, "intervals", ivs)
        _check_interval_feasible(ivs)

    @classmethod
    def around(cls, params: DriftParams, lengths: Sequence[float]) -> "IntervalParams":
        """Intervals centred on ``params`` with the given lengths."""
        return cls(tuple((v - e / 2, v + e / 2) for v, e in zip(params.as_tuple(), lengths)))

    @property
    def lengths(self):
        return tuple(hi - lo for lo, hi in self.intervals)

    @property
    def eps(self) -> float:
        return float(sum(self.lengths))

    @property
    def midpoints(self):
        return tuple((lo + hi) / 2 for lo, hi in self.intervals)

    def contains(self, values, tol=TOL) -> bool:
        return all(lo - tol <= v <= hi + tol for v, (lo, hi) in zip(values, self.intervals))


def _check_interval_feasible(ivs):
    # each (multiplier, offset) pair must admit a point with offset in [0, 1] and
    # multiplier + offset in [0, 1]
    for (m_lo, m_hi), (o_lo, o_hi), names in (
        (ivs[0], ivs[1], "I1/I2"),
        (ivs[2], ivs[3], "I3/I4"),
    ):
        o_lo, o_hi = max(o_lo, 0.0), min(o_hi, 1.0)
        if o_lo > o_hi + TOL:
            raise DomainError(f"{names}: offset interval misses [0, 1]")
        if m_lo + o_lo > 1 + TOL or m_hi + o_hi < -TOL:
            raise DomainError(f"{names}: no feasible drift parameters inside the intervals")


class IntervalCoefficients(NamedTuple):
    coeffs: PerCoefficients
    deviation_bound: float
    proxies: tuple


def interval_coefficients(iv: IntervalParams, proxies: Optional[Sequence[float]] = None) -> IntervalCoefficients:
    """Coefficients built from proxy parameters, with the guaranteed bound on
    ``|PER_proxy - PER_true|`` for any true parameters inside ``iv``.

    ``proxies=None`` uses the interval midpoints, which halves the bound.
    """
    if proxies is None:
        proxies = iv.midpoints
        bound = iv.eps / 2
    else:
        proxies = tuple(float(v) for v in proxies)
        if len(proxies) != 4 or not iv.contains(proxies):
            raise ProxyOutOfInterval(f"proxies {proxies} not inside {iv.intervals}")
        bound = iv.eps
    return IntervalCoefficients(coefficients_from_values(*proxies), bound, tuple(proxies))


# -- named drift families -------------------------------------------------

def _placebo(a, b):
    return (1 - a, a, 1.0, 0.0)


def _traffic(a, b):
    b = 1 - a if b is None else b
    return (a, 0.0, 1 - b, b)


def _credit(a, b):
    return (a, 1 - math.sqrt(a), a ** 3, 1 - a ** 2)


def _folktables(a, b):
    return (a, 1 - a, a ** 2, 1 - a ** 2)


def _model1(a, b):
    return (a, 0.75 * (1 - a), 1.0, 0.0)


def _model2(a, b):
    return (1.0, 0.0, a ** 3, 1 - a ** 2)


def _model3(a, b):
    return (a ** 3, 1 - a ** 2, a ** 2, 1 - a)


def _model4(a, b):
    return (1.0, 0.0, a ** 2 / (a ** 2 + 1), 1 / (a ** 2 + 1))


def _model5(a, b):
    return (0.25 - a ** 2, a ** 2, a, max(0.0, 7 / 8 - a / 2 - a ** 2 / 2))


FAMILIES: dict[str, Callable] = {
    "identity": lambda a, b: IDENTITY.as_tuple(),
    "placebo": _placebo,
    "traffic": _traffic,
    "credit": _credit,
    "folktables": _folktables,
    "model1": _model1,
    "model2": _model2,
    "model3": _model3,
    "model4": _model4,
    "model5": _model5,
}


@dataclass(frozen=True)
class DriftFamily:
    """A named one-parameter drift family, or ``custom`` with explicit params."""

    name: str
    b: Optional[float] = None
    custom: Optional[DriftParams] = None

    def __post_init__(self):
        if self.name != "custom" and self.name not in FAMILIES:
            raise DomainError(f"unknown drift family {self.name!r}")
        if self.name == "custom" and self.custom is None:
            raise DomainError("custom family needs explicit params")

    def __call__(self, a: float) -> DriftParams:
        if self.name == "custom":
            return self.custom
        return family_params(self.name, a, self.b)


def family_params(family, a: float, b: Optional[float] = None) -> DriftParams:
    """Evaluate a drift family at strength ``a``; traffic's second strength ``b`` defaults to ``1 - a``."""
    if isinstance(family, DriftFamily):
        return family(a)
    a = float(a)
    if not 0.0 <= a <= 1.0:
        raise DomainError(f"strength a={a} outside [0, 1]")
    if b is not None and not 0.0 <= b <= 1.0:
        raise DomainError(f"strength b={b} outside [0, 1]")
    try:
        fn = FAMILIES[family]
    except KeyError:
        raise DomainError(f"unknown drift family {family!r}") from None
    return DriftParams(*fn(a, b))


def random_drift(rng: np.random.Generator) -> DriftParams:
    """Uniformly random valid parameters (used by tests and demos)."""
    a2, a4 = rng.uniform(0, 1, size=2)
    a1 = rng.uniform(-a2, 1 - a2)
    a3 = rng.uniform(-a4, 1 - a4)
    return DriftParams(a1, a2, a3, a4)
