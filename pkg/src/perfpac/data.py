"""Datasets: synthetic generators, CSV ingestion/emission, class balancing
and seeded splits."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import (
    EmptyDataset,
    FractionError,
    LengthMismatch,
    MissingColumn,
    NonBinaryLabel,
    ParseError,
    SingleClassDataset,
)
from .oracle import sigmoid

P_COLUMN = "p_true"
LABEL_COLUMN = "label"


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    p: Optional[np.ndarray] = None
    columns: tuple = ()

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        y = np.asarray(self.y, dtype=np.int64)
        if X.shape[0] != y.shape[0]:
            raise LengthMismatch(f"{X.shape[0]} feature rows vs {y.shape[0]} labels")
        if not np.all(np.isin(y, (-1, 1))):
            raise NonBinaryLabel("labels must be -1 or +1")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        if self.p is not None:
            p = np.asarray(self.p, dtype=float)
            if p.shape != y.shape:
                raise LengthMismatch("probability column length differs from labels")
            if np.any((p < 0) | (p > 1)):
                raise ValueError("probability column must lie in [0, 1]")
            object.__setattr__(self, "p", p)
        cols = tuple(self.columns) or tuple(f"x{i + 1}" for i in range(X.shape[1]))
        if len(cols) != X.shape[1]:
            raise LengthMismatch("column names do not match feature count")
        object.__setattr__(self, "columns", cols)

    def __len__(self):
        return len(self.y)

    @property
    def n_features(self):
        return self.X.shape[1]

    def subset(self, idx) -> "Dataset":
        return Dataset(self.X[idx], self.y[idx], None if self.p is None else self.p[idx], self.columns)

    def with_labels(self, y) -> "Dataset":
        return Dataset(self.X, y, self.p, self.columns)

    def equals(self, other: "Dataset") -> bool:
        same_p = (self.p is None and other.p is None) or (
            self.p is not None and other.p is not None and np.array_equal(self.p, other.p))
        return (self.columns == other.columns and np.array_equal(self.X, other.X)
                and np.array_equal(self.y, other.y) and same_p)


def _bernoulli_labels(p, rng):
    return np.where(rng.random(len(p)) < p, 1, -1)


def gen_synthetic(n: int = 5000, seed: int = 0) -> Dataset:
    """Uniform features on [-3, 3]^2, ``P[Y=1|x] = sigmoid(0.5 x2 - 0.2 x1^2)``."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(-3.0, 3.0, size=(n, 2))
    p = sigmoid(0.5 * X[:, 1] - 0.2 * X[:, 0] ** 2)
    return Dataset(X, _bernoulli_labels(p, rng), p, ("x1", "x2"))


CREDIT_COLUMNS = (
    "revolving_utilization", "age", "past_due_30_59", "debt_ratio", "monthly_income",
    "open_credit_lines", "late_90", "real_estate_loans", "past_due_60_89", "dependents",
)
# planted log-odds weights of default on the standardised features
_CREDIT_W = np.array([1.1, -0.6, 0.8, 0.3, -0.4, -0.1, 0.9, 0.1, 0.5, 0.2])


def gen_credit_like(n: int = 10000, seed: int = 0) -> Dataset:
    """Stand-in for the credit-scoring table: 10 standardised features, ~30% defaults.

    Skewed count/ratio features are drawn from Poisson/lognormal laws, then
    z-scored. Default (``+1``) probability is a planted logistic function.
    """
    rng = np.random.default_rng(seed)
    raw = np.column_stack([
        rng.beta(0.8, 1.6, n),                    # revolving utilization
        rng.normal(52, 14, n).clip(21, 95),       # age
        rng.poisson(0.4, n),                      # 30-59 days past due
        rng.lognormal(-1.0, 0.8, n),              # debt ratio
        rng.lognormal(8.6, 0.6, n),               # monthly income
        rng.poisson(8, n),                        # open credit lines
        rng.poisson(0.25, n),                     # 90 days late
        rng.poisson(1.0, n),                      # real estate loans
        rng.poisson(0.2, n),                      # 60-89 days past due
        rng.poisson(0.8, n),                      # dependents
    ]).astype(float)
    Z = (raw - raw.mean(axis=0)) / raw.std(axis=0)
    p = sigmoid(Z @ _CREDIT_W - 1.2)
    return Dataset(Z, _bernoulli_labels(p, rng), p, CREDIT_COLUMNS)


FOLKTABLES_COLUMNS = (
    "AGEP", "COW", "SCHL", "MAR", "OCCP", "POBP", "RELP", "WKHP", "SEX", "RAC1P",
)


def gen_folktables_like(n: int = 10000, seed: int = 0) -> Dataset:
    """Stand-in for the income task: 10 integer-coded census-style features.

    Categorical codes are kept as numbers and, like the continuous columns,
    scaled to zero mean / unit variance. ``+1`` means income above threshold.
    """
    rng = np.random.default_rng(seed)
    age = rng.integers(17, 90, n)
    cow = rng.choice(np.arange(1, 10), n, p=[.55, .07, .05, .06, .08, .05, .09, .03, .02])
    schl = rng.integers(1, 25, n)
    mar = rng.choice(np.arange(1, 6), n, p=[.5, .06, .12, .02, .3])
    occp = rng.integers(0, 25, n)
    pobp = rng.integers(0, 12, n)
    relp = rng.integers(0, 18, n)
    wkhp = rng.normal(38, 12, n).clip(1, 99).round()
    sex = rng.integers(1, 3, n)
    rac1p = rng.choice(np.arange(1, 10), n, p=[.6, .06, .01, .01, .01, .14, .01, .1, .06])
    raw = np.column_stack([age, cow, schl, mar, occp, pobp, relp, wkhp, sex, rac1p]).astype(float)
    Z = (raw - raw.mean(axis=0)) / raw.std(axis=0)
    logit = (0.9 * Z[:, 2] + 0.8 * Z[:, 7] + 0.5 * Z[:, 0] - 0.25 * Z[:, 0] ** 2
             - 0.3 * (mar != 1) - 0.35 * (sex == 2) + 0.3 * np.sin(occp) - 0.3)
    p = sigmoid(logit)
    return Dataset(Z, _bernoulli_labels(p, rng), p, FOLKTABLES_COLUMNS)


GENERATORS = {
    "synthetic": gen_synthetic,
    "credit": gen_credit_like,
    "folktables": gen_folktables_like,
}


# -- CSV ---------------------------------------------------------------------

def _parse_label(v, row, col):
    try:
        x = float(v)
    except ValueError:
        raise ParseError(row, col) from None
    if x == 1.0:
        return 1
    if x in (0.0, -1.0):
        return -1
    raise NonBinaryLabel(f"row {row}: label {v!r} not in {{-1, 1}} or {{0, 1}}")


def ingest_csv(path, label_column: str = LABEL_COLUMN, p_column: Optional[str] = P_COLUMN) -> Dataset:
    """Read a comma-separated file with a header row.

    Labels may be coded {-1, 1} or {0, 1} (0 maps to -1). ``p_column`` is
    optional: when the column is absent the dataset carries no probabilities.
    Row numbers in errors count the header as row 1.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyDataset(f"{path} is empty") from None
        if label_column not in header:
            raise MissingColumn(label_column)
        li = header.index(label_column)
        pi = header.index(p_column) if p_column and p_column in header else None
        feat = [i for i in range(len(header)) if i not in (li, pi)]
        X, y, p = [], [], []
        for r, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(r, None, f"row {r} has {len(row)} cells, header has {len(header)}")
            y.append(_parse_label(row[li], r, label_column))
            vals = []
            for i in feat:
                try:
                    vals.append(float(row[i]))
                except ValueError:
                    raise ParseError(r, header[i]) from None
            X.append(vals)
            if pi is not None:
                try:
                    p.append(float(row[pi]))
                except ValueError:
                    raise ParseError(r, header[pi]) from None
    if not y:
        raise EmptyDataset(f"{path} has no data rows")
    return Dataset(np.array(X, dtype=float).reshape(len(y), len(feat)), np.array(y),
                   np.array(p) if pi is not None else None, tuple(header[i] for i in feat))


def emit_csv(ds: Dataset, path, label_column: str = LABEL_COLUMN, p_column: str = P_COLUMN):
    """Write ``ds`` so that :func:`ingest_csv` reads it back exactly (floats use ``repr``)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        header = list(ds.columns) + [label_column] + ([p_column] if ds.p is not None else [])
        w.writerow(header)
        for i in range(len(ds)):
            row = [repr(float(v)) for v in ds.X[i]] + [str(int(ds.y[i]))]
            if ds.p is not None:
                row.append(repr(float(ds.p[i])))
            w.writerow(row)


# -- balancing / splitting -------------------------------------------------------

def balance_classes(ds: Dataset, seed: int = 0) -> Dataset:
    """Undersample the majority class to the minority count; output is shuffled."""
    pos = np.nonzero(ds.y == 1)[0]
    neg = np.nonzero(ds.y == -1)[0]
    if len(pos) == 0 or len(neg) == 0:
        raise SingleClassDataset("cannot balance a single-class dataset")
    rng = np.random.default_rng(seed)
    k = min(len(pos), len(neg))
    keep = np.concatenate([rng.choice(pos, k, replace=False), rng.choice(neg, k, replace=False)])
    return ds.subset(rng.permutation(keep))


@dataclass(frozen=True)
class SplitSpec:
    """``fractions`` are cut in order after a seeded shuffle; ``two_stage`` splits
    off the last fraction first and then splits the rest again by the same ratio."""

    fractions: tuple = (0.8, 0.2)
    two_stage: bool = False
    seed: int = 0

    def __post_init__(self):
        fr = tuple(float(f) for f in self.fractions)
        if not fr or any(f <= 0 for f in fr) or sum(fr) > 1 + 1e-12:
            raise FractionError(f"bad split fractions {fr}")
        if self.two_stage and len(fr) != 2:
            raise FractionError("two-stage split takes a (first, second) ratio pair")
        object.__setattr__(self, "fractions", fr)


def _cut_sizes(n, fractions):
    # floor for all parts but the last; the last takes the remainder when the
    # fractions cover everything
    sizes = [math.floor(n * f + 1e-9) for f in fractions[:-1]]
    last = n - sum(sizes) if abs(sum(fractions) - 1) < 1e-12 else math.floor(n * fractions[-1] + 1e-9)
    return sizes + [last]


def split(ds: Dataset, spec: SplitSpec = SplitSpec()):
    """Seeded shuffle then contiguous cuts.

    Two-stage mode with ratio (0.7, 0.3) returns ``(train, val, test)`` of
    about 49% / 21% / 30%.
    """
    n = len(ds)
    order = np.random.default_rng(spec.seed).permutation(n)
    if spec.two_stage:
        first, test = _cut_sizes(n, spec.fractions)
        train, val = _cut_sizes(first, spec.fractions)
        bounds = [train, train + val, train + val + test]
    else:
        bounds = list(np.cumsum(_cut_sizes(n, spec.fractions)))
    parts, start = [], 0
    for stop in bounds:
        parts.append(ds.subset(order[start:stop]))
        start = stop
    return tuple(parts)
