"""Observation matrices, sample covariance/correlation and return transforms."""
from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Literal, Sequence

import numpy as np

from .errors import (
    InvalidInput,
    NonFiniteValue,
    NonPositivePrice,
    NotSymmetric,
    TooFewRows,
    ZeroVarianceNode,
)

Kind = Literal["covariance", "correlation"]

SYMMETRY_RTOL = 1e-10


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


def _default_labels(p: int) -> tuple[str, ...]:
    return tuple(f"V{j + 1}" for j in range(p))


@dataclass(frozen=True)
class DataMatrix:
    """``n x p`` observations (rows) of ``p`` labelled variables (columns)."""

    values: np.ndarray
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        values = _frozen(self.values)
        if values.ndim != 2:
            raise InvalidInput(f"data must be 2-dimensional, got shape {values.shape}")
        labels = tuple(str(x) for x in self.labels) or _default_labels(values.shape[1])
        if len(labels) != values.shape[1]:
            raise InvalidInput(f"{len(labels)} labels for {values.shape[1]} columns")
        if len(set(labels)) != len(labels):
            raise InvalidInput("labels must be unique")
        if values.shape[0] < 2:
            raise TooFewRows(f"need at least 2 observations, got {values.shape[0]}")
        if not np.all(np.isfinite(values)):
            r, c = np.argwhere(~np.isfinite(values))[0]
            raise NonFiniteValue(f"non-finite value at row {r}, column {c}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def take_rows(self, rows) -> "DataMatrix":
        return DataMatrix(self.values[np.asarray(rows)], self.labels)


@dataclass(frozen=True)
class SymMatrix:
    """Symmetric ``p x p`` matrix tagged as a covariance or a correlation matrix."""

    entries: np.ndarray
    kind: Kind = "covariance"
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        a = _frozen(self.entries)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidInput(f"matrix must be square, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise NonFiniteValue("matrix has non-finite entries")
        scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
        if np.max(np.abs(a - a.T), initial=0.0) > SYMMETRY_RTOL * scale:
            raise NotSymmetric("matrix is not symmetric")
        if self.kind not in ("covariance", "correlation"):
            raise InvalidInput(f"unknown matrix kind {self.kind!r}")
        diag = np.diag(a)
        if self.kind == "correlation":
            if np.any(diag != 1.0) or np.any(np.abs(a) > 1.0):
                raise InvalidInput("correlation matrix needs unit diagonal and entries in [-1, 1]")
        elif np.any(diag < 0):
            raise InvalidInput("covariance matrix has a negative diagonal entry")
        labels = tuple(str(x) for x in self.labels) or _default_labels(a.shape[0])
        if len(labels) != a.shape[0]:
            raise InvalidInput(f"{len(labels)} labels for a {a.shape[0]}x{a.shape[0]} matrix")
        object.__setattr__(self, "entries", a)
        object.__setattr__(self, "labels", labels)

    @property
    def p(self) -> int:
        return self.entries.shape[0]

    def replace(self, entries: np.ndarray) -> "SymMatrix":
        return SymMatrix(entries, self.kind, self.labels)


def mirror_upper(a: np.ndarray) -> np.ndarray:
    """Copy the upper triangle onto the lower one so the result is exactly symmetric."""
    upper = np.triu(a)
    return upper + np.triu(a, 1).T


def log_returns(prices: DataMatrix) -> DataMatrix:
    """Per-column log returns ``log P[t+1] - log P[t]``."""
    v = prices.values
    if v.shape[0] < 3:
        raise TooFewRows(f"need at least 3 price rows, got {v.shape[0]}")
    bad = np.argwhere(v <= 0)
    if bad.size:
        r, c = bad[0]
        raise NonPositivePrice(int(r), int(c), float(v[r, c]))
    logs = np.log(v)
    return DataMatrix(logs[1:] - logs[:-1], prices.labels)


def column_means(d: DataMatrix) -> np.ndarray:
    # correctly rounded sums, so each mean is independent of column order and layout
    return np.array([math.fsum(col) for col in d.values.T]) / d.n


def centered(d: DataMatrix) -> np.ndarray:
    return d.values - column_means(d)


def sample_covariance(d: DataMatrix) -> SymMatrix:
    """Unbiased (divisor ``n - 1``) sample covariance.

    The cross-product sum runs over observations in a fixed order for every
    column pair, so the result does not depend on BLAS threading or on the
    column order, and the lower triangle is a mirror of the upper one.
    """
    if d.n < 2:
        raise TooFewRows(f"need at least 2 observations, got {d.n}")
    x = centered(d)
    s = np.zeros((d.p, d.p))
    # elementwise accumulation in observation order: one running sum per pair
    for row in x:
        s += np.multiply.outer(row, row)
    s /= d.n - 1
    return SymMatrix(mirror_upper(s), "covariance", d.labels)


def to_correlation(s: SymMatrix) -> SymMatrix:
    if s.kind == "correlation":
        return s
    diag = np.diag(s.entries)
    zero = np.flatnonzero(diag <= 0)
    if zero.size:
        i = int(zero[0])
        raise ZeroVarianceNode(i, s.labels[i])
    sd = np.sqrt(diag)
    r = s.entries / np.outer(sd, sd)
    r = np.clip(mirror_upper(r), -1.0, 1.0)
    np.fill_diagonal(r, 1.0)
    return SymMatrix(r, "correlation", s.labels)


def standardize(d: DataMatrix) -> DataMatrix:
    """Demean and scale each column to unit sample standard deviation.

    The sample covariance of the result is the sample correlation of ``d``.
    """
    x = centered(d)
    sd = np.sqrt(np.einsum("ti,ti->i", x, x) / (d.n - 1))
    zero = np.flatnonzero(sd == 0)
    if zero.size:
        i = int(zero[0])
        raise ZeroVarianceNode(i, d.labels[i])
    return DataMatrix(x / sd, d.labels)


def sample_correlation(d: DataMatrix) -> SymMatrix:
    return to_correlation(sample_covariance(d))


def _parse_rows(rows: Iterable[Sequence[str]], source: str) -> DataMatrix:
    rows = iter(rows)
    try:
        header = next(rows)
    except StopIteration:
        raise InvalidInput(f"{source}: empty file") from None
    labels = [h.strip() for h in header]
    values = []
    for lineno, row in enumerate(rows, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(labels):
            raise InvalidInput(f"{source}:{lineno}: expected {len(labels)} fields, got {len(row)}")
        try:
            values.append([float(c) for c in row])
        except ValueError:
            raise InvalidInput(f"{source}:{lineno}: non-numeric or missing value") from None
    if not values:
        raise TooFewRows(f"{source}: no observations")
    return DataMatrix(np.array(values), tuple(labels))


def read_csv(path: str | os.PathLike) -> DataMatrix:
    """Read a CSV whose first row holds node labels and remaining rows numeric observations."""
    with open(path, newline="", encoding="utf-8") as fh:
        return _parse_rows(csv.reader(fh), os.fspath(path))


def parse_csv(text: str) -> DataMatrix:
    return _parse_rows(csv.reader(io.StringIO(text)), "<string>")


def read_matrix_csv(path: str | os.PathLike, kind: Kind = "covariance") -> SymMatrix:
    """Read a square matrix stored as a CSV with a label header row."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    labels = tuple(h.strip() for h in rows[0])
    try:
        entries = np.array([[float(c) for c in r] for r in rows[1:] if r])
    except ValueError:
        raise InvalidInput(f"{path}: non-numeric matrix entry") from None
    return SymMatrix(entries, kind, labels)


def write_matrix_csv(m: SymMatrix, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(m.labels)
    for row in m.entries:
        w.writerow([repr(float(x)) for x in row])
