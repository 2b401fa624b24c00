"""Threshold sweep, maximal filtering and cost-tuned filtering of a covariance matrix."""
from __future__ import annotations

import csv
import dataclasses
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np

from .covariance import (
    DataMatrix,
    Kind,
    SymMatrix,
    sample_covariance,
    standardize,
    to_correlation,
)
from .errors import InsufficientDimensions, InvalidInput
from .shrinkage import ShrinkageResult, ledoit_wolf, nercome
from .spectral import (
    DistanceSpec,
    Spectrum,
    eigvals_descending,
    mp_band,
    spectral_distance,
    spectrum,
)


@dataclass(frozen=True)
class CostSpec:
    """Cost of deleting edges.

    ``power``: ``theta1 * y ** theta2`` on the number ``y`` of deleted edges.
    ``weight_ratio``: ``scale * W_removed / W_total`` with ``W`` the summed
    absolute off-diagonal weight.
    """

    form: Literal["power", "weight_ratio"] = "power"
    theta1: float = 0.0
    theta2: float = 2.0
    scale: float = 0.0

    def __post_init__(self):
        if self.form == "power":
            if not (self.theta1 >= 0 and self.theta2 > 1):
                raise InvalidInput("power cost needs theta1 >= 0 and theta2 > 1")
        elif self.form == "weight_ratio":
            if not self.scale >= 0:
                raise InvalidInput("weight_ratio cost needs scale >= 0")
        else:
            raise InvalidInput(f"unknown cost form {self.form!r}")

    @classmethod
    def power(cls, theta1: float, theta2: float) -> "CostSpec":
        return cls("power", theta1=theta1, theta2=theta2)

    @classmethod
    def weight_ratio(cls, scale: float) -> "CostSpec":
        return cls("weight_ratio", scale=scale)


NO_COST = CostSpec.power(0.0, 2.0)


@dataclass(frozen=True)
class SweepRecord:
    eta: float
    y: int
    distance: float
    cost: float
    objective: float


@dataclass(frozen=True)
class SweepTable:
    records: tuple[SweepRecord, ...]
    p: int

    @property
    def total_edges(self) -> int:
        return self.p * (self.p - 1) // 2

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    def __len__(self) -> int:
        return len(self.records)

    def to_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["eta", "y", "distance", "cost", "objective"])
        for r in self.records:
            w.writerow([repr(r.eta), r.y, repr(r.distance), repr(r.cost), repr(r.objective)])


@dataclass(frozen=True)
class FilterResult:
    eta_star: float
    eta_tilde: float
    y_star: int
    y_tilde: int
    matrix_star: SymMatrix
    matrix_tilde: SymMatrix
    table: SweepTable
    # context for reports
    matrix: Optional[SymMatrix] = None
    target: Optional[Spectrum] = None
    shrinkage: Optional[ShrinkageResult] = None
    dspec: DistanceSpec = field(default_factory=DistanceSpec)

    @property
    def record_star(self) -> SweepRecord:
        return _record_at(self.table, self.eta_star)

    @property
    def record_tilde(self) -> SweepRecord:
        return _record_at(self.table, self.eta_tilde)


def _record_at(table: SweepTable, eta: float) -> SweepRecord:
    for r in table.records:
        if r.eta == eta:
            return r
    raise KeyError(eta)


def _offdiag_upper(a: np.ndarray) -> np.ndarray:
    return a[np.triu_indices(a.shape[0], 1)]


def apply_threshold(m: SymMatrix, eta: float) -> SymMatrix:
    """Zero every off-diagonal entry with magnitude strictly below ``eta``."""
    if eta < 0:
        raise InvalidInput("eta must be non-negative")
    a = np.array(m.entries)
    mask = np.abs(a) < eta
    np.fill_diagonal(mask, False)
    a[mask] = 0.0
    return m.replace(a)


def edges_deleted(m: SymMatrix, eta: float) -> int:
    """Undirected edges removed by thresholding at ``eta`` (existing zeros are not counted)."""
    off = np.abs(_offdiag_upper(m.entries))
    return int(np.count_nonzero((off != 0) & (off < eta)))


def cost(y: int, w_removed: float, w_total: float, cspec: CostSpec) -> float:
    if cspec.form == "power":
        if y == 0 or cspec.theta1 == 0:
            return 0.0
        return cspec.theta1 * float(y) ** cspec.theta2
    if w_total <= 0:
        return 0.0
    return cspec.scale * (w_removed / w_total)


def candidate_thresholds(m: SymMatrix) -> np.ndarray:
    """0, midpoints between consecutive distinct nonzero magnitudes, and just above the largest."""
    mags = np.unique(np.abs(_offdiag_upper(m.entries)))
    mags = mags[mags > 0]
    if mags.size == 0:
        return np.array([0.0])
    mids = (mags[:-1] + mags[1:]) / 2.0
    top = np.nextafter(mags[-1], np.inf)
    return np.concatenate(([0.0], mids, [top]))


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("SPARFILTER_THREADS", "1")))
    except ValueError:
        return 1


def sweep(
    m: SymMatrix,
    target: Spectrum,
    dspec: DistanceSpec = DistanceSpec(),
    cspec: CostSpec = NO_COST,
) -> SweepTable:
    """Evaluate the spectral distance to ``target`` and the deletion cost at every candidate threshold."""
    if len(target) != m.p:
        raise InvalidInput(f"target spectrum has length {len(target)}, matrix is {m.p}x{m.p}")
    etas = candidate_thresholds(m)
    off = np.abs(_offdiag_upper(m.entries))
    present = off != 0
    w_total = float(off.sum())

    # thresholds are sorted, so deletions accumulate in magnitude order
    order = np.argsort(off, kind="stable")
    sorted_mags = off[order]
    iu = np.triu_indices(m.p, 1)

    def evaluate(eta: float) -> SweepRecord:
        a = np.array(m.entries)
        k = int(np.searchsorted(sorted_mags, eta, side="left"))
        idx = order[:k]
        a[iu[0][idx], iu[1][idx]] = 0.0
        a[iu[1][idx], iu[0][idx]] = 0.0
        dist = spectral_distance(eigvals_descending(a), target, dspec)
        removed = present[idx]
        y = int(np.count_nonzero(removed))
        c = cost(y, float(sorted_mags[:k].sum()), w_total, cspec)
        return SweepRecord(float(eta), y, dist, c, dist + c)

    threads = _threads()
    if threads > 1 and len(etas) > 1:
        with ThreadPoolExecutor(threads) as pool:
            records = tuple(pool.map(evaluate, etas))
    else:
        records = tuple(evaluate(e) for e in etas)
    return SweepTable(records, m.p)


def _argmin_first(values: np.ndarray) -> int:
    # records are in ascending eta, so the first minimum is the least filtering
    return int(np.flatnonzero(values == values.min())[0])


def maximal_filter(table: SweepTable) -> tuple[float, int]:
    i = _argmin_first(table.column("distance"))
    r = table.records[i]
    return r.eta, r.y


def tuned_filter(table: SweepTable) -> tuple[float, int]:
    i = _argmin_first(table.column("objective"))
    r = table.records[i]
    return r.eta, r.y


def filter_matrix(
    m: SymMatrix,
    target: Spectrum,
    dspec: DistanceSpec = DistanceSpec(),
    cspec: CostSpec = NO_COST,
) -> FilterResult:
    table = sweep(m, target, dspec, cspec)
    eta_star, y_star = maximal_filter(table)
    eta_tilde, y_tilde = tuned_filter(table)
    return FilterResult(
        eta_star=eta_star,
        eta_tilde=eta_tilde,
        y_star=y_star,
        y_tilde=y_tilde,
        matrix_star=apply_threshold(m, eta_star),
        matrix_tilde=apply_threshold(m, eta_tilde),
        table=table,
        matrix=m,
        target=target,
        dspec=dspec,
    )


def run_filter(
    d: DataMatrix,
    dspec: DistanceSpec = DistanceSpec(),
    cspec: CostSpec = NO_COST,
    *,
    scale: Kind = "correlation",
    target: Literal["ledoit-wolf", "nercome"] = "ledoit-wolf",
    band: Literal["full", "mp"] | tuple[int, int] | None = None,
    seed: int = 0,
    nercome_fraction: float = 0.5,
    nercome_splits: int = 50,
) -> FilterResult:
    """End-to-end pipeline: covariance, shrinkage target, sweep, maximal and tuned filters.

    On the correlation scale the data are standardized first, so the
    shrinkage target is built from the sample correlation matrix. ``band``
    overrides ``dspec.band``; ``"mp"`` keeps only the eigenmodes of the
    target above the Marchenko-Pastur edge.
    """
    if d.p < 2:
        raise InsufficientDimensions(f"need at least 2 variables to form a network, got {d.p}")
    if scale == "correlation":
        work = standardize(d)
        m = to_correlation(sample_covariance(d))
    elif scale == "covariance":
        work = d
        m = sample_covariance(d)
    else:
        raise InvalidInput(f"unknown scale {scale!r}")

    lw = ledoit_wolf(work)
    if target == "ledoit-wolf":
        target_spec = spectrum(lw.estimator)
    elif target == "nercome":
        target_spec = spectrum(nercome(work, nercome_fraction, nercome_splits, seed))
    else:
        raise InvalidInput(f"unknown target {target!r}")

    if band == "mp":
        dspec = dspec.with_band(mp_band(target_spec, d.n))
    elif band == "full":
        dspec = dspec.with_band(None)
    elif band is not None:
        dspec = dspec.with_band(tuple(band))

    result = filter_matrix(m, Spectrum(target_spec.values, m.kind), dspec, cspec)
    return dataclasses.replace(result, shrinkage=lw)

