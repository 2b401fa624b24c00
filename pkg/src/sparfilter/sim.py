"""Seeded Gaussian sampling and Monte-Carlo studies of threshold filtering."""
from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Sequence

import numpy as np
from scipy.special import ndtri

from .covariance import (
    DataMatrix, SymMatrix, read_matrix_csv, sample_correlation,
    sample_covariance, to_correlation,
)
from .errors import InvalidInput, NotPSD
from .filtering import NO_COST, CostSpec, apply_threshold, run_filter
from .metrics import RecoveryMetrics, recovery_metrics
from .network import Network, build_network
from .spectral import DistanceSpec, eigh_descending, eigvals_descending

PSD_TOL = 1e-8
TABLE1_ETAS = (0.170, 0.230, 0.288, 0.499)
# mean (sd) over 100 replications, n = 50, p = 10
TABLE1_PUBLISHED = {
    0.170: {"p_t": (0.742, 0.09), "p_t_weighted": (0.917, 0.04), "p_f": (0.445, 0.07)},
    0.230: {"p_t": (0.698, 0.09), "p_t_weighted": (0.899, 0.05), "p_f": (0.351, 0.09)},
    0.288: {"p_t": (0.568, 0.07), "p_t_weighted": (0.827, 0.05), "p_f": (0.157, 0.10)},
    0.499: {"p_t": (0.454, 0.14), "p_t_weighted": (0.752, 0.08), "p_f": (0.072, 0.14)},
}
METRIC_NAMES = ("p_t", "p_t_weighted", "p_f")


def rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def standard_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Standard normal variates by inverting the normal CDF at uniforms in (0, 1)."""
    u = rng.random(shape) + 2.0**-54
    return ndtri(u)


def psd_factor(sigma: SymMatrix) -> np.ndarray:
    """``A`` with ``A A' = sigma`` from the eigendecomposition (valid for singular sigma)."""
    w, v = eigh_descending(sigma.entries)
    tol = PSD_TOL * max(1.0, float(np.max(np.abs(w)))) if w.size else PSD_TOL
    if w.size and w[-1] < -tol:
        raise NotPSD(f"smallest eigenvalue {w[-1]:.3g} is negative")
    # eigenvalues within rounding of zero are exact zeros of a singular sigma
    w = np.where(np.abs(w) <= tol, 0.0, w)
    return v * np.sqrt(w)


def sample_gaussian(sigma: SymMatrix, n: int, seed: int) -> DataMatrix:
    """``n`` independent draws from ``N(0, sigma)``; deterministic in ``seed``."""
    if n < 2:
        raise InvalidInput(f"n must be at least 2, got {n}")
    a = psd_factor(sigma)
    z = standard_normal(rng_for(seed), (n, sigma.p))
    return DataMatrix(z @ a.T, sigma.labels)


def load_fixture(name: str = "appendix-a") -> SymMatrix:
    """Bundled true correlation matrices. ``appendix-a`` is the reconstructed 10-node sparse example."""
    files = {"appendix-a": "appendix_a_sigma.csv"}
    if name not in files:
        raise InvalidInput(f"unknown fixture {name!r}; choose from {sorted(files)}")
    ref = resources.files("sparfilter") / "data" / files[name]
    with resources.as_file(ref) as path:
        m = read_matrix_csv(path, "covariance")
    psd_factor(m)
    return to_correlation(m)


def true_network(sigma: SymMatrix) -> Network:
    return build_network(sigma)


@dataclass(frozen=True)
class StudyConfig:
    sigma: SymMatrix
    n: int = 50
    replications: int = 100
    seed: int = 0
    thresholds: tuple[float, ...] = TABLE1_ETAS
    dspec: DistanceSpec = field(default_factory=DistanceSpec)
    cspec: CostSpec = NO_COST

    def __post_init__(self):
        psd_factor(self.sigma)
        if self.n < 2:
            raise InvalidInput("n must be at least 2")
        if self.replications < 1:
            raise InvalidInput("replications must be positive")
        t = np.asarray(self.thresholds, dtype=float)
        if np.any(t < 0) or np.any(np.diff(t) <= 0):
            raise InvalidInput("thresholds must be non-negative and strictly increasing")
        object.__setattr__(self, "thresholds", tuple(float(x) for x in t))


@dataclass(frozen=True)
class MetricSummary:
    eta: float
    mean: dict[str, float]
    sd: dict[str, float]


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("SPARFILTER_THREADS", "1")))
    except ValueError:
        return 1


def _replicate(job: Callable[[int], object], count: int) -> list:
    # results come back in replication order whatever the scheduling
    threads = _threads()
    if threads > 1 and count > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(job, range(count)))
    return [job(r) for r in range(count)]


def _summarize(eta: float, rows: Sequence[RecoveryMetrics]) -> MetricSummary:
    mean, sd = {}, {}
    for name in METRIC_NAMES:
        vals = np.array([getattr(r, name) for r in rows])
        mean[name] = float(vals.mean())
        sd[name] = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
    return MetricSummary(eta, mean, sd)


def threshold_metrics(config: StudyConfig) -> list[list[RecoveryMetrics]]:
    """Per replication, recovery metrics of the thresholded sample correlation at each threshold."""
    truth = true_network(config.sigma)
    weights = to_correlation(config.sigma)

    def job(r: int) -> list[RecoveryMetrics]:
        d = sample_gaussian(config.sigma, config.n, config.seed + r)
        s = sample_correlation(d)
        return [
            recovery_metrics(truth, build_network(apply_threshold(s, eta)), weights, eta)
            for eta in config.thresholds
        ]

    return _replicate(job, config.replications)


def replicate_table1(config: StudyConfig) -> list[MetricSummary]:
    per_rep = threshold_metrics(config)
    return [
        _summarize(eta, [rep[k] for rep in per_rep]) for k, eta in enumerate(config.thresholds)
    ]


@dataclass(frozen=True)
class FilterReplication:
    eta_star: float
    y_star: int
    eta_tilde: float
    y_tilde: int
    star: RecoveryMetrics
    tilde: RecoveryMetrics


def replicate_filter(config: StudyConfig, **run_options) -> list[FilterReplication]:
    """Run the full filter on each replication and score both filtered networks against the truth."""
    truth = true_network(config.sigma)
    weights = to_correlation(config.sigma)

    def job(r: int) -> FilterReplication:
        d = sample_gaussian(config.sigma, config.n, config.seed + r)
        res = run_filter(d, config.dspec, config.cspec, seed=config.seed + r, **run_options)
        return FilterReplication(
            res.eta_star,
            res.y_star,
            res.eta_tilde,
            res.y_tilde,
            recovery_metrics(truth, build_network(res.matrix_star), weights, res.eta_star),
            recovery_metrics(truth, build_network(res.matrix_tilde), weights, res.eta_tilde),
        )

    return _replicate(job, config.replications)


@dataclass(frozen=True)
class SpectrumDeviation:
    ratio: float
    n: int
    eigenvalues: np.ndarray
    max_deviation: float


def spectrum_deviation_study(p: int, ratios: Sequence[float], seed: int) -> list[SpectrumDeviation]:
    """Sample eigenvalues of ``N(0, I_p)`` data at ``n = round(p / ratio)`` for each ratio."""
    if p < 1:
        raise InvalidInput("p must be positive")
    identity = SymMatrix(np.eye(p), "covariance")
    out = []
    for k, ratio in enumerate(ratios):
        if not ratio > 0:
            raise InvalidInput(f"ratio must be positive, got {ratio}")
        n = int(round(p / ratio))
        if n < 2:
            raise InvalidInput(f"ratio {ratio} gives n = {n} < 2")
        rng = np.random.Generator(np.random.PCG64([seed, k]))
        x = standard_normal(rng, (n, p))
        d = DataMatrix(x, identity.labels)
        lam = eigvals_descending(sample_covariance(d).entries)
        out.append(SpectrumDeviation(float(ratio), n, lam, float(np.max(np.abs(lam - 1.0)))))
    return out


def write_table1_csv(rows: Sequence[MetricSummary], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    header = ["eta"]
    for name in METRIC_NAMES:
        header += [f"{name}_mean", f"{name}_sd"]
    w.writerow(header)
    for r in rows:
        line = [repr(r.eta)]
        for name in METRIC_NAMES:
            line += [repr(r.mean[name]), repr(r.sd[name])]
        w.writerow(line)


def synthetic_prices(
    n_stocks: int = 50,
    n_days: int = 70,
    n_sectors: int = 5,
    seed: int = 2015,
) -> DataMatrix:
    """Daily closing prices from a market + sector factor model of log returns, rounded to cents."""
    rng = rng_for(seed)
    sector = np.arange(n_stocks) % n_sectors
    beta_m = 0.6 + 0.8 * rng.random(n_stocks)
    beta_s = 0.4 + 0.8 * rng.random(n_stocks)
    steps = n_days - 1
    market = 0.010 * standard_normal(rng, steps)
    sectors = 0.008 * standard_normal(rng, (steps, n_sectors))
    idio = 0.012 * standard_normal(rng, (steps, n_stocks))
    r = 0.0003 + market[:, None] * beta_m + sectors[:, sector] * beta_s + idio
    start = 20.0 + 180.0 * rng.random(n_stocks)
    logp = np.vstack([np.log(start), np.log(start) + np.cumsum(r, axis=0)])
    prices = np.round(np.exp(logp), 2)
    labels = tuple(f"S{k + 1:02d}" for k in range(n_stocks))
    return DataMatrix(prices, labels)
