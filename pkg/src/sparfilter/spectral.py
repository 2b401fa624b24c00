"""Spectra, spectral distances and Marchenko-Pastur support bounds."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from .covariance import Kind, SymMatrix, _frozen
from .errors import DecompositionFailure, InvalidBand, InvalidInput, LengthMismatch


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues sorted in descending order."""

    values: np.ndarray
    source_kind: Kind = "covariance"

    def __post_init__(self):
        v = _frozen(self.values)
        if v.ndim != 1:
            raise InvalidInput("spectrum must be a vector")
        if not np.all(np.isfinite(v)):
            raise InvalidInput("spectrum has non-finite values")
        if np.any(np.diff(v) > 0):
            raise InvalidInput("spectrum must be sorted descending")
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class DistanceSpec:
    """Which distance to use between two spectra and over which eigenmodes.

    ``band`` holds 1-based inclusive indices ``(p_l, p_h)`` into the
    descending spectra; ``None`` means the full spectrum.
    """

    metric: Literal["minkowski", "linf"] = "minkowski"
    kappa: float = 2.0
    band: Optional[tuple[int, int]] = None

    def __post_init__(self):
        if self.metric not in ("minkowski", "linf"):
            raise InvalidInput(f"unknown metric {self.metric!r}")
        if self.metric == "minkowski" and not self.kappa >= 1:
            raise InvalidInput(f"kappa must be >= 1, got {self.kappa}")
        if self.band is not None:
            lo, hi = self.band
            if not 1 <= lo <= hi:
                raise InvalidBand(f"band must satisfy 1 <= p_l <= p_h, got {self.band}")
            object.__setattr__(self, "band", (int(lo), int(hi)))

    def with_band(self, band: Optional[tuple[int, int]]) -> "DistanceSpec":
        return DistanceSpec(self.metric, self.kappa, band)


@dataclass(frozen=True)
class MPSupport:
    c: float
    sigma2: float
    lower: float
    upper: float


def eigh_descending(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric eigendecomposition with eigenvalues (and vector columns) in descending order."""
    try:
        w, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise DecompositionFailure(str(exc)) from exc
    return w[::-1], v[:, ::-1]


def eigvals_descending(a: np.ndarray) -> np.ndarray:
    try:
        w = np.linalg.eigvalsh(a)
    except np.linalg.LinAlgError as exc:
        raise DecompositionFailure(str(exc)) from exc
    return w[::-1].copy()


def spectrum(m: SymMatrix) -> Spectrum:
    return Spectrum(eigvals_descending(m.entries), m.kind)


def _as_values(s) -> np.ndarray:
    return s.values if isinstance(s, Spectrum) else np.asarray(s, dtype=float)


def spectral_distance(a, b, spec: DistanceSpec = DistanceSpec()) -> float:
    """Minkowski (or L-infinity) distance between two descending spectra."""
    x, y = _as_values(a), _as_values(b)
    if x.shape != y.shape:
        raise LengthMismatch(f"spectra have lengths {x.shape[0]} and {y.shape[0]}")
    if spec.band is not None:
        lo, hi = spec.band
        if hi > x.shape[0]:
            raise InvalidBand(f"band {spec.band} exceeds spectrum length {x.shape[0]}")
        x, y = x[lo - 1 : hi], y[lo - 1 : hi]
    diff = np.abs(x - y)
    if diff.size == 0:
        return 0.0
    if spec.metric == "linf":
        return float(diff.max())
    k = spec.kappa
    if k == 2:
        return float(math.sqrt(np.dot(diff, diff)))
    if k == 1:
        return float(diff.sum())
    # scale first so large kappa does not overflow
    top = diff.max()
    if top == 0:
        return 0.0
    return float(top * np.sum((diff / top) ** k) ** (1.0 / k))


def mp_support(c: float, sigma2: float = 1.0) -> MPSupport:
    if not (c > 0 and sigma2 > 0):
        raise InvalidInput("c and sigma2 must be positive")
    root = math.sqrt(c)
    lower = sigma2 * (1 - root) ** 2 if c <= 1 else 0.0
    upper = sigma2 * (1 + root) ** 2
    return MPSupport(c, sigma2, lower, upper)


def mp_band(target: Spectrum, n: int, sigma2: float | None = None) -> tuple[int, int]:
    """Band ``(1, p_h)`` covering the eigenvalues above the Marchenko-Pastur upper edge.

    ``sigma2`` defaults to the mean eigenvalue (1 for a correlation matrix).
    Raises InvalidBand when no eigenvalue deviates from the bulk.
    """
    p = len(target)
    if sigma2 is None:
        sigma2 = float(np.mean(target.values))
    upper = mp_support(p / n, sigma2).upper
    p_h = int(np.count_nonzero(target.values > upper))
    if p_h < 1:
        raise InvalidBand(
            f"no eigenvalue exceeds the Marchenko-Pastur edge {upper:.6g}; use the full spectrum"
        )
    return (1, p_h)
