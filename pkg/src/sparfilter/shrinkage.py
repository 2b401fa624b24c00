"""Shrinkage targets: one-parameter Ledoit-Wolf, NERCOME and generic eigenvalue rescaling."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .covariance import DataMatrix, SymMatrix, centered, mirror_upper, sample_covariance
from .errors import DegenerateData, SplitTooSmall
from .spectral import eigh_descending


@dataclass(frozen=True)
class ShrinkageResult:
    """``estimator = alpha1 * I + alpha2 * S``."""

    estimator: SymMatrix
    alpha1: float
    alpha2: float
    mu: float
    pn_ratio: float


def _lw_weights(x: np.ndarray, s: np.ndarray) -> tuple[float, float, float]:
    n, p = x.shape
    m = np.trace(s) / p
    dev = s - m * np.eye(p)
    d2 = float(np.sum(dev * dev)) / p
    if d2 == 0.0:
        return float(m), 0.0, float(m)
    # sum_t ||x_t x_t' - S||^2 expanded so no p x p outer product is built per row
    row_sq = np.einsum("ti,ti->t", x, x)
    quad = np.einsum("ti,ij,tj->t", x, s, x)
    b_sum = float(np.sum(row_sq**2 - 2.0 * quad) + n * np.sum(s * s)) / p
    b2 = min(d2, max(b_sum, 0.0) / n**2)
    a2 = d2 - b2
    return b2 / d2 * float(m), a2 / d2, float(m)


def ledoit_wolf(d: DataMatrix) -> ShrinkageResult:
    """Linear shrinkage of the sample covariance towards a scaled identity.

    Weights are the plug-in estimates minimizing ``tr(S_LW - Sigma)^2 / p``;
    norms are Frobenius norms scaled by ``1/p``.
    """
    s = sample_covariance(d)
    x = centered(d)
    alpha1, alpha2, mu = _lw_weights(x, s.entries)
    if mu == 0.0:
        raise DegenerateData("all observations are identical; sample covariance is zero")
    est = alpha2 * s.entries
    est[np.diag_indices_from(est)] += alpha1
    return ShrinkageResult(
        estimator=SymMatrix(mirror_upper(est), "covariance", d.labels),
        alpha1=alpha1,
        alpha2=alpha2,
        mu=mu,
        pn_ratio=d.p / d.n,
    )


def stein_rescale(s: SymMatrix, psi: Callable[[np.ndarray], np.ndarray]) -> SymMatrix:
    """Replace each eigenvalue by ``psi(eigenvalue)`` keeping the eigenvectors.

    ``psi`` is applied elementwise; scalar-valued callables are vectorized.
    """
    w, v = eigh_descending(s.entries)
    try:
        new = np.asarray(psi(w), dtype=float)
        if new.shape != w.shape:
            raise TypeError
    except TypeError:
        new = np.array([float(psi(x)) for x in w])
    out = (v * new) @ v.T
    return SymMatrix(mirror_upper(out), "covariance", s.labels)


def nercome(
    d: DataMatrix,
    split_fraction: float = 0.5,
    n_splits: int = 50,
    seed: int = 0,
) -> SymMatrix:
    """Average of split-sample estimators.

    Each split takes eigenvectors from the covariance of a random subset of
    rows and eigenvalues from quadratic forms on the held-out rows. Split ``k``
    uses its own generator seeded with ``(seed, k)``.
    """
    if not 0 < split_fraction < 1:
        raise SplitTooSmall(f"split_fraction must lie in (0, 1), got {split_fraction}")
    if n_splits < 1:
        raise SplitTooSmall("n_splits must be positive")
    n1 = int(round(split_fraction * d.n))
    if n1 < 2 or d.n - n1 < 2:
        raise SplitTooSmall(f"split sizes {n1} and {d.n - n1} must both be at least 2")
    total = np.zeros((d.p, d.p))
    for k in range(n_splits):
        rng = np.random.Generator(np.random.PCG64([seed, k]))
        perm = rng.permutation(d.n)
        s1 = sample_covariance(d.take_rows(np.sort(perm[:n1]))).entries
        s2 = sample_covariance(d.take_rows(np.sort(perm[n1:]))).entries
        _, p1 = eigh_descending(s1)
        lam = np.einsum("ij,ik,kj->j", p1, s2, p1)
        total += (p1 * lam) @ p1.T
    return SymMatrix(mirror_upper(total / n_splits), "covariance", d.labels)
