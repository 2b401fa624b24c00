"""Sparsistent filtering of comovement networks.

Thresholds a sample covariance (or correlation) matrix at the level whose
spectrum is closest to a shrinkage estimator's, optionally trading that
distance against a cost on deleted edges.
"""
from .covariance import (
    DataMatrix,
    SymMatrix,
    log_returns,
    read_csv,
    sample_correlation,
    sample_covariance,
    to_correlation,
)
from .filtering import (
    CostSpec,
    FilterResult,
    SweepRecord,
    SweepTable,
    apply_threshold,
    cost,
    edges_deleted,
    maximal_filter,
    run_filter,
    sweep,
    tuned_filter,
)
from .metrics import RecoveryMetrics, recovery_metrics
from .network import Edge, Network, build_network, export, metric_weights
from .shrinkage import ShrinkageResult, ledoit_wolf, nercome, stein_rescale
from .spectral import DistanceSpec, MPSupport, Spectrum, mp_support, spectral_distance, spectrum

__version__ = "0.1.0"
