"""Edge-recovery diagnostics of a filtered network against a known true network."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .covariance import SymMatrix
from .errors import EmptyTruth, NodeSetMismatch
from .network import Network


@dataclass(frozen=True)
class RecoveryMetrics:
    p_t: float
    p_t_weighted: float
    p_f: float
    eta: float = float("nan")


def recovery_metrics(
    truth: Network,
    filtered: Network,
    true_weights: SymMatrix,
    eta: float = float("nan"),
) -> RecoveryMetrics:
    """Share of true edges kept (by count and by |true correlation|) and share of kept edges that are false.

    With no retained edges the false-positive share is 0.
    """
    if set(truth.nodes) != set(filtered.nodes):
        raise NodeSetMismatch("truth and filtered networks have different node sets")
    true_edges = truth.edge_set()
    if not true_edges:
        raise EmptyTruth("true network has no edges")
    kept = filtered.edge_set()
    hits = true_edges & kept

    pos = {v: i for i, v in enumerate(true_weights.labels)}
    w = np.abs(true_weights.entries)

    def weight(pair):
        a, b = pair
        return w[pos[a], pos[b]]

    p_t = len(hits) / len(true_edges)
    w_all = sum(weight(e) for e in true_edges)
    p_t_weighted = sum(weight(e) for e in hits) / w_all
    p_f = len(kept - true_edges) / len(kept) if kept else 0.0
    return RecoveryMetrics(float(p_t), float(p_t_weighted), float(p_f), eta)
