"""Ranking metrics computed from scratch.

Average precision uses the step-curve estimator: precision evaluated at the
rank of each positive, averaged over positives. Ties are broken by stable
input order, which is therefore part of the metric's contract.
"""

from __future__ import annotations

import numpy as np


def average_precision(scores, labels) -> float:
    """Area under the precision-recall step curve.

    Raises ``ValueError`` when there are no positives; a precision-recall
    curve is undefined there.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError("scores and labels must be equal-length 1D arrays")
    n_pos = int(labels.sum())
    if n_pos == 0:
        raise ValueError("average precision needs at least one positive label")
    order = np.argsort(-scores, kind="stable")
    ranked = labels[order].astype(np.float64)
    cumulative = np.cumsum(ranked)
    ranks = np.arange(1, len(ranked) + 1)
    precision_at = cumulative / ranks
    return float(precision_at[ranked == 1].mean())


def pr_curve(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    """Step-curve (recall, precision) points over every ranked prefix.

    Starts at (0, 1) by convention and ends at recall 1 once the full
    ranking is consumed.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    n_pos = int(labels.sum())
    if n_pos == 0:
        raise ValueError("precision-recall curve needs at least one positive label")
    order = np.argsort(-scores, kind="stable")
    ranked = labels[order].astype(np.float64)
    cumulative = np.cumsum(ranked)
    ranks = np.arange(1, len(ranked) + 1)
    recall = np.concatenate([[0.0], cumulative / n_pos])
    precision = np.concatenate([[1.0], cumulative / ranks])
    return recall, precision
