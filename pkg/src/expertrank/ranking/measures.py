"""Ranked-list measures over binary relevance labels (top of the list first)."""

from __future__ import annotations

import numpy as np

__all__ = ["average_precision", "mean_average_precision", "precision_at_k"]


def precision_at_k(ranked_labels, k):
    """r(k) / k; positions past the end of the list count as non-relevant."""
    if k < 1:
        raise ValueError("k must be >= 1")
    labels = np.asarray(ranked_labels)[:k]
    return float(np.count_nonzero(labels > 0)) / k


def average_precision(ranked_labels):
    labels = np.asarray(ranked_labels) > 0
    n_rel = int(labels.sum())
    if n_rel == 0:
        raise ValueError("average precision is undefined without relevant items")
    hits = np.cumsum(labels)
    ranks = np.arange(1, len(labels) + 1)
    return float((hits / ranks)[labels].sum() / n_rel)


def mean_average_precision(ranked_label_lists):
    aps = [average_precision(r) for r in ranked_label_lists]
    if not aps:
        raise ValueError("no queries")
    return float(np.mean(aps))
