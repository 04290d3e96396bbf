"""Joint feature map and loss-augmented inference for the AP-optimizing ranker.

A labeling of a query's candidates is represented by a ranking: an array of
row indices, best first.  Its joint feature map is

    Psi(y, x) = 1 / (R * N) * sum_{u relevant, v not} y_uv (x_u - x_v)

with ``y_uv = +1`` when ``u`` is ranked above ``v`` and ``-1`` otherwise.
"""

from __future__ import annotations

import numpy as np

from .measures import average_precision

__all__ = ["find_most_violated", "ideal_ranking", "joint_feature_map", "violation"]


def _split(labels):
    labels = np.asarray(labels)
    rel = np.flatnonzero(labels > 0)
    non = np.flatnonzero(labels <= 0)
    if not len(rel) or not len(non):
        raise ValueError("pool needs at least one relevant and one non-relevant item")
    return rel, non


def ideal_ranking(labels):
    """All relevant rows first, each group in index order."""
    rel, non = _split(labels)
    return np.concatenate([rel, non])


def joint_feature_map(X, labels, ranking):
    X = np.asarray(X, dtype=float)
    rel, non = _split(labels)
    pos = np.empty(len(ranking), dtype=np.int64)
    pos[np.asarray(ranking)] = np.arange(len(ranking))
    sign = np.where(pos[rel][:, None] < pos[non][None, :], 1.0, -1.0)
    # sum_uv s_uv (x_u - x_v) = sum_u (row sum) x_u - sum_v (col sum) x_v
    psi = sign.sum(axis=1) @ X[rel] - sign.sum(axis=0) @ X[non]
    return psi / (len(rel) * len(non))


def violation(X, labels, ranking, w):
    """1 - AP(ranking) + w . Psi(ranking)."""
    ranked = np.asarray(labels)[np.asarray(ranking)]
    return 1.0 - average_precision(ranked) + float(np.dot(w, joint_feature_map(X, labels, ranking)))


def find_most_violated(X, labels, w):
    """Ranking maximizing ``1 - AP + w . Psi`` for one query.

    Relevant and non-relevant items are each kept in descending score order;
    the search is over how the two sorted lists interleave.  Placing the
    j-th non-relevant item above the relevant items ``i+1..R`` changes the
    objective by a term that depends only on ``(i, j)``, and the placements
    must be non-decreasing in ``j``, so an O(N * R) dynamic program over
    monotone placements finds the exact maximizer.
    """
    X = np.asarray(X, dtype=float)
    rel, non = _split(labels)
    scores = X @ np.asarray(w, dtype=float)
    rel = rel[np.lexsort((rel, -scores[rel]))]
    non = non[np.lexsort((non, -scores[non]))]
    R, N = len(rel), len(non)
    s_rel = scores[rel]
    s_non = scores[non]

    k = np.arange(1, R + 1)[None, :]
    j = np.arange(1, N + 1)[:, None]
    # gain[j, k]: moving non-relevant j above relevant k
    gain = (k / (k + j - 1) - k / (k + j)) / R - 2.0 * (s_rel[None, :] - s_non[:, None]) / (R * N)
    # place[j, i] = sum_{k > i} gain[j, k], i = 0..R
    place = np.zeros((N, R + 1))
    place[:, :R] = np.cumsum(gain[:, ::-1], axis=1)[:, ::-1]

    value = place[0].copy()
    back = np.zeros((N, R + 1), dtype=np.int64)
    for jj in range(1, N):
        best_idx = np.zeros(R + 1, dtype=np.int64)
        run = 0
        for i in range(1, R + 1):
            if value[i] > value[run]:
                run = i
            best_idx[i] = run
        back[jj] = best_idx
        value = place[jj] + value[best_idx]

    cut = np.empty(N, dtype=np.int64)
    cut[-1] = int(np.argmax(value))
    for jj in range(N - 1, 0, -1):
        cut[jj - 1] = back[jj, cut[jj]]

    ranking = []
    nxt = 0
    for i in range(R + 1):
        while nxt < N and cut[nxt] == i:
            ranking.append(non[nxt])
            nxt += 1
        if i < R:
            ranking.append(rel[i])
    return np.asarray(ranking, dtype=np.int64)
