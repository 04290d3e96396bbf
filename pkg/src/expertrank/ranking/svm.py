"""Linear max-margin rankers with a scikit-learn estimator interface.

``PairwiseRankSVM`` minimizes the pairwise hinge objective
``1/2 ||w||^2 + C * sum xi_uv`` over within-query pairs with ``y_u > y_v``.
``ListwiseMAPSVM`` optimizes the structured AP-loss objective
``1/2 ||w||^2 + C/n * sum xi_q`` by cutting planes over rankings.

Both take ``fit(X, y, qid)`` and score with ``decision_function``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_consistent_length, check_is_fitted

from ._qp import BlockDual, hinge_objective, solve_pairwise
from .measures import average_precision
from .structured import find_most_violated, ideal_ranking, joint_feature_map

__all__ = [
    "ListwiseMAPSVM",
    "PairwiseRankSVM",
    "RankingModel",
    "load_model",
    "pairwise_differences",
    "rank",
    "save_model",
    "score",
]

PAIRWISE = "pairwise"
LISTWISE = "listwise"


@dataclass
class RankingModel:
    weights: np.ndarray
    c_param: float
    kind: str
    training_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if self.c_param <= 0:
            raise ValueError("C must be positive")
        if self.kind not in (PAIRWISE, LISTWISE):
            raise ValueError(f"unknown model kind {self.kind!r}")

    @property
    def n_features(self):
        return len(self.weights)

    def __eq__(self, other):
        if not isinstance(other, RankingModel):
            return NotImplemented
        return (self.kind == other.kind and self.c_param == other.c_param
                and np.array_equal(self.weights, other.weights)
                and self.training_meta == other.training_meta)


def score(model, vector):
    """w . x for a single feature vector."""
    x = np.asarray(vector, dtype=float)
    if x.shape != (model.n_features,):
        raise ValueError(f"dimension mismatch: model has {model.n_features} features, "
                         f"vector has {x.size}")
    return float(model.weights @ x)


def rank(model, pool):
    """Author ids of ``pool`` by descending score, ties by ascending author id.

    ``pool`` is any iterable of objects with ``author_id`` and ``values``.
    """
    scored = [(-score(model, v.values), v.author_id) for v in pool]
    return [aid for _, aid in sorted(scored)]


def _fmt(x):
    return repr(float(x))


def save_model(model, path):
    meta = " ".join(f"{k}={_meta_value(v)}" for k, v in sorted(model.training_meta.items()))
    lines = [model.kind, _fmt(model.c_param),
             " ".join(_fmt(w) for w in model.weights), meta]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _meta_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return _fmt(v)
    return str(v)


def _parse_meta_value(s):
    if s in ("true", "false"):
        return s == "true"
    try:
        return int(s)
    except ValueError:
        return float(s)


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    if len(lines) < 4:
        raise ValueError(f"{path}: model file needs 4 lines")
    kind, c_line, w_line, meta_line = lines[:4]
    meta = {}
    for item in meta_line.split():
        key, _, value = item.partition("=")
        meta[key] = _parse_meta_value(value)
    weights = np.array([float(x) for x in w_line.split()])
    return RankingModel(weights=weights, c_param=float(c_line), kind=kind.strip(),
                        training_meta=meta)


def _check_ranking_data(X, y, qid):
    X = check_array(X, dtype=float)
    y = np.asarray(y)
    qid = np.asarray(qid)
    check_consistent_length(X, y, qid)
    return X, y, qid


def _groups(qid):
    # first-appearance order keeps training deterministic in input order
    _, first = np.unique(qid, return_index=True)
    for q in qid[np.sort(first)]:
        yield q, np.flatnonzero(qid == q)


def pairwise_differences(X, y, qid):
    """Rows ``x_u - x_v`` for all within-query pairs with ``y_u > y_v``."""
    X, y, qid = _check_ranking_data(X, y, qid)
    diffs = []
    for _, idx in _groups(qid):
        yy = y[idx]
        hi, lo = np.nonzero(yy[:, None] > yy[None, :])
        if len(hi):
            diffs.append(X[idx[hi]] - X[idx[lo]])
    if not diffs:
        return np.zeros((0, X.shape[1]))
    return np.vstack(diffs)


class _LinearRanker(BaseEstimator):
    _kind = None

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.coef_.shape[0]:
            raise ValueError(f"X has {X.shape[1]} features, model expects {self.coef_.shape[0]}")
        return X @ self.coef_

    def predict(self, X):
        return self.decision_function(X)

    def score(self, X, y, qid):
        """Mean average precision of the induced per-query rankings."""
        X, y, qid = _check_ranking_data(X, y, qid)
        s = self.decision_function(X)
        aps = []
        for _, idx in _groups(qid):
            if not (y[idx] > 0).any():
                continue
            order = idx[np.lexsort((idx, -s[idx]))]
            aps.append(average_precision(y[order]))
        return float(np.mean(aps))

    def to_model(self):
        check_is_fitted(self, "coef_")
        return RankingModel(weights=self.coef_.copy(), c_param=float(self.C), kind=self._kind,
                            training_meta=dict(self.training_meta_))


class PairwiseRankSVM(_LinearRanker):
    """Pairwise hinge-loss ranking SVM.

    Parameters
    ----------
    C : float
        Weight of the summed pair slacks.
    tol : float
        Relative duality gap at which the dual solver stops.
    max_iter : int
        Iteration cap of the interior-point dual solver.
    """

    _kind = PAIRWISE

    def __init__(self, C=1.0, tol=1e-11, max_iter=100):
        self.C = C
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y, qid):
        if self.C <= 0:
            raise ValueError("C must be positive")
        diffs = pairwise_differences(X, y, qid)
        if not len(diffs):
            raise ValueError("no within-query pairs with differing relevance")
        w, info = solve_pairwise(diffs, self.C, self.tol, self.max_iter)
        self.coef_ = w
        self.n_features_in_ = diffs.shape[1]
        self.objective_ = hinge_objective(w, diffs, self.C)
        self.n_iter_ = info["iterations"]
        self.converged_ = info["converged"]
        self.training_meta_ = {"iterations": self.n_iter_, "objective": self.objective_,
                               "converged": self.converged_, "pairs": len(diffs)}
        return self


class ListwiseMAPSVM(_LinearRanker):
    """Structured SVM trained with 1 - AP as the ranking loss.

    Cutting-plane training with one slack per query: each round finds the
    most violated ranking for every query, adds those violated by more than
    ``epsilon`` to the working set, and re-solves the restricted dual.

    After ``fit``, ``objective_trace_`` holds the best full objective seen
    up to each round (non-increasing) and ``lower_bound_trace_`` the
    restricted-problem optimum after each round (non-decreasing).
    """

    _kind = LISTWISE

    def __init__(self, C=1.0, epsilon=1e-3, max_iter=200, tol=1e-10):
        self.C = C
        self.epsilon = epsilon
        self.max_iter = max_iter
        self.tol = tol

    def fit(self, X, y, qid):
        if self.C <= 0:
            raise ValueError("C must be positive")
        X, y, qid = _check_ranking_data(X, y, qid)
        queries = []
        for _, idx in _groups(qid):
            labels = (y[idx] > 0).astype(int)
            if labels.min() == labels.max():
                continue
            Xq = X[idx]
            queries.append((Xq, labels, joint_feature_map(Xq, labels, ideal_ranking(labels))))
        if not queries:
            raise ValueError("no query has both relevant and non-relevant items")

        n = len(queries)
        dual = BlockDual(n, X.shape[1], self.C / n)
        w = np.zeros(X.shape[1])
        best_w, best_obj = w.copy(), np.inf
        objective_trace, lower_trace = [], []
        converged = False
        it = 0
        while True:
            cuts = [self._most_violated(Xq, labels, psi_true, w)
                    for Xq, labels, psi_true in queries]
            full = 0.5 * float(w @ w) + self.C / n * sum(max(h, 0.0) for _, _, h in cuts)
            if full < best_obj:
                best_obj, best_w = full, w.copy()
            objective_trace.append(best_obj)
            if it >= self.max_iter:
                break
            added = 0
            for q, (g, loss, h) in enumerate(cuts):
                if h > dual.slack(q, w) + self.epsilon:
                    dual.add(q, g, loss)
                    added += 1
            if not added:
                converged = True
                break
            it += 1
            dual.solve(tol=self.tol)
            w = dual.w.copy()
            lower_trace.append(dual.primal())

        self.coef_ = best_w
        self.n_features_in_ = X.shape[1]
        self.objective_ = best_obj
        self.n_iter_ = it
        self.converged_ = converged
        self.objective_trace_ = objective_trace
        self.lower_bound_trace_ = lower_trace
        self.training_meta_ = {"iterations": it, "objective": best_obj,
                               "converged": converged,
                               "constraints": sum(len(d) for d in dual.delta)}
        return self

    @staticmethod
    def _most_violated(Xq, labels, psi_true, w):
        ranking = find_most_violated(Xq, labels, w)
        loss = 1.0 - average_precision(labels[ranking])
        g = psi_true - joint_feature_map(Xq, labels, ranking)
        return g, loss, loss - float(g @ w)
