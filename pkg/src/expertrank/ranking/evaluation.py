"""Query-level cross-validation and evaluation reports."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import clone

from .measures import average_precision, precision_at_k
from .svm import LISTWISE, PAIRWISE, ListwiseMAPSVM, PairwiseRankSVM

__all__ = [
    "CUTOFFS",
    "DEFAULT_C_GRID",
    "EvalReport",
    "QueryResult",
    "cross_validate",
    "evaluate_pools",
    "make_ranker",
    "ranked_labels",
    "write_report",
]

CUTOFFS = (5, 10, 15, 20)
DEFAULT_C_GRID = (0.01, 0.1, 1.0, 10.0)


def make_ranker(kind, **params):
    if kind == PAIRWISE:
        return PairwiseRankSVM(**params)
    if kind == LISTWISE:
        return ListwiseMAPSVM(**params)
    raise ValueError(f"unknown trainer {kind!r}")


@dataclass(frozen=True)
class QueryResult:
    fold: int
    query_id: str
    ap: float
    precision: tuple[float, ...]


@dataclass
class FoldResult:
    fold: int
    C: float
    map: float
    precision: tuple[float, ...]


@dataclass
class EvalReport:
    per_query: list[QueryResult] = field(default_factory=list)
    folds: list[FoldResult] = field(default_factory=list)

    @property
    def map(self):
        """Mean over folds of each fold's MAP."""
        return float(np.mean([f.map for f in self.folds]))

    @property
    def precision(self):
        """Mean over folds of P@k, keyed by k."""
        arr = np.array([f.precision for f in self.folds])
        return dict(zip(CUTOFFS, arr.mean(axis=0).tolist()))


def ranked_labels(scores, labels, author_ids):
    """Labels reordered by descending score, ties by ascending author id."""
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], author_ids[i]))
    return np.asarray(labels)[order]


def _fit(estimator, pools):
    from ..features import pools_to_arrays

    X, y, qid = pools_to_arrays(pools)
    return estimator.fit(X, y, qid)


def evaluate_pools(estimator, pools, fold=0):
    results = []
    for pool in pools:
        s = estimator.decision_function(pool.X)
        ranked = ranked_labels(s, pool.labels, pool.author_ids)
        results.append(QueryResult(
            fold=fold, query_id=pool.query_id, ap=average_precision(ranked),
            precision=tuple(precision_at_k(ranked, k) for k in CUTOFFS)))
    return results


def _split(query_ids, folds, seed):
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(query_ids))
    return [sorted(query_ids[i] for i in part) for part in np.array_split(perm, folds)]


def select_C(estimator, pools, c_grid, seed, inner_folds=3):
    """Pick C by query-level cross-validation on ``pools`` alone; ties go to the smaller C."""
    grid = sorted(c_grid)
    if len(grid) == 1 or len(pools) < 2:
        return grid[0]
    k = min(inner_folds, len(pools))
    by_id = {p.query_id: p for p in pools}
    parts = _split(sorted(by_id), k, seed)
    best_c, best = grid[0], -np.inf
    for c in grid:
        aps = []
        for part in parts:
            held = set(part)
            train = [by_id[q] for q in sorted(by_id) if q not in held]
            model = _fit(clone(estimator).set_params(C=c), train)
            aps.extend(r.ap for r in evaluate_pools(model, [by_id[q] for q in part]))
        score = float(np.mean(aps))
        if score > best + 1e-12:
            best_c, best = c, score
    return best_c


def cross_validate(pools, folds=4, trainer=PAIRWISE, c_grid=DEFAULT_C_GRID, seed=0):
    """Query-level k-fold evaluation.

    Queries (not vectors) are shuffled with ``seed`` and split into
    ``folds`` parts.  For each part, C is chosen on the remaining queries
    only, a model is trained on them and the part is evaluated.
    ``trainer`` is ``"pairwise"``, ``"listwise"`` or an unfitted ranker.
    """
    pools = [p for p in pools if p.is_trainable()]
    if folds < 2:
        raise ValueError("need at least 2 folds")
    if len(pools) < folds:
        raise ValueError(f"{len(pools)} trainable queries cannot fill {folds} folds")
    estimator = make_ranker(trainer) if isinstance(trainer, str) else trainer
    by_id = {p.query_id: p for p in pools}
    report = EvalReport()
    for fold, part in enumerate(_split(sorted(by_id), folds, seed)):
        if not part:
            raise ValueError(f"fold {fold} has no queries")
        held = set(part)
        train = [by_id[q] for q in sorted(by_id) if q not in held]
        c = select_C(estimator, train, c_grid, seed)
        model = _fit(clone(estimator).set_params(C=c), train)
        results = evaluate_pools(model, [by_id[q] for q in part], fold)
        report.per_query.extend(results)
        report.folds.append(FoldResult(
            fold=fold, C=c, map=float(np.mean([r.ap for r in results])),
            precision=tuple(np.mean([r.precision for r in results], axis=0).tolist())))
    return report


def write_report(report, path_or_file):
    header = ["fold", "query_id"] + [f"P@{k}" for k in CUTOFFS] + ["AP"]
    lines = ["\t".join(header)]
    for r in report.per_query:
        lines.append("\t".join([str(r.fold), r.query_id]
                               + [f"{p:.6f}" for p in r.precision] + [f"{r.ap:.6f}"]))
    prec = report.precision
    lines.append("\t".join(["ALL", "mean"] + [f"{prec[k]:.6f}" for k in CUTOFFS]
                           + [f"{report.map:.6f}"]))
    text = "\n".join(lines) + "\n"
    if hasattr(path_or_file, "write"):
        path_or_file.write(text)
    else:
        with open(path_or_file, "w", encoding="utf-8") as fh:
            fh.write(text)
