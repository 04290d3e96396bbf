"""Max-margin rankers, ranked-list measures and cross-validation."""

from .evaluation import EvalReport, cross_validate, evaluate_pools, write_report
from .measures import average_precision, mean_average_precision, precision_at_k
from .structured import find_most_violated, joint_feature_map, violation
from .svm import (ListwiseMAPSVM, PairwiseRankSVM, RankingModel, load_model, rank,
                  save_model, score)

__all__ = [
    "EvalReport",
    "ListwiseMAPSVM",
    "PairwiseRankSVM",
    "RankingModel",
    "average_precision",
    "cross_validate",
    "evaluate_pools",
    "find_most_violated",
    "joint_feature_map",
    "load_model",
    "mean_average_precision",
    "precision_at_k",
    "rank",
    "save_model",
    "score",
    "violation",
    "write_report",
]
