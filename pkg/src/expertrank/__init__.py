"""Learning to rank for expert search over publication and citation corpora."""

from .corpus import Author, Corpus, Publication, compute_stats, load_corpus
from .features import ExpertFeatureExtractor, build_pools, extract_features
from .ranking import ListwiseMAPSVM, PairwiseRankSVM, cross_validate
from .text import Query, tokenize

__version__ = "0.1.0"

__all__ = [
    "Author",
    "Corpus",
    "ExpertFeatureExtractor",
    "ListwiseMAPSVM",
    "PairwiseRankSVM",
    "Publication",
    "Query",
    "build_pools",
    "compute_stats",
    "cross_validate",
    "extract_features",
    "load_corpus",
    "tokenize",
]
