"""Expertise feature vectors for (query, author) pairs.

The feature ordering is fixed; see ``FEATURES`` and ``docs/FEATURES.md``.
Feature vectors are exchanged in a LETOR-style text format::

    <label> qid:<query_id> 1:<v1> 2:<v2> ... <K>:<vK> # <author_id>
"""

from __future__ import annotations

import json
import logging
import math
import zlib
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import metrics as m
from .corpus import CONFERENCE, JOURNAL
from .text import (BM25_B, BM25_K1, Query, StreamKind, TermStats, TextIndex,
                   author_bm25, inverse_document_frequency, term_frequency)

__all__ = [
    "FEATURES",
    "FEATURE_GROUPS",
    "FEATURE_NAMES",
    "ExpertFeatureExtractor",
    "FeatureVector",
    "Judgment",
    "QueryPool",
    "build_pools",
    "extract_features",
    "group_mask",
    "normalize_pool",
    "read_judgments",
    "read_vectors",
    "sample_negatives",
    "write_feature_schema",
    "write_vectors",
]

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
TEXT, PROFILE, GRAPH = "text", "profile", "graph"
FEATURE_GROUPS = (TEXT, PROFILE, GRAPH)

FEATURES = (
    ("title_bm25_sum", TEXT),
    ("title_tf", TEXT),
    ("title_idf", TEXT),
    ("title_doc_length", TEXT),
    ("abstract_bm25_sum", TEXT),
    ("abstract_tf", TEXT),
    ("abstract_idf", TEXT),
    ("abstract_doc_length", TEXT),
    ("matching_unique_authors", TEXT),
    ("matching_year_span", TEXT),
    ("career_span", PROFILE),
    ("conference_papers_per_year", PROFILE),
    ("journal_papers_per_year", PROFILE),
    ("conference_pubs_with_query", PROFILE),
    ("conference_pubs_without_query", PROFILE),
    ("journal_pubs_with_query", PROFILE),
    ("journal_pubs_without_query", PROFILE),
    ("matching_citations_total", GRAPH),
    ("matching_citations_avg", GRAPH),
    ("matching_citations_max", GRAPH),
    ("citations_per_year", GRAPH),
    ("collaborators", GRAPH),
    ("h_index", GRAPH),
    ("institution_h_index", GRAPH),
    ("hb_index", GRAPH),
    ("contemporary_h_index", GRAPH),
    ("trend_h_index", GRAPH),
    ("individual_h_index", GRAPH),
    ("a_index", GRAPH),
    ("institution_a_index", GRAPH),
    ("g_index", GRAPH),
    ("institution_g_index", GRAPH),
    ("e_index", GRAPH),
    ("pagerank_sum", GRAPH),
    ("pagerank_mean", GRAPH),
)
FEATURE_NAMES = tuple(name for name, _ in FEATURES)
N_FEATURES = len(FEATURES)


def group_mask(groups):
    """Boolean mask over feature slots enabled by ``groups``."""
    groups = set(groups)
    unknown = groups - set(FEATURE_GROUPS)
    if unknown or not groups:
        raise ValueError(f"feature groups must be a non-empty subset of {FEATURE_GROUPS}")
    return np.array([g in groups for _, g in FEATURES])


@dataclass(frozen=True)
class Judgment:
    query_id: str
    author_id: str
    relevance: int


@dataclass(frozen=True)
class FeatureVector:
    query_id: str
    author_id: str
    values: tuple[float, ...]
    label: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.values) != N_FEATURES:
            raise ValueError(f"expected {N_FEATURES} values, got {len(self.values)}")
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError(f"non-finite feature for ({self.query_id}, {self.author_id})")


@dataclass
class QueryPool:
    query_id: str
    vectors: list[FeatureVector] = field(default_factory=list)

    @property
    def X(self):
        return np.array([v.values for v in self.vectors], dtype=float).reshape(-1, N_FEATURES)

    @property
    def labels(self):
        return np.array([v.label or 0 for v in self.vectors], dtype=int)

    @property
    def author_ids(self):
        return [v.author_id for v in self.vectors]

    def is_trainable(self):
        labels = self.labels
        return bool(len(labels)) and labels.max() == 1 and labels.min() == 0


def pools_to_arrays(pools):
    """Stack pools into ``X, y, qid`` arrays for the rankers."""
    X = np.vstack([p.X for p in pools]) if pools else np.zeros((0, N_FEATURES))
    y = np.concatenate([p.labels for p in pools]) if pools else np.zeros(0, int)
    qid = np.array([p.query_id for p in pools for _ in p.vectors], dtype=object)
    return X, y, qid


# -- extraction --------------------------------------------------------------

class MetricCache:
    """Corpus-wide caches every feature reads: token index, term stats, PageRank, indices."""

    def __init__(self, corpus, k1=BM25_K1, b=BM25_B, index_params=None,
                 pagerank_tol=1e-9, pagerank_max_iter=200, damping=0.5):
        self.corpus = corpus
        self.k1 = k1
        self.b = b
        self.index_params = index_params or m.IndexParams()
        self.text_index = TextIndex(corpus)
        self.term_stats = {s: TermStats.from_corpus(corpus, s, self.text_index) for s in StreamKind}
        graph = m.build_citation_graph(corpus)
        self.pagerank = m.pagerank(graph, tol=pagerank_tol, max_iter=pagerank_max_iter,
                                   damping=damping)
        if not self.pagerank.converged:
            log.warning("PageRank did not converge in %d iterations", pagerank_max_iter)
        self._institutions = m.institution_index_map(corpus)
        self._author = {}
        self._query = {}
        self._inst = {}

    def query_info(self, query):
        key = query.terms
        if key not in self._query:
            matching = m.matching_publications(query, self.corpus, self.text_index)
            pubs = self.corpus.publications
            self._query[key] = {
                "matching": frozenset(matching),
                "idf": {s: inverse_document_frequency(query, self.term_stats[s]) for s in StreamKind},
                "unique_authors": len({a for p in matching for a in pubs[p].author_ids}),
                "hb_index": m.h_index([self.corpus.citation_count(p) for p in matching]),
            }
        return self._query[key]

    def institution_counts(self, institution):
        if institution not in self._inst:
            pids = self._institutions.get(institution, [])
            counts = [self.corpus.citation_count(p) for p in pids]
            self._inst[institution] = (m.h_index(counts), m.a_index(counts), m.g_index(counts))
        return self._inst[institution]

    def author_info(self, author_id):
        if author_id not in self._author:
            corpus = self.corpus
            author = corpus.author(author_id)
            counts = [corpus.citation_count(p) for p in author.publication_ids]
            years = [corpus.publications[p].year for p in author.publication_ids]
            inst = self.institution_counts(author.institution) if author.institution else (0, 0.0, 0)
            stats = m.citation_stats(author_id, None, corpus, matching=frozenset())
            self._author[author_id] = {
                "career_span": m.career_span(years),
                "n_conference": sum(corpus.publications[p].venue_kind == CONFERENCE
                                    for p in author.publication_ids),
                "n_journal": sum(corpus.publications[p].venue_kind == JOURNAL
                                 for p in author.publication_ids),
                "citations_per_year": stats.avg_per_year,
                "collaborators": stats.collaborators,
                "h_index": m.h_index(counts),
                "institution_h_index": inst[0],
                "contemporary_h_index": m.contemporary_h_index(author_id, self.index_params, corpus),
                "trend_h_index": m.trend_h_index(author_id, self.index_params, corpus),
                "individual_h_index": m.individual_h_index(author_id, corpus),
                "a_index": m.a_index(counts),
                "institution_a_index": inst[1],
                "g_index": m.g_index(counts),
                "institution_g_index": inst[2],
                "e_index": m.e_index(counts),
            }
        return self._author[author_id]


def extract_features(query, author_id, corpus, precomputed=None, mask=None):
    """Fill every slot of the feature table for one (query, author) pair.

    ``mask`` zeroes the slots of disabled feature groups while keeping the
    vector width fixed.
    """
    cache = precomputed if precomputed is not None else MetricCache(corpus)
    if cache.corpus is not corpus:
        raise ValueError("metric cache was built for a different corpus")
    author = corpus.author(author_id)
    pubs = [corpus.publications[p] for p in author.publication_ids]
    qi = cache.query_info(query)
    ai = cache.author_info(author_id)
    idx = cache.text_index
    matching = [p for p in pubs if p.id in qi["matching"]]
    match_years = [p.year for p in matching]
    span = max(ai["career_span"], 1)
    n_conf_match = sum(p.venue_kind == CONFERENCE for p in matching)
    n_jour_match = sum(p.venue_kind == JOURNAL for p in matching)
    cites = [corpus.citation_count(p.id) for p in matching]
    pr = [cache.pagerank.scores[p.id] for p in matching]

    values = {}
    for stream in StreamKind:
        prefix = stream.value
        values[f"{prefix}_bm25_sum"] = author_bm25(query, author_id, stream, corpus,
                                                   cache.term_stats[stream], cache.k1, cache.b, idx)
        values[f"{prefix}_tf"] = term_frequency(query, author_id, stream, corpus, idx)
        values[f"{prefix}_idf"] = qi["idf"][stream]
        values[f"{prefix}_doc_length"] = sum(idx.length(p.id, stream) for p in pubs)
    values.update(
        matching_unique_authors=qi["unique_authors"],
        matching_year_span=m.career_span(match_years),
        career_span=ai["career_span"],
        conference_papers_per_year=ai["n_conference"] / span,
        journal_papers_per_year=ai["n_journal"] / span,
        conference_pubs_with_query=n_conf_match,
        conference_pubs_without_query=ai["n_conference"] - n_conf_match,
        journal_pubs_with_query=n_jour_match,
        journal_pubs_without_query=ai["n_journal"] - n_jour_match,
        matching_citations_total=sum(cites),
        matching_citations_avg=sum(cites) / len(cites) if cites else 0.0,
        matching_citations_max=max(cites) if cites else 0,
        hb_index=qi["hb_index"],
        pagerank_sum=sum(pr),
        pagerank_mean=sum(pr) / len(pr) if pr else 0.0,
    )
    for name in FEATURE_NAMES:
        if name not in values:
            values[name] = ai[name]
    row = [float(values[name]) for name in FEATURE_NAMES]
    if mask is not None:
        row = [v if keep else 0.0 for v, keep in zip(row, mask)]
    return FeatureVector(query_id=query.id, author_id=author_id, values=tuple(row))


class ExpertFeatureExtractor(TransformerMixin, BaseEstimator):
    """Transformer from ``(Query, author_id)`` pairs to feature matrices.

    ``fit(corpus)`` builds the metric caches; ``transform(pairs)`` returns an
    ``(n_pairs, N_FEATURES)`` array.
    """

    def __init__(self, k1=BM25_K1, b=BM25_B, gamma=4.0, delta=1.0, current_year=None,
                 damping=0.5, pagerank_tol=1e-9, pagerank_max_iter=200,
                 groups=FEATURE_GROUPS):
        self.k1 = k1
        self.b = b
        self.gamma = gamma
        self.delta = delta
        self.current_year = current_year
        self.damping = damping
        self.pagerank_tol = pagerank_tol
        self.pagerank_max_iter = pagerank_max_iter
        self.groups = groups

    def fit(self, corpus, y=None):
        self.mask_ = group_mask(self.groups)
        params = m.IndexParams(self.gamma, self.delta, self.current_year)
        self.cache_ = MetricCache(corpus, self.k1, self.b, params, self.pagerank_tol,
                                  self.pagerank_max_iter, self.damping)
        self.corpus_ = corpus
        self.n_features_out_ = N_FEATURES
        return self

    def extract(self, query, author_id):
        check_is_fitted(self, "cache_")
        return extract_features(query, author_id, self.corpus_, self.cache_, self.mask_)

    def transform(self, pairs):
        rows = [self.extract(q, a).values for q, a in pairs]
        return np.array(rows, dtype=float).reshape(-1, N_FEATURES)

    def get_feature_names_out(self, input_features=None):
        return np.array(FEATURE_NAMES, dtype=object)


# -- pools -------------------------------------------------------------------

def _query_seed(seed, query_id):
    return [int(seed), zlib.crc32(str(query_id).encode("utf-8"))]


def sample_negatives(query, relevant_authors, corpus, seed, precomputed=None):
    """floor(n/2) best BM25 non-relevant authors plus ceil(n/2) random others.

    BM25 is summed over title and abstract streams and ties go to the
    smaller author id.  The random half is drawn without replacement from
    the authors left over, using a generator seeded by ``seed`` and the
    query id.
    """
    relevant = set(relevant_authors)
    n = len(relevant)
    if n < 1:
        raise ValueError(f"query {query.id!r} has no relevant authors")
    cache = precomputed if precomputed is not None else MetricCache(corpus)
    pool = sorted(a for a in corpus.authors if a not in relevant)
    n_top, n_rand = n // 2, n - n // 2
    if len(pool) < n:
        raise ValueError(f"query {query.id!r}: need {n} non-relevant authors, "
                         f"corpus has {len(pool)}")
    scored = sorted(
        pool,
        key=lambda a: (-sum(author_bm25(query, a, s, corpus, cache.term_stats[s],
                                        cache.k1, cache.b, cache.text_index)
                            for s in StreamKind), a),
    )
    top = scored[:n_top]
    rest = sorted(set(pool) - set(top))
    rng = np.random.default_rng(_query_seed(seed, query.id))
    drawn = rng.choice(len(rest), size=n_rand, replace=False)
    return set(top) | {rest[i] for i in drawn}


def normalize_pool(pool):
    """Per-feature min-max scaling to [0, 1] within the pool; constant features become 0."""
    if not pool.vectors:
        raise ValueError("cannot normalize an empty pool")
    X = min_max_scale(pool.X)
    vectors = [FeatureVector(v.query_id, v.author_id, tuple(float(x) for x in row), v.label)
               for v, row in zip(pool.vectors, X)]
    return QueryPool(pool.query_id, vectors)


def min_max_scale(X):
    X = np.asarray(X, dtype=float)
    lo = X.min(axis=0)
    span = X.max(axis=0) - lo
    safe = np.where(span > 0, span, 1.0)
    return np.where(span > 0, (X - lo) / safe, 0.0)


def build_pools(corpus, queries, judgments, extractor, seed=0, normalize=True):
    """Assemble one pool per query from judgments plus sampled negatives.

    ``queries`` maps query id to :class:`Query`.  Queries whose judgments
    already include non-relevant authors are used as given; otherwise
    negatives come from :func:`sample_negatives`.  Queries without relevant
    authors in the corpus are skipped with a warning.
    """
    by_query = {}
    for j in judgments:
        if j.author_id not in corpus.authors:
            log.warning("judgment author %s not in corpus; skipped", j.author_id)
            continue
        by_query.setdefault(j.query_id, {})[j.author_id] = j.relevance
    pools = []
    for qid in sorted(by_query):
        labels = by_query[qid]
        relevant = {a for a, r in labels.items() if r > 0}
        if not relevant:
            log.warning("query %s has no relevant authors; skipped", qid)
            continue
        query = queries[qid]
        if not any(r == 0 for r in labels.values()):
            for a in sample_negatives(query, relevant, corpus, seed, extractor.cache_):
                labels[a] = 0
        vectors = []
        for aid in sorted(labels):
            fv = extractor.extract(query, aid)
            vectors.append(FeatureVector(fv.query_id, aid, fv.values, int(labels[aid] > 0)))
        pool = QueryPool(qid, vectors)
        pools.append(normalize_pool(pool) if normalize else pool)
    return pools


def read_judgments(path):
    """Parse ``query_id, query text, author_id, relevance`` TAB-separated rows.

    Returns ``(queries, judgments)`` where ``queries`` maps id to :class:`Query`.
    """
    queries, judgments, seen = {}, [], set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise ValueError(f"{path}:{lineno}: expected 4 TAB-separated fields")
            qid, text, aid, rel = (p.strip() for p in parts)
            if rel not in ("0", "1"):
                raise ValueError(f"{path}:{lineno}: relevance must be 0 or 1")
            if not text:
                raise ValueError(f"{path}:{lineno}: empty query text")
            if (qid, aid) in seen:
                raise ValueError(f"{path}:{lineno}: duplicate judgment for ({qid}, {aid})")
            seen.add((qid, aid))
            queries.setdefault(qid, Query.from_text(qid, text))
            judgments.append(Judgment(qid, aid, int(rel)))
    return queries, judgments


# -- exchange format ---------------------------------------------------------

def _format_vector(v):
    if v.label not in (0, 1):
        raise ValueError(f"vector ({v.query_id}, {v.author_id}) is unlabeled")
    feats = " ".join(f"{i}:{float(x)!r}" for i, x in enumerate(v.values, start=1))
    return f"{v.label} qid:{v.query_id} {feats} # {v.author_id}"


def write_vectors(pools, path):
    with open(path, "w", encoding="utf-8") as fh:
        for pool in pools:
            for v in pool.vectors:
                fh.write(_format_vector(v) + "\n")


def _parse_vector(path, lineno, line):
    body, sep, comment = line.partition("#")
    author_id = comment.strip()
    if not sep or not author_id:
        raise ValueError(f"{path}:{lineno}: missing '# <author_id>' trailer")
    tokens = body.split()
    if len(tokens) < 2 or not tokens[1].startswith("qid:"):
        raise ValueError(f"{path}:{lineno}: expected '<label> qid:<id> ...'")
    if tokens[0] not in ("0", "1"):
        raise ValueError(f"{path}:{lineno}: label must be 0 or 1")
    values = []
    for expected, tok in enumerate(tokens[2:], start=1):
        idx, _, val = tok.partition(":")
        if idx != str(expected):
            raise ValueError(f"{path}:{lineno}: feature index {idx!r} where {expected} expected")
        try:
            values.append(float(val))
        except ValueError:
            raise ValueError(f"{path}:{lineno}: bad feature value {val!r}") from None
    if len(values) != N_FEATURES:
        raise ValueError(f"{path}:{lineno}: expected {N_FEATURES} features, got {len(values)}")
    return FeatureVector(tokens[1][4:], author_id, tuple(values), int(tokens[0]))


def read_vectors(path):
    pools = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            v = _parse_vector(path, lineno, line.rstrip("\r\n"))
            pools.setdefault(v.query_id, QueryPool(v.query_id)).vectors.append(v)
    return list(pools.values())


def write_feature_schema(path):
    """Machine-readable sidecar of the feature ordering."""
    doc = {
        "version": SCHEMA_VERSION,
        "features": [{"index": i, "name": n, "group": g}
                     for i, (n, g) in enumerate(FEATURES, start=1)],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
