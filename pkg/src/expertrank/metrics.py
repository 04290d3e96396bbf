"""Citation-based expertise estimators.

Bibliometric indices over citation-count lists, their author, institution
and topic variants, and PageRank over the weighted citation graph.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .text import document_matches

__all__ = [
    "CitationGraph",
    "CitationRecord",
    "CitationStats",
    "IndexParams",
    "PageRankResult",
    "a_index",
    "build_citation_graph",
    "citation_record",
    "citation_stats",
    "contemporary_h_index",
    "e_index",
    "g_index",
    "h_core",
    "h_index",
    "hb_index",
    "individual_h_index",
    "institution_citation_counts",
    "matching_publications",
    "pagerank",
    "score_h_index",
    "trend_h_index",
]


@dataclass(frozen=True)
class IndexParams:
    gamma: float = 4.0
    delta: float = 1.0
    current_year: int | None = None

    def __post_init__(self):
        if self.gamma <= 0 or self.delta < 0:
            raise ValueError("gamma must be > 0 and delta >= 0")

    def year_now(self, corpus):
        return self.current_year if self.current_year is not None else corpus.max_year()


@dataclass(frozen=True)
class CitationRecord:
    pub_id: str
    year: int
    citing: tuple[tuple[str, int], ...]


def citation_record(corpus, pub_id):
    pub = corpus.publications[pub_id]
    citing = tuple((c, corpus.publications[c].year) for c in corpus.cited_by(pub_id))
    return CitationRecord(pub_id=pub_id, year=pub.year, citing=citing)


# -- indices over citation lists --------------------------------------------

# real-valued scores such as 4 * (6 * 1/12) land a few ulps under an integer
_THRESHOLD_RTOL = 1e-9


def score_h_index(scores):
    """Largest integer h such that at least h scores are >= h.

    Scores within a relative 1e-9 of ``h`` count as reaching it.
    """
    ordered = sorted(scores, reverse=True)
    h = 0
    for rank, s in enumerate(ordered, start=1):
        if s >= rank * (1.0 - _THRESHOLD_RTOL):
            h = rank
        else:
            break
    return h


def h_index(citation_counts):
    return score_h_index(citation_counts)


def g_index(citation_counts):
    """Largest g whose top-g citations sum to at least g**2.

    Beyond the list length the ranking is padded with uncited articles.
    """
    ordered = sorted(citation_counts, reverse=True)
    cumulative = 0
    g = 0
    candidate = 1
    while True:
        if candidate <= len(ordered):
            cumulative += ordered[candidate - 1]
        if cumulative < candidate * candidate:
            return g
        g = candidate
        candidate += 1


def a_index(citation_counts):
    h = h_index(citation_counts)
    if h == 0:
        return 0.0
    return sum(citation_counts) / (h * h)


def e_index(citation_counts):
    """sqrt(sum of h-core citations - h**2)."""
    ordered = sorted(citation_counts, reverse=True)
    h = h_index(ordered)
    if h == 0:
        return 0.0
    return math.sqrt(sum(ordered[:h]) - h * h)


def h_core(records):
    """The h most-cited ``(pub_id, citations)`` records, ties by smaller id."""
    ordered = sorted(records, key=lambda r: (-r[1], r[0]))
    h = h_index([c for _, c in ordered])
    return ordered[:h]


# -- corpus-backed indices ---------------------------------------------------

def _author_counts(corpus, author_id):
    author = corpus.author(author_id)
    return [(pid, corpus.citation_count(pid)) for pid in author.publication_ids]


def _age(year_now, year):
    # future-dated work counts as current
    return max(year_now - year + 1, 1)


def contemporary_scores(author_id, params, corpus):
    now = params.year_now(corpus)
    scores = []
    for pid, cites in _author_counts(corpus, author_id):
        age = _age(now, corpus.publications[pid].year)
        scores.append(params.gamma * age ** (-params.delta) * cites)
    return scores


def contemporary_h_index(author_id, params, corpus):
    return score_h_index(contemporary_scores(author_id, params, corpus))


def trend_scores(author_id, params, corpus):
    now = params.year_now(corpus)
    scores = []
    for pid in corpus.author(author_id).publication_ids:
        rec = citation_record(corpus, pid)
        scores.append(params.gamma * sum(_age(now, y) ** (-params.delta) for _, y in rec.citing))
    return scores


def trend_h_index(author_id, params, corpus):
    return score_h_index(trend_scores(author_id, params, corpus))


def individual_h_index(author_id, corpus):
    """h divided by the mean author count of the h-core papers."""
    core = h_core(_author_counts(corpus, author_id))
    if not core:
        return 0.0
    mean_authors = sum(len(corpus.publications[pid].author_ids) for pid, _ in core) / len(core)
    return len(core) / mean_authors


def matching_publications(query, corpus, index=None):
    """Ids of publications containing every query term, in id order."""
    return [pid for pid, pub in corpus.publications.items()
            if document_matches(query, pub, index)]


def hb_index(query, corpus, graph=None, index=None):
    """h-index of the topic: over all publications matching ``query``."""
    return h_index([corpus.citation_count(pid)
                    for pid in matching_publications(query, corpus, index)])


def institution_citation_counts(corpus, institution):
    """Citation counts of every distinct paper written by members of ``institution``."""
    if not institution:
        return []
    pubs = set()
    for author in corpus.authors.values():
        if author.institution == institution:
            pubs.update(author.publication_ids)
    return [corpus.citation_count(pid) for pid in sorted(pubs)]


@dataclass(frozen=True)
class CitationStats:
    total_matching: int
    avg_matching: float
    max_matching: int
    avg_per_year: float
    collaborators: int


def career_span(years):
    return max(years) - min(years) if years else 0


def citation_stats(author_id, query, corpus, index=None, matching=None):
    """Citation aggregates for an author.

    ``matching`` may carry the precomputed set of matching publication ids.
    """
    author = corpus.author(author_id)
    pids = author.publication_ids
    if matching is None:
        hits = [p for p in pids if document_matches(query, corpus.publications[p], index)]
    else:
        hits = [p for p in pids if p in matching]
    counts = [corpus.citation_count(p) for p in hits]
    all_counts = [corpus.citation_count(p) for p in pids]
    span = career_span([corpus.publications[p].year for p in pids])
    coauthors = {a for p in pids for a in corpus.publications[p].author_ids}
    coauthors.discard(author_id)
    return CitationStats(
        total_matching=sum(counts),
        avg_matching=sum(counts) / len(counts) if counts else 0.0,
        max_matching=max(counts) if counts else 0,
        avg_per_year=sum(all_counts) / max(span, 1),
        collaborators=len(coauthors),
    )


# -- PageRank ----------------------------------------------------------------

@dataclass
class CitationGraph:
    """Directed weighted graph stored as parallel source/target/weight arrays of node indices."""

    nodes: tuple
    sources: np.ndarray
    targets: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        n = len(self.nodes)
        self.sources = np.asarray(self.sources, dtype=np.int64)
        self.targets = np.asarray(self.targets, dtype=np.int64)
        self.weights = np.asarray(self.weights, dtype=float)
        if not (len(self.sources) == len(self.targets) == len(self.weights)):
            raise ValueError("edge arrays differ in length")
        if len(self.weights) and (self.weights <= 0).any():
            raise ValueError("edge weights must be positive")
        if len(self.sources) and (max(self.sources.max(), self.targets.max()) >= n
                                  or min(self.sources.min(), self.targets.min()) < 0):
            raise ValueError("edge endpoint outside node set")
        self.out_weight = np.bincount(self.sources, weights=self.weights, minlength=n)

    @classmethod
    def from_edges(cls, nodes, edges):
        pos = {node: i for i, node in enumerate(nodes)}
        src = [pos[s] for s, _, _ in edges]
        dst = [pos[t] for _, t, _ in edges]
        w = [wt for _, _, wt in edges]
        return cls(tuple(nodes), src, dst, w)

    @property
    def num_nodes(self):
        return len(self.nodes)

    def edges(self):
        for s, t, w in zip(self.sources, self.targets, self.weights):
            yield self.nodes[s], self.nodes[t], float(w)


def build_citation_graph(corpus):
    """One node per publication; citing -> cited edges weighted 1 / (#authors of citing)."""
    edges = []
    for pub in corpus.publications.values():
        w = 1.0 / len(pub.author_ids)
        edges.extend((pub.id, cited, w) for cited in pub.cited_ids)
    return CitationGraph.from_edges(list(corpus.publications), edges)


@dataclass
class PageRankResult:
    scores: dict
    converged: bool
    iterations: int
    delta: float


def pagerank(graph, tol=1e-9, max_iter=200, damping=0.5):
    """Power iteration for Pr = (1-d)/N + d * sum_j w_ji Pr_j / outweight(j).

    Nodes without out-links spread their mass uniformly over all nodes.
    Starts from the uniform vector and stops once the L1 change is below
    ``tol``; ``converged`` is False if ``max_iter`` is hit first.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = graph.num_nodes
    if n == 0:
        raise ValueError("PageRank of an empty graph")
    dangling = graph.out_weight == 0
    share = np.zeros(len(graph.weights))
    if len(share):
        share = graph.weights / graph.out_weight[graph.sources]
    pr = np.full(n, 1.0 / n)
    delta = float("inf")
    it = 0
    converged = False
    while it < max_iter:
        it += 1
        flow = np.bincount(graph.targets, weights=share * pr[graph.sources], minlength=n)
        new = (1.0 - damping) / n + damping * (flow + pr[dangling].sum() / n)
        delta = float(np.abs(new - pr).sum())
        pr = new
        if delta < tol:
            converged = True
            break
    return PageRankResult(
        scores={node: float(v) for node, v in zip(graph.nodes, pr)},
        converged=converged, iterations=it, delta=delta,
    )


def institution_index_map(corpus):
    """institution -> sorted ids of all papers by its members."""
    by_inst = defaultdict(set)
    for author in corpus.authors.values():
        if author.institution:
            by_inst[author.institution].update(author.publication_ids)
    return {k: sorted(v) for k, v in by_inst.items()}
