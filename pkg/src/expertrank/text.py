"""Tokenization and the TF, IDF and BM25 text scores over title/abstract streams."""

from __future__ import annotations

import enum
import math
import re
from collections import Counter
from dataclasses import dataclass, field

__all__ = [
    "BM25_B",
    "BM25_K1",
    "Query",
    "StreamKind",
    "TermStats",
    "TextIndex",
    "author_bm25",
    "bm25",
    "document_length",
    "document_matches",
    "inverse_document_frequency",
    "term_frequency",
    "tokenize",
]

BM25_K1 = 1.2
BM25_B = 0.75

_TOKEN_RE = re.compile(r"[^\W_]+")


def tokenize(text):
    """Lowercase ``text`` and split it on every non-alphanumeric character."""
    if not text:
        return []
    return _TOKEN_RE.findall(text.lower())


class StreamKind(str, enum.Enum):
    TITLE = "title"
    ABSTRACT = "abstract"

    def text_of(self, pub):
        return pub.title if self is StreamKind.TITLE else pub.abstract


@dataclass(frozen=True)
class Query:
    id: str
    terms: tuple[str, ...]

    def __post_init__(self):
        if not self.terms:
            raise ValueError(f"query {self.id!r} has no terms after normalization")

    @classmethod
    def from_text(cls, query_id, text):
        # Terms(q) is a set; keep first-occurrence order for stable output
        return cls(id=str(query_id), terms=tuple(dict.fromkeys(tokenize(text))))


@dataclass
class TermStats:
    stream: StreamKind
    doc_count: int
    doc_freq: dict[str, int] = field(default_factory=dict)
    avg_doc_len: float = 0.0

    @classmethod
    def from_documents(cls, stream, token_lists):
        doc_freq = Counter()
        total = 0
        n = 0
        for tokens in token_lists:
            doc_freq.update(set(tokens))
            total += len(tokens)
            n += 1
        return cls(stream=StreamKind(stream), doc_count=n, doc_freq=dict(doc_freq),
                   avg_doc_len=total / n if n else 0.0)

    @classmethod
    def from_corpus(cls, corpus, stream, index=None):
        stream = StreamKind(stream)
        if index is not None:
            lists = (index.tokens(pid, stream) for pid in corpus.publications)
        else:
            lists = (tokenize(stream.text_of(p)) for p in corpus.publications.values())
        return cls.from_documents(stream, lists)

    def df(self, term):
        return self.doc_freq.get(term, 0)


class TextIndex:
    """Per-publication token counts for both streams, computed once."""

    def __init__(self, corpus):
        self._tokens = {}
        self._counts = {}
        self._vocab = {}
        for pid, pub in corpus.publications.items():
            for stream in StreamKind:
                toks = tokenize(stream.text_of(pub))
                self._tokens[pid, stream] = toks
                self._counts[pid, stream] = Counter(toks)
            self._vocab[pid] = (set(self._counts[pid, StreamKind.TITLE])
                                | set(self._counts[pid, StreamKind.ABSTRACT]))

    def tokens(self, pub_id, stream):
        return self._tokens[pub_id, StreamKind(stream)]

    def counts(self, pub_id, stream) -> Counter:
        return self._counts[pub_id, StreamKind(stream)]

    def length(self, pub_id, stream):
        return len(self._tokens[pub_id, StreamKind(stream)])

    def vocabulary(self, pub_id):
        return self._vocab[pub_id]


def _counts(doc, stream, index):
    if index is not None:
        return index.counts(doc.id, stream), index.length(doc.id, stream)
    toks = tokenize(StreamKind(stream).text_of(doc))
    return Counter(toks), len(toks)


def document_length(doc, stream, index=None):
    return _counts(doc, stream, index)[1]


def term_frequency(query, author_id, stream, corpus, index=None):
    """Sum over the author's documents of Freq(i, d) / |d| for each query term."""
    author = corpus.author(author_id)
    total = 0.0
    for pid in author.publication_ids:
        counts, length = _counts(corpus.publications[pid], stream, index)
        if length == 0:
            continue
        total += sum(counts.get(t, 0) for t in query.terms) / length
    return total


def inverse_document_frequency(query, stats):
    """Sum of ln(|D| / f) over query terms; unseen terms count as f = 1."""
    if stats.doc_count <= 0:
        raise ValueError("inverse document frequency of an empty collection")
    return sum(math.log(stats.doc_count / max(stats.df(t), 1)) for t in query.terms)


def bm25(query, doc, stream, stats, k1=BM25_K1, b=BM25_B, index=None):
    """Okapi BM25 with the length-normalized term ratio Freq(i,d)/|d|.

    The log component ln((N - F + 0.5) / (F + 0.5)) is not clamped, so terms
    present in more than half the collection contribute negatively.
    """
    counts, length = _counts(doc, stream, index)
    if length == 0:
        return 0.0
    n = stats.doc_count
    norm = k1 * (1.0 - b + b * length / stats.avg_doc_len)
    score = 0.0
    for term in query.terms:
        freq = counts.get(term, 0)
        if freq == 0:
            continue
        ratio = freq / length
        df = stats.df(term)
        idf = math.log((n - df + 0.5) / (df + 0.5))
        score += idf * (k1 + 1.0) * ratio / (ratio + norm)
    return score


def author_bm25(query, author_id, stream, corpus, stats, k1=BM25_K1, b=BM25_B, index=None):
    """BM25 summed over every publication of the author."""
    author = corpus.author(author_id)
    return sum(bm25(query, corpus.publications[pid], stream, stats, k1, b, index)
               for pid in author.publication_ids)


def document_matches(query, doc, index=None):
    """True when every query term occurs in the title or abstract of ``doc``."""
    if index is not None:
        vocab = index.vocabulary(doc.id)
    else:
        vocab = set(tokenize(doc.title)) | set(tokenize(doc.abstract))
    return all(t in vocab for t in query.terms)
