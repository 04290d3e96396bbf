"""Publication/author corpus: loading, validation, statistics and snapshots.

Publication records are TAB-separated lines::

    id  year  C|J  venue_name  a1;a2  c1;c2  title  abstract

Author records are TAB-separated ``id  name  institution``.
"""

from __future__ import annotations

import gzip
import io
import json
import os
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable

from .text import tokenize

__all__ = [
    "Author",
    "Corpus",
    "CorpusError",
    "CorpusStats",
    "ParseError",
    "Publication",
    "ValidationError",
    "author_publications",
    "compute_stats",
    "load_corpus",
    "load_snapshot",
    "save_snapshot",
]

CONFERENCE = "conference"
JOURNAL = "journal"
_VENUE_CODES = {"C": CONFERENCE, "J": JOURNAL}
_SNAPSHOT_VERSION = 1


class CorpusError(Exception):
    """Base class for corpus errors."""


class ParseError(CorpusError):
    def __init__(self, path, lineno, message):
        self.path = path
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {message}")


class ValidationError(CorpusError):
    pass


@dataclass(frozen=True)
class Publication:
    id: str
    title: str
    year: int
    venue_name: str
    venue_kind: str
    author_ids: tuple[str, ...]
    cited_ids: tuple[str, ...] = ()
    abstract: str = ""


@dataclass(frozen=True)
class Author:
    id: str
    name: str
    institution: str | None = None
    publication_ids: tuple[str, ...] = ()


@dataclass(frozen=True)
class CorpusStats:
    num_publications: int
    num_authors: int
    num_citation_links: int
    avg_doc_length_title: float
    avg_doc_length_abstract: float
    current_year: int
    num_conference: int = 0
    num_journal: int = 0
    num_with_abstract: int = 0
    dropped_citations: int = 0

    def as_rows(self):
        return [
            ("Total Authors", self.num_authors),
            ("Total Publications", self.num_publications),
            ("Total Publications containing Abstract", self.num_with_abstract),
            ("Total Papers Published in Conferences", self.num_conference),
            ("Total Papers Published in Journals", self.num_journal),
            ("Total Number of Citations Links", self.num_citation_links),
            ("Dropped Dangling Citations", self.dropped_citations),
            ("Average Title Length", self.avg_doc_length_title),
            ("Average Abstract Length", self.avg_doc_length_abstract),
            ("Current Year", self.current_year),
        ]


class Corpus:
    """Immutable in-memory corpus with both authorship maps and citation maps.

    Build with :func:`load_corpus` or :meth:`Corpus.from_records`; the
    constructor expects already validated records.
    """

    def __init__(self, publications, authors, dropped_citations=0):
        self.publications: dict[str, Publication] = {
            p.id: p for p in sorted(publications, key=lambda p: p.id)
        }
        self.authors: dict[str, Author] = {
            a.id: a for a in sorted(authors, key=lambda a: a.id)
        }
        self.dropped_citations = dropped_citations
        cited_by = defaultdict(list)
        for pub in self.publications.values():
            for cited in pub.cited_ids:
                cited_by[cited].append(pub.id)
        self._cited_by = {k: tuple(v) for k, v in cited_by.items()}

    @classmethod
    def from_records(cls, publications: Iterable[Publication], authors: Iterable[Author] = ()):
        """Validate raw records and build a corpus.

        Author ``publication_ids`` are rebuilt from the publications, so
        authors may be given with an empty list.  Authors referenced by a
        publication but missing from ``authors`` are created with their id
        as name.  Dangling and self citations are dropped and counted.
        """
        pubs = {}
        for pub in publications:
            if pub.id in pubs:
                raise ValidationError(f"duplicate publication id {pub.id!r}")
            if pub.year <= 0:
                raise ValidationError(f"publication {pub.id!r}: year must be positive")
            if not pub.author_ids:
                raise ValidationError(f"publication {pub.id!r}: no authors")
            if pub.venue_kind not in (CONFERENCE, JOURNAL):
                raise ValidationError(
                    f"publication {pub.id!r}: bad venue kind {pub.venue_kind!r}"
                )
            pubs[pub.id] = pub

        dropped = 0
        cleaned = []
        for pub in pubs.values():
            kept = []
            for cited in dict.fromkeys(pub.cited_ids):
                if cited in pubs and cited != pub.id:
                    kept.append(cited)
                else:
                    dropped += 1
            authors_dedup = tuple(dict.fromkeys(pub.author_ids))
            cleaned.append(Publication(
                id=pub.id, title=pub.title, year=pub.year,
                venue_name=pub.venue_name, venue_kind=pub.venue_kind,
                author_ids=authors_dedup, cited_ids=tuple(kept),
                abstract=pub.abstract or "",
            ))

        by_author = defaultdict(list)
        for pub in cleaned:
            for aid in pub.author_ids:
                by_author[aid].append(pub.id)

        known = {}
        for a in authors:
            if a.id in known:
                raise ValidationError(f"duplicate author id {a.id!r}")
            known[a.id] = a
        for aid in by_author:
            if aid not in known:
                known[aid] = Author(id=aid, name=aid)

        final_authors = [
            Author(id=a.id, name=a.name, institution=a.institution or None,
                   publication_ids=tuple(sorted(by_author.get(a.id, ()))))
            for a in known.values()
        ]
        return cls(cleaned, final_authors, dropped_citations=dropped)

    def __len__(self):
        return len(self.publications)

    def __eq__(self, other):
        if not isinstance(other, Corpus):
            return NotImplemented
        return (self.publications == other.publications
                and self.authors == other.authors
                and self.dropped_citations == other.dropped_citations)

    @property
    def num_citation_links(self):
        return sum(len(p.cited_ids) for p in self.publications.values())

    def cited_by(self, pub_id) -> tuple[str, ...]:
        """Ids of corpus publications citing ``pub_id``."""
        return self._cited_by.get(pub_id, ())

    def citation_count(self, pub_id) -> int:
        return len(self._cited_by.get(pub_id, ()))

    def author(self, author_id) -> Author:
        try:
            return self.authors[author_id]
        except KeyError:
            raise KeyError(f"unknown author {author_id!r}") from None

    def max_year(self):
        return max(p.year for p in self.publications.values())


def _split_ids(field_):
    return tuple(x.strip() for x in field_.split(";") if x.strip())


def _read_lines(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            yield lineno, line


def _parse_publication(path, lineno, line):
    parts = line.split("\t")
    if len(parts) == 7:
        parts.append("")
    if len(parts) != 8:
        raise ParseError(path, lineno, f"expected 8 TAB-separated fields, got {len(parts)}")
    pid, year, kind, venue, authors, cited, title, abstract = parts
    pid = pid.strip()
    if not pid:
        raise ParseError(path, lineno, "empty publication id")
    try:
        year = int(year)
    except ValueError:
        raise ParseError(path, lineno, f"bad year {year!r}") from None
    if kind.strip() not in _VENUE_CODES:
        raise ParseError(path, lineno, f"venue kind must be C or J, got {kind!r}")
    author_ids = _split_ids(authors)
    if not author_ids:
        raise ParseError(path, lineno, "no author ids")
    return Publication(
        id=pid, title=title, year=year, venue_name=venue,
        venue_kind=_VENUE_CODES[kind.strip()], author_ids=author_ids,
        cited_ids=_split_ids(cited), abstract=abstract,
    )


def _parse_author(path, lineno, line):
    parts = line.split("\t")
    if len(parts) == 2:
        parts.append("")
    if len(parts) != 3 or not parts[0].strip():
        raise ParseError(path, lineno, "expected TAB-separated id, name, institution")
    aid, name, inst = parts
    return Author(id=aid.strip(), name=name, institution=inst.strip() or None)


def load_corpus(path, authors_path=None) -> Corpus:
    """Read a publication file (and optional author file) into a :class:`Corpus`.

    Raises :class:`ParseError` with the offending line number on malformed
    input and :class:`ValidationError` on duplicate ids.
    """
    pubs = [_parse_publication(path, n, line) for n, line in _read_lines(path)]
    authors = []
    if authors_path is not None:
        authors = [_parse_author(authors_path, n, line) for n, line in _read_lines(authors_path)]
    return Corpus.from_records(pubs, authors)


def compute_stats(corpus: Corpus, current_year_override=None) -> CorpusStats:
    if not corpus.publications:
        raise CorpusError("empty corpus: average lengths are undefined")
    pubs = corpus.publications.values()
    n = len(corpus.publications)
    title_len = sum(len(tokenize(p.title)) for p in pubs)
    abstract_len = sum(len(tokenize(p.abstract)) for p in pubs)
    return CorpusStats(
        num_publications=n,
        num_authors=len(corpus.authors),
        num_citation_links=corpus.num_citation_links,
        avg_doc_length_title=title_len / n,
        avg_doc_length_abstract=abstract_len / n,
        current_year=(current_year_override if current_year_override is not None
                      else corpus.max_year()),
        num_conference=sum(p.venue_kind == CONFERENCE for p in pubs),
        num_journal=sum(p.venue_kind == JOURNAL for p in pubs),
        num_with_abstract=sum(bool(p.abstract.strip()) for p in pubs),
        dropped_citations=corpus.dropped_citations,
    )


def author_publications(corpus: Corpus, author_id) -> list[Publication]:
    """Docs(a): the publications of ``author_id`` in id order."""
    author = corpus.author(author_id)
    return [corpus.publications[pid] for pid in author.publication_ids]


# -- snapshots ---------------------------------------------------------------

def _to_payload(corpus):
    return {
        "version": _SNAPSHOT_VERSION,
        "dropped_citations": corpus.dropped_citations,
        "publications": [
            [p.id, p.title, p.year, p.venue_name, p.venue_kind,
             list(p.author_ids), list(p.cited_ids), p.abstract]
            for p in corpus.publications.values()
        ],
        "authors": [
            [a.id, a.name, a.institution, list(a.publication_ids)]
            for a in corpus.authors.values()
        ],
    }


def save_snapshot(corpus: Corpus, path):
    """Write a gzip-compressed JSON snapshot; identical corpora give identical bytes."""
    raw = json.dumps(_to_payload(corpus), ensure_ascii=False, sort_keys=True,
                     separators=(",", ":")).encode("utf-8")
    buf = io.BytesIO()
    with gzip.GzipFile(fileobj=buf, mode="wb", mtime=0, filename="") as gz:
        gz.write(raw)
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def load_snapshot(path) -> Corpus:
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    with gzip.open(path, "rb") as fh:
        payload = json.loads(fh.read().decode("utf-8"))
    if payload.get("version") != _SNAPSHOT_VERSION:
        raise CorpusError(f"{path}: unsupported snapshot version {payload.get('version')!r}")
    pubs = [
        Publication(id=i, title=t, year=y, venue_name=vn, venue_kind=vk,
                    author_ids=tuple(a), cited_ids=tuple(c), abstract=ab)
        for i, t, y, vn, vk, a, c, ab in payload["publications"]
    ]
    authors = [
        Author(id=i, name=n, institution=inst, publication_ids=tuple(p))
        for i, n, inst, p in payload["authors"]
    ]
    return Corpus(pubs, authors, dropped_citations=payload["dropped_citations"])
