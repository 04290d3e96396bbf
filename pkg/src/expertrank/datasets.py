"""Synthetic corpora with planted experts, for end-to-end checks.

Each topic gets a set of experts with long careers and many on-topic,
well-cited papers, plus "decoy" authors who write about as many on-topic
titles but are rarely cited.  Everyone else writes background papers.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .corpus import CONFERENCE, JOURNAL, Author, Corpus, Publication

__all__ = ["PlantedData", "make_planted_corpus", "write_planted"]

TOPICS = (
    "neural networks",
    "data mining",
    "semantic web",
    "computer vision",
    "information extraction",
    "support vector machines",
    "intelligent agents",
    "natural language",
    "boosting ensembles",
    "planning heuristics",
    "cryptography protocols",
    "machine learning",
)

_SYLLABLES = ("ka", "lo", "mi", "ne", "ru", "sa", "to", "vi", "ze", "po", "da", "fe")


def _filler_vocab(rng, size):
    words = set()
    while len(words) < size:
        n = rng.integers(2, 4)
        words.add("".join(rng.choice(_SYLLABLES, size=n)))
    return sorted(words)


@dataclass
class PlantedData:
    publications: list = field(default_factory=list)
    authors: list = field(default_factory=list)
    queries: dict = field(default_factory=dict)
    judgments: list = field(default_factory=list)
    experts: dict = field(default_factory=dict)
    decoys: dict = field(default_factory=dict)

    def corpus(self):
        return Corpus.from_records(self.publications, self.authors)

    @property
    def num_citation_links(self):
        return sum(len(p.cited_ids) for p in self.publications)


def make_planted_corpus(n_topics=8, experts_per_topic=12, decoys_per_topic=8,
                        n_authors=260, n_publications=2400, n_institutions=20,
                        first_year=1985, last_year=2010, seed=0):
    """Generate a :class:`PlantedData` bundle; identical seeds give identical data."""
    if n_topics > len(TOPICS):
        raise ValueError(f"at most {len(TOPICS)} topics")
    rng = np.random.default_rng(seed)
    vocab = _filler_vocab(rng, 400)
    topics = TOPICS[:n_topics]
    n_special = n_topics * (experts_per_topic + decoys_per_topic)
    if n_authors < n_special + 10:
        raise ValueError("n_authors too small for the requested planted roles")

    author_ids = [f"a{i:04d}" for i in range(n_authors)]
    order = rng.permutation(n_authors)
    experts, decoys, pos = {}, {}, 0
    for t in range(n_topics):
        experts[t] = sorted(author_ids[i] for i in order[pos:pos + experts_per_topic])
        pos += experts_per_topic
        decoys[t] = sorted(author_ids[i] for i in order[pos:pos + decoys_per_topic])
        pos += decoys_per_topic
    background = sorted(author_ids[i] for i in order[pos:])
    role = {a: ("background", None) for a in background}
    for t in range(n_topics):
        role.update({a: ("expert", t) for a in experts[t]})
        role.update({a: ("decoy", t) for a in decoys[t]})

    # career windows: experts start early, decoys later
    career = {}
    for a in author_ids:
        kind = role[a][0]
        if kind == "expert":
            start = int(rng.integers(first_year, first_year + 8))
            end = int(rng.integers(last_year - 4, last_year + 1))
        elif kind == "decoy":
            start = int(rng.integers(first_year + 4, last_year - 4))
            end = int(rng.integers(last_year - 3, last_year + 1))
        else:
            start = int(rng.integers(first_year, last_year - 3))
            end = int(min(last_year, start + rng.integers(3, 15)))
        career[a] = (start, end)

    def filler(n):
        return " ".join(rng.choice(vocab, size=n))

    # lead-author quotas; experts and decoys write mostly on-topic
    leads = []
    n_expert_pubs = int(0.30 * n_publications)
    n_decoy_pubs = int(0.22 * n_publications)
    for i in range(n_expert_pubs):
        leads.append(("expert", i % n_topics))
    for i in range(n_decoy_pubs):
        leads.append(("decoy", i % n_topics))
    leads.extend([("background", None)] * (n_publications - len(leads)))

    drafts = []
    for kind, t in leads:
        if kind == "background":
            lead = background[int(rng.integers(len(background)))]
            on_topic = False
        else:
            group = experts[t] if kind == "expert" else decoys[t]
            lead = group[int(rng.integers(len(group)))]
            on_topic = rng.random() < (0.75 if kind == "expert" else 0.9)
        start, end = career[lead]
        year = int(rng.integers(start, end + 1))
        coauthors = [lead]
        for _ in range(int(rng.integers(0, 3))):
            if kind == "expert" and rng.random() < 0.6:
                pick = experts[t][int(rng.integers(len(experts[t])))]
            else:
                pick = background[int(rng.integers(len(background)))]
            if pick not in coauthors:
                coauthors.append(pick)
        if on_topic:
            title = f"{filler(2)} {topics[t]} {filler(int(rng.integers(1, 4)))}"
        else:
            # background titles may use one topic word but never a full topic
            words = list(rng.choice(vocab, size=int(rng.integers(3, 7))))
            if rng.random() < 0.3:
                words.insert(1, rng.choice(TOPICS[int(rng.integers(n_topics))].split()))
            title = " ".join(words)
        abstract = ""
        if rng.random() < 0.6:
            abstract = filler(int(rng.integers(15, 40)))
            if on_topic:
                abstract = f"{abstract} {topics[t]} {filler(5)}"
        venue_kind = CONFERENCE if rng.random() < 0.6 else JOURNAL
        drafts.append({"year": year, "authors": coauthors, "title": title,
                       "abstract": abstract, "venue_kind": venue_kind,
                       "kind": kind, "on_topic": on_topic})

    drafts.sort(key=lambda d: d["year"])
    pub_ids = [f"p{i:05d}" for i in range(len(drafts))]
    appeal = np.array([
        8.0 if d["kind"] == "expert" and d["on_topic"] else
        0.4 if d["kind"] == "decoy" else
        1.0
        for d in drafts
    ])
    years = np.array([d["year"] for d in drafts])

    pubs = []
    for i, d in enumerate(drafts):
        older = np.flatnonzero(years < d["year"])
        cited = []
        if len(older):
            k = int(min(len(older), rng.integers(0, 9)))
            if k:
                p = appeal[older] / appeal[older].sum()
                cited = sorted(pub_ids[j] for j in rng.choice(older, size=k, replace=False, p=p))
        venue = f"{'Conf' if d['venue_kind'] == CONFERENCE else 'Journal'} {int(rng.integers(30))}"
        pubs.append(Publication(
            id=pub_ids[i], title=d["title"], year=d["year"], venue_name=venue,
            venue_kind=d["venue_kind"], author_ids=tuple(d["authors"]),
            cited_ids=tuple(cited), abstract=d["abstract"]))

    institutions = [f"Institute {i}" for i in range(n_institutions)]
    authors = []
    for a in author_ids:
        inst = institutions[int(rng.integers(n_institutions))] if rng.random() < 0.9 else None
        authors.append(Author(id=a, name=f"Author {a[1:]}", institution=inst))

    data = PlantedData(publications=pubs, authors=authors, experts=experts, decoys=decoys)
    written = {a for p in pubs for a in p.author_ids}
    for t, text in enumerate(topics):
        qid = f"q{t:02d}"
        data.queries[qid] = text
        for a in experts[t]:
            if a in written:
                data.judgments.append((qid, text, a, 1))
    return data


def write_planted(data, directory):
    """Write ``publications.tsv``, ``authors.tsv`` and ``judgments.tsv`` into ``directory``."""
    os.makedirs(directory, exist_ok=True)
    paths = {name: os.path.join(directory, f"{name}.tsv")
             for name in ("publications", "authors", "judgments")}
    with open(paths["publications"], "w", encoding="utf-8") as fh:
        for p in data.publications:
            kind = "C" if p.venue_kind == CONFERENCE else "J"
            fh.write("\t".join([p.id, str(p.year), kind, p.venue_name, ";".join(p.author_ids),
                                ";".join(p.cited_ids), p.title, p.abstract]) + "\n")
    with open(paths["authors"], "w", encoding="utf-8") as fh:
        for a in data.authors:
            fh.write("\t".join([a.id, a.name, a.institution or ""]) + "\n")
    with open(paths["judgments"], "w", encoding="utf-8") as fh:
        for qid, text, aid, rel in data.judgments:
            fh.write(f"{qid}\t{text}\t{aid}\t{rel}\n")
    return paths
