"""Command-line entry point: ``expertrank <subcommand> [options]``.

Settings come from built-in defaults, then an optional flat ``key = value``
config file (``--config``), then command-line flags; later sources win.

Exit codes: 0 success, 1 usage, 2 validation, 3 runtime.
"""

from __future__ import annotations

import argparse
import configparser
import logging
import os
import sys

import numpy as np

from . import metrics as m
from .corpus import CorpusError, compute_stats, load_corpus, load_snapshot, save_snapshot
from .features import (FEATURE_GROUPS, ExpertFeatureExtractor, build_pools, min_max_scale,
                       pools_to_arrays, read_judgments, read_vectors, write_feature_schema,
                       write_vectors)
from .ranking.evaluation import (DEFAULT_C_GRID, cross_validate, make_ranker, select_C,
                                 write_report)
from .ranking.svm import load_model, save_model
from .text import Query

log = logging.getLogger("expertrank")

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_RUNTIME = 0, 1, 2, 3

DEFAULTS = {
    "bm25.k1": "1.2",
    "bm25.b": "0.75",
    "index.gamma": "4",
    "index.delta": "1",
    "pagerank.tol": "1e-9",
    "pagerank.max_iter": "200",
    "pagerank.damping": "0.5",
    "groups": ",".join(FEATURE_GROUPS),
    "trainer": "pairwise",
    "c_grid": ",".join(str(c) for c in DEFAULT_C_GRID),
    "folds": "4",
    "seed": "0",
    "listwise.epsilon": "1e-3",
    "listwise.max_iter": "200",
    "k": "10",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def read_config(path):
    """Parse a flat ``key = value`` file (``#`` comments allowed)."""
    if not os.path.exists(path):
        raise FileNotFoundError(f"config file not found: {path}")
    parser = configparser.ConfigParser(delimiters=("=",), comment_prefixes=("#",),
                                       interpolation=None)
    parser.optionxform = str
    with open(path, encoding="utf-8") as fh:
        parser.read_string("[run]\n" + fh.read(), source=path)
    return dict(parser["run"])


class Settings:
    """Merged view of defaults, config file and flags."""

    def __init__(self, args):
        self._values = dict(DEFAULTS)
        if args.config:
            self._values.update(read_config(args.config))
        for key, value in vars(args).items():
            if value is not None and key not in ("config", "command", "func", "verbose"):
                self._values[key.replace("__", ".")] = value

    def get(self, key, default=None):
        return self._values.get(key, default)

    def require(self, key):
        value = self._values.get(key)
        if value in (None, ""):
            raise UsageError(f"missing setting {key!r} (flag or config file)")
        return value

    def float(self, key):
        return float(self.require(key))

    def int(self, key):
        return int(self.require(key))

    def optional_int(self, key):
        value = self.get(key)
        return None if value in (None, "") else int(value)

    def list(self, key):
        value = self.require(key)
        if isinstance(value, (list, tuple)):
            return list(value)
        return [x.strip() for x in str(value).split(",") if x.strip()]


def _existing(path):
    if not os.path.exists(path):
        raise FileNotFoundError(f"file not found: {path}")
    return path


def _load_corpus(settings):
    snapshot = settings.get("snapshot")
    if snapshot and os.path.exists(snapshot):
        return load_snapshot(snapshot)
    pubs = settings.get("publications")
    if not pubs:
        if snapshot:
            raise FileNotFoundError(f"file not found: {snapshot}")
        raise UsageError("need --snapshot or --publications")
    authors = settings.get("authors")
    return load_corpus(_existing(pubs), _existing(authors) if authors else None)


def _extractor(settings, corpus):
    return ExpertFeatureExtractor(
        k1=settings.float("bm25.k1"), b=settings.float("bm25.b"),
        gamma=settings.float("index.gamma"), delta=settings.float("index.delta"),
        current_year=settings.optional_int("current_year"),
        damping=settings.float("pagerank.damping"),
        pagerank_tol=settings.float("pagerank.tol"),
        pagerank_max_iter=settings.int("pagerank.max_iter"),
        groups=tuple(settings.list("groups")),
    ).fit(corpus)


def _ranker(settings, C=1.0):
    kind = settings.require("trainer")
    if kind == "listwise":
        return make_ranker(kind, C=C, epsilon=settings.float("listwise.epsilon"),
                           max_iter=settings.int("listwise.max_iter"))
    return make_ranker(kind, C=C)


# -- subcommands -------------------------------------------------------------

def cmd_ingest(settings, out):
    corpus = load_corpus(_existing(settings.require("publications")),
                         _existing(settings.get("authors")) if settings.get("authors") else None)
    snapshot = settings.get("snapshot")
    if snapshot:
        save_snapshot(corpus, snapshot)
    stats = compute_stats(corpus, settings.optional_int("current_year"))
    for name, value in stats.as_rows():
        out.write(f"{name}\t{value}\n")


def cmd_features(settings, out):
    corpus = _load_corpus(settings)
    queries, judgments = read_judgments(_existing(settings.require("judgments")))
    extractor = _extractor(settings, corpus)
    pools = build_pools(corpus, queries, judgments, extractor, seed=settings.int("seed"))
    output = settings.require("output")
    write_vectors(pools, output)
    write_feature_schema(output + ".schema.json")
    n = sum(len(p.vectors) for p in pools)
    out.write(f"wrote {n} vectors for {len(pools)} queries to {output}\n")


def cmd_train(settings, out):
    pools = read_vectors(_existing(settings.require("vectors")))
    pools = [p for p in pools if p.is_trainable()]
    if not pools:
        raise ValueError("no trainable queries in the vector file")
    estimator = _ranker(settings)
    if settings.get("C") is not None:
        C = float(settings.get("C"))
    else:
        grid = [float(c) for c in settings.list("c_grid")]
        C = select_C(estimator, pools, grid, settings.int("seed"))
    X, y, qid = pools_to_arrays(pools)
    model = estimator.set_params(C=C).fit(X, y, qid).to_model()
    save_model(model, settings.require("model"))
    out.write(f"trained {model.kind} model, C={C!r}, objective={model.training_meta['objective']!r}\n")


def cmd_evaluate(settings, out):
    pools = read_vectors(_existing(settings.require("vectors")))
    grid = [float(c) for c in settings.list("c_grid")]
    report = cross_validate(pools, folds=settings.int("folds"), trainer=_ranker(settings),
                            c_grid=grid, seed=settings.int("seed"))
    if settings.get("report"):
        write_report(report, settings.get("report"))
    write_report(report, out)


def rank_authors(corpus, model, query, extractor):
    """Score every corpus author for ``query``; returns ``[(author_id, score)]`` best first."""
    author_ids = sorted(corpus.authors)
    X = np.array([extractor.extract(query, a).values for a in author_ids])
    if X.shape[1] != model.n_features:
        raise ValueError(f"dimension mismatch: model has {model.n_features} weights, "
                         f"features have {X.shape[1]}")
    scores = min_max_scale(X) @ model.weights
    order = sorted(range(len(author_ids)), key=lambda i: (-scores[i], author_ids[i]))
    return [(author_ids[i], float(scores[i])) for i in order]


def cmd_rank(settings, out):
    corpus = _load_corpus(settings)
    model = load_model(_existing(settings.require("model")))
    query = Query.from_text("adhoc", settings.require("query"))
    k = settings.int("k")
    ranked = rank_authors(corpus, model, query, _extractor(settings, corpus))
    for aid, s in ranked[:k]:
        out.write(f"{aid}\t{s!r}\n")


def cmd_metrics(settings, out):
    corpus = _load_corpus(settings)
    extractor = _extractor(settings, corpus)
    cache = extractor.cache_
    if settings.get("pagerank_out"):
        with open(settings.get("pagerank_out"), "w", encoding="utf-8") as fh:
            for pid, s in cache.pagerank.scores.items():
                fh.write(f"{pid}\t{s!r}\n")
    author_id = settings.get("author")
    if not author_id:
        return
    if author_id not in corpus.authors:
        raise ValueError(f"unknown author {author_id!r}")
    info = cache.author_info(author_id)
    report = {"author": author_id,
              "institution": corpus.authors[author_id].institution or "",
              "publications": len(corpus.authors[author_id].publication_ids),
              **{k: v for k, v in info.items()}}
    text = settings.get("query")
    if text:
        query = Query.from_text("adhoc", text)
        stats = m.citation_stats(author_id, query, corpus, cache.text_index)
        hits = [p for p in corpus.authors[author_id].publication_ids
                if p in cache.query_info(query)["matching"]]
        pr = [cache.pagerank.scores[p] for p in hits]
        report.update(
            query=" ".join(query.terms),
            hb_index=cache.query_info(query)["hb_index"],
            matching_citations_total=stats.total_matching,
            matching_citations_avg=stats.avg_matching,
            matching_citations_max=stats.max_matching,
            pagerank_sum=sum(pr),
            pagerank_mean=sum(pr) / len(pr) if pr else 0.0,
        )
    for key, value in report.items():
        out.write(f"{key}={value}\n")


# -- argument parsing --------------------------------------------------------

def _corpus_flags(p):
    p.add_argument("--publications", help="publication TSV file")
    p.add_argument("--authors", help="author TSV file")
    p.add_argument("--snapshot", help="corpus snapshot path")


def _feature_flags(p):
    p.add_argument("--groups", help="comma-separated feature groups (text,profile,graph)")
    p.add_argument("--k1", dest="bm25__k1")
    p.add_argument("--b", dest="bm25__b")
    p.add_argument("--gamma", dest="index__gamma")
    p.add_argument("--delta", dest="index__delta")
    p.add_argument("--current-year", dest="current_year")
    p.add_argument("--damping", dest="pagerank__damping")
    p.add_argument("--pagerank-tol", dest="pagerank__tol")
    p.add_argument("--pagerank-max-iter", dest="pagerank__max_iter")


def _trainer_flags(p):
    p.add_argument("--trainer", choices=("pairwise", "listwise"))
    p.add_argument("--c-grid", dest="c_grid", help="comma-separated C candidates")
    p.add_argument("--seed")
    p.add_argument("--epsilon", dest="listwise__epsilon")
    p.add_argument("--max-iter", dest="listwise__max_iter")


def build_parser():
    parser = _Parser(prog="expertrank", description="Learning to rank for expert search.")
    parser.add_argument("--config", help="flat key = value settings file")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("ingest", help="validate a corpus, write a snapshot, print statistics")
    _corpus_flags(p)
    p.add_argument("--current-year", dest="current_year")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("features", help="build judged pools and write feature vectors")
    _corpus_flags(p)
    _feature_flags(p)
    p.add_argument("--judgments")
    p.add_argument("--output", "-o")
    p.add_argument("--seed")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", help="train a ranking model from feature vectors")
    p.add_argument("--vectors")
    p.add_argument("--model", "-o")
    p.add_argument("--C", dest="C", type=float)
    _trainer_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="query-level cross-validation report")
    p.add_argument("--vectors")
    p.add_argument("--folds")
    p.add_argument("--report", "-o")
    _trainer_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("rank", help="rank corpus authors for a free-text query")
    _corpus_flags(p)
    _feature_flags(p)
    p.add_argument("--model")
    p.add_argument("--query", "-q")
    p.add_argument("-k", dest="k")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("metrics", help="print bibliometric indices for an author")
    _corpus_flags(p)
    _feature_flags(p)
    p.add_argument("--author")
    p.add_argument("--query", "-q", help="optional topic for query-dependent metrics")
    p.add_argument("--pagerank-out", dest="pagerank_out",
                   help="write publication PageRank scores as TSV")
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s: %(message)s")
        settings = Settings(args)
        args.func(settings, out)
    except UsageError as exc:
        print(f"expertrank: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CorpusError, FileNotFoundError, ValueError, KeyError) as exc:
        print(f"expertrank: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001 - last-resort exit code
        print(f"expertrank: runtime error: {exc!r}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
