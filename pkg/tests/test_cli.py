import io
import json
import subprocess
import sys

import numpy as np
import pytest

from expertrank.cli import EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, main, read_config
from expertrank.datasets import make_planted_corpus, write_planted
from expertrank.features import FEATURES, N_FEATURES, group_mask, read_vectors
from expertrank.ranking.svm import RankingModel, load_model, save_model


def run(*argv):
    buf = io.StringIO()
    rc = main([str(a) for a in argv], out=buf)
    return rc, buf.getvalue()


@pytest.fixture(scope="module")
def planted(tmp_path_factory):
    root = tmp_path_factory.mktemp("planted")
    data = make_planted_corpus(n_topics=4, experts_per_topic=5, decoys_per_topic=3,
                               n_authors=60, n_publications=400, seed=3)
    paths = write_planted(data, root)
    paths["root"] = root
    paths["snapshot"] = str(root / "corpus.snap")
    rc, _ = run("ingest", "--publications", paths["publications"], "--authors", paths["authors"],
                "--snapshot", paths["snapshot"])
    assert rc == EXIT_OK
    paths["vectors"] = str(root / "all.vec")
    rc, _ = run("features", "--snapshot", paths["snapshot"], "--judgments", paths["judgments"],
                "--output", paths["vectors"])
    assert rc == EXIT_OK
    paths["data"] = data
    return paths


def test_ingest_prints_statistics(planted):
    rc, out = run("ingest", "--publications", planted["publications"], "--authors", planted["authors"])
    assert rc == EXIT_OK
    rows = dict(line.split("\t") for line in out.splitlines())
    assert rows["Total Authors"] == "60"
    assert rows["Total Publications"] == "400"
    assert int(rows["Total Number of Citations Links"]) == planted["data"].num_citation_links


def test_missing_input_is_a_validation_error(tmp_path, capsys):
    rc, _ = run("ingest", "--publications", tmp_path / "nope.tsv")
    assert rc == EXIT_VALIDATION
    assert "nope.tsv" in capsys.readouterr().err


def test_bad_arguments_are_usage_errors(capsys):
    assert run("ingest", "--no-such-flag")[0] == EXIT_USAGE
    assert run("frobnicate")[0] == EXIT_USAGE
    assert run()[0] == EXIT_USAGE
    assert run("features")[0] == EXIT_USAGE  # nothing to read
    capsys.readouterr()


def test_duplicate_id_names_the_id(tmp_path, capsys):
    path = tmp_path / "pubs.tsv"
    row = "p1\t2000\tC\tConf\ta1\t\tSome title\t\n"
    path.write_text(row + row.replace("Some", "Other"))
    rc, _ = run("ingest", "--publications", path)
    assert rc == EXIT_VALIDATION
    assert "'p1'" in capsys.readouterr().err


def test_features_file_and_schema(planted):
    pools = read_vectors(planted["vectors"])
    assert len(pools) == 4
    assert all(len(v.values) == N_FEATURES for p in pools for v in p.vectors)
    schema = json.loads(open(planted["vectors"] + ".schema.json").read())
    assert [(f["name"], f["group"]) for f in schema["features"]] == list(FEATURES)
    assert [f["index"] for f in schema["features"]] == list(range(1, N_FEATURES + 1))


def test_group_mask_leaves_other_slots_zero(planted, tmp_path):
    out = tmp_path / "text.vec"
    rc, _ = run("features", "--snapshot", planted["snapshot"], "--judgments", planted["judgments"],
                "--output", out, "--groups", "text")
    assert rc == EXIT_OK
    mask = np.array(group_mask(["text"]))
    X = np.vstack([p.X for p in read_vectors(out)])
    assert (X[:, ~mask] == 0).all()
    assert (X[:, mask] != 0).any()


def test_same_seed_same_bytes_other_seed_differs(planted, tmp_path):
    def build(name, seed):
        path = tmp_path / name
        run("features", "--snapshot", planted["snapshot"], "--judgments", planted["judgments"],
            "--output", path, "--seed", seed)
        return path.read_bytes()
    assert build("a.vec", 7) == build("b.vec", 7)
    assert build("a.vec", 7) != build("c.vec", 8)


def test_train_then_rank(planted, tmp_path):
    model = tmp_path / "m.model"
    rc, out = run("train", "--vectors", planted["vectors"], "--model", model, "--C", 1)
    assert rc == EXIT_OK and "pairwise" in out
    loaded = load_model(model)
    assert loaded.n_features == N_FEATURES and loaded.c_param == 1.0
    rc, out = run("rank", "--snapshot", planted["snapshot"], "--model", model,
                  "--query", planted["data"].queries["q00"], "-k", 5)
    assert rc == EXIT_OK
    lines = [line.split("\t") for line in out.splitlines()]
    assert len(lines) == 5
    scores = [float(s) for _, s in lines]
    assert scores == sorted(scores, reverse=True)


def test_zero_model_ranks_by_author_id(planted, tmp_path):
    path = tmp_path / "zero.model"
    save_model(RankingModel(np.zeros(N_FEATURES), 1.0, "pairwise"), path)
    rc, out = run("rank", "--snapshot", planted["snapshot"], "--model", path, "--query", "anything", "-k", 4)
    assert rc == EXIT_OK
    ids = [line.split("\t")[0] for line in out.splitlines()]
    assert ids == sorted(planted["data"].corpus().authors)[:4]


def test_rank_rejects_dimension_mismatch(planted, tmp_path, capsys):
    path = tmp_path / "short.model"
    save_model(RankingModel(np.ones(3), 1.0, "pairwise"), path)
    rc, _ = run("rank", "--snapshot", planted["snapshot"], "--model", path, "--query", "neural")
    assert rc != EXIT_OK
    assert "dimension mismatch" in capsys.readouterr().err


def test_evaluate_writes_report(planted, tmp_path):
    report = tmp_path / "r.tsv"
    rc, out = run("evaluate", "--vectors", planted["vectors"], "--folds", 2, "--report", report)
    assert rc == EXIT_OK
    assert report.read_text() == out
    assert out.splitlines()[-1].startswith("ALL\tmean")


def test_config_file_and_flag_precedence(planted, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# settings\ntrainer = listwise\nc_grid = 0.5\nfolds = 2\n")
    assert read_config(cfg)["trainer"] == "listwise"
    model = tmp_path / "m.model"
    rc, _ = run("--config", cfg, "train", "--vectors", planted["vectors"], "--model", model)
    assert rc == EXIT_OK
    m = load_model(model)
    assert (m.kind, m.c_param) == ("listwise", 0.5)
    rc, _ = run("--config", cfg, "train", "--vectors", planted["vectors"], "--model", model,
                "--trainer", "pairwise", "--c-grid", "2")
    m = load_model(model)
    assert rc == EXIT_OK and (m.kind, m.c_param) == ("pairwise", 2.0)


def test_missing_config_file(capsys, tmp_path):
    assert run("--config", tmp_path / "none.cfg", "evaluate")[0] == EXIT_VALIDATION
    capsys.readouterr()


def test_metrics_command(planted, tmp_path):
    author = planted["data"].experts[0][0]
    pr = tmp_path / "pr.tsv"
    rc, out = run("metrics", "--snapshot", planted["snapshot"], "--author", author,
                  "--query", planted["data"].queries["q00"], "--pagerank-out", pr)
    assert rc == EXIT_OK
    fields = dict(line.split("=", 1) for line in out.splitlines())
    assert fields["author"] == author and "h_index" in fields and "hb_index" in fields
    scores = [float(line.split("\t")[1]) for line in pr.read_text().splitlines()]
    assert len(scores) == 400 and sum(scores) == pytest.approx(1.0, abs=1e-6)
    assert run("metrics", "--snapshot", planted["snapshot"], "--author", "nobody")[0] == EXIT_VALIDATION


def test_module_entry_point(planted):
    proc = subprocess.run([sys.executable, "-m", "expertrank", "ingest", "--publications",
                           planted["publications"]], capture_output=True, text=True)
    assert proc.returncode == EXIT_OK
    assert proc.stdout.startswith("Total Authors")
