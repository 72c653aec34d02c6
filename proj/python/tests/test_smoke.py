import math
import os
from pathlib import Path

import pytest

import kfqg

ROOT = Path(os.environ.get("KFQG_SOURCE_DIR", Path(__file__).resolve().parents[2]))


def ring(n):
    nodes = [{"id": f"n{i}", "title": f"n{i}", "definition": f"definition of n{i}"} for i in range(n)]
    edges = [{"source": f"n{i}", "target": f"n{(i + 1) % n}", "relation": "r"} for i in range(n)]
    return {"center": "n0", "nodes": nodes, "edges": edges}


def test_pagerank_on_a_ring_is_uniform():
    w = kfqg.pagerank(ring(6))
    assert len(w) == 6
    assert all(math.isclose(v, 1 / 6, rel_tol=1e-6) for v in w.values())


def test_random_walk_counts_the_start():
    visits = kfqg.random_walk_visits(ring(5), 100, 0.15, 7)
    assert sum(visits.values()) == 101
    assert visits == kfqg.random_walk_visits(ring(5), 100, 0.15, 7)


def test_selection_scores():
    norm = kfqg.normalize_importance({"a": 1.0, "b": 3.0, "c": 2.0})
    assert norm == {"a": 0.0, "b": 1.0, "c": 0.5}
    assert kfqg.normalize_importance({"a": 2.0, "b": 2.0}) == {"a": 0.5, "b": 0.5}
    r = kfqg.composite_score({"a": 0.5}, {"a": 0.4}, 2)
    assert math.isclose(r["a"], 1.3)
    assert kfqg.composite_score({"a": 0.5}, {"a": 0.4}, "inf") == {"a": 0.4}
    with pytest.raises(kfqg.KfqgError):
        kfqg.composite_score({"a": 0.5}, {"a": 0.4}, -1)


def test_metrics():
    assert kfqg.distinct_n(["a b a"], 1) == pytest.approx(2 / 3)
    assert kfqg.bleu("the cat sat", "the cat sat", 2) == pytest.approx(1.0)
    assert kfqg.bleu("dog", "cat", 1) == 0.0
    assert kfqg.mutual_information([("apple", "apple")]) == 0.0
    assert 0.0 <= kfqg.ttr(["a b c a"]) <= 1.0


def test_load_triplets():
    load = kfqg.load_triplets(ROOT / "data/fixtures/qa10.jsonl")
    assert len(load["triplets"]) == 10
    assert load["errors"] == []
    with pytest.raises(kfqg.KfqgError):
        kfqg.load_triplets(ROOT / "data/fixtures/missing.jsonl")


def test_pipeline_runs_the_mock_config():
    p = kfqg.Pipeline(ROOT / "configs/mock.json")
    first = kfqg.load_triplets(ROOT / "data/fixtures/qa10.jsonl")["triplets"][0]
    r = p.run(first["initial_question"], first["answer"])
    assert r["status"]["ok"]
    assert r["question"]["text"].endswith("?")
    assert r == p.run(first["initial_question"], first["answer"])
    inf = p.with_beta("inf").run(first["initial_question"], first["answer"])
    assert inf["status"]["ok"]
    again = kfqg.Pipeline.from_config(p.config, ROOT / "configs")
    assert again.run(first["initial_question"], first["answer"]) == r
