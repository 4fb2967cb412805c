import math

import pytest

import memrouter


def test_metrics():
    assert memrouter.porter_stem("caresses") == "caress"
    assert memrouter.normalize("The March 12, 2026.") == ["march", "12", "2026"]
    assert memrouter.token_f1("pottery hiking", "pottery hiking photography") == pytest.approx(0.8)
    assert memrouter.category_score("hiking, pottery", "pottery, hiking", "multi_hop") == 1.0
    assert memrouter.category_score("yes", "yes; she said so", "open_domain") == 1.0
    with pytest.raises(ValueError):
        memrouter.category_score("a", "b", "nonsense")


def test_embedding_and_stats():
    v = memrouter.hash_embed("hello world")
    assert len(v) == 256
    assert math.isclose(sum(x * x for x in v), 1.0, rel_tol=1e-5)
    assert memrouter.hash_embed("hello world") == v
    assert memrouter.percentile([1.0] * 10 + [100.0], 0.95) == 100.0
    point, lo, hi = memrouter.bootstrap_ci([0.0, 1.0] * 20, 2000, 3)
    assert lo <= point <= hi
    assert memrouter.budget_match([0.1, 0.9, 0.5, 0.7], 0.5) == [False, True, False, True]
    assert memrouter.parameter_count(1024, 1792, 3584) == 8291591


def test_config():
    c = memrouter.RunConfig()
    assert c.get("retrieval.k") == "60"
    d = memrouter.RunConfig.parse("retrieval.k = 20\n")
    assert d.hash() != c.hash()
    with pytest.raises(memrouter.MemrouterError):
        c.set("no.such.key", "1")


def test_ingest_and_evaluate(tmp_path):
    corpus_path = tmp_path / "corpus.jsonl"
    assert memrouter.synth("planted", str(corpus_path), 10, 4) == 10
    corpus = memrouter.Corpus.load(str(corpus_path))
    assert len(corpus) == 10
    assert corpus.conversation_ids[0] == "conv-000"

    full = memrouter.ingest(corpus, 0, "store-all")
    assert len(full) == corpus.turn_count(0)
    half = memrouter.ingest(corpus, 0, "random", budget=0.5)
    assert len(half) == math.floor(0.5 * corpus.turn_count(0) + 0.5)
    hits = full.search("What did they adopt?", "single_hop", k=10)
    assert 0 < len(hits) <= 10
    assert all(h[0] in full for h in hits)
    assert [h[1] for h in hits] == sorted((h[1] for h in hits), reverse=True)
    full.persist(str(tmp_path / "store.jsonl"))
    assert (tmp_path / "store.jsonl.emb").exists()

    conf = tmp_path / "run.conf"
    conf.write_text("paths.corpus = corpus.jsonl\neval.resamples = 1000\n")
    report = memrouter.evaluate(str(conf), "keyword", budget=0.45)
    assert report["generation_calls"]["write_path"] == 0
    assert report["generation_calls"]["read_path"] == report["questions"]
    assert 0.0 <= report["overall"]["f1"] <= 100.0
    again = memrouter.evaluate(str(conf), "keyword", budget=0.45)
    assert again["overall"] == report["overall"]
