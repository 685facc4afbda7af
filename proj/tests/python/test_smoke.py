import math

import numpy as np
import pytest

import legalrank as lr
from legalrank import losslab


@pytest.fixture()
def corpus(data_dir):
    return lr.load_corpus(str(data_dir / "corpus.csv"))


@pytest.fixture()
def pairs(data_dir, corpus):
    return lr.normalize_qa(lr.load_qa(str(data_dir / "qa.csv")), corpus)


def test_ingest_fixture(corpus, pairs):
    assert len(corpus) == 10
    assert sum(p.qid == "q4" for p in pairs) == 2
    train, held_out = lr.split_train_eval(pairs, 0.5, 7)
    assert {p.qid for p in train}.isdisjoint({p.qid for p in held_out})


def test_bm25_closed_form():
    index = lr.InvertedIndex.from_tokens(["d"], [["x"]])
    okapi = lr.bm25_score(index, lr.Bm25Params("okapi", 1.2, 0.75), ["x"], "d")
    plus = lr.bm25_score(index, lr.Bm25Params("plus", 1.2, 0.75), ["x"], "d")
    assert okapi == pytest.approx(math.log(4 / 3), abs=1e-12)
    assert plus == pytest.approx(2 * math.log(2), abs=1e-12)
    assert len(lr.bm25_comparison_grid()) == 11


def test_lexical_search_and_round_trip(corpus, tmp_path):
    index = lr.InvertedIndex.build(corpus)
    hits = lr.lexical_search(index, lr.Bm25Params(), "đất đai", 3)
    assert 1 <= len(hits) <= 3
    assert all(a.score >= b.score for a, b in zip(hits, hits[1:]))
    path = tmp_path / "lex.idx"
    index.save(str(path))
    assert lr.InvertedIndex.load(str(path)) == index


def test_metrics_and_report():
    run = {"q1": [lr.ScoredDoc("a", 2.0), lr.ScoredDoc("g", 1.0)], "q2": [lr.ScoredDoc("b", 1.0)]}
    qrels = {"q1": {"g"}, "q2": {"z"}, "q3": {"y"}}
    assert lr.exist_at_m(run, qrels, 2) == pytest.approx(1 / 3)
    assert lr.mrr_at_k(run, qrels, 2) == pytest.approx(1 / 6)
    report = lr.evaluate_run(run, qrels, 2, 2).to_dict()
    assert report["N"] == 3
    assert report["display"]["exist@m"] == "0.3333"


def test_dense_pipeline_with_oracle(corpus, pairs):
    embedder = lr.HashedBowEmbedder(64)
    dense = lr.build_dense_index(corpus, embedder)
    indexes = lr.RetrievalIndexes(dense=dense, query_embedder=embedder)
    evalset = lr.make_eval_set(pairs)
    config = lr.PipelineConfig("dense", 8, 3)
    result = lr.evaluate_pipeline(evalset, config, indexes, lr.OracleScorer(evalset.qrels), corpus)
    assert result.report.to_dict()["mrr@k"] == result.report.to_dict()["exist@m"]
    for qid, ranked in result.stage2.items():
        pool = {d.cid for d in result.stage1[qid]}
        assert {d.cid for d in ranked} <= pool


def test_python_scorer_subclass(corpus):
    class LengthScorer(lr.Scorer):
        def score(self, question, candidates):
            return [float(len(text)) for _, text in candidates]

        def name(self):
            return "length"

    index = lr.InvertedIndex.build(corpus)
    indexes = lr.RetrievalIndexes(lexical=index)
    config = lr.PipelineConfig("lexical", 10, 10)
    out = lr.retrieve_rerank(lr.Question("q", "luật"), config, indexes, LengthScorer(), corpus)
    lengths = [len(corpus.lookup(d.cid).text) for d in out.reranked]
    assert lengths == sorted(lengths, reverse=True)


def test_pipeline_errors_are_typed(corpus):
    with pytest.raises(lr.ParameterError):
        lr.PipelineConfig("dense", 5, 10)
    with pytest.raises(lr.PipelineError):
        lr.retrieve_rerank(lr.Question("q", "x"), lr.PipelineConfig(), lr.RetrievalIndexes(),
                           lr.ConstantScorer(), corpus)
    with pytest.raises(lr.NotFoundError):
        corpus.lookup("nope")
    assert issubclass(lr.PipelineError, lr.Error)


def test_mining(corpus):
    group = lr.QuestionGroup("q", "?", ["1001"])
    candidates = [lr.ScoredDoc(c, 1.0 - i / 10) for i, c in enumerate(["1001", "1002", "1003", "1004"])]
    hard = lr.mine_negatives(group, candidates, corpus, lr.MiningConfig("hard", 2))
    assert hard == ["1002", "1003"]
    easy = lr.mine_negatives(group, [], corpus, lr.MiningConfig("easy", 3, seed=5))
    assert len(set(easy)) == 3 and "1001" not in easy
    bands = lr.band_stats([0.1, 0.6, 0.85, 0.95]).to_dict()
    assert bands["ge_0_9"] == 0.25 and bands["mean"] == pytest.approx(0.625)


def test_losslab():
    report = losslab.mnrl_loss(np.eye(2))
    assert report.loss == pytest.approx(math.log1p(math.exp(-20)), abs=1e-12)
    bce = losslab.bce_with_logits(np.array([math.log(9)]), np.array([0.0]))
    assert bce.gradient[0] == pytest.approx(0.9, abs=1e-12)
    x = np.array([0.3, -0.2, 0.5])
    numeric = losslab.finite_diff(lambda v: float(np.dot(v, v)), x)
    assert np.allclose(numeric, 2 * x, atol=1e-8)


def test_toy_training_contrast():
    pairs = losslab.demo_pairs()
    config = losslab.demo_config()
    mnrl = losslab.toy_train(pairs, "mnrl", config).trace
    mse = losslab.toy_train(pairs, "cosine_mse", config).trace
    gap = lambda t: t.diag_mean - t.offdiag_mean
    assert gap(mnrl[-1]) > gap(mse[-1])
    assert mse[-1].offdiag_mean > mse[0].offdiag_mean
