#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "legalrank/errors.hpp"
#include "legalrank/pipeline.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace legalrank;

namespace {

struct Fixture {
    Corpus corpus;
    std::shared_ptr<const Embedder> embedder;
    RetrievalIndexes indexes;
    std::vector<QaPair> pairs;

    explicit Fixture(std::size_t docs, std::size_t questions = 60)
        : corpus(testing::synthetic_corpus(docs, 300, 77, 8, 40)),
          embedder(std::make_shared<HashedBowEmbedder>(256)) {
        indexes.dense = std::make_shared<EmbeddingIndex>(build_dense_index(corpus, *embedder));
        indexes.query_embedder = embedder;
        indexes.lexical = std::make_shared<InvertedIndex>(InvertedIndex::build(corpus));
        pairs = testing::synthetic_questions(corpus, questions, 5);
    }
};

class FailingScorer final : public Scorer {
  public:
    std::vector<double> score(const Question&, std::span<const Candidate>) const override {
        throw ScorerError("service unavailable");
    }
    std::string name() const override { return "failing"; }
};

class ShortScorer final : public Scorer {
  public:
    std::vector<double> score(const Question&, std::span<const Candidate> c) const override {
        return std::vector<double>(c.size() - 1, 0.0);
    }
    std::string name() const override { return "short"; }
};

std::set<std::string> cids(const RankedList& list) {
    std::set<std::string> out;
    for (const auto& d : list) {
        out.insert(d.cid);
    }
    return out;
}

}  // namespace

TEST_CASE("oracle scorer lifts the gold to rank one") {
    Corpus corpus({{"a", "luật đất đai"}, {"b", "thuế"}, {"c", "hôn nhân"}, {"d", "lao động"}, {"e", "giao thông"}});
    RankedList candidates{{"a", 5}, {"b", 4}, {"c", 3}, {"d", 2}, {"e", 1}};
    OracleScorer oracle(Qrels{{"q", {"d"}}});
    auto out = rerank({"q", "?"}, candidates, 3, oracle, corpus);
    REQUIRE(out.size() == 3);
    CHECK(out[0].cid == "d");
    CHECK(out[0].score == 1.0);
    CHECK(out[1].cid == "a");
}

TEST_CASE("constant scorer falls back to cid order") {
    Corpus corpus({{"c", "x"}, {"a", "y"}, {"b", "z"}});
    RankedList candidates{{"c", 3}, {"b", 2}, {"a", 1}};
    auto out = rerank({"q", "?"}, candidates, 3, ConstantScorer(0.5), corpus);
    CHECK(out == RankedList{{"a", 0.5}, {"b", 0.5}, {"c", 0.5}});
}

TEST_CASE("blend rerank of a 50-doc lexical pool") {
    Fixture fx(50, 10);
    PipelineConfig cfg;
    cfg.retriever = RetrieverKind::lexical;
    cfg.k_retrieve = 50;
    cfg.k_final = 10;
    auto lexical = std::make_shared<Bm25Scorer>(fx.indexes.lexical, cfg.bm25);
    auto dense = std::make_shared<CosineScorer>(fx.embedder);
    BlendScorer blend(lexical, dense);
    for (const auto& p : fx.pairs) {
        auto r = retrieve_rerank({p.qid, p.question}, cfg, fx.indexes, blend, fx.corpus);
        CHECK(r.reranked.size() == 10);
        auto pool = cids(r.candidates);
        for (const auto& d : r.reranked) {
            CHECK(pool.contains(d.cid));
            CHECK(d.score >= -1.0);
            CHECK(d.score <= 1.0 + 1e-12);
        }
        CHECK(std::is_sorted(r.reranked.begin(), r.reranked.end(), ranks_before));
    }
}

TEST_CASE("bm25 scorer agrees with lexical retrieval scores") {
    Fixture fx(80, 10);
    PipelineConfig cfg;
    cfg.retriever = RetrieverKind::lexical;
    cfg.k_retrieve = 30;
    cfg.k_final = 30;
    Bm25Scorer scorer(fx.indexes.lexical, cfg.bm25);
    for (const auto& p : fx.pairs) {
        auto r = retrieve_rerank({p.qid, p.question}, cfg, fx.indexes, scorer, fx.corpus);
        REQUIRE(r.reranked.size() == r.candidates.size());
        for (std::size_t i = 0; i < r.candidates.size(); ++i) {
            CHECK(r.reranked[i].cid == r.candidates[i].cid);
            CHECK(std::abs(r.reranked[i].score - r.candidates[i].score) < 1e-12);
        }
    }
}

TEST_CASE("with the oracle scorer MRR equals Exist") {
    Fixture fx(500);
    auto evalset = make_eval_set(fx.pairs);
    for (auto kind : {RetrieverKind::dense, RetrieverKind::lexical}) {
        PipelineConfig cfg;
        cfg.retriever = kind;
        auto ev = evaluate_pipeline(evalset, cfg, fx.indexes, OracleScorer(evalset.qrels), fx.corpus);
        CHECK(ev.report.mrr == ev.report.exist);
        CHECK(ev.report.exist > 0.0);
        CHECK(ev.report.exist == oracle::exist(ev.stage1, evalset.qrels, 90));
        CHECK(ev.report.mrr == oracle::mrr(ev.stage2, evalset.qrels, 10));
    }
}

TEST_CASE("stage 2 stays inside the stage 1 pool and Exist bounds MRR") {
    Fixture fx(500);
    auto evalset = make_eval_set(fx.pairs);
    PipelineConfig cfg;
    auto ev = evaluate_pipeline(evalset, cfg, fx.indexes, CosineScorer(fx.embedder), fx.corpus, 3);
    for (const auto& [qid, list] : ev.stage2) {
        auto pool = cids(ev.stage1.at(qid));
        CHECK(ev.stage1.at(qid).size() == 90);
        CHECK(list.size() == 10);
        for (const auto& d : list) {
            CHECK(pool.contains(d.cid));
        }
    }
    CHECK(ev.report.exist >= ev.report.mrr);
    CHECK(ev.report.num_queries == evalset.qrels.size());
}

TEST_CASE("k_retrieve at least the corpus size returns everything") {
    Fixture fx(40, 5);
    PipelineConfig cfg;
    cfg.k_retrieve = 100;
    cfg.k_final = 100;
    for (const auto& p : fx.pairs) {
        auto r = retrieve_rerank({p.qid, p.question}, cfg, fx.indexes, ConstantScorer(), fx.corpus);
        CHECK(r.candidates.size() == 40);
        CHECK(r.reranked.size() == 40);
    }
}

TEST_CASE("evaluation is deterministic across runs and thread counts") {
    Fixture fx(200);
    auto evalset = make_eval_set(fx.pairs);
    PipelineConfig cfg;
    auto one = evaluate_pipeline(evalset, cfg, fx.indexes, CosineScorer(fx.embedder), fx.corpus, 1);
    auto four = evaluate_pipeline(evalset, cfg, fx.indexes, CosineScorer(fx.embedder), fx.corpus, 4);
    std::ostringstream a, b;
    write_run(a, one.stage2);
    write_run(b, four.stage2);
    CHECK(a.str() == b.str());
    CHECK(one.report.exist == four.report.exist);
    CHECK(one.report.mrr == four.report.mrr);
}

TEST_CASE("errors name the failing stage") {
    Fixture fx(30, 2);
    PipelineConfig cfg;
    Question q{fx.pairs[0].qid, fx.pairs[0].question};
    try {
        retrieve_rerank(q, cfg, fx.indexes, FailingScorer(), fx.corpus);
        FAIL("expected an error");
    } catch (const PipelineError& e) {
        CHECK(std::string(e.what()).find("stage 2") != std::string::npos);
        CHECK(std::string(e.what()).find("failing") != std::string::npos);
    }
    RetrievalIndexes none;
    try {
        retrieve_rerank(q, cfg, none, ConstantScorer(), fx.corpus);
        FAIL("expected an error");
    } catch (const PipelineError& e) {
        CHECK(std::string(e.what()).find("stage 1") != std::string::npos);
    }
    CHECK_THROWS_AS(retrieve_rerank(q, cfg, fx.indexes, ShortScorer(), fx.corpus), PipelineError);
    CHECK_THROWS_AS(rerank(q, {{"d1000", 1.0}}, 5, ShortScorer(), fx.corpus), ProtocolError);
}

TEST_CASE("evaluation errors carry the qid") {
    Fixture fx(30, 3);
    try {
        evaluate_pipeline(make_eval_set(fx.pairs), PipelineConfig{}, fx.indexes, FailingScorer(), fx.corpus);
        FAIL("expected an error");
    } catch (const PipelineError& e) {
        CHECK(std::string(e.what()).find("qid 'q") != std::string::npos);
    }
}

TEST_CASE("configuration validation") {
    Fixture fx(10, 1);
    PipelineConfig bad;
    bad.k_final = 91;
    CHECK_THROWS_AS(bad.validate(), ParameterError);
    bad = PipelineConfig{};
    bad.k_retrieve = 0;
    CHECK_THROWS_AS(bad.validate(), ParameterError);
    CHECK_THROWS_AS(evaluate_pipeline(EvalSet{}, PipelineConfig{}, fx.indexes, ConstantScorer(), fx.corpus),
                    ParameterError);
    CHECK(parse_retriever_kind("lexical") == RetrieverKind::lexical);
    CHECK_THROWS_AS(parse_retriever_kind("sparse"), ParameterError);
}

TEST_CASE("make_eval_set groups golds per question") {
    std::vector<QaPair> pairs{{"q2", "b", "x"}, {"q1", "a", "y"}, {"q2", "b", "z"}};
    auto set = make_eval_set(pairs);
    REQUIRE(set.questions.size() == 2);
    CHECK(set.questions[0].qid == "q2");
    CHECK(set.qrels.at("q2") == std::set<std::string>{"x", "z"});
}
