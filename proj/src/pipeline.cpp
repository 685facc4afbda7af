#include "legalrank/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <thread>
#include <unordered_set>

#include "legalrank/errors.hpp"

namespace legalrank {

// ---------------------------------------------------------------------------
// Scorers

CosineScorer::CosineScorer(std::shared_ptr<const Embedder> embedder) : embedder_(std::move(embedder)) {
    if (!embedder_) {
        throw ParameterError("cosine scorer needs an embedder");
    }
}

std::vector<double> CosineScorer::score(const Question& question, std::span<const Candidate> candidates) const {
    EmbedItem q{question.qid, question.text};
    auto qv = embedder_->embed(std::span<const EmbedItem>(&q, 1)).at(0);
    std::vector<EmbedItem> items;
    items.reserve(candidates.size());
    for (const auto& c : candidates) {
        items.push_back(EmbedItem{c.cid, c.text});
    }
    auto dv = embedder_->embed(items);
    std::vector<double> scores;
    scores.reserve(candidates.size());
    for (const auto& v : dv) {
        scores.push_back(cosine(qv, v));
    }
    return scores;
}

Bm25Scorer::Bm25Scorer(std::shared_ptr<const InvertedIndex> index, Bm25Params params,
                       std::shared_ptr<const Segmenter> segmenter)
    : index_(std::move(index)), params_(params), segmenter_(std::move(segmenter)) {
    if (!index_) {
        throw ParameterError("bm25 scorer needs a lexical index");
    }
    params_.validate();
}

std::vector<double> Bm25Scorer::score(const Question& question, std::span<const Candidate> candidates) const {
    const Segmenter& seg = segmenter_ ? *segmenter_ : default_segmenter();
    auto tokens = seg.segment_one(question.text);
    std::vector<double> scores;
    scores.reserve(candidates.size());
    for (const auto& c : candidates) {
        scores.push_back(bm25_score(*index_, params_, tokens, c.cid));
    }
    return scores;
}

BlendScorer::BlendScorer(std::shared_ptr<const Bm25Scorer> lexical, std::shared_ptr<const CosineScorer> dense,
                         double lexical_weight, double dense_weight)
    : lexical_(std::move(lexical)), dense_(std::move(dense)), lexical_weight_(lexical_weight),
      dense_weight_(dense_weight) {
    if (!lexical_ || !dense_) {
        throw ParameterError("blend scorer needs both a bm25 and a cosine scorer");
    }
}

std::vector<double> BlendScorer::score(const Question& question, std::span<const Candidate> candidates) const {
    auto lex = lexical_->score(question, candidates);
    auto cos = dense_->score(question, candidates);
    std::vector<double> out(candidates.size(), 0.0);
    if (candidates.empty()) {
        return out;
    }
    auto [lo, hi] = std::minmax_element(lex.begin(), lex.end());
    const double range = *hi - *lo;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double norm = range > 0.0 ? (lex[i] - *lo) / range : 0.0;
        out[i] = lexical_weight_ * norm + dense_weight_ * cos[i];
    }
    return out;
}

std::vector<double> remote_score(const RemoteScorerConfig& config, std::string_view question,
                                 std::span<const std::string> documents) {
    if (config.batch_size == 0) {
        throw ParameterError("remote scorer batch size must be >= 1");
    }
    const std::size_t batches = (documents.size() + config.batch_size - 1) / config.batch_size;
    std::vector<std::vector<double>> results(batches);

    auto run_batch = [&](std::size_t b) {
        const std::size_t begin = b * config.batch_size;
        const std::size_t end = std::min(documents.size(), begin + config.batch_size);
        nlohmann::json request;
        request["query"] = std::string(question);
        request["documents"] = nlohmann::json::array();
        for (std::size_t i = begin; i < end; ++i) {
            request["documents"].push_back(documents[i]);
        }
        auto response = post_json(config.endpoint, request);
        if (!response.is_object() || !response.contains("scores") || !response["scores"].is_array()) {
            throw ProtocolError(config.endpoint.url + ": response has no 'scores' array");
        }
        const auto& scores = response["scores"];
        if (scores.size() != end - begin) {
            throw ProtocolError(config.endpoint.url + ": returned " + std::to_string(scores.size()) +
                                " scores for " + std::to_string(end - begin) + " documents");
        }
        std::vector<double> out;
        out.reserve(scores.size());
        for (const auto& s : scores) {
            if (!s.is_number()) {
                throw ProtocolError(config.endpoint.url + ": non-numeric score");
            }
            out.push_back(s.get<double>());
        }
        results[b] = std::move(out);
    };

    const std::size_t in_flight = std::max<std::size_t>(1, config.max_in_flight);
    for (std::size_t wave = 0; wave < batches; wave += in_flight) {
        const std::size_t wave_end = std::min(batches, wave + in_flight);
        if (wave_end - wave == 1) {
            run_batch(wave);
            continue;
        }
        std::vector<std::future<void>> pending;
        for (std::size_t b = wave; b < wave_end; ++b) {
            pending.push_back(std::async(std::launch::async, run_batch, b));
        }
        std::exception_ptr first;
        for (auto& f : pending) {
            try {
                f.get();
            } catch (...) {
                if (!first) {
                    first = std::current_exception();
                }
            }
        }
        if (first) {
            std::rethrow_exception(first);
        }
    }

    std::vector<double> scores;
    scores.reserve(documents.size());
    for (auto& part : results) {
        scores.insert(scores.end(), part.begin(), part.end());
    }
    return scores;
}

RemoteScorer::RemoteScorer(RemoteScorerConfig config) : config_(std::move(config)) {}

std::vector<double> RemoteScorer::score(const Question& question, std::span<const Candidate> candidates) const {
    std::vector<std::string> docs;
    docs.reserve(candidates.size());
    for (const auto& c : candidates) {
        docs.emplace_back(c.text);
    }
    return remote_score(config_, question.text, docs);
}

OracleScorer::OracleScorer(Qrels qrels) : qrels_(std::move(qrels)) {}

std::vector<double> OracleScorer::score(const Question& question, std::span<const Candidate> candidates) const {
    std::vector<double> scores(candidates.size(), 0.0);
    auto it = qrels_.find(question.qid);
    if (it == qrels_.end()) {
        return scores;
    }
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (it->second.contains(std::string(candidates[i].cid))) {
            scores[i] = 1.0;
        }
    }
    return scores;
}

// ---------------------------------------------------------------------------
// Pipeline

std::string_view to_string(RetrieverKind kind) {
    return kind == RetrieverKind::dense ? "dense" : "lexical";
}

RetrieverKind parse_retriever_kind(std::string_view name) {
    if (name == "dense") {
        return RetrieverKind::dense;
    }
    if (name == "lexical") {
        return RetrieverKind::lexical;
    }
    throw ParameterError("unknown retriever '" + std::string(name) + "' (expected dense or lexical)");
}

void PipelineConfig::validate() const {
    if (k_retrieve < 1 || k_final < 1) {
        throw ParameterError("pipeline: k_retrieve and k_final must be >= 1");
    }
    if (k_final > k_retrieve) {
        throw ParameterError("pipeline: k_final (" + std::to_string(k_final) + ") exceeds k_retrieve (" +
                             std::to_string(k_retrieve) + ")");
    }
    bm25.validate();
}

RankedList retrieve(const Question& question, const PipelineConfig& config, const RetrievalIndexes& indexes) {
    config.validate();
    if (config.retriever == RetrieverKind::lexical) {
        if (!indexes.lexical) {
            throw PipelineError("lexical retriever selected but no lexical index was provided");
        }
        const Segmenter& seg = indexes.segmenter ? *indexes.segmenter : default_segmenter();
        return lexical_topk(*indexes.lexical, config.bm25, question.text, config.k_retrieve, seg);
    }
    if (!indexes.dense || !indexes.query_embedder) {
        throw PipelineError("dense retriever selected but the dense index or query embedder is missing");
    }
    EmbedItem item{question.qid, question.text};
    auto qv = indexes.query_embedder->embed(std::span<const EmbedItem>(&item, 1)).at(0);
    return dense_topk(*indexes.dense, qv, config.k_retrieve);
}

RankedList rerank(const Question& question, const RankedList& candidates, std::size_t k_final,
                  const Scorer& scorer, const Corpus& corpus) {
    if (k_final < 1) {
        throw ParameterError("rerank: k_final must be >= 1");
    }
    std::vector<Candidate> items;
    items.reserve(candidates.size());
    for (const auto& c : candidates) {
        items.push_back(Candidate{c.cid, corpus.lookup(c.cid).text});
    }
    auto scores = scorer.score(question, items);
    if (scores.size() != items.size()) {
        throw ProtocolError("scorer '" + scorer.name() + "' returned " + std::to_string(scores.size()) +
                            " scores for " + std::to_string(items.size()) + " candidates");
    }
    RankedList out;
    out.reserve(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (!std::isfinite(scores[i])) {
            throw ScorerError("scorer '" + scorer.name() + "' produced a non-finite score for '" +
                              std::string(items[i].cid) + "'");
        }
        out.push_back(ScoredDoc{std::string(items[i].cid), scores[i]});
    }
    keep_top_k(out, k_final);
    return out;
}

RetrievalResult retrieve_rerank(const Question& question, const PipelineConfig& config,
                                const RetrievalIndexes& indexes, const Scorer& scorer, const Corpus& corpus) {
    config.validate();
    RetrievalResult result;
    try {
        result.candidates = retrieve(question, config, indexes);
    } catch (const Error& e) {
        throw PipelineError(std::string("stage 1 (") + std::string(to_string(config.retriever)) +
                            " retrieval) failed: " + e.what());
    }
    try {
        result.reranked = rerank(question, result.candidates, config.k_final, scorer, corpus);
    } catch (const Error& e) {
        throw PipelineError("stage 2 (rerank with " + scorer.name() + ") failed: " + e.what());
    }
    return result;
}

EvalSet make_eval_set(const std::vector<QaPair>& pairs) {
    EvalSet set;
    std::unordered_set<std::string> seen;
    for (const auto& p : pairs) {
        if (seen.insert(p.qid).second) {
            set.questions.push_back(Question{p.qid, p.question});
        }
        set.qrels[p.qid].insert(p.cid);
    }
    return set;
}

PipelineEvaluation evaluate_pipeline(const EvalSet& evalset, const PipelineConfig& config,
                                     const RetrievalIndexes& indexes, const Scorer& scorer, const Corpus& corpus,
                                     unsigned threads) {
    config.validate();
    if (evalset.questions.empty() || evalset.qrels.empty()) {
        throw ParameterError("evaluate_pipeline: empty evaluation set");
    }
    const auto& questions = evalset.questions;
    std::vector<RetrievalResult> results(questions.size());
    std::vector<std::exception_ptr> errors(questions.size());

    auto work = [&](std::size_t i) {
        try {
            results[i] = retrieve_rerank(questions[i], config, indexes, scorer, corpus);
        } catch (const Error& e) {
            errors[i] = std::make_exception_ptr(PipelineError("qid '" + questions[i].qid + "': " + e.what()));
        }
    };
    threads = std::max(1u, threads);
    if (threads == 1 || questions.size() < 2) {
        for (std::size_t i = 0; i < questions.size(); ++i) {
            work(i);
        }
    } else {
        std::vector<std::thread> workers;
        for (unsigned t = 0; t < threads; ++t) {
            workers.emplace_back([&, t] {
                for (std::size_t i = t; i < questions.size(); i += threads) {
                    work(i);
                }
            });
        }
        for (auto& w : workers) {
            w.join();
        }
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }

    PipelineEvaluation eval;
    for (std::size_t i = 0; i < questions.size(); ++i) {
        eval.stage1.emplace(questions[i].qid, std::move(results[i].candidates));
        eval.stage2.emplace(questions[i].qid, std::move(results[i].reranked));
    }
    eval.report.exist = exist_at_m(eval.stage1, evalset.qrels, config.k_retrieve);
    eval.report.mrr = mrr_at_k(eval.stage2, evalset.qrels, config.k_final);
    eval.report.num_queries = evalset.qrels.size();
    eval.report.m = config.k_retrieve;
    eval.report.k = config.k_final;
    return eval;
}

}  // namespace legalrank
