#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "legalrank/corpus.hpp"
#include "legalrank/dense.hpp"
#include "legalrank/http_json.hpp"
#include "legalrank/lexical.hpp"
#include "legalrank/metrics.hpp"
#include "legalrank/ranking.hpp"

namespace legalrank {

/// A candidate handed to a scorer. `text` points into the corpus.
struct Candidate {
    std::string_view cid;
    std::string_view text;
};

/// Second-stage relevance model. score() must be pure per (question, document)
/// within one run; implementations may look at the whole candidate set.
class Scorer {
  public:
    virtual ~Scorer() = default;

    /// One score per candidate, in order.
    virtual std::vector<double> score(const Question& question,
                                      std::span<const Candidate> candidates) const = 0;

    virtual std::string name() const = 0;
};

/// Cosine between embedder vectors of the question (keyed by qid) and each
/// candidate (keyed by cid).
class CosineScorer final : public Scorer {
  public:
    explicit CosineScorer(std::shared_ptr<const Embedder> embedder);

    std::vector<double> score(const Question& question,
                              std::span<const Candidate> candidates) const override;
    std::string name() const override { return "cosine"; }

  private:
    std::shared_ptr<const Embedder> embedder_;
};

class Bm25Scorer final : public Scorer {
  public:
    Bm25Scorer(std::shared_ptr<const InvertedIndex> index, Bm25Params params,
               std::shared_ptr<const Segmenter> segmenter = nullptr);

    std::vector<double> score(const Question& question,
                              std::span<const Candidate> candidates) const override;
    std::string name() const override { return "bm25"; }

  private:
    std::shared_ptr<const InvertedIndex> index_;
    Bm25Params params_;
    std::shared_ptr<const Segmenter> segmenter_;
};

/// w_lexical * minmax(bm25) + w_dense * cosine. BM25 scores are min-max
/// normalized within the candidate set (all 0 when they are all equal).
class BlendScorer final : public Scorer {
  public:
    BlendScorer(std::shared_ptr<const Bm25Scorer> lexical, std::shared_ptr<const CosineScorer> dense,
                double lexical_weight = 0.5, double dense_weight = 0.5);

    std::vector<double> score(const Question& question,
                              std::span<const Candidate> candidates) const override;
    std::string name() const override { return "blend"; }

  private:
    std::shared_ptr<const Bm25Scorer> lexical_;
    std::shared_ptr<const CosineScorer> dense_;
    double lexical_weight_;
    double dense_weight_;
};

struct RemoteScorerConfig {
    HttpEndpoint endpoint;
    std::size_t batch_size = 64;
    std::size_t max_in_flight = 4;
};

/// Scores `documents` against `question` through a cross-encoder endpoint:
/// POST {"query": ..., "documents": [...]} -> {"scores": [...]}, one request per
/// batch of batch_size documents, at most max_in_flight at a time. Scores are
/// concatenated in document order. Throws ProtocolError when a response has
/// the wrong length and ScorerError when retries are exhausted.
std::vector<double> remote_score(const RemoteScorerConfig& config, std::string_view question,
                                 std::span<const std::string> documents);

class RemoteScorer final : public Scorer {
  public:
    explicit RemoteScorer(RemoteScorerConfig config);

    std::vector<double> score(const Question& question,
                              std::span<const Candidate> candidates) const override;
    std::string name() const override { return "remote:" + config_.endpoint.url; }

  private:
    RemoteScorerConfig config_;
};

/// 1 for gold cids of the question's qid, 0 otherwise. For tests and upper bounds.
class OracleScorer final : public Scorer {
  public:
    explicit OracleScorer(Qrels qrels);

    std::vector<double> score(const Question& question,
                              std::span<const Candidate> candidates) const override;
    std::string name() const override { return "oracle"; }

  private:
    Qrels qrels_;
};

class ConstantScorer final : public Scorer {
  public:
    explicit ConstantScorer(double value = 0.0) : value_(value) {}

    std::vector<double> score(const Question&, std::span<const Candidate> candidates) const override {
        return std::vector<double>(candidates.size(), value_);
    }
    std::string name() const override { return "constant"; }

  private:
    double value_;
};

enum class RetrieverKind { dense, lexical };

std::string_view to_string(RetrieverKind kind);
RetrieverKind parse_retriever_kind(std::string_view name);

struct PipelineConfig {
    RetrieverKind retriever = RetrieverKind::dense;
    std::size_t k_retrieve = 90;
    std::size_t k_final = 10;
    Bm25Params bm25{};  // used by the lexical retriever

    /// Throws ParameterError unless 1 <= k_final <= k_retrieve.
    void validate() const;
};

/// First-stage resources. Only the one selected by PipelineConfig::retriever is required.
struct RetrievalIndexes {
    std::shared_ptr<const InvertedIndex> lexical;
    std::shared_ptr<const Segmenter> segmenter;  // lexical query tokenization; default when null
    std::shared_ptr<const EmbeddingIndex> dense;
    std::shared_ptr<const Embedder> query_embedder;  // dense query encoding
};

struct RetrievalResult {
    RankedList candidates;  // stage 1, top k_retrieve
    RankedList reranked;    // stage 2, top k_final of the candidates by scorer score
};

/// Stage 1 only.
RankedList retrieve(const Question& question, const PipelineConfig& config,
                    const RetrievalIndexes& indexes);

/// Stage 1 followed by stage 2. Stage-2 ties are broken by cid ascending.
/// Errors are rethrown as PipelineError naming the failing stage.
RetrievalResult retrieve_rerank(const Question& question, const PipelineConfig& config,
                                const RetrievalIndexes& indexes, const Scorer& scorer,
                                const Corpus& corpus);

/// Re-ranks an existing stage-1 list (shared by retrieve_rerank and the CLI).
RankedList rerank(const Question& question, const RankedList& candidates, std::size_t k_final,
                  const Scorer& scorer, const Corpus& corpus);

struct EvalSet {
    std::vector<Question> questions;
    Qrels qrels;
};

/// Questions (first text per qid, first-appearance order) and qrels from pairs.
EvalSet make_eval_set(const std::vector<QaPair>& pairs);

struct PipelineEvaluation {
    /// exist = Exist@k_retrieve on stage 1, mrr = MRR@k_final on stage 2.
    MetricReport report;
    Run stage1;
    Run stage2;
};

/// Runs retrieve_rerank for every question (concurrently with threads > 1;
/// results are merged by qid) and evaluates against the qrels. Throws
/// ParameterError for an empty eval set; pipeline failures carry the qid.
PipelineEvaluation evaluate_pipeline(const EvalSet& evalset, const PipelineConfig& config,
                                     const RetrievalIndexes& indexes, const Scorer& scorer,
                                     const Corpus& corpus, unsigned threads = 1);

}  // namespace legalrank
