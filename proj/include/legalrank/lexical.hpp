#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "legalrank/corpus.hpp"
#include "legalrank/ranking.hpp"
#include "legalrank/text.hpp"

namespace legalrank {

enum class Bm25Variant { okapi, plus };

std::string_view to_string(Bm25Variant variant);
/// "okapi" | "plus"; throws ParameterError otherwise.
Bm25Variant parse_bm25_variant(std::string_view name);

/// BM25 scoring parameters.
///
///   okapi: sum_t idf(t) * tf*(k1+1) / (tf + k1*(1 - b + b*dl/avgdl))
///          idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5))
///   plus:  sum_t idf+(t) * (delta + tf*(k1+1) / (tf + k1*(1 - b + b*dl/avgdl)))   for tf > 0
///          idf+(t) = ln((N + 1) / df)
struct Bm25Params {
    Bm25Variant variant = Bm25Variant::okapi;
    double k1 = 1.5;
    double b = 0.75;
    double delta = 1.0;  // plus variant only

    /// Throws ParameterError unless k1 >= 0, 0 <= b <= 1, delta >= 0.
    void validate() const;

    static Bm25Params okapi(double k1 = 1.5, double b = 0.75) {
        return {Bm25Variant::okapi, k1, b, 0.0};
    }
    static Bm25Params plus(double k1 = 1.5, double b = 0.75, double delta = 1.0) {
        return {Bm25Variant::plus, k1, b, delta};
    }

    friend bool operator==(const Bm25Params&, const Bm25Params&) = default;
};

/// The comparison grid: okapi defaults, plus defaults, then plus over
/// k1 in {0.8, 1.2, 2} x b in {0, 0.75, 1}.
std::vector<Bm25Params> bm25_comparison_grid();

struct Posting {
    std::uint32_t doc;  // row in the index
    std::uint32_t tf;
};

/// Term -> postings index with the collection statistics BM25 needs.
/// Immutable after build; safe for concurrent readers.
class InvertedIndex {
  public:
    InvertedIndex() = default;

    /// Tokenizes every document with `segmenter`. With threads > 1 documents are
    /// tokenized in contiguous shards; postings are merged in document order so
    /// the result is identical to a single-threaded build.
    static InvertedIndex build(const Corpus& corpus, const Segmenter& segmenter = default_segmenter(),
                               unsigned threads = 1);

    /// Index over pre-tokenized documents (cids[i] <-> documents[i]).
    static InvertedIndex from_tokens(std::vector<std::string> cids,
                                     const std::vector<Tokens>& documents);

    std::size_t num_docs() const noexcept { return cids_.size(); }
    std::size_t num_terms() const noexcept { return terms_.size(); }
    double avgdl() const noexcept { return avgdl_; }
    std::uint64_t total_length() const noexcept { return total_length_; }

    const std::string& cid(std::size_t doc) const { return cids_[doc]; }
    std::uint32_t doc_length(std::size_t doc) const { return lengths_[doc]; }
    std::optional<std::size_t> doc_index(std::string_view cid) const;

    /// Number of documents containing `term` (0 when unknown).
    std::size_t df(std::string_view term) const;
    /// Postings sorted by document row; empty when unknown.
    std::span<const Posting> postings(std::string_view term) const;
    /// Term frequency of `term` in document row `doc`.
    std::uint32_t tf(std::string_view term, std::size_t doc) const;

    /// Text serialization with a version tag. Round-trips every statistic exactly.
    void write(std::ostream& out) const;
    static InvertedIndex read(std::istream& in);
    void save(const std::filesystem::path& path) const;
    static InvertedIndex load(const std::filesystem::path& path);

    /// Header line of the serialized form.
    static constexpr std::string_view kMagic = "legalrank-lexical-index v1";

    friend bool operator==(const InvertedIndex& a, const InvertedIndex& b);

  private:
    void finalize();
    const std::vector<Posting>* find_postings(std::string_view term) const;

    std::vector<std::string> cids_;
    std::vector<std::uint32_t> lengths_;
    std::uint64_t total_length_ = 0;
    double avgdl_ = 0.0;
    std::vector<std::string> terms_;
    std::vector<std::vector<Posting>> postings_;
    std::unordered_map<std::string, std::uint32_t> term_ids_;
    std::unordered_map<std::string, std::uint32_t> doc_ids_;
};

/// Inverse document frequency of a term with document frequency `df` (> 0).
double bm25_idf(const Bm25Params& params, std::size_t num_docs, std::size_t df);

/// Contribution of one matching query term.
double bm25_term_weight(const Bm25Params& params, double idf, std::uint32_t tf, std::uint32_t dl,
                        double avgdl);

/// Score of one document. Every query token occurrence contributes; tokens
/// absent from the document or the index contribute 0. Throws LookupError for
/// an unknown cid.
double bm25_score(const InvertedIndex& index, const Bm25Params& params,
                  std::span<const std::string> query_tokens, std::string_view cid);

/// Top min(k, N) documents by bm25_score, ties by cid ascending. Throws
/// ParameterError when k == 0.
RankedList lexical_topk(const InvertedIndex& index, const Bm25Params& params,
                        std::span<const std::string> query_tokens, std::size_t k);

RankedList lexical_topk(const InvertedIndex& index, const Bm25Params& params,
                        std::string_view query, std::size_t k,
                        const Segmenter& segmenter = default_segmenter());

}  // namespace legalrank
