#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "legalrank/text.hpp"

namespace legalrank {

struct Document {
    std::string cid;
    std::string text;  // may be empty
};

/// One row of the QA training file. contexts and cids are parallel lists.
struct QaRecord {
    std::string qid;
    std::string question;
    std::vector<std::string> contexts;
    std::vector<std::string> cids;
};

/// A (question, gold document) supervision pair. The gold text is resolved
/// through Corpus::lookup(cid) rather than stored.
struct QaPair {
    std::string qid;
    std::string question;
    std::string cid;

    friend bool operator==(const QaPair&, const QaPair&) = default;
};

/// Ordered document collection with unique cids. Immutable after construction.
class Corpus {
  public:
    Corpus() = default;

    /// Throws IngestionError on a duplicate cid.
    explicit Corpus(std::vector<Document> documents);

    std::size_t size() const noexcept { return documents_.size(); }
    bool empty() const noexcept { return documents_.empty(); }

    const std::vector<Document>& documents() const noexcept { return documents_; }
    const Document& operator[](std::size_t i) const { return documents_[i]; }

    bool contains(std::string_view cid) const;
    /// nullptr when absent.
    const Document* find(std::string_view cid) const;
    /// Throws LookupError when absent.
    const Document& lookup(std::string_view cid) const;
    /// Row of `cid`; throws LookupError when absent.
    std::size_t position(std::string_view cid) const;

  private:
    std::vector<Document> documents_;
    std::unordered_map<std::string, std::size_t> by_cid_;
};

/// Corpus CSV with columns {text, cid} in any order.
Corpus load_corpus(const std::filesystem::path& path);
Corpus read_corpus(std::istream& in, std::string_view source = "<stream>");
void write_corpus(std::ostream& out, const Corpus& corpus);

/// QA CSV with columns {question, context, cid, qid}. The context and cid cells
/// hold a JSON array of strings or a bare singleton value.
std::vector<QaRecord> load_qa(const std::filesystem::path& path);
std::vector<QaRecord> read_qa(std::istream& in, std::string_view source = "<stream>");

/// Parses a list cell. "[\"a\", \"b\"]" -> {a, b}; "a" -> {a}; "" -> {}.
/// Python-style single-quoted arrays are accepted too.
std::vector<std::string> parse_list_cell(std::string_view cell);

/// Expands each record into one pair per cid (records in input order, cids in
/// record order) after checking every cid against the corpus. Answer texts are
/// discarded. Duplicate (qid, cid) pairs are emitted once.
std::vector<QaPair> normalize_qa(const std::vector<QaRecord>& records, const Corpus& corpus);

struct TrainEvalSplit {
    std::vector<QaPair> train;
    std::vector<QaPair> eval;
};

/// Splits by distinct qid so that all pairs of one question land on the same
/// side. The distinct qids are sorted, shuffled with SplitMix64(seed) and the
/// first floor(ratio * count) become the training questions. Pair order within
/// each side follows the input.
TrainEvalSplit split_train_eval(const std::vector<QaPair>& pairs, double ratio, std::uint64_t seed);

/// Token-count histogram. Bucket b covers [edges[b], edges[b+1]); the last
/// bucket is open. Counts below edges[0] fall in the first bucket.
std::vector<std::size_t> length_histogram(std::span<const std::string> texts,
                                          std::span<const std::size_t> edges,
                                          const Segmenter& segmenter = default_segmenter());

/// "low<TAB>high<TAB>count" lines; the open bucket's high is "inf".
void write_histogram(std::ostream& out, std::span<const std::size_t> edges,
                     std::span<const std::size_t> counts);

/// Number of questions referencing 1, 2, ..., max_bucket-1 and >= max_bucket documents.
std::vector<std::size_t> answers_per_question(const std::vector<QaRecord>& records,
                                              std::size_t max_bucket = 4);

/// QaPairs as JSON lines {"qid","question","cid"}.
void write_qa_pairs(std::ostream& out, std::span<const QaPair> pairs);
std::vector<QaPair> read_qa_pairs(std::istream& in, std::string_view source = "<stream>");
void save_qa_pairs(const std::filesystem::path& path, std::span<const QaPair> pairs);
std::vector<QaPair> load_qa_pairs(const std::filesystem::path& path);

}  // namespace legalrank
