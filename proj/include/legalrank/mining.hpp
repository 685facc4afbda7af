#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "legalrank/corpus.hpp"
#include "legalrank/metrics.hpp"
#include "legalrank/ranking.hpp"

namespace legalrank {

enum class MiningStrategy { hard, semi_hard, easy };

std::string_view to_string(MiningStrategy strategy);
/// "hard" | "semi_hard" | "semi-hard" | "easy".
MiningStrategy parse_mining_strategy(std::string_view name);

struct MiningConfig {
    MiningStrategy strategy = MiningStrategy::semi_hard;
    std::size_t n = 5;
    std::uint64_t seed = 42;
    std::size_t pool_size = 90;  // candidates considered by hard / semi_hard

    void validate() const;
};

/// All supervision for one question: its text and every gold cid.
struct QuestionGroup {
    std::string qid;
    std::string question;
    std::vector<std::string> gold;
};

/// Groups pairs by qid in first-appearance order.
std::vector<QuestionGroup> group_pairs(const std::vector<QaPair>& pairs);

struct LabeledPair {
    std::string qid;
    std::string question;
    std::string cid;
    int label = 0;                    // 1 positive, 0 negative
    std::string strategy;             // "positive" or the mining strategy
    std::optional<std::size_t> rank;  // 1-based candidate rank of a hard negative

    friend bool operator==(const LabeledPair&, const LabeledPair&) = default;
};

/// Negative sampler over a fixed corpus.
///
/// hard:      drop every gold cid from the first pool_size candidates and keep
///            the first n in rank order.
/// semi_hard: same pool, sorted by cid, then n draws of a partial Fisher-Yates
///            shuffle.
/// easy:      partial Fisher-Yates over all corpus cids (sorted) minus the golds.
///
/// Random draws use SplitMix64(derive_seed(seed, qid)), so a question's
/// negatives do not depend on processing order or thread count.
class NegativeMiner {
  public:
    explicit NegativeMiner(const Corpus& corpus);

    std::vector<std::string> mine(const QuestionGroup& question, const RankedList& candidates,
                                  const MiningConfig& config) const;

    /// Negatives for every group as labeled pairs (group order, then draw order).
    /// `candidates` maps qid to its first-stage list; a missing entry means an
    /// empty pool.
    std::vector<LabeledPair> mine_all(std::span<const QuestionGroup> groups, const Run& candidates,
                                      const MiningConfig& config, unsigned threads = 1) const;

  private:
    std::vector<std::string> sorted_cids_;
};

/// One-shot convenience wrapper around NegativeMiner::mine.
std::vector<std::string> mine_negatives(const QuestionGroup& question, const RankedList& candidates,
                                        const Corpus& corpus, const MiningConfig& config);

/// Share of scores in (-inf,0.5), [0.5,0.8), [0.8,0.9), [0.9,+inf) and their mean.
struct BandReport {
    std::array<double, 4> fractions{};
    double mean = 0.0;
    std::size_t count = 0;

    bool defined() const noexcept { return count > 0; }

    /// {"lt_0_5","b_0_5_0_8","b_0_8_0_9","ge_0_9","mean","count"}; null values when count is 0.
    nlohmann::json to_json() const;
};

BandReport band_stats(std::span<const double> scores);

/// Positives from `positives` (label 1) followed by that qid's negatives, per
/// qid in order of first appearance. One JSON object per line.
std::vector<LabeledPair> assemble_training_pairs(const std::vector<QaPair>& positives,
                                                 const std::vector<LabeledPair>& negatives);

void write_pairs(std::ostream& out, std::span<const LabeledPair> pairs);
std::vector<LabeledPair> read_pairs(std::istream& in, std::string_view source = "<stream>");

/// Writes assemble_training_pairs(positives, negatives) to `path`. Throws IoError.
void export_pairs(const std::vector<QaPair>& positives, const std::vector<LabeledPair>& negatives,
                  const std::filesystem::path& path);
std::vector<LabeledPair> import_pairs(const std::filesystem::path& path);

}  // namespace legalrank
