#include "legalrank/mining.hpp"

#include <algorithm>
#include <fstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "legalrank/errors.hpp"
#include "legalrank/rng.hpp"

namespace legalrank {

std::string_view to_string(MiningStrategy strategy) {
    switch (strategy) {
        case MiningStrategy::hard: return "hard";
        case MiningStrategy::semi_hard: return "semi_hard";
        case MiningStrategy::easy: return "easy";
    }
    return "unknown";
}

MiningStrategy parse_mining_strategy(std::string_view name) {
    if (name == "hard") {
        return MiningStrategy::hard;
    }
    if (name == "semi_hard" || name == "semi-hard") {
        return MiningStrategy::semi_hard;
    }
    if (name == "easy") {
        return MiningStrategy::easy;
    }
    throw ParameterError("unknown mining strategy '" + std::string(name) +
                         "' (expected hard, semi_hard or easy)");
}

void MiningConfig::validate() const {
    if (n < 1) {
        throw ParameterError("mining: n must be >= 1");
    }
    if (pool_size < 1) {
        throw ParameterError("mining: pool size must be >= 1");
    }
}

std::vector<QuestionGroup> group_pairs(const std::vector<QaPair>& pairs) {
    std::vector<QuestionGroup> groups;
    std::unordered_map<std::string, std::size_t> slot;
    for (const auto& p : pairs) {
        auto [it, inserted] = slot.emplace(p.qid, groups.size());
        if (inserted) {
            groups.push_back(QuestionGroup{p.qid, p.question, {}});
        }
        auto& gold = groups[it->second].gold;
        if (std::find(gold.begin(), gold.end(), p.cid) == gold.end()) {
            gold.push_back(p.cid);
        }
    }
    return groups;
}

// ---------------------------------------------------------------------------

namespace {

// Moves min(take, items.size()) uniformly chosen elements to the front, in draw order.
template <typename T>
void partial_fisher_yates(std::vector<T>& items, std::size_t take, SplitMix64& rng) {
    take = std::min(take, items.size());
    for (std::size_t i = 0; i < take; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng.below(items.size() - i));
        std::swap(items[i], items[j]);
    }
    items.resize(take);
}

}  // namespace

NegativeMiner::NegativeMiner(const Corpus& corpus) {
    sorted_cids_.reserve(corpus.size());
    for (const auto& doc : corpus.documents()) {
        sorted_cids_.push_back(doc.cid);
    }
    std::sort(sorted_cids_.begin(), sorted_cids_.end());
}

std::vector<std::string> NegativeMiner::mine(const QuestionGroup& question, const RankedList& candidates,
                                             const MiningConfig& config) const {
    config.validate();
    const std::unordered_set<std::string> gold(question.gold.begin(), question.gold.end());
    SplitMix64 rng(derive_seed(config.seed, question.qid));

    if (config.strategy != MiningStrategy::easy) {
        std::vector<std::string> pool;
        const std::size_t depth = std::min(config.pool_size, candidates.size());
        for (std::size_t r = 0; r < depth; ++r) {
            if (!gold.contains(candidates[r].cid)) {
                pool.push_back(candidates[r].cid);
            }
        }
        if (config.strategy == MiningStrategy::hard) {
            pool.resize(std::min(config.n, pool.size()));
            return pool;
        }
        std::sort(pool.begin(), pool.end());
        pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
        partial_fisher_yates(pool, config.n, rng);
        return pool;
    }

    // Easy: virtual array of the sorted corpus cids with the gold positions removed.
    std::vector<std::size_t> gold_positions;
    for (const auto& g : gold) {
        auto it = std::lower_bound(sorted_cids_.begin(), sorted_cids_.end(), g);
        if (it != sorted_cids_.end() && *it == g) {
            gold_positions.push_back(static_cast<std::size_t>(it - sorted_cids_.begin()));
        }
    }
    std::sort(gold_positions.begin(), gold_positions.end());
    const std::size_t available = sorted_cids_.size() - gold_positions.size();
    const std::size_t take = std::min(config.n, available);

    // Sparse partial Fisher-Yates: only displaced slots are stored.
    std::unordered_map<std::size_t, std::size_t> displaced;
    auto value_at = [&](std::size_t slot) {
        auto it = displaced.find(slot);
        return it == displaced.end() ? slot : it->second;
    };
    std::vector<std::string> out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng.below(available - i));
        std::size_t picked = value_at(j);
        displaced[j] = value_at(i);
        // Map the virtual slot to a corpus position by stepping over gold positions.
        std::size_t actual = picked;
        for (std::size_t g : gold_positions) {
            if (g <= actual) {
                ++actual;
            } else {
                break;
            }
        }
        out.push_back(sorted_cids_[actual]);
    }
    return out;
}

std::vector<LabeledPair> NegativeMiner::mine_all(std::span<const QuestionGroup> groups, const Run& candidates,
                                                 const MiningConfig& config, unsigned threads) const {
    config.validate();
    static const RankedList kEmpty;
    std::vector<std::vector<LabeledPair>> per_group(groups.size());

    auto work = [&](std::size_t g) {
        const auto& group = groups[g];
        auto it = candidates.find(group.qid);
        const RankedList& list = it == candidates.end() ? kEmpty : it->second;
        auto cids = mine(group, list, config);
        std::unordered_map<std::string_view, std::size_t> rank_of;
        if (config.strategy == MiningStrategy::hard) {
            for (std::size_t r = 0; r < list.size(); ++r) {
                rank_of.emplace(list[r].cid, r + 1);
            }
        }
        auto& out = per_group[g];
        out.reserve(cids.size());
        for (auto& cid : cids) {
            LabeledPair lp{group.qid, group.question, std::move(cid), 0, std::string(to_string(config.strategy)),
                           std::nullopt};
            if (config.strategy == MiningStrategy::hard) {
                lp.rank = rank_of.at(lp.cid);
            }
            out.push_back(std::move(lp));
        }
    };

    threads = std::max(1u, threads);
    if (threads == 1 || groups.size() < 2) {
        for (std::size_t g = 0; g < groups.size(); ++g) {
            work(g);
        }
    } else {
        std::vector<std::thread> workers;
        std::vector<std::exception_ptr> errors(threads);
        for (unsigned t = 0; t < threads; ++t) {
            workers.emplace_back([&, t] {
                try {
                    for (std::size_t g = t; g < groups.size(); g += threads) {
                        work(g);
                    }
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        }
        for (auto& w : workers) {
            w.join();
        }
        for (auto& e : errors) {
            if (e) {
                std::rethrow_exception(e);
            }
        }
    }

    std::vector<LabeledPair> all;
    for (auto& part : per_group) {
        std::move(part.begin(), part.end(), std::back_inserter(all));
    }
    return all;
}

std::vector<std::string> mine_negatives(const QuestionGroup& question, const RankedList& candidates,
                                        const Corpus& corpus, const MiningConfig& config) {
    return NegativeMiner(corpus).mine(question, candidates, config);
}

// ---------------------------------------------------------------------------

BandReport band_stats(std::span<const double> scores) {
    BandReport report;
    report.count = scores.size();
    if (scores.empty()) {
        return report;
    }
    std::array<std::size_t, 4> counts{};
    double sum = 0.0;
    for (double s : scores) {
        std::size_t band = s < 0.5 ? 0 : s < 0.8 ? 1 : s < 0.9 ? 2 : 3;
        ++counts[band];
        sum += s;
    }
    const auto n = static_cast<double>(scores.size());
    for (std::size_t b = 0; b < 4; ++b) {
        report.fractions[b] = static_cast<double>(counts[b]) / n;
    }
    report.mean = sum / n;
    return report;
}

nlohmann::json BandReport::to_json() const {
    nlohmann::json j;
    static constexpr const char* kKeys[4] = {"lt_0_5", "b_0_5_0_8", "b_0_8_0_9", "ge_0_9"};
    for (std::size_t b = 0; b < 4; ++b) {
        j[kKeys[b]] = defined() ? nlohmann::json(fractions[b]) : nlohmann::json(nullptr);
    }
    j["mean"] = defined() ? nlohmann::json(mean) : nlohmann::json(nullptr);
    j["count"] = count;
    return j;
}

// ---------------------------------------------------------------------------

std::vector<LabeledPair> assemble_training_pairs(const std::vector<QaPair>& positives,
                                                 const std::vector<LabeledPair>& negatives) {
    std::vector<std::string> order;
    std::unordered_map<std::string, std::vector<LabeledPair>> pos_by_qid;
    std::unordered_map<std::string, std::vector<const LabeledPair*>> neg_by_qid;
    for (const auto& p : positives) {
        auto [it, inserted] = pos_by_qid.try_emplace(p.qid);
        if (inserted) {
            order.push_back(p.qid);
        }
        it->second.push_back(LabeledPair{p.qid, p.question, p.cid, 1, "positive", std::nullopt});
    }
    for (const auto& n : negatives) {
        if (!pos_by_qid.contains(n.qid) && !neg_by_qid.contains(n.qid)) {
            order.push_back(n.qid);
        }
        neg_by_qid[n.qid].push_back(&n);
    }
    std::vector<LabeledPair> out;
    out.reserve(positives.size() + negatives.size());
    for (const auto& qid : order) {
        if (auto it = pos_by_qid.find(qid); it != pos_by_qid.end()) {
            std::move(it->second.begin(), it->second.end(), std::back_inserter(out));
        }
        if (auto it = neg_by_qid.find(qid); it != neg_by_qid.end()) {
            for (const auto* n : it->second) {
                out.push_back(*n);
            }
        }
    }
    return out;
}

void write_pairs(std::ostream& out, std::span<const LabeledPair> pairs) {
    for (const auto& p : pairs) {
        nlohmann::ordered_json j;
        j["qid"] = p.qid;
        j["question"] = p.question;
        j["cid"] = p.cid;
        j["label"] = p.label;
        j["strategy"] = p.strategy;
        if (p.rank) {
            j["rank"] = *p.rank;
        }
        out << j.dump() << '\n';
    }
}

std::vector<LabeledPair> read_pairs(std::istream& in, std::string_view source) {
    std::vector<LabeledPair> pairs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        try {
            auto j = nlohmann::json::parse(line);
            LabeledPair p;
            p.qid = j.at("qid").get<std::string>();
            p.question = j.at("question").get<std::string>();
            p.cid = j.at("cid").get<std::string>();
            p.label = j.at("label").get<int>();
            p.strategy = j.at("strategy").get<std::string>();
            if (j.contains("rank") && !j["rank"].is_null()) {
                p.rank = j["rank"].get<std::size_t>();
            }
            if (p.label != 0 && p.label != 1) {
                throw FormatError("label must be 0 or 1");
            }
            pairs.push_back(std::move(p));
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(std::string(source) + ":" + std::to_string(lineno) + ": " + e.what());
        } catch (const FormatError& e) {
            throw FormatError(std::string(source) + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return pairs;
}

void export_pairs(const std::vector<QaPair>& positives, const std::vector<LabeledPair>& negatives,
                  const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    write_pairs(out, assemble_training_pairs(positives, negatives));
    out.flush();
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

std::vector<LabeledPair> import_pairs(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    return read_pairs(in, path.string());
}

}  // namespace legalrank
