#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>

#include <json.hpp>

#include "legalrank/corpus.hpp"
#include "legalrank/ranking.hpp"

namespace legalrank {

/// qid -> non-empty set of gold cids. Ordered so that means are summed in a
/// fixed qid order.
using Qrels = std::map<std::string, std::set<std::string>>;

/// qid -> ranked list (no duplicate cid within a list).
using Run = std::map<std::string, RankedList>;

/// Fraction of qrels queries with at least one gold cid in the first m entries
/// of their run list. Queries missing from the run count as misses.
double exist_at_m(const Run& run, const Qrels& qrels, std::size_t m);

/// Mean over qrels queries of 1/r for the first gold at rank r <= k, else 0.
double mrr_at_k(const Run& run, const Qrels& qrels, std::size_t k);

struct MetricReport {
    double exist = 0.0;
    double mrr = 0.0;
    std::size_t num_queries = 0;
    std::size_t m = 0;
    std::size_t k = 0;

    /// {"exist@m", "mrr@k", "N", "m", "k"} at full precision, plus a
    /// "display" object holding 4-decimal strings.
    nlohmann::json to_json() const;
};

/// Exist@m and MRR@k of one run.
MetricReport evaluate_run(const Run& run, const Qrels& qrels, std::size_t m, std::size_t k);

Qrels qrels_from_pairs(const std::vector<QaPair>& pairs);

/// Run file: "qid<TAB>rank<TAB>cid<TAB>score", rank from 1.
void write_run(std::ostream& out, const Run& run);
Run read_run(std::istream& in, std::string_view source = "<stream>");
void save_run(const std::filesystem::path& path, const Run& run);
Run load_run(const std::filesystem::path& path);

/// Qrels file: "qid<TAB>cid", one gold per line.
void write_qrels(std::ostream& out, const Qrels& qrels);
Qrels read_qrels(std::istream& in, std::string_view source = "<stream>");
void save_qrels(const std::filesystem::path& path, const Qrels& qrels);
Qrels load_qrels(const std::filesystem::path& path);

}  // namespace legalrank
