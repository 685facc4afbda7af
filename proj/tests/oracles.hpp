#pragma once

// Independent reference implementations used to cross-check the library.
// They favour obviousness over speed and share no code with src/.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "legalrank/corpus.hpp"
#include "legalrank/lexical.hpp"
#include "legalrank/metrics.hpp"

namespace oracle {

using legalrank::Bm25Params;
using legalrank::Bm25Variant;
using legalrank::Corpus;
using legalrank::Tokens;
using legalrank::tokenize;

// Straight-from-the-definition BM25 over raw token lists; shares no code with the index.
struct NaiveBm25 {
    std::vector<std::string> cids;
    std::vector<Tokens> docs;

    explicit NaiveBm25(const Corpus& corpus) {
        for (const auto& d : corpus.documents()) {
            cids.push_back(d.cid);
            docs.push_back(tokenize(d.text));
        }
    }

    double score(const Bm25Params& p, const Tokens& query, std::size_t doc) const {
        const double n = static_cast<double>(docs.size());
        double total = 0.0;
        for (const auto& d : docs) {
            total += static_cast<double>(d.size());
        }
        const double avgdl = total / n;
        const double dl = static_cast<double>(docs[doc].size());
        double s = 0.0;
        for (const auto& term : query) {
            double df = 0.0;
            for (const auto& d : docs) {
                df += std::find(d.begin(), d.end(), term) != d.end() ? 1.0 : 0.0;
            }
            const double tf = static_cast<double>(std::count(docs[doc].begin(), docs[doc].end(), term));
            if (df == 0.0 || tf == 0.0) {
                continue;
            }
            const double norm = tf * (p.k1 + 1.0) / (tf + p.k1 * (1.0 - p.b + p.b * dl / avgdl));
            if (p.variant == Bm25Variant::okapi) {
                s += std::log(1.0 + (n - df + 0.5) / (df + 0.5)) * norm;
            } else {
                s += std::log((n + 1.0) / df) * (p.delta + norm);
            }
        }
        return s;
    }
};

/// Per-query rank (1-based) of the first gold within the first depth entries; 0 if none.
inline std::size_t first_hit(const std::vector<std::string>& ranked, const std::set<std::string>& gold,
                             std::size_t depth) {
    for (std::size_t r = 0; r < ranked.size() && r < depth; ++r) {
        if (gold.count(ranked[r])) {
            return r + 1;
        }
    }
    return 0;
}

inline std::vector<std::string> cids_of(const legalrank::Run& run, const std::string& qid) {
    std::vector<std::string> out;
    auto it = run.find(qid);
    if (it != run.end()) {
        for (const auto& d : it->second) {
            out.push_back(d.cid);
        }
    }
    return out;
}

inline double exist(const legalrank::Run& run, const legalrank::Qrels& qrels, std::size_t m) {
    std::size_t hits = 0;
    for (const auto& [qid, gold] : qrels) {
        hits += first_hit(cids_of(run, qid), gold, m) > 0 ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(qrels.size());
}

inline double mrr(const legalrank::Run& run, const legalrank::Qrels& qrels, std::size_t k) {
    double sum = 0.0;
    for (const auto& [qid, gold] : qrels) {
        if (auto r = first_hit(cids_of(run, qid), gold, k)) {
            sum += 1.0 / static_cast<double>(r);
        }
    }
    return sum / static_cast<double>(qrels.size());
}

/// log(sum(exp(x))) with the max shifted out.
inline double log_sum_exp(const std::vector<double>& x) {
    const double mx = *std::max_element(x.begin(), x.end());
    double s = 0.0;
    for (double v : x) {
        s += std::exp(v - mx);
    }
    return mx + std::log(s);
}

}  // namespace oracle
