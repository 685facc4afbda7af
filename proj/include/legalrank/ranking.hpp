#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace legalrank {

struct ScoredDoc {
    std::string cid;
    double score = 0.0;

    friend bool operator==(const ScoredDoc&, const ScoredDoc&) = default;
};

/// Ordered (cid, score) list for one query, best first.
using RankedList = std::vector<ScoredDoc>;

/// Score descending, cid ascending on ties. Total order for finite scores.
inline bool ranks_before(const ScoredDoc& a, const ScoredDoc& b) {
    if (a.score != b.score) {
        return a.score > b.score;
    }
    return a.cid < b.cid;
}

/// Keeps the best min(k, size) entries of `list` in ranking order.
void keep_top_k(RankedList& list, std::size_t k);

}  // namespace legalrank
