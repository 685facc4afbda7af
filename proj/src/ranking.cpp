#include "legalrank/ranking.hpp"

#include <algorithm>

namespace legalrank {

void keep_top_k(RankedList& list, std::size_t k) {
    std::size_t keep = std::min(k, list.size());
    std::partial_sort(list.begin(), list.begin() + static_cast<std::ptrdiff_t>(keep), list.end(),
                      ranks_before);
    list.resize(keep);
}

}  // namespace legalrank
