#pragma once

#include "hsgcn/graph_core.hpp"

#include <algorithm>
#include <vector>

namespace hsgcn::detail {

// Per-row selection shared by the affinity and frequency k-nn builders.
// `better(i, a, b)` orders candidates a, b for row i; eligible(i, j) filters them.
template <class Better, class Eligible>
BinaryGraph select_union(Eigen::Index n, int k, Better better, Eligible eligible) {
    Adjacency adj = Adjacency::Zero(n, n);
    std::vector<int> candidates;
    candidates.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        candidates.clear();
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j != i && eligible(i, j)) candidates.push_back(static_cast<int>(j));
        }
        const auto take = std::min<std::size_t>(static_cast<std::size_t>(k), candidates.size());
        std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take),
                          candidates.end(), [&](int a, int b) { return better(i, a, b); });
        for (std::size_t t = 0; t < take; ++t) {
            adj(i, candidates[t]) = 1;
            adj(candidates[t], i) = 1;
        }
    }
    return BinaryGraph(std::move(adj));
}

}  // namespace hsgcn::detail
