#pragma once

#include "hsgcn/graph_core.hpp"
#include "hsgcn/random.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace hsgcn {

struct WalkParams {
    int num_walks = 10;    // passes over a shuffled node order
    int walk_length = 60;  // vertices per walk
    int window = 4;        // max positional offset counted as co-occurrence

    void validate() const;
};

/// Symmetric co-occurrence counts with zero diagonal.
class FrequencyMatrix {
public:
    using Counts = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

    explicit FrequencyMatrix(Eigen::Index n) : counts_(Counts::Zero(n, n)) {}
    explicit FrequencyMatrix(Counts counts);

    Eigen::Index n_nodes() const { return counts_.rows(); }
    const Counts& counts() const { return counts_; }
    std::int64_t operator()(Eigen::Index i, Eigen::Index j) const { return counts_(i, j); }

    void add_pair(int a, int b) {
        ++counts_(a, b);
        ++counts_(b, a);
    }
    FrequencyMatrix& operator+=(const FrequencyMatrix& other);

    friend bool operator==(const FrequencyMatrix& a, const FrequencyMatrix& b) { return a.counts_ == b.counts_; }

private:
    Counts counts_;
};

using Walk = std::vector<int>;

/// Uniform random walk of `length` vertices starting at `root`.
Walk random_walk(const BinaryGraph& graph, int root, int length, Rng& rng);

/// Counts every unordered positional pair (p, q), 0 < q - p <= window, whose
/// vertices differ. Windows at the tail of the walk are truncated, not skipped.
void accumulate_cooccurrence(FrequencyMatrix& freq, std::span<const int> walk, int window);

/// γ passes; each pass shuffles the node order and walks once from every node.
/// Walk (pass, node) draws from its own substream, so the result does not depend
/// on `threads`. When `log` is given it receives every walk in generation order.
FrequencyMatrix build_frequency(const BinaryGraph& graph, const WalkParams& params, std::uint64_t seed,
                                int threads = 1, std::vector<Walk>* log = nullptr);

/// Each node keeps its k largest nonzero counts (ties to the lower index); symmetric union.
BinaryGraph knn_from_frequency(const FrequencyMatrix& freq, int k);

/// Elementwise OR of two adjacencies.
BinaryGraph merge_graphs(const BinaryGraph& base, const BinaryGraph& higher);

struct HigherOrderResult {
    BinaryGraph base;    // k-nn graph of the mean affinity
    FrequencyMatrix frequency;
    BinaryGraph higher;  // k-nn graph of the co-occurrence counts
    BinaryGraph merged;
    LaplacianSet laplacian;
};

HigherOrderResult higher_order_representation(std::span<const AffinityMatrix> cohort, int k,
                                              const WalkParams& params, std::uint64_t seed, int threads = 1);

// Walk log: one walk per line, space separated node indices.
void write_walk_log(const std::filesystem::path& path, std::span<const Walk> walks);
std::vector<Walk> read_walk_log(const std::filesystem::path& path);

}  // namespace hsgcn
