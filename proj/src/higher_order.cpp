#include "hsgcn/higher_order.hpp"

#include "hsgcn/error.hpp"
#include "knn_select.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>

namespace hsgcn {

void WalkParams::validate() const {
    if (num_walks < 1) throw ValidationError("walk params: num_walks must be >= 1");
    if (walk_length < 2) throw ValidationError("walk params: walk_length must be >= 2");
    if (window < 1 || window >= walk_length) {
        throw ValidationError("walk params: window must satisfy 1 <= window < walk_length");
    }
}

FrequencyMatrix::FrequencyMatrix(Counts counts) : counts_(std::move(counts)) {
    if (counts_.rows() != counts_.cols()) throw ValidationError("frequency matrix must be square");
    for (Eigen::Index i = 0; i < counts_.rows(); ++i) {
        if (counts_(i, i) != 0) throw ValidationError("frequency matrix: nonzero diagonal at " + std::to_string(i));
        for (Eigen::Index j = 0; j < counts_.cols(); ++j) {
            if (counts_(i, j) < 0 || counts_(i, j) != counts_(j, i)) {
                throw ValidationError("frequency matrix: negative or asymmetric entry at (" + std::to_string(i) +
                                      ", " + std::to_string(j) + ")");
            }
        }
    }
}

FrequencyMatrix& FrequencyMatrix::operator+=(const FrequencyMatrix& other) {
    if (other.n_nodes() != n_nodes()) throw ValidationError("frequency matrix: dimension mismatch");
    counts_ += other.counts_;
    return *this;
}

Walk random_walk(const BinaryGraph& graph, int root, int length, Rng& rng) {
    if (length < 2) throw ValidationError("random_walk: length must be >= 2");
    if (root < 0 || root >= graph.n_nodes()) throw ValidationError("random_walk: invalid root " + std::to_string(root));
    if (graph.degree(root) == 0) throw ValidationError("random_walk: root " + std::to_string(root) + " is isolated");
    Walk walk;
    walk.reserve(static_cast<std::size_t>(length));
    walk.push_back(root);
    for (int t = 1; t < length; ++t) {
        const auto nbrs = graph.neighbors(walk.back());
        std::uniform_int_distribution<std::size_t> pick(0, nbrs.size() - 1);
        walk.push_back(nbrs[pick(rng)]);
    }
    return walk;
}

void accumulate_cooccurrence(FrequencyMatrix& freq, std::span<const int> walk, int window) {
    if (window < 1) throw ValidationError("accumulate_cooccurrence: window must be >= 1");
    const auto len = walk.size();
    for (std::size_t p = 0; p < len; ++p) {
        const auto last = std::min(len - 1, p + static_cast<std::size_t>(window));
        for (std::size_t q = p + 1; q <= last; ++q) {
            if (walk[p] != walk[q]) freq.add_pair(walk[p], walk[q]);
        }
    }
}

FrequencyMatrix build_frequency(const BinaryGraph& graph, const WalkParams& params, std::uint64_t seed,
                                int threads, std::vector<Walk>* log) {
    params.validate();
    const auto n = static_cast<int>(graph.n_nodes());
    for (int v = 0; v < n; ++v) {
        if (graph.degree(v) == 0) throw ValidationError("build_frequency: node " + std::to_string(v) + " is isolated");
    }

    struct Job {
        int pass;
        int root;
    };
    std::vector<Job> jobs;
    jobs.reserve(static_cast<std::size_t>(params.num_walks) * static_cast<std::size_t>(n));
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int pass = 0; pass < params.num_walks; ++pass) {
        std::iota(order.begin(), order.end(), 0);
        auto shuffle_rng = make_rng(seed, {tag(Stream::Shuffle), static_cast<std::uint64_t>(pass)});
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        for (int v : order) jobs.push_back({pass, v});
    }

    if (log) log->assign(jobs.size(), Walk{});
    const auto run = [&](std::size_t begin, std::size_t end, FrequencyMatrix& local) {
        for (std::size_t j = begin; j < end; ++j) {
            auto rng = make_rng(seed, {tag(Stream::Walk), static_cast<std::uint64_t>(jobs[j].pass),
                                       static_cast<std::uint64_t>(jobs[j].root)});
            Walk walk = random_walk(graph, jobs[j].root, params.walk_length, rng);
            accumulate_cooccurrence(local, walk, params.window);
            if (log) (*log)[j] = std::move(walk);
        }
    };

    const auto workers = static_cast<std::size_t>(std::clamp(threads, 1, 64));
    FrequencyMatrix total(n);
    if (workers == 1) {
        run(0, jobs.size(), total);
        return total;
    }
    std::vector<FrequencyMatrix> partial(workers, FrequencyMatrix(n));
    std::vector<std::thread> pool;
    const auto chunk = (jobs.size() + workers - 1) / workers;
    for (std::size_t t = 0; t < workers; ++t) {
        const auto begin = std::min(jobs.size(), t * chunk);
        const auto end = std::min(jobs.size(), begin + chunk);
        pool.emplace_back(run, begin, end, std::ref(partial[t]));
    }
    for (auto& th : pool) th.join();
    for (const auto& p : partial) total += p;
    return total;
}

BinaryGraph knn_from_frequency(const FrequencyMatrix& freq, int k) {
    const auto n = freq.n_nodes();
    if (k < 1 || k >= n) {
        throw ValidationError("knn_from_frequency: k = " + std::to_string(k) + " outside [1, " +
                              std::to_string(n - 1) + "]");
    }
    const auto& c = freq.counts();
    return detail::select_union(
        n, k, [&](Eigen::Index i, int x, int y) { return c(i, x) > c(i, y) || (c(i, x) == c(i, y) && x < y); },
        [&](Eigen::Index i, Eigen::Index j) { return c(i, j) > 0; });
}

BinaryGraph merge_graphs(const BinaryGraph& base, const BinaryGraph& higher) {
    if (base.n_nodes() != higher.n_nodes()) {
        throw ValidationError("merge_graphs: " + std::to_string(base.n_nodes()) + " vs " +
                              std::to_string(higher.n_nodes()) + " nodes");
    }
    return BinaryGraph(base.adjacency().cwiseMax(higher.adjacency()));
}

HigherOrderResult higher_order_representation(std::span<const AffinityMatrix> cohort, int k,
                                              const WalkParams& params, std::uint64_t seed, int threads) {
    BinaryGraph base = knn_graph(mean_affinity(cohort), k);
    FrequencyMatrix freq = build_frequency(base, params, seed, threads);
    BinaryGraph higher = knn_from_frequency(freq, k);
    BinaryGraph merged = merge_graphs(base, higher);
    LaplacianSet lap = laplacians(merged);
    return {std::move(base), std::move(freq), std::move(higher), std::move(merged), std::move(lap)};
}

void write_walk_log(const std::filesystem::path& path, std::span<const Walk> walks) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& walk : walks) {
        for (std::size_t i = 0; i < walk.size(); ++i) {
            if (i) out << ' ';
            out << walk[i];
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

std::vector<Walk> read_walk_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<Walk> walks;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        Walk walk;
        int v = 0;
        while (ss >> v) walk.push_back(v);
        if (!ss.eof()) throw IoError(path.string() + ": line " + std::to_string(walks.size() + 1) + " is malformed");
        walks.push_back(std::move(walk));
    }
    return walks;
}

}  // namespace hsgcn
