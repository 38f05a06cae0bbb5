#include "hsgcn/error.hpp"
#include "hsgcn/higher_order.hpp"
#include "hsgcn/synth.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace hsgcn;

namespace {

BinaryGraph single_edge() {
    Adjacency a = Adjacency::Zero(2, 2);
    a(0, 1) = a(1, 0) = 1;
    return BinaryGraph(a);
}

BinaryGraph path3() {
    Adjacency a = Adjacency::Zero(3, 3);
    a(0, 1) = a(1, 0) = a(1, 2) = a(2, 1) = 1;
    return BinaryGraph(a);
}

// Every (p, q) with 0 < q - p <= w and distinct vertices.
FrequencyMatrix replay(Eigen::Index n, const std::vector<Walk>& walks, int w) {
    FrequencyMatrix::Counts c = FrequencyMatrix::Counts::Zero(n, n);
    for (const auto& walk : walks)
        for (std::size_t p = 0; p < walk.size(); ++p)
            for (std::size_t q = p + 1; q < walk.size(); ++q)
                if (q - p <= static_cast<std::size_t>(w) && walk[p] != walk[q]) {
                    ++c(walk[p], walk[q]);
                    ++c(walk[q], walk[p]);
                }
    return FrequencyMatrix(c);
}

double within_fraction(const BinaryGraph& g, const std::vector<int>& community) {
    std::size_t within = 0;
    for (auto [i, j] : g.edges()) within += community[static_cast<std::size_t>(i)] == community[static_cast<std::size_t>(j)];
    return static_cast<double>(within) / static_cast<double>(g.edge_count());
}

}  // namespace

TEST(WalkParams, Validation) {
    EXPECT_NO_THROW(WalkParams{}.validate());
    EXPECT_THROW((WalkParams{0, 60, 4}.validate()), ValidationError);
    EXPECT_THROW((WalkParams{10, 1, 1}.validate()), ValidationError);
    EXPECT_THROW((WalkParams{10, 5, 5}.validate()), ValidationError);
    EXPECT_THROW((WalkParams{10, 5, 0}.validate()), ValidationError);
}

TEST(RandomWalk, ForcedTransitions) {
    auto rng = make_rng(1, {});
    EXPECT_EQ(random_walk(single_edge(), 0, 4, rng), (Walk{0, 1, 0, 1}));
}

TEST(RandomWalk, UniformNeighbourChoice) {
    int to_zero = 0;
    const int trials = 10'000;
    for (int t = 0; t < trials; ++t) {
        auto rng = make_rng(2, {static_cast<std::uint64_t>(t)});
        const auto w = random_walk(path3(), 1, 2, rng);
        ASSERT_EQ(w.size(), 2u);
        ASSERT_TRUE(w[1] == 0 || w[1] == 2);
        to_zero += w[1] == 0;
    }
    EXPECT_NEAR(static_cast<double>(to_zero) / trials, 0.5, 0.02);
}

TEST(RandomWalk, StepsFollowEdges) {
    auto rng = make_rng(3, {});
    const BinaryGraph g(oracle::random_connected(25, 0.1, rng));
    for (int root = 0; root < 25; ++root) {
        const auto w = random_walk(g, root, 30, rng);
        ASSERT_EQ(w.size(), 30u);
        EXPECT_EQ(w.front(), root);
        for (std::size_t s = 1; s < w.size(); ++s) EXPECT_TRUE(g.has_edge(w[s - 1], w[s]));
    }
}

TEST(RandomWalk, Errors) {
    Adjacency a = Adjacency::Zero(3, 3);
    a(0, 1) = a(1, 0) = 1;
    const BinaryGraph g(a);
    auto rng = make_rng(4, {});
    EXPECT_THROW(random_walk(g, 2, 5, rng), ValidationError);
    EXPECT_THROW(random_walk(g, 3, 5, rng), ValidationError);
}

TEST(Cooccurrence, Examples) {
    FrequencyMatrix f(3);
    const Walk w{0, 1, 2};
    accumulate_cooccurrence(f, w, 1);
    EXPECT_EQ(f(0, 1), 1);
    EXPECT_EQ(f(1, 2), 1);
    EXPECT_EQ(f(0, 2), 0);

    FrequencyMatrix g(3);
    accumulate_cooccurrence(g, w, 2);
    EXPECT_EQ(g(0, 2), 1);
    EXPECT_EQ(g(2, 0), 1);

    FrequencyMatrix h(2);
    const Walk alt{0, 1, 0, 1};
    accumulate_cooccurrence(h, alt, 3);
    EXPECT_EQ(h(0, 1), 4);
    EXPECT_EQ(h(1, 0), 4);
    EXPECT_EQ(h(0, 0), 0);
    EXPECT_EQ(h, replay(2, {alt}, 3));
}

TEST(Cooccurrence, MatchesEnumerationAndTotals) {
    auto rng = make_rng(5, {});
    std::uniform_int_distribution<int> node(0, 7);
    for (int trial = 0; trial < 50; ++trial) {
        Walk w(static_cast<std::size_t>(2 + trial % 15));
        for (auto& v : w) v = node(rng);
        const int window = 1 + trial % 5;
        FrequencyMatrix f(8);
        accumulate_cooccurrence(f, w, window);
        EXPECT_EQ(f, replay(8, {w}, window));
        EXPECT_EQ(f.counts(), f.counts().transpose());
        EXPECT_EQ(f.counts().diagonal().cwiseAbs().sum(), 0);
    }
}

TEST(BuildFrequency, ForcedWalksOnSingleEdge) {
    const auto f = build_frequency(single_edge(), WalkParams{1, 3, 1}, 7);
    EXPECT_EQ(f(0, 1), 4);
    EXPECT_EQ(f(1, 0), 4);
}

TEST(BuildFrequency, DeterministicAndThreadIndependent) {
    auto rng = make_rng(6, {});
    const BinaryGraph g(oracle::random_connected(20, 0.1, rng));
    const WalkParams p{10, 40, 4};
    const auto a = build_frequency(g, p, 99);
    EXPECT_EQ(a, build_frequency(g, p, 99));
    EXPECT_EQ(a, build_frequency(g, p, 99, 3));
    EXPECT_FALSE(a == build_frequency(g, p, 100));
}

TEST(BuildFrequency, ReplayFromLog) {
    auto rng = make_rng(7, {});
    const BinaryGraph g(oracle::random_connected(10, 0.2, rng));
    const WalkParams p{2, 5, 2};
    std::vector<Walk> log;
    const auto f = build_frequency(g, p, 5, 1, &log);
    ASSERT_EQ(log.size(), 20u);
    EXPECT_EQ(f, replay(10, log, p.window));

    const auto path = std::filesystem::temp_directory_path() / "hsgcn_walks.txt";
    write_walk_log(path, log);
    EXPECT_EQ(read_walk_log(path), log);

    // Sum of F is twice the number of valid window pairs.
    std::int64_t pairs = 0;
    for (const auto& w : log)
        for (std::size_t p0 = 0; p0 < w.size(); ++p0)
            for (std::size_t q = p0 + 1; q < w.size() && q - p0 <= 2; ++q) pairs += w[p0] != w[q];
    EXPECT_EQ(f.counts().sum(), 2 * pairs);
}

TEST(BuildFrequency, EachPassStartsOnceFromEveryNode) {
    auto rng = make_rng(8, {});
    const BinaryGraph g(oracle::random_connected(12, 0.2, rng));
    std::vector<Walk> log;
    build_frequency(g, WalkParams{3, 6, 2}, 1, 1, &log);
    for (int pass = 0; pass < 3; ++pass) {
        std::vector<int> roots;
        for (int t = 0; t < 12; ++t) roots.push_back(log[static_cast<std::size_t>(pass * 12 + t)].front());
        std::sort(roots.begin(), roots.end());
        for (int t = 0; t < 12; ++t) EXPECT_EQ(roots[static_cast<std::size_t>(t)], t);
    }
}

TEST(KnnFromFrequency, Examples) {
    FrequencyMatrix f(4);
    f.add_pair(0, 1);
    const auto g = knn_from_frequency(f, 2);
    EXPECT_EQ(g.edges(), (std::vector<std::pair<int, int>>{{0, 1}}));
    EXPECT_EQ(knn_from_frequency(FrequencyMatrix(4), 2).edge_count(), 0u);
    EXPECT_THROW(knn_from_frequency(f, 0), ValidationError);
    EXPECT_THROW(knn_from_frequency(f, 4), ValidationError);
}

TEST(KnnFromFrequency, MatchesBruteForce) {
    for (int trial = 0; trial < 20; ++trial) {
        auto rng = make_rng(9, {static_cast<std::uint64_t>(trial)});
        std::uniform_int_distribution<int> count(0, 6);
        FrequencyMatrix::Counts c = FrequencyMatrix::Counts::Zero(15, 15);
        for (int i = 0; i < 15; ++i)
            for (int j = i + 1; j < 15; ++j) c(i, j) = c(j, i) = count(rng);
        const auto g = knn_from_frequency(FrequencyMatrix(c), 3);
        const auto want = oracle::topk_union(
            15, 3, [&](int i, int j) { return c(i, j); }, [&](int i, int j) { return c(i, j) > 0; });
        EXPECT_EQ(g.adjacency(), want);
    }
}

TEST(MergeGraphs, SetUnion) {
    auto rng = make_rng(10, {});
    const BinaryGraph g(oracle::random_connected(12, 0.1, rng));
    EXPECT_EQ(merge_graphs(g, BinaryGraph::empty(12)), g);
    EXPECT_EQ(merge_graphs(g, g), g);
    for (int trial = 0; trial < 20; ++trial) {
        const BinaryGraph a(oracle::random_connected(12, 0.1, rng));
        const BinaryGraph b(oracle::random_connected(12, 0.1, rng));
        const auto m = merge_graphs(a, b);
        auto want = oracle::edge_set(a.adjacency());
        const auto eb = oracle::edge_set(b.adjacency());
        want.insert(eb.begin(), eb.end());
        EXPECT_EQ(oracle::edge_set(m.adjacency()), want);
        EXPECT_GE(m.edge_count(), std::max(a.edge_count(), b.edge_count()));
    }
    EXPECT_THROW(merge_graphs(g, BinaryGraph::empty(3)), ValidationError);
}

TEST(HigherOrder, SupersetAndDeterminism) {
    SynthSpec spec;
    spec.n_nodes = 40;
    spec.subjects_per_class = 5;
    const auto cohort = generate_cohort(spec);
    std::vector<int> ids(cohort.size());
    std::iota(ids.begin(), ids.end(), 0);
    const auto aff = cohort.affinities(ids);
    const WalkParams p{10, 20, 1};
    const auto r = higher_order_representation(aff, 10, p, 3);
    const auto base = oracle::edge_set(r.base.adjacency());
    const auto merged = oracle::edge_set(r.merged.adjacency());
    EXPECT_TRUE(std::includes(merged.begin(), merged.end(), base.begin(), base.end()));
    EXPECT_EQ(r.merged, higher_order_representation(aff, 10, p, 3).merged);
    for (int i = 0; i < 40; ++i) EXPECT_GT(r.merged.degree(i), 0u);
}

TEST(HigherOrder, CapturesPlantedCommunities) {
    // Noisy enough that the mean-affinity k-nn graph misplaces some edges.
    SynthSpec spec;
    spec.subjects_per_class = 5;
    spec.noise_sd = 0.4;
    const auto cohort = generate_cohort(spec);
    std::vector<int> class_a;
    for (std::size_t s = 0; s < cohort.size(); ++s)
        if (cohort.class_of(s) == 0) class_a.push_back(static_cast<int>(s));
    const auto r = higher_order_representation(cohort.affinities(class_a), 9, WalkParams{10, 40, 4}, 1);
    const auto community = community_assignment(spec, 0);
    const double base = within_fraction(r.base, community);
    const double merged = within_fraction(r.merged, community);
    EXPECT_GT(merged, base) << "base " << base << " merged " << merged;
    EXPECT_GT(within_fraction(r.higher, community), base);
}
