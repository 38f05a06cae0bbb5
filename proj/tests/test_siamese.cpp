#include "hsgcn/error.hpp"
#include "hsgcn/siamese.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace hsgcn;

namespace {

struct Fixture {
    LaplacianSet lap;
    SiameseModel model;
    Matrix xi, xj;
};

Fixture make(int n, std::uint64_t seed, std::vector<int> features = {6, 4}, int order = 3) {
    auto rng = make_rng(seed, {});
    Fixture f{laplacians(BinaryGraph(oracle::random_connected(n, 0.3, rng))), {}, {}, {}};
    ModelShape shape;
    shape.n_nodes = n;
    shape.f_in = n;
    shape.features = std::move(features);
    shape.order = order;
    f.model = init_model(shape, seed);
    f.model.fc_bias = 0.3;
    f.xi = oracle::random_affinity(n, rng);
    f.xj = oracle::random_affinity(n, rng);
    return f;
}

std::vector<PairScore> random_batch(Rng& rng, int n, double lo = -2.0, double hi = 2.0) {
    std::uniform_real_distribution<double> s(lo, hi);
    std::vector<PairScore> b;
    for (int t = 0; t < n; ++t) b.push_back({t, t + 1, s(rng), t % 2 ? -1 : 1});
    return b;
}

double score(const SiameseModel& m, const Fixture& f) {
    return similarity_forward(m, f.lap.scaled, f.xi, f.xj, false).score;
}

}  // namespace

TEST(Similarity, ZeroWeightsGiveBias) {
    auto f = make(8, 1);
    f.model.fc_weights.setZero();
    EXPECT_EQ(similarity_forward(f.model, f.lap.scaled, f.xi, f.xi, false).score, 0.3);
}

TEST(Similarity, SymmetricInEvaluationMode) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto f = make(9, seed);
        EXPECT_EQ(similarity_forward(f.model, f.lap.scaled, f.xi, f.xj, false).score,
                  similarity_forward(f.model, f.lap.scaled, f.xj, f.xi, false).score);
    }
}

TEST(Similarity, MatchesStraightLineRecomputation) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto f = make(10, 40 + seed);
        EXPECT_NEAR(score(f.model, f), oracle::siamese_score(f.model, f.lap.scaled, f.xi, f.xj), 1e-9);
    }
}

TEST(Similarity, WeightSharing) {
    auto f = make(8, 2);
    const Vector before = embed(f.model, f.lap.scaled, f.xi);
    for (auto& t : f.model.gcn.layers[0].theta) t.array() += 0.5;
    const auto fw = similarity_forward(f.model, f.lap.scaled, f.xi, f.xi, false);
    EXPECT_EQ(fw.cache.hi, fw.cache.hj);
    EXPECT_NE(fw.cache.hi, before);
    EXPECT_EQ(fw.cache.hi, embed(f.model, f.lap.scaled, f.xi));
}

TEST(Similarity, KeepOneTrainingEqualsEvaluation) {
    auto f = make(8, 3);
    f.model.dropout_keep = 1.0;
    auto rng = make_rng(1, {});
    EXPECT_EQ(similarity_forward(f.model, f.lap.scaled, f.xi, f.xj, true, &rng).score, score(f.model, f));
}

TEST(Similarity, DropoutMaskIsInverted) {
    auto f = make(8, 4);
    auto rng = make_rng(2, {});
    const auto fw = similarity_forward(f.model, f.lap.scaled, f.xi, f.xj, true, &rng);
    int kept = 0;
    for (Eigen::Index e = 0; e < fw.cache.mask.size(); ++e) {
        const double v = fw.cache.mask(e);
        EXPECT_TRUE(v == 0.0 || v == 1.0 / 0.8);
        kept += v != 0.0;
    }
    EXPECT_GT(kept, 0);
    EXPECT_LT(kept, fw.cache.mask.size());
    EXPECT_THROW(similarity_forward(f.model, f.lap.scaled, f.xi, f.xj, true, nullptr), ValidationError);
}

TEST(Similarity, ShapeMismatch) {
    const auto f = make(8, 5);
    EXPECT_THROW(similarity_forward(f.model, f.lap.scaled, f.xi, Matrix::Ones(7, 8), false), ValidationError);
    SiameseModel bad = f.model;
    bad.fc_weights = Vector::Ones(3);
    EXPECT_THROW(similarity_forward(bad, f.lap.scaled, f.xi, f.xj, false), ValidationError);
}

TEST(Hinge, Examples) {
    EXPECT_EQ(hinge_loss(std::vector<PairScore>{{0, 1, 1.0, 1}}), 0.0);
    EXPECT_EQ(hinge_loss(std::vector<PairScore>{{0, 1, 0.0, 1}}), 1.0);
    EXPECT_EQ(hinge_loss(std::vector<PairScore>{{0, 1, 0.5, -1}}), 1.5);
    EXPECT_EQ(hinge_grad(std::vector<PairScore>{{0, 1, 2.0, 1}}), std::vector<double>{0.0});
    EXPECT_EQ(hinge_grad(std::vector<PairScore>{{0, 1, 0.0, 1}}), std::vector<double>{-1.0});
    EXPECT_THROW(hinge_loss(std::vector<PairScore>{}), ValidationError);
    EXPECT_THROW(hinge_loss(std::vector<PairScore>{{0, 1, 0.0, 0}}), ValidationError);
}

TEST(Hinge, BruteForceAndNonnegative) {
    auto rng = make_rng(6, {});
    for (int t = 0; t < 200; ++t) {
        const auto b = random_batch(rng, 10);
        const double l = hinge_loss(b);
        EXPECT_NEAR(l, oracle::hinge(b), 1e-12);
        EXPECT_GE(l, 0.0);
    }
    std::vector<PairScore> sat{{0, 1, 1.5, 1}, {0, 2, -1.0, -1}};
    EXPECT_EQ(hinge_loss(sat), 0.0);
}

TEST(Hinge, FiniteDifferencesAwayFromKinks) {
    auto rng = make_rng(7, {});
    auto b = random_batch(rng, 12);
    for (auto& p : b)
        if (std::abs(1.0 - p.label * p.score) < 1e-3) p.score += 0.01;
    const auto g = hinge_grad(b);
    const double h = 1e-6;
    for (std::size_t t = 0; t < b.size(); ++t) {
        auto up = b, dn = b;
        up[t].score += h;
        dn[t].score -= h;
        const double num = (hinge_loss(up) - hinge_loss(dn)) / (2 * h);
        EXPECT_LE(std::abs(num - g[t]), 1e-6 * std::max(1.0, std::abs(num)));
    }
}

TEST(ConVar, Examples) {
    const ConVarParams p{1.0, 0.5};
    std::vector<PairScore> b{{0, 1, 1, 1}, {0, 2, 1, 1}, {1, 2, -1, -1}, {1, 3, -1, -1}};
    EXPECT_EQ(convar_loss(b, p), 0.0);
    for (double d : convar_grad(b, p)) EXPECT_EQ(d, 0.0);
}

TEST(ConVar, MarginOnlyGradient) {
    const ConVarParams p{1.0, 0.5};
    std::vector<PairScore> b{{0, 1, 0.2, 1}, {0, 2, 0.3, 1}, {0, 3, 0.1, 1}, {1, 2, 0.0, -1}, {1, 3, 0.1, -1}};
    const auto st = convar_stats(b);
    ASSERT_LT(st.var_pos, 0.5);
    ASSERT_LT(st.mean_pos - st.mean_neg, 1.0);
    const auto g = convar_grad(b, p);
    for (std::size_t t = 0; t < 3; ++t) EXPECT_NEAR(g[t], -1.0 / 3.0, 1e-15);
    for (std::size_t t = 3; t < 5; ++t) EXPECT_NEAR(g[t], 0.5, 1e-15);
}

TEST(ConVar, StatisticsAndLossBruteForce) {
    auto rng = make_rng(8, {});
    const ConVarParams p{1.0, 0.5};
    for (int t = 0; t < 200; ++t) {
        const auto b = random_batch(rng, 4 + t % 20, -3.0, 3.0);
        const double l = convar_loss(b, p);
        EXPECT_NEAR(l, oracle::convar(b, 1.0, 0.5), 1e-12);
        EXPECT_GE(l, 0.0);
        const auto st = convar_stats(b);
        EXPECT_EQ(st.n_pos + st.n_neg, b.size());
    }
}

TEST(ConVar, VarianceTermsShiftInvariant) {
    auto rng = make_rng(9, {});
    const auto b = random_batch(rng, 16, -3.0, 3.0);
    auto shifted = b;
    for (auto& s : shifted) s.score += 0.75;
    const auto a = convar_stats(b), c = convar_stats(shifted);
    EXPECT_NEAR(a.var_pos, c.var_pos, 1e-12);
    EXPECT_NEAR(a.var_neg, c.var_neg, 1e-12);
    // Shifting every score leaves the mean gap, and so the whole loss, unchanged.
    EXPECT_NEAR(convar_loss(b, {}), convar_loss(shifted, {}), 1e-12);
}

TEST(ConVar, FiniteDifferencesWithActiveVariance) {
    auto rng = make_rng(10, {});
    const ConVarParams p{1.0, 0.5};
    const auto b = random_batch(rng, 14, -3.0, 3.0);
    const auto st = convar_stats(b);
    ASSERT_GT(st.var_pos, 0.5);
    ASSERT_GT(st.var_neg, 0.5);
    const auto g = convar_grad(b, p);
    const double h = 1e-6;
    for (std::size_t t = 0; t < b.size(); ++t) {
        auto up = b, dn = b;
        up[t].score += h;
        dn[t].score -= h;
        const double num = (convar_loss(up, p) - convar_loss(dn, p)) / (2 * h);
        EXPECT_LE(std::abs(num - g[t]) / std::max({std::abs(num), std::abs(g[t]), 1e-6}), 1e-5);
    }
}

TEST(ConVar, SinglePolarityIsAnError) {
    std::vector<PairScore> pos{{0, 1, 1, 1}, {0, 2, 1, 1}, {1, 2, 0, 1}};
    EXPECT_THROW(convar_loss(pos, {}), ValidationError);
    std::vector<PairScore> one_neg{{0, 1, 1, 1}, {0, 2, 1, 1}, {1, 2, 0, -1}};
    try {
        convar_loss(one_neg, {});
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("balanced"), std::string::npos);
    }
    EXPECT_THROW((ConVarParams{0.0, 0.5}.validate()), ValidationError);
    EXPECT_THROW((ConVarParams{1.0, 0.0}.validate()), ValidationError);
}

TEST(PairBackward, ZeroCases) {
    auto f = make(8, 11);
    const auto fw = similarity_forward(f.model, f.lap.scaled, f.xi, f.xj, false);
    const auto g = pair_backward(f.model, f.lap.scaled, fw.cache, 0.0);
    EXPECT_EQ(g.fc_weights.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(g.fc_bias, 0.0);
    for (const auto& l : g.gcn.dtheta)
        for (const auto& t : l) EXPECT_EQ(t.cwiseAbs().maxCoeff(), 0.0);

    // h_j = 0: the product gate blocks every gradient into branch i.
    auto z = make(8, 12);
    for (auto& t : z.model.gcn.layers[0].theta) t.setZero();
    const auto fz = similarity_forward(z.model, z.lap.scaled, z.xi, z.xj, false);
    ASSERT_EQ(fz.cache.hj.cwiseAbs().maxCoeff(), 0.0);
    const auto gz = pair_backward(z.model, z.lap.scaled, fz.cache, 1.0);
    EXPECT_EQ(gz.fc_weights.cwiseAbs().maxCoeff(), 0.0);
    for (const auto& l : gz.gcn.dtheta)
        for (const auto& t : l) EXPECT_EQ(t.cwiseAbs().maxCoeff(), 0.0);
}

TEST(PairBackward, FiniteDifferences) {
    auto f = make(9, 13);
    const auto fw = similarity_forward(f.model, f.lap.scaled, f.xi, f.xj, false);
    const auto g = pair_backward(f.model, f.lap.scaled, fw.cache, 1.0);
    const double h = 1e-6;
    double worst = 0.0;
    auto check = [&](double& param, double analytic) {
        const double v = param;
        param = v + h;
        const double up = score(f.model, f);
        param = v - h;
        const double dn = score(f.model, f);
        param = v;
        const double num = (up - dn) / (2 * h);
        worst = std::max(worst, std::abs(num - analytic) / std::max({std::abs(num), std::abs(analytic), 1e-6}));
    };
    for (std::size_t l = 0; l < f.model.gcn.layers.size(); ++l)
        for (std::size_t k = 0; k < f.model.gcn.layers[l].theta.size(); ++k) {
            auto& t = f.model.gcn.layers[l].theta[k];
            for (Eigen::Index e = 0; e < t.size(); ++e) check(t.data()[e], g.gcn.dtheta[l][k].data()[e]);
        }
    for (Eigen::Index e = 0; e < f.model.fc_weights.size(); ++e) check(f.model.fc_weights(e), g.fc_weights(e));
    check(f.model.fc_bias, g.fc_bias);
    EXPECT_LE(worst, 1e-4);
}

TEST(PairBackward, StaleCache) {
    const auto f = make(8, 14);
    const auto other = make(8, 15);
    const auto fw = similarity_forward(f.model, f.lap.scaled, f.xi, f.xj, false);
    EXPECT_THROW(pair_backward(other.model, f.lap.scaled, fw.cache, 1.0), ValidationError);
}

TEST(InitModel, ShapesAndDeterminism) {
    ModelShape shape;
    shape.n_nodes = 20;
    shape.f_in = 20;
    const auto a = init_model(shape, 3), b = init_model(shape, 3);
    EXPECT_EQ(a.fc_weights.size(), 20 * 32);
    EXPECT_EQ(a.fc_weights, b.fc_weights);
    EXPECT_EQ(a.fc_bias, 0.0);
    EXPECT_EQ(a.dropout_keep, 0.8);
    EXPECT_NE(a.fc_weights, init_model(shape, 4).fc_weights);
    EXPECT_NO_THROW(a.validate());
}
