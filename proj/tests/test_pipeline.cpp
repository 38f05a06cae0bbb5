#include "hsgcn/checkpoint.hpp"
#include "hsgcn/error.hpp"
#include "hsgcn/gradcheck.hpp"
#include "hsgcn/pipeline.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace hsgcn;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

RunConfig tiny_config() {
    RunConfig c;
    c.synth.n_nodes = 20;
    c.synth.subjects_per_class = 6;
    c.walk = {2, 10, 2};
    c.gcn.features = 4;
    c.train.epochs = 3;
    c.train.batch_pairs = 16;
    c.finalize();
    return c;
}

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / "hsgcn_pipeline" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST(RunConfig, JsonRoundTrip) {
    RunConfig c = tiny_config();
    c.seed = 42;
    c.train.loss = LossKind::ConVar;
    const auto j = c.to_json();
    auto back = RunConfig::from_json(j);
    back.finalize();
    EXPECT_EQ(back.to_json(), j);
}

TEST(RunConfig, DefaultsFollowExperimentalSetup) {
    RunConfig c;
    c.finalize();
    EXPECT_EQ(c.walk.num_walks, 10);
    EXPECT_EQ(c.walk.walk_length, 60);
    EXPECT_EQ(c.walk.window, 4);
    EXPECT_EQ(c.gcn.layers, 2);
    EXPECT_EQ(c.gcn.features, 32);
    EXPECT_EQ(c.gcn.K, 3);
    EXPECT_EQ(c.train.lr, 1e-3);
    EXPECT_EQ(c.train.l2, 5e-4);
    EXPECT_EQ(c.gcn.dropout_keep, 0.8);
    EXPECT_EQ(c.train.convar.margin, 1.0);
    EXPECT_EQ(c.train.convar.variance_threshold, 0.5);
    EXPECT_EQ(c.train_fraction, 0.6);
    EXPECT_EQ(c.knn_k(90), 9);
    EXPECT_EQ(c.knn_k(100), 10);
    EXPECT_EQ(c.train.loss, LossKind::Hinge);
}

TEST(RunConfig, RejectsUnknownAndInvalid) {
    EXPECT_THROW(RunConfig::from_json(json{{"seeed", 1}}), ConfigError);
    EXPECT_THROW(RunConfig::from_json(json{{"train", {{"epoch", 1}}}}), ConfigError);
    EXPECT_THROW(RunConfig::from_json(json{{"train", {{"loss", "l1"}}}}), ConfigError);
    EXPECT_THROW(RunConfig::from_json(json{{"seed", "one"}}), ConfigError);
    EXPECT_THROW(RunConfig::from_json(json{{"gcn", {{"dropout_keep", 0.8}, {"dropout_drop", 0.2}}}}), ConfigError);
    auto c = RunConfig::from_json(json{{"gcn", {{"dropout_drop", 0.2}}}});
    EXPECT_DOUBLE_EQ(c.gcn.dropout_keep, 0.8);
    c = RunConfig::from_json(json{{"train", {{"margin", 3.0}}}});
    EXPECT_EQ(c.train.convar.variance_threshold, 1.5);
    RunConfig bad;
    bad.walk.window = 60;
    EXPECT_THROW(bad.finalize(), ConfigError);
    bad = {};
    bad.train_fraction = 1.0;
    EXPECT_THROW(bad.finalize(), ConfigError);
    EXPECT_THROW(RunConfig::load("/nonexistent/config.json"), ConfigError);
}

TEST(RunConfig, SeedReachesEveryComponent) {
    RunConfig c;
    c.seed = 77;
    c.finalize();
    EXPECT_EQ(c.synth.seed, 77u);
    EXPECT_EQ(c.train.seed, 77u);
}

TEST(Checkpoint, RoundTripIsExact) {
    ModelShape shape;
    shape.n_nodes = 10;
    shape.f_in = 10;
    shape.features = {5, 3};
    shape.order = 4;
    auto model = init_model(shape, 3);
    model.fc_bias = -0.125;
    const auto bytes = serialize_checkpoint(model);
    const auto back = deserialize_checkpoint(bytes);
    EXPECT_EQ(serialize_checkpoint(back), bytes);
    EXPECT_EQ(back.fc_weights, model.fc_weights);
    EXPECT_EQ(back.fc_bias, model.fc_bias);
    EXPECT_EQ(back.dropout_keep, model.dropout_keep);
    for (std::size_t l = 0; l < 2; ++l)
        for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(back.gcn.layers[l].theta[k], model.gcn.layers[l].theta[k]);
    const auto header = json::parse(bytes.substr(0, bytes.find('\n')));
    EXPECT_EQ(header.at("format"), "hsgcn-checkpoint");

    const auto dir = scratch("ckpt");
    save_checkpoint(dir / "m.bin", model);
    EXPECT_EQ(serialize_checkpoint(load_checkpoint(dir / "m.bin")), bytes);
}

TEST(Checkpoint, RejectsCorruption) {
    ModelShape shape;
    shape.n_nodes = 6;
    shape.f_in = 6;
    shape.features = {3};
    const auto bytes = serialize_checkpoint(init_model(shape, 1));
    EXPECT_THROW(deserialize_checkpoint(bytes.substr(0, bytes.size() - 8)), Error);
    EXPECT_THROW(deserialize_checkpoint(bytes + "x"), Error);
    EXPECT_THROW(deserialize_checkpoint("not a checkpoint"), Error);
    EXPECT_THROW(load_checkpoint("/nonexistent/m.bin"), IoError);
}

TEST(Pipeline, HigherOrderOffUsesBaseGraph) {
    auto c = tiny_config();
    const auto cohort = generate_cohort(c.synth);
    c.higher_order = false;
    const auto off = train_pipeline(c, cohort);
    EXPECT_EQ(off.graph, off.base_graph);
    c.higher_order = true;
    const auto on = train_pipeline(c, cohort);
    EXPECT_EQ(on.base_graph, off.base_graph);
    for (auto [i, j] : on.base_graph.edges()) EXPECT_TRUE(on.graph.has_edge(i, j));
    EXPECT_EQ(on.split.train, off.split.train);
}

TEST(Pipeline, ArtifactsAndSplitFile) {
    const auto c = tiny_config();
    const auto cohort = generate_cohort(c.synth);
    const auto art = train_pipeline(c, cohort);
    const auto dir = scratch("artifacts");
    write_train_artifacts(dir, c, cohort, art);
    for (const char* f : {"checkpoint.bin", "history.csv", "adjacency.csv", "base_adjacency.csv", "split.json", "config.json"})
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    const auto split = read_split_json(dir / "split.json", cohort);
    EXPECT_EQ(split.train, art.split.train);
    EXPECT_EQ(split.test, art.split.test);
    EXPECT_EQ(read_adjacency_csv(dir / "adjacency.csv"), art.graph);

    auto j = json::parse(std::ifstream(dir / "split.json"));
    j["test"].push_back(j["train"][0]);
    std::ofstream(dir / "overlap.json") << j.dump();
    EXPECT_THROW(read_split_json(dir / "overlap.json", cohort), ValidationError);
}

TEST(Pipeline, ExperimentIsDeterministic) {
    const auto c = tiny_config();
    const auto a = run_experiment(c);
    const auto b = run_experiment(c);
    EXPECT_EQ(a.checkpoint, b.checkpoint);
    EXPECT_EQ(a.report, b.report);
    const auto report = json::parse(a.report);
    for (const char* key : {"auc", "accuracy", "n_pairs", "subject_accuracy", "config"}) EXPECT_TRUE(report.contains(key)) << key;
    EXPECT_GE(a.auc, 0.0);
    EXPECT_LE(a.auc, 1.0);
}

TEST(Pipeline, DefaultCohortTrainingLossDrops) {
    RunConfig c;
    c.train.epochs = 200;
    c.finalize();
    const auto r = run_experiment(c);
    EXPECT_LT(r.final_train_loss, 0.3 * r.initial_train_loss)
        << "initial " << r.initial_train_loss << " final " << r.final_train_loss;
}

TEST(Sweep, ExpandsGrid) {
    EXPECT_EQ(expand_sweep(json{{"K", {1, 2, 3, 4, 5, 6, 7, 8}}}).size(), 8u);
    EXPECT_EQ(expand_sweep(json{{"K", {1, 2}}, {"walk_length", {30, 40, 50}}}).size(), 6u);
    EXPECT_THROW(expand_sweep(json{{"lr", {0.1}}}), ConfigError);
    EXPECT_THROW(expand_sweep(json{{"K", json::array()}}), ConfigError);
    EXPECT_THROW(expand_sweep(json::array()), ConfigError);
    const auto cfg = apply_sweep_cell(RunConfig{}, json{{"K", 5}, {"higher_order", false}});
    EXPECT_EQ(cfg.gcn.K, 5);
    EXPECT_FALSE(cfg.higher_order);
}

TEST(Sweep, RowsAreSeeded) {
    const auto c = tiny_config();
    const json spec{{"K", {1, 2}}};
    const auto a = run_sweep(c, spec);
    const auto b = run_sweep(c, spec);
    ASSERT_EQ(a.size(), 2u);
    for (std::size_t r = 0; r < 2; ++r) EXPECT_EQ(a[r].auc, b[r].auc);
    const auto dir = scratch("sweep");
    write_sweep_csv(dir / "s.csv", spec, a);
    std::ifstream in(dir / "s.csv");
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) ++lines;
    EXPECT_EQ(lines, 3);
}

TEST(GradCheck, PassesForBothLossesAndCatchesCorruption) {
    GradCheckOptions o;
    o.features = {8, 8};
    for (LossKind loss : {LossKind::Hinge, LossKind::ConVar}) {
        o.loss = loss;
        const auto r = gradient_check(o);
        EXPECT_TRUE(r.passed) << r.to_json().dump();
        EXPECT_LE(r.max_rel_error, 1e-4);
        EXPECT_EQ(r.per_tensor.size(), 4u);
    }
    o.loss = LossKind::Hinge;
    o.corrupt = true;
    const auto bad = gradient_check(o);
    EXPECT_FALSE(bad.passed);
    EXPECT_FALSE(bad.worst_coordinate.empty());
}
