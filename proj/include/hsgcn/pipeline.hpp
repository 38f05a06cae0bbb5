#pragma once

#include "hsgcn/evaluation.hpp"
#include "hsgcn/run_config.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace hsgcn {

struct TrainArtifacts {
    Split split;
    int k = 0;
    BinaryGraph base_graph = BinaryGraph::empty(0);  // k-nn graph of the training mean affinity
    BinaryGraph graph = BinaryGraph::empty(0);       // graph used for filtering
    LaplacianSet laplacian;
    TrainResult result;
};

/// Split, shared graph from training subjects (with or without the random-walk
/// augmentation), then training.
TrainArtifacts train_pipeline(const RunConfig& config, const Cohort& cohort);

/// checkpoint.bin, history.csv, adjacency.csv, base_adjacency.csv, split.json, config.json.
void write_train_artifacts(const std::filesystem::path& dir, const RunConfig& config, const Cohort& cohort,
                           const TrainArtifacts& artifacts);

struct EvalOutcome {
    EvalReport pair;
    EvalReport subject;

    /// Flat report: pair AUC/accuracy at the top level plus subject accuracy.
    nlohmann::json to_json() const;
};

EvalOutcome evaluate_pipeline(const SiameseModel& model, const Matrix& scaled, const Cohort& cohort,
                              const Split& split, int threads = 1);

void write_split_json(const std::filesystem::path& path, const Cohort& cohort, const Split& split);
Split read_split_json(const std::filesystem::path& path, const Cohort& cohort);

struct ExperimentResult {
    double auc = 0.0;
    double pair_accuracy = 0.0;
    double subject_accuracy = 0.0;
    std::string checkpoint;  // serialized bytes
    std::string report;      // EvalOutcome JSON dump
    std::vector<EpochRecord> history;
    double initial_train_loss = 0.0;
    double final_train_loss = 0.0;
};

/// Generate the synthetic cohort, train, and evaluate on the held-out split,
/// all in memory.
ExperimentResult run_experiment(const RunConfig& config);

/// Grid over any subset of K, layers, walk_length, window, higher_order.
struct SweepRow {
    nlohmann::json params;
    double auc = 0.0;
    double pair_accuracy = 0.0;
    double subject_accuracy = 0.0;
};

std::vector<nlohmann::json> expand_sweep(const nlohmann::json& spec);
RunConfig apply_sweep_cell(RunConfig config, const nlohmann::json& cell);
std::vector<SweepRow> run_sweep(const RunConfig& config, const nlohmann::json& spec,
                                const std::function<void(const SweepRow&)>& on_row = {});
void write_sweep_csv(const std::filesystem::path& path, const nlohmann::json& spec, const std::vector<SweepRow>& rows);

}  // namespace hsgcn
