#pragma once

#include "hsgcn/higher_order.hpp"
#include "hsgcn/synth.hpp"
#include "hsgcn/trainer.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>

namespace hsgcn {

struct GcnConfig {
    int layers = 2;
    int features = 32;
    int K = 3;
    bool relu_last = true;
    double dropout_keep = 0.8;
};

/// Everything one experiment needs. JSON keys mirror the field names; unknown
/// keys are rejected.
struct RunConfig {
    std::uint64_t seed = 1;
    std::string output_dir = "run";
    int threads = 1;
    bool higher_order = true;
    double knn_fraction = 0.10;
    double train_fraction = 0.6;
    SynthSpec synth;
    WalkParams walk;
    GcnConfig gcn;
    TrainConfig train;

    /// Pushes the top-level seed into every component and checks invariants.
    void finalize();
    int knn_k(Eigen::Index n_nodes) const;
    ModelShape model_shape(Eigen::Index n_nodes) const;

    nlohmann::json to_json() const;
    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig load(const std::filesystem::path& path);
};

}  // namespace hsgcn
