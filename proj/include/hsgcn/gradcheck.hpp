#pragma once

#include "hsgcn/trainer.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace hsgcn {

struct GradCheckOptions {
    int n_nodes = 12;
    int subjects = 4;  // split evenly over two classes
    std::vector<int> features{32, 32};
    int K = 3;
    LossKind loss = LossKind::Hinge;
    ConVarParams convar;
    double step = 1e-6;
    double tolerance = 1e-4;
    // Relative errors use max(|analytic|, |numeric|, floor) as denominator.
    double floor = 1e-6;
    std::uint64_t seed = 1;
    bool corrupt = false;  // negative control: perturbs one analytic coordinate
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst_coordinate;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
    std::map<std::string, double> per_tensor;  // max relative error per tensor
    std::size_t checked = 0;
    std::size_t step_reduced = 0;  // coordinates whose step was shrunk to avoid a kink
    std::size_t skipped = 0;       // coordinates sitting on a kink at every step tried
    bool passed = false;

    nlohmann::json to_json() const;
};

/// Central differences on every parameter of a small random Siamese model with
/// dropout off, against the analytic batch gradient used for training.
GradCheckReport gradient_check(const GradCheckOptions& options);

}  // namespace hsgcn
