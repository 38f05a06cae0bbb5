#pragma once

#include "hsgcn/random.hpp"
#include "hsgcn/spectral_gcn.hpp"

#include <span>
#include <vector>

namespace hsgcn {

/// Twin encoder with one shared GCN stack, an elementwise product of the two
/// flattened embeddings, dropout on that product, and a scalar FC readout.
struct SiameseModel {
    GCNStack gcn;
    Vector fc_weights;  // length n_nodes * f_out
    double fc_bias = 0.0;
    double dropout_keep = 0.8;

    Eigen::Index n_nodes() const;
    void validate() const;
};

struct ModelShape {
    Eigen::Index n_nodes = 0;
    Eigen::Index f_in = 0;
    std::vector<int> features{32, 32};
    int order = 3;
    bool relu_last = true;
    double dropout_keep = 0.8;
};

SiameseModel init_model(const ModelShape& shape, std::uint64_t seed);

/// Flattened (column-major) embedding of one graph signal.
Vector embed(const SiameseModel& model, const Matrix& scaled, const Matrix& x);

/// Score of two precomputed embeddings in evaluation mode.
double score_embeddings(const SiameseModel& model, const Vector& hi, const Vector& hj);

struct PairCache {
    StackCache branch_i, branch_j;
    Vector hi, hj;
    Vector mask;  // 0 or 1/keep per entry; all ones in evaluation mode
};

struct PairForward {
    double score = 0.0;
    PairCache cache;
};

/// Evaluation mode when `training` is false; a training pass draws its dropout
/// mask from `rng`, which must then be non-null.
PairForward similarity_forward(const SiameseModel& model, const Matrix& scaled, const Matrix& xi, const Matrix& xj,
                               bool training, Rng* rng = nullptr);

struct ModelGradients {
    StackGradients gcn;
    Vector fc_weights;
    double fc_bias = 0.0;

    static ModelGradients zeros_like(const SiameseModel& model);
    ModelGradients& operator+=(const ModelGradients& other);
};

/// Gradient of the scalar score scaled by `ds`; the shared stack receives the
/// sum of both branches' contributions.
ModelGradients pair_backward(const SiameseModel& model, const Matrix& scaled, const PairCache& cache, double ds);

struct PairScore {
    int i = 0;
    int j = 0;
    double score = 0.0;
    int label = 1;  // +1 same class, -1 different
};

double hinge_loss(std::span<const PairScore> scores);
std::vector<double> hinge_grad(std::span<const PairScore> scores);

struct ConVarParams {
    double margin = 1.0;
    double variance_threshold = 0.5;

    void validate() const;
};

struct ConVarStats {
    double mean_pos = 0.0, mean_neg = 0.0;
    double var_pos = 0.0, var_neg = 0.0;
    std::size_t n_pos = 0, n_neg = 0;
};

/// Population mean/variance per polarity. Requires >= 2 pairs of each polarity.
ConVarStats convar_stats(std::span<const PairScore> scores);
double convar_loss(std::span<const PairScore> scores, const ConVarParams& params);
std::vector<double> convar_grad(std::span<const PairScore> scores, const ConVarParams& params);

}  // namespace hsgcn
