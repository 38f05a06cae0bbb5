#pragma once

#include "hsgcn/cohort.hpp"
#include "hsgcn/random.hpp"
#include "hsgcn/siamese.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace hsgcn {

/// Unordered subject pair (i < j, cohort indices) with label +1 for same class.
struct Pair {
    int i = 0;
    int j = 0;
    int label = 1;

    friend bool operator==(const Pair&, const Pair&) = default;
};

using PairSet = std::vector<Pair>;

PairSet make_pairs(const Cohort& cohort, std::span<const int> subset);

/// Shuffled batches covering every pair at least once. When `balanced`, each
/// batch takes ceil(b/2) same-class and floor(b/2) different-class pairs, cycling
/// through the smaller polarity as needed. A polarity with fewer pairs than its
/// slots contributes all of them, so no batch repeats a pair.
std::vector<PairSet> balanced_batches(const PairSet& pairs, int batch_pairs, bool balanced, Rng& rng);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double l2 = 0.0;
};

struct AdamState {
    Vector m;
    Vector v;
    long step = 0;

    explicit AdamState(Eigen::Index size) : m(Vector::Zero(size)), v(Vector::Zero(size)) {}
};

/// Bias-corrected Adam update. `l2_mask` (optional, 0/1 per coordinate) selects
/// which coordinates receive the l2 * param weight-decay gradient; null means all.
void adam_step(AdamState& state, const AdamConfig& config, Vector& params, const Vector& grads,
               const Vector* l2_mask = nullptr);

// Flat parameter layout: each theta[l][k] column-major, then fc weights, then fc bias.
Vector pack_parameters(const SiameseModel& model);
void unpack_parameters(SiameseModel& model, const Vector& flat);
Vector pack_gradients(const ModelGradients& grads);
/// 1 for filter coefficients and FC weights, 0 for the FC bias.
Vector weight_decay_mask(const SiameseModel& model);

enum class LossKind { Hinge, ConVar };

LossKind parse_loss(const std::string& name);
std::string to_string(LossKind loss);

struct BatchResult {
    double loss = 0.0;
    std::vector<PairScore> scores;
    ModelGradients grads;
};

/// Loss and exact gradient over a batch. Every distinct subject is embedded and
/// back-propagated once; its upstream gradient is the sum over the pairs it
/// appears in, which equals summing pair_backward over the batch.
/// `bases[id]`, when non-empty, holds the precomputed first-layer basis of subject id.
BatchResult batch_gradients(const SiameseModel& model, const Matrix& scaled, std::span<const Matrix> features,
                            std::span<const std::vector<Matrix>> bases, std::span<const Pair> batch, LossKind loss,
                            const ConVarParams& convar, Rng* dropout_rng);

struct TrainConfig {
    int epochs = 60;
    int batch_pairs = 128;
    LossKind loss = LossKind::Hinge;
    ConVarParams convar;
    double l2 = 5e-4;
    double lr = 1e-3;
    std::uint64_t seed = 1;
    int early_stop_patience = 10;
    int max_pairs_per_epoch = 0;  // 0: every pair each epoch

    void validate() const;
};

struct EpochRecord {
    int epoch = 0;
    double mean_loss = 0.0;
    double wall_ms = 0.0;
};

struct TrainResult {
    SiameseModel model;  // parameters at the best training-loss epoch
    std::vector<EpochRecord> history;
    int best_epoch = -1;
};

/// `scaled` is the scaled Laplacian of the shared graph built from training subjects.
TrainResult train(const Cohort& cohort, std::span<const int> train_ids, const Matrix& scaled, const ModelShape& shape,
                  const TrainConfig& config);

void write_history_csv(const std::filesystem::path& path, std::span<const EpochRecord> history);

}  // namespace hsgcn
