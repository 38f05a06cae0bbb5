#pragma once

#include "hsgcn/cohort.hpp"
#include "hsgcn/siamese.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hsgcn {

/// Mann-Whitney AUC: P(pos > neg) + 0.5 P(pos == neg). Labels are +1 / -1.
double auc(std::span<const double> scores, std::span<const int> labels);

struct EvalReport {
    double auc = 0.5;
    double accuracy = 0.0;
    std::size_t n_pairs = 0;
    std::vector<PairScore> per_pair_scores;
    std::optional<std::string> scores_path;
    nlohmann::json config = nlohmann::json::object();

    nlohmann::json to_json() const;
};

/// Similarity between two cohort subjects.
using SimilarityFn = std::function<double(int, int)>;

/// Pair accuracy is sign agreement with the label at threshold 0.
inline constexpr double kPairThreshold = 0.0;

EvalReport pair_eval(const Cohort& cohort, std::span<const int> test_ids, const SimilarityFn& similarity);
EvalReport pair_eval(const SiameseModel& model, const Matrix& scaled, const Cohort& cohort,
                     std::span<const int> test_ids, int threads = 1);

/// Weighted vote over training subjects with positive similarity. Falls back to
/// the most similar subject when no weight is positive or the vote ties, then to
/// the lowest class index. Returns a class index.
int weighted_knn_classify(int target, std::span<const int> train_ids, std::span<const int> class_of,
                          const SimilarityFn& similarity);

EvalReport subject_eval(const Cohort& cohort, std::span<const int> train_ids, std::span<const int> test_ids,
                        const SimilarityFn& similarity);
EvalReport subject_eval(const SiameseModel& model, const Matrix& scaled, const Cohort& cohort,
                        std::span<const int> train_ids, std::span<const int> test_ids, int threads = 1);

/// 1 - ||a - b||_2.
double baseline_similarity(std::span<const double> a, std::span<const double> b);

/// Upper triangle (i < j, row-major) of the thresholded affinity.
std::vector<double> baseline_features(const AffinityMatrix& affinity);

/// Flattened embeddings of the listed subjects, indexed by cohort index (others empty).
std::vector<Vector> embed_subjects(const SiameseModel& model, const Matrix& scaled, const Cohort& cohort,
                                   std::span<const int> ids, int threads = 1);

void write_scores_csv(const std::filesystem::path& path, std::span<const PairScore> scores);

}  // namespace hsgcn
