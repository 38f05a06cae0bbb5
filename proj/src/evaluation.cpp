#include "hsgcn/evaluation.hpp"

#include "hsgcn/error.hpp"
#include "hsgcn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <thread>

namespace hsgcn {

double auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw ValidationError("auc: scores and labels differ in length");
    for (std::size_t t = 0; t < scores.size(); ++t) {
        if (!std::isfinite(scores[t])) throw ValidationError("auc: non-finite score at index " + std::to_string(t));
    }
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Sweep tie groups in ascending order: each positive beats every negative
    // below its group and gets half credit for negatives inside it.
    double wins = 0.0;
    std::size_t neg_below = 0, n_pos = 0, n_neg = 0;
    for (std::size_t g = 0; g < order.size();) {
        std::size_t end = g;
        std::size_t pos_in = 0, neg_in = 0;
        while (end < order.size() && scores[order[end]] == scores[order[g]]) {
            const int y = labels[order[end]];
            if (y == 1) {
                ++pos_in;
            } else if (y == -1) {
                ++neg_in;
            } else {
                throw ValidationError("auc: labels must be +1 or -1");
            }
            ++end;
        }
        wins += static_cast<double>(pos_in) * (static_cast<double>(neg_below) + 0.5 * static_cast<double>(neg_in));
        neg_below += neg_in;
        n_pos += pos_in;
        n_neg += neg_in;
        g = end;
    }
    if (n_pos == 0 || n_neg == 0) throw ValidationError("auc: both classes must be present");
    return wins / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

nlohmann::json EvalReport::to_json() const {
    nlohmann::json j;
    j["auc"] = auc;
    j["accuracy"] = accuracy;
    j["n_pairs"] = n_pairs;
    if (scores_path) j["scores_path"] = *scores_path;
    j["config"] = config;
    return j;
}

EvalReport pair_eval(const Cohort& cohort, std::span<const int> test_ids, const SimilarityFn& similarity) {
    const auto pairs = make_pairs(cohort, test_ids);
    EvalReport report;
    std::vector<double> scores;
    std::vector<int> labels;
    std::size_t correct = 0;
    for (const auto& p : pairs) {
        const double s = similarity(p.i, p.j);
        report.per_pair_scores.push_back({p.i, p.j, s, p.label});
        scores.push_back(s);
        labels.push_back(p.label);
        if ((s > kPairThreshold ? 1 : -1) == p.label) ++correct;
    }
    report.n_pairs = pairs.size();
    report.auc = auc(scores, labels);
    report.accuracy = static_cast<double>(correct) / static_cast<double>(pairs.size());
    report.config = {{"task", "pair"}, {"threshold", kPairThreshold}};
    return report;
}

std::vector<Vector> embed_subjects(const SiameseModel& model, const Matrix& scaled, const Cohort& cohort,
                                   std::span<const int> ids, int threads) {
    std::vector<Vector> out(cohort.size());
    const auto workers = static_cast<std::size_t>(std::clamp(threads, 1, 64));
    const auto work = [&](std::size_t t) {
        for (std::size_t k = t; k < ids.size(); k += workers) {
            const auto idx = static_cast<std::size_t>(ids[k]);
            out[idx] = embed(model, scaled, cohort[idx].affinity.values());
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work, t);
        for (auto& th : pool) th.join();
    }
    return out;
}

EvalReport pair_eval(const SiameseModel& model, const Matrix& scaled, const Cohort& cohort,
                     std::span<const int> test_ids, int threads) {
    const auto emb = embed_subjects(model, scaled, cohort, test_ids, threads);
    return pair_eval(cohort, test_ids, [&](int i, int j) {
        return score_embeddings(model, emb[static_cast<std::size_t>(i)], emb[static_cast<std::size_t>(j)]);
    });
}

int weighted_knn_classify(int target, std::span<const int> train_ids, std::span<const int> class_of,
                          const SimilarityFn& similarity) {
    if (train_ids.empty()) throw ValidationError("weighted_knn_classify: empty training set");
    const int n_classes = *std::max_element(class_of.begin(), class_of.end()) + 1;
    std::vector<double> weight(static_cast<std::size_t>(n_classes), 0.0);
    double best_sim = -std::numeric_limits<double>::infinity();
    int fallback = n_classes;
    for (int j : train_ids) {
        const double s = similarity(target, j);
        const int c = class_of[static_cast<std::size_t>(j)];
        if (s > 0.0) weight[static_cast<std::size_t>(c)] += s;
        if (s > best_sim || (s == best_sim && c < fallback)) {
            best_sim = s;
            fallback = c;
        }
    }
    const auto top = std::max_element(weight.begin(), weight.end());
    if (*top <= 0.0 || std::count(weight.begin(), weight.end(), *top) > 1) return fallback;
    return static_cast<int>(top - weight.begin());
}

EvalReport subject_eval(const Cohort& cohort, std::span<const int> train_ids, std::span<const int> test_ids,
                        const SimilarityFn& similarity) {
    if (test_ids.empty()) throw ValidationError("subject_eval: no test subjects");
    EvalReport report;
    std::size_t correct = 0;
    for (int t : test_ids) {
        const int predicted = weighted_knn_classify(t, train_ids, cohort.class_indices(), similarity);
        if (predicted == cohort.class_of(static_cast<std::size_t>(t))) ++correct;
    }
    report.accuracy = static_cast<double>(correct) / static_cast<double>(test_ids.size());
    report.config = {{"task", "subject"}, {"classifier", "weighted-knn-positive"}, {"n_test", test_ids.size()}};
    return report;
}

EvalReport subject_eval(const SiameseModel& model, const Matrix& scaled, const Cohort& cohort,
                        std::span<const int> train_ids, std::span<const int> test_ids, int threads) {
    std::vector<int> ids(train_ids.begin(), train_ids.end());
    ids.insert(ids.end(), test_ids.begin(), test_ids.end());
    const auto emb = embed_subjects(model, scaled, cohort, ids, threads);
    return subject_eval(cohort, train_ids, test_ids, [&](int i, int j) {
        return score_embeddings(model, emb[static_cast<std::size_t>(i)], emb[static_cast<std::size_t>(j)]);
    });
}

double baseline_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ValidationError("baseline_similarity: feature lengths differ");
    double sq = 0.0;
    for (std::size_t t = 0; t < a.size(); ++t) sq += (a[t] - b[t]) * (a[t] - b[t]);
    return 1.0 - std::sqrt(sq);
}

std::vector<double> baseline_features(const AffinityMatrix& affinity) {
    const auto n = affinity.n_nodes();
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) out.push_back(affinity(i, j));
    }
    return out;
}

void write_scores_csv(const std::filesystem::path& path, std::span<const PairScore> scores) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "i,j,Y,s\n";
    out.precision(17);
    for (const auto& p : scores) out << p.i << ',' << p.j << ',' << p.label << ',' << p.score << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace hsgcn
