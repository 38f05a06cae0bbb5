#pragma once

#include "hsgcn/graph_core.hpp"

#include <span>
#include <string>
#include <vector>

namespace hsgcn {

struct Subject {
    std::string id;
    std::string label;
    AffinityMatrix affinity;
};

/// Labeled subjects sharing one node count, with at least two classes.
class Cohort {
public:
    Cohort(std::vector<Subject> subjects, std::vector<std::string> classes);

    std::size_t size() const { return subjects_.size(); }
    Eigen::Index n_nodes() const { return subjects_.front().affinity.n_nodes(); }
    const std::vector<Subject>& subjects() const { return subjects_; }
    const Subject& operator[](std::size_t i) const { return subjects_[i]; }
    const std::vector<std::string>& classes() const { return classes_; }

    /// Index into classes() of subject i.
    int class_of(std::size_t i) const { return class_index_[i]; }
    const std::vector<int>& class_indices() const { return class_index_; }

    std::vector<AffinityMatrix> affinities(std::span<const int> ids) const;

private:
    std::vector<Subject> subjects_;
    std::vector<std::string> classes_;
    std::vector<int> class_index_;
};

struct Split {
    std::vector<int> train;
    std::vector<int> test;
};

/// Per-class seeded shuffle; round(fraction * class size) subjects of each class go to training.
Split stratified_split(const Cohort& cohort, double train_fraction, std::uint64_t seed);

}  // namespace hsgcn
