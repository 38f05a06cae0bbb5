#include "hsgcn/cohort.hpp"

#include "hsgcn/error.hpp"
#include "hsgcn/random.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace hsgcn {

Cohort::Cohort(std::vector<Subject> subjects, std::vector<std::string> classes)
    : subjects_(std::move(subjects)), classes_(std::move(classes)) {
    if (subjects_.empty()) throw ValidationError("cohort has no subjects");
    const auto n = subjects_.front().affinity.n_nodes();
    std::set<int> seen;
    std::set<std::string> ids;
    for (const auto& s : subjects_) {
        if (s.affinity.n_nodes() != n) {
            throw ValidationError("subject " + s.id + " has " + std::to_string(s.affinity.n_nodes()) +
                                  " nodes, expected " + std::to_string(n));
        }
        if (!ids.insert(s.id).second) throw ValidationError("duplicate subject id " + s.id);
        const auto it = std::find(classes_.begin(), classes_.end(), s.label);
        if (it == classes_.end()) throw ValidationError("subject " + s.id + " has unknown label " + s.label);
        class_index_.push_back(static_cast<int>(it - classes_.begin()));
        seen.insert(class_index_.back());
    }
    if (seen.size() < 2) throw ValidationError("cohort must contain at least two classes");
}

std::vector<AffinityMatrix> Cohort::affinities(std::span<const int> ids) const {
    std::vector<AffinityMatrix> out;
    out.reserve(ids.size());
    for (int id : ids) {
        if (id < 0 || static_cast<std::size_t>(id) >= subjects_.size()) {
            throw ValidationError("subject index " + std::to_string(id) + " out of range");
        }
        out.push_back(subjects_[static_cast<std::size_t>(id)].affinity);
    }
    return out;
}

Split stratified_split(const Cohort& cohort, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ValidationError("train fraction must lie in (0, 1)");
    Split split;
    for (std::size_t c = 0; c < cohort.classes().size(); ++c) {
        std::vector<int> members;
        for (std::size_t i = 0; i < cohort.size(); ++i) {
            if (cohort.class_of(i) == static_cast<int>(c)) members.push_back(static_cast<int>(i));
        }
        auto rng = make_rng(seed, {tag(Stream::Split), c});
        std::shuffle(members.begin(), members.end(), rng);
        const auto n_train = static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(members.size())));
        split.train.insert(split.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_train));
        split.test.insert(split.test.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train), members.end());
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

}  // namespace hsgcn
