#pragma once

#include "hsgcn/cohort.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace hsgcn {

enum class ClassStructure { PartitionShift, BlockMerge };

ClassStructure parse_class_structure(const std::string& name);
std::string to_string(ClassStructure s);

/// Two-class cohort with planted communities. Class 0 uses contiguous equal
/// blocks; class 1 either merges communities 0 and 1 or shifts every boundary
/// cyclically by half a block.
struct SynthSpec {
    int n_nodes = 90;
    int n_communities = 4;
    double w_in = 0.6;
    double w_out = 0.2;
    double noise_sd = 0.1;
    int subjects_per_class = 40;
    ClassStructure class_structure = ClassStructure::BlockMerge;
    std::uint64_t seed = 1;

    void validate() const;
};

inline const std::vector<std::string> kSynthClasses{"A", "B"};

/// Community of every node under the partition of `class_id`.
std::vector<int> community_assignment(const SynthSpec& spec, int class_id);

AffinityMatrix generate_subject(const SynthSpec& spec, int class_id, int subject_index);

Cohort generate_cohort(const SynthSpec& spec);

/// Writes one CSV per subject plus manifest.json; returns the manifest path.
std::filesystem::path write_cohort(const Cohort& cohort, const std::filesystem::path& dir);

/// Loads a manifest and every subject CSV it lists (paths relative to the manifest).
Cohort load_cohort(const std::filesystem::path& manifest);

}  // namespace hsgcn
