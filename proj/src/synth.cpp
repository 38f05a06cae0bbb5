#include "hsgcn/synth.hpp"

#include "hsgcn/error.hpp"
#include "hsgcn/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace hsgcn {

ClassStructure parse_class_structure(const std::string& name) {
    if (name == "block_merge") return ClassStructure::BlockMerge;
    if (name == "partition_shift") return ClassStructure::PartitionShift;
    throw ConfigError("unknown class_structure '" + name + "' (expected block_merge or partition_shift)");
}

std::string to_string(ClassStructure s) {
    return s == ClassStructure::BlockMerge ? "block_merge" : "partition_shift";
}

void SynthSpec::validate() const {
    if (n_communities < 2) throw ConfigError("synth: n_communities must be >= 2");
    if (n_nodes < n_communities) throw ConfigError("synth: n_nodes must be >= n_communities");
    if (!(0.0 <= w_out && w_out < w_in && w_in <= 1.0)) throw ConfigError("synth: need 0 <= w_out < w_in <= 1");
    if (!(noise_sd >= 0.0)) throw ConfigError("synth: noise_sd must be >= 0");
    if (subjects_per_class < 1) throw ConfigError("synth: subjects_per_class must be >= 1");
}

std::vector<int> community_assignment(const SynthSpec& spec, int class_id) {
    const auto n = spec.n_nodes;
    std::vector<int> base(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) base[static_cast<std::size_t>(i)] = i * spec.n_communities / n;
    if (class_id == 0) return base;

    std::vector<int> out(base.size());
    if (spec.class_structure == ClassStructure::BlockMerge) {
        std::transform(base.begin(), base.end(), out.begin(), [](int c) { return c == 1 ? 0 : c; });
    } else {
        const int shift = std::max(1, n / spec.n_communities / 2);
        for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = base[static_cast<std::size_t>((i + shift) % n)];
    }
    return out;
}

AffinityMatrix generate_subject(const SynthSpec& spec, int class_id, int subject_index) {
    spec.validate();
    if (class_id < 0 || class_id > 1) throw ValidationError("generate_subject: class_id must be 0 or 1");
    const auto community = community_assignment(spec, class_id);
    const auto n = static_cast<Eigen::Index>(spec.n_nodes);
    auto rng = make_rng(spec.seed, {tag(Stream::Synth), static_cast<std::uint64_t>(class_id),
                                    static_cast<std::uint64_t>(subject_index)});
    std::normal_distribution<double> noise(0.0, 1.0);
    Matrix m = Matrix::Identity(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const bool same = community[static_cast<std::size_t>(i)] == community[static_cast<std::size_t>(j)];
            double v = same ? spec.w_in : spec.w_out;
            if (spec.noise_sd > 0.0) v += spec.noise_sd * noise(rng);
            m(i, j) = m(j, i) = std::clamp(v, 0.0, 1.0);
        }
    }
    return AffinityMatrix(std::move(m));
}

Cohort generate_cohort(const SynthSpec& spec) {
    spec.validate();
    std::vector<Subject> subjects;
    for (int c = 0; c < 2; ++c) {
        for (int s = 0; s < spec.subjects_per_class; ++s) {
            std::ostringstream id;
            id << kSynthClasses[static_cast<std::size_t>(c)] << '_' << std::setw(3) << std::setfill('0') << s;
            subjects.push_back({id.str(), kSynthClasses[static_cast<std::size_t>(c)], generate_subject(spec, c, s)});
        }
    }
    return Cohort(std::move(subjects), kSynthClasses);
}

std::filesystem::path write_cohort(const Cohort& cohort, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir / "subjects", ec);
    if (ec) throw IoError("cannot create " + (dir / "subjects").string() + ": " + ec.message());
    nlohmann::json manifest;
    manifest["nodes"] = cohort.n_nodes();
    manifest["classes"] = cohort.classes();
    manifest["subjects"] = nlohmann::json::array();
    for (const auto& s : cohort.subjects()) {
        const auto rel = std::filesystem::path("subjects") / (s.id + ".csv");
        write_matrix_csv(dir / rel, s.affinity.values());
        manifest["subjects"].push_back({{"id", s.id}, {"label", s.label}, {"path", rel.generic_string()}});
    }
    const auto path = dir / "manifest.json";
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << manifest.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
    return path;
}

Cohort load_cohort(const std::filesystem::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot open manifest " + manifest_path.string());
    nlohmann::json manifest;
    std::vector<Subject> subjects;
    std::vector<std::string> classes;
    Eigen::Index nodes = 0;
    try {
        manifest = nlohmann::json::parse(in);
        nodes = manifest.at("nodes").get<Eigen::Index>();
        classes = manifest.at("classes").get<std::vector<std::string>>();
        for (const auto& entry : manifest.at("subjects")) {
            const auto path = manifest_path.parent_path() / entry.at("path").get<std::string>();
            auto affinity = read_affinity_csv(path);
            if (affinity.n_nodes() != nodes) {
                throw IoError(path.string() + ": " + std::to_string(affinity.n_nodes()) + " nodes, manifest says " +
                              std::to_string(nodes));
            }
            subjects.push_back({entry.at("id").get<std::string>(), entry.at("label").get<std::string>(),
                                std::move(affinity)});
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError(manifest_path.string() + ": " + e.what());
    }
    return Cohort(std::move(subjects), std::move(classes));
}

}  // namespace hsgcn
