#include "hsgcn/pipeline.hpp"

#include "hsgcn/checkpoint.hpp"
#include "hsgcn/error.hpp"

#include <fstream>
#include <map>

namespace hsgcn {

using nlohmann::json;

TrainArtifacts train_pipeline(const RunConfig& config, const Cohort& cohort) {
    TrainArtifacts art;
    art.split = stratified_split(cohort, config.train_fraction, config.seed);
    art.k = config.knn_k(cohort.n_nodes());
    const auto train_affinities = cohort.affinities(art.split.train);
    if (config.higher_order) {
        auto rep = higher_order_representation(train_affinities, art.k, config.walk, config.seed, config.threads);
        art.base_graph = std::move(rep.base);
        art.graph = std::move(rep.merged);
        art.laplacian = std::move(rep.laplacian);
    } else {
        art.base_graph = knn_graph(mean_affinity(train_affinities), art.k);
        art.graph = art.base_graph;
        art.laplacian = laplacians(art.graph);
    }
    art.result = train(cohort, art.split.train, art.laplacian.scaled, config.model_shape(cohort.n_nodes()), config.train);
    return art;
}

void write_split_json(const std::filesystem::path& path, const Cohort& cohort, const Split& split) {
    json j;
    for (const auto* part : {&split.train, &split.test}) {
        json ids = json::array();
        for (int i : *part) ids.push_back(cohort[static_cast<std::size_t>(i)].id);
        j[part == &split.train ? "train" : "test"] = ids;
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

Split read_split_json(const std::filesystem::path& path, const Cohort& cohort) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::map<std::string, int> index;
    for (std::size_t i = 0; i < cohort.size(); ++i) index[cohort[i].id] = static_cast<int>(i);
    Split split;
    try {
        const auto j = json::parse(in);
        for (auto* part : {&split.train, &split.test}) {
            for (const auto& id : j.at(part == &split.train ? "train" : "test")) {
                const auto it = index.find(id.get<std::string>());
                if (it == index.end()) throw ValidationError(path.string() + ": unknown subject " + id.get<std::string>());
                part->push_back(it->second);
            }
        }
    } catch (const json::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
    for (int t : split.test) {
        if (std::find(split.train.begin(), split.train.end(), t) != split.train.end()) {
            throw ValidationError(path.string() + ": subject " + cohort[static_cast<std::size_t>(t)].id +
                                  " is in both train and test");
        }
    }
    return split;
}

void write_train_artifacts(const std::filesystem::path& dir, const RunConfig& config, const Cohort& cohort,
                           const TrainArtifacts& art) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    save_checkpoint(dir / "checkpoint.bin", art.result.model);
    write_history_csv(dir / "history.csv", art.result.history);
    write_adjacency_csv(dir / "adjacency.csv", art.graph);
    write_adjacency_csv(dir / "base_adjacency.csv", art.base_graph);
    write_split_json(dir / "split.json", cohort, art.split);
    std::ofstream out(dir / "config.json");
    if (!out) throw IoError("cannot write " + (dir / "config.json").string());
    out << config.to_json().dump(2) << '\n';
}

json EvalOutcome::to_json() const {
    json j = pair.to_json();
    j["subject_accuracy"] = subject.accuracy;
    j["config"] = {{"pair", pair.config}, {"subject", subject.config}};
    return j;
}

EvalOutcome evaluate_pipeline(const SiameseModel& model, const Matrix& scaled, const Cohort& cohort,
                              const Split& split, int threads) {
    std::vector<int> ids = split.train;
    ids.insert(ids.end(), split.test.begin(), split.test.end());
    const auto emb = embed_subjects(model, scaled, cohort, ids, threads);
    const SimilarityFn sim = [&](int i, int j) {
        return score_embeddings(model, emb[static_cast<std::size_t>(i)], emb[static_cast<std::size_t>(j)]);
    };
    return {pair_eval(cohort, split.test, sim), subject_eval(cohort, split.train, split.test, sim)};
}

ExperimentResult run_experiment(const RunConfig& config) {
    const Cohort cohort = generate_cohort(config.synth);
    const auto art = train_pipeline(config, cohort);
    const auto outcome = evaluate_pipeline(art.result.model, art.laplacian.scaled, cohort, art.split, config.threads);

    ExperimentResult r;
    r.auc = outcome.pair.auc;
    r.pair_accuracy = outcome.pair.accuracy;
    r.subject_accuracy = outcome.subject.accuracy;
    r.checkpoint = serialize_checkpoint(art.result.model);
    r.report = outcome.to_json().dump();
    r.history = art.result.history;

    // Training-pair hinge loss of the initial and the returned model, evaluation mode.
    const auto train_loss = [&](const SiameseModel& model) {
        const auto emb = embed_subjects(model, art.laplacian.scaled, cohort, art.split.train, config.threads);
        std::vector<PairScore> scores;
        for (const auto& p : make_pairs(cohort, art.split.train)) {
            scores.push_back({p.i, p.j,
                              score_embeddings(model, emb[static_cast<std::size_t>(p.i)],
                                               emb[static_cast<std::size_t>(p.j)]),
                              p.label});
        }
        return hinge_loss(scores);
    };
    r.initial_train_loss = train_loss(init_model(config.model_shape(cohort.n_nodes()), config.train.seed));
    r.final_train_loss = train_loss(art.result.model);
    return r;
}

namespace {

const std::vector<std::string> kSweepKeys{"K", "layers", "walk_length", "window", "higher_order"};

}  // namespace

std::vector<json> expand_sweep(const json& spec) {
    if (!spec.is_object() || spec.empty()) throw ConfigError("sweep spec must be a non-empty object");
    for (const auto& [key, values] : spec.items()) {
        if (std::find(kSweepKeys.begin(), kSweepKeys.end(), key) == kSweepKeys.end()) {
            throw ConfigError("sweep: unknown parameter '" + key + "'");
        }
        if (!values.is_array() || values.empty()) throw ConfigError("sweep: '" + key + "' needs a non-empty list");
    }
    std::vector<json> cells{json::object()};
    for (const auto& key : kSweepKeys) {
        if (!spec.contains(key)) continue;
        std::vector<json> next;
        for (const auto& cell : cells) {
            for (const auto& v : spec.at(key)) {
                json c = cell;
                c[key] = v;
                next.push_back(std::move(c));
            }
        }
        cells = std::move(next);
    }
    return cells;
}

RunConfig apply_sweep_cell(RunConfig config, const json& cell) {
    try {
        if (cell.contains("K")) config.gcn.K = cell.at("K").get<int>();
        if (cell.contains("layers")) config.gcn.layers = cell.at("layers").get<int>();
        if (cell.contains("walk_length")) config.walk.walk_length = cell.at("walk_length").get<int>();
        if (cell.contains("window")) config.walk.window = cell.at("window").get<int>();
        if (cell.contains("higher_order")) config.higher_order = cell.at("higher_order").get<bool>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("sweep: bad value: ") + e.what());
    }
    config.finalize();
    return config;
}

std::vector<SweepRow> run_sweep(const RunConfig& config, const json& spec,
                                const std::function<void(const SweepRow&)>& on_row) {
    std::vector<SweepRow> rows;
    for (const auto& cell : expand_sweep(spec)) {
        const auto result = run_experiment(apply_sweep_cell(config, cell));
        rows.push_back({cell, result.auc, result.pair_accuracy, result.subject_accuracy});
        if (on_row) on_row(rows.back());
    }
    return rows;
}

void write_sweep_csv(const std::filesystem::path& path, const json& spec, const std::vector<SweepRow>& rows) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    std::vector<std::string> keys;
    for (const auto& key : kSweepKeys) {
        if (spec.contains(key)) keys.push_back(key);
    }
    for (const auto& key : keys) out << key << ',';
    out << "auc,pair_accuracy,subject_accuracy\n";
    out.precision(17);
    for (const auto& row : rows) {
        for (const auto& key : keys) out << row.params.at(key).dump() << ',';
        out << row.auc << ',' << row.pair_accuracy << ',' << row.subject_accuracy << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace hsgcn
