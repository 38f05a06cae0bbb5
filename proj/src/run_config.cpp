#include "hsgcn/run_config.hpp"

#include "hsgcn/error.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace hsgcn {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, value] : obj.items()) {
        if (!known.contains(key)) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + ": wrong type (" + obj.at(key).dump() + ")");
    }
}

}  // namespace

void RunConfig::finalize() {
    synth.seed = seed;
    train.seed = seed;
    if (threads < 1) throw ConfigError("threads must be >= 1");
    if (!(knn_fraction > 0.0 && knn_fraction < 1.0)) throw ConfigError("knn_fraction must lie in (0, 1)");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train_fraction must lie in (0, 1)");
    if (gcn.layers < 1 || gcn.features < 1 || gcn.K < 1) throw ConfigError("gcn: layers, features and K must be >= 1");
    if (!(gcn.dropout_keep > 0.0 && gcn.dropout_keep <= 1.0)) throw ConfigError("gcn.dropout_keep must lie in (0, 1]");
    synth.validate();
    try {
        walk.validate();
    } catch (const ValidationError& e) {
        throw ConfigError(e.what());
    }
    train.validate();
}

int RunConfig::knn_k(Eigen::Index n_nodes) const {
    const auto k = static_cast<int>(std::lround(knn_fraction * static_cast<double>(n_nodes)));
    return std::clamp(k, 1, static_cast<int>(n_nodes) - 1);
}

ModelShape RunConfig::model_shape(Eigen::Index n_nodes) const {
    ModelShape shape;
    shape.n_nodes = n_nodes;
    shape.f_in = n_nodes;
    shape.features.assign(static_cast<std::size_t>(gcn.layers), gcn.features);
    shape.order = gcn.K;
    shape.relu_last = gcn.relu_last;
    shape.dropout_keep = gcn.dropout_keep;
    return shape;
}

json RunConfig::to_json() const {
    return {
        {"seed", seed},
        {"output_dir", output_dir},
        {"threads", threads},
        {"higher_order", higher_order},
        {"knn_fraction", knn_fraction},
        {"train_fraction", train_fraction},
        {"synth",
         {{"n_nodes", synth.n_nodes},
          {"n_communities", synth.n_communities},
          {"w_in", synth.w_in},
          {"w_out", synth.w_out},
          {"noise_sd", synth.noise_sd},
          {"subjects_per_class", synth.subjects_per_class},
          {"class_structure", to_string(synth.class_structure)}}},
        {"walk", {{"num_walks", walk.num_walks}, {"walk_length", walk.walk_length}, {"window", walk.window}}},
        {"gcn",
         {{"layers", gcn.layers},
          {"features", gcn.features},
          {"K", gcn.K},
          {"relu_last", gcn.relu_last},
          {"dropout_keep", gcn.dropout_keep}}},
        {"train",
         {{"epochs", train.epochs},
          {"batch_pairs", train.batch_pairs},
          {"loss", to_string(train.loss)},
          {"margin", train.convar.margin},
          {"variance_threshold", train.convar.variance_threshold},
          {"l2", train.l2},
          {"lr", train.lr},
          {"early_stop_patience", train.early_stop_patience},
          {"max_pairs_per_epoch", train.max_pairs_per_epoch}}},
    };
}

RunConfig RunConfig::from_json(const json& j) {
    RunConfig c;
    reject_unknown(j, {"seed", "output_dir", "threads", "higher_order", "knn_fraction", "train_fraction", "synth", "walk",
                       "gcn", "train"},
                   "config");
    read(j, "seed", c.seed, "config");
    read(j, "output_dir", c.output_dir, "config");
    read(j, "threads", c.threads, "config");
    read(j, "higher_order", c.higher_order, "config");
    read(j, "knn_fraction", c.knn_fraction, "config");
    read(j, "train_fraction", c.train_fraction, "config");

    if (j.contains("synth")) {
        const auto& s = j.at("synth");
        reject_unknown(s, {"n_nodes", "n_communities", "w_in", "w_out", "noise_sd", "subjects_per_class",
                           "class_structure"},
                       "synth");
        read(s, "n_nodes", c.synth.n_nodes, "synth");
        read(s, "n_communities", c.synth.n_communities, "synth");
        read(s, "w_in", c.synth.w_in, "synth");
        read(s, "w_out", c.synth.w_out, "synth");
        read(s, "noise_sd", c.synth.noise_sd, "synth");
        read(s, "subjects_per_class", c.synth.subjects_per_class, "synth");
        std::string structure = to_string(c.synth.class_structure);
        read(s, "class_structure", structure, "synth");
        c.synth.class_structure = parse_class_structure(structure);
    }
    if (j.contains("walk")) {
        const auto& w = j.at("walk");
        reject_unknown(w, {"num_walks", "walk_length", "window"}, "walk");
        read(w, "num_walks", c.walk.num_walks, "walk");
        read(w, "walk_length", c.walk.walk_length, "walk");
        read(w, "window", c.walk.window, "walk");
    }
    if (j.contains("gcn")) {
        const auto& g = j.at("gcn");
        reject_unknown(g, {"layers", "features", "K", "relu_last", "dropout_keep", "dropout_drop"}, "gcn");
        read(g, "layers", c.gcn.layers, "gcn");
        read(g, "features", c.gcn.features, "gcn");
        read(g, "K", c.gcn.K, "gcn");
        read(g, "relu_last", c.gcn.relu_last, "gcn");
        if (g.contains("dropout_keep") && g.contains("dropout_drop")) {
            throw ConfigError("gcn: give either dropout_keep or dropout_drop, not both");
        }
        read(g, "dropout_keep", c.gcn.dropout_keep, "gcn");
        if (g.contains("dropout_drop")) {
            double drop = 0.0;
            read(g, "dropout_drop", drop, "gcn");
            c.gcn.dropout_keep = 1.0 - drop;
        }
    }
    if (j.contains("train")) {
        const auto& t = j.at("train");
        reject_unknown(t, {"epochs", "batch_pairs", "loss", "margin", "variance_threshold", "l2", "lr",
                           "early_stop_patience", "max_pairs_per_epoch"},
                       "train");
        read(t, "epochs", c.train.epochs, "train");
        read(t, "batch_pairs", c.train.batch_pairs, "train");
        std::string loss = to_string(c.train.loss);
        read(t, "loss", loss, "train");
        c.train.loss = parse_loss(loss);
        read(t, "margin", c.train.convar.margin, "train");
        c.train.convar.variance_threshold = c.train.convar.margin / 2.0;
        read(t, "variance_threshold", c.train.convar.variance_threshold, "train");
        read(t, "l2", c.train.l2, "train");
        read(t, "lr", c.train.lr, "train");
        read(t, "early_stop_patience", c.train.early_stop_patience, "train");
        read(t, "max_pairs_per_epoch", c.train.max_pairs_per_epoch, "train");
    }
    return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return from_json(j);
}

}  // namespace hsgcn
