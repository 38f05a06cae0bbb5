// Command-line driver: gen-data, train, eval, sweep, grad-check.

#include "hsgcn/checkpoint.hpp"
#include "hsgcn/error.hpp"
#include "hsgcn/gradcheck.hpp"
#include "hsgcn/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace hsgcn;

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kData = 3, kNumeric = 4 };

struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<int> threads;
    bool no_higher_order = false;
    std::string loss;
    std::optional<int> epochs;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config, "experiment config (JSON)")->check(CLI::ExistingFile);
    cmd->add_option("--seed", f.seed, "master seed");
    cmd->add_option("--out", f.out, "output directory");
    cmd->add_option("--threads", f.threads, "worker threads for walks and scoring");
    cmd->add_flag("--no-higher-order", f.no_higher_order, "skip the random-walk graph augmentation");
    cmd->add_option("--loss", f.loss, "hinge or convar");
    cmd->add_option("--epochs", f.epochs, "maximum training epochs");
}

RunConfig resolve(const CommonFlags& f) {
    RunConfig c = f.config.empty() ? RunConfig{} : RunConfig::load(f.config);
    if (f.seed) c.seed = *f.seed;
    if (!f.out.empty()) c.output_dir = f.out;
    if (f.threads) c.threads = *f.threads;
    if (f.no_higher_order) c.higher_order = false;
    if (!f.loss.empty()) c.train.loss = parse_loss(f.loss);
    if (f.epochs) c.train.epochs = *f.epochs;
    c.finalize();
    return c;
}

fs::path manifest_in(const fs::path& data) {
    return fs::is_directory(data) ? data / "manifest.json" : data;
}

int cmd_gen_data(const CommonFlags& f) {
    const auto config = resolve(f);
    const auto manifest = write_cohort(generate_cohort(config.synth), config.output_dir);
    std::cout << manifest.string() << '\n';
    return kOk;
}

int cmd_train(const CommonFlags& f, const std::string& data) {
    const auto config = resolve(f);
    const Cohort cohort = load_cohort(manifest_in(data));
    const auto art = train_pipeline(config, cohort);
    write_train_artifacts(config.output_dir, config, cohort, art);
    std::cout << "trained " << art.result.history.size() << " epochs (best " << art.result.best_epoch
              << "), graph edges " << art.graph.edge_count() << " (base " << art.base_graph.edge_count() << ")\n"
              << (fs::path(config.output_dir) / "checkpoint.bin").string() << '\n';
    return kOk;
}

int cmd_eval(const CommonFlags& f, const std::string& checkpoint, const std::string& data, bool oracle) {
    const auto config = resolve(f);
    const fs::path run_dir = fs::path(checkpoint).parent_path();
    const fs::path out_dir = f.out.empty() ? run_dir : fs::path(f.out);
    const Cohort cohort = load_cohort(manifest_in(data));
    const Split split = read_split_json(run_dir / "split.json", cohort);

    EvalOutcome outcome;
    if (oracle) {
        const SimilarityFn sim = [&](int i, int j) {
            return cohort.class_of(static_cast<std::size_t>(i)) == cohort.class_of(static_cast<std::size_t>(j)) ? 1.0
                                                                                                                  : -1.0;
        };
        outcome = {pair_eval(cohort, split.test, sim), subject_eval(cohort, split.train, split.test, sim)};
    } else {
        const SiameseModel model = load_checkpoint(checkpoint);
        const auto lap = laplacians(read_adjacency_csv(run_dir / "adjacency.csv"));
        outcome = evaluate_pipeline(model, lap.scaled, cohort, split, config.threads);
    }
    fs::create_directories(out_dir);
    write_scores_csv(out_dir / "scores.csv", outcome.pair.per_pair_scores);
    outcome.pair.scores_path = "scores.csv";
    const auto report = outcome.to_json();
    std::ofstream(out_dir / "eval.json") << report.dump(2) << '\n';
    std::cout << report.dump(2) << '\n';
    return kOk;
}

int cmd_sweep(const CommonFlags& f, const std::string& sweep_path) {
    const auto config = resolve(f);
    std::ifstream in(sweep_path);
    if (!in) throw ConfigError("cannot open sweep spec " + sweep_path);
    nlohmann::json spec;
    try {
        spec = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(sweep_path + ": " + e.what());
    }
    const auto rows = run_sweep(config, spec, [](const SweepRow& row) {
        std::cerr << row.params.dump() << " auc=" << row.auc << '\n';
    });
    fs::create_directories(config.output_dir);
    const auto path = fs::path(config.output_dir) / "sweep.csv";
    write_sweep_csv(path, spec, rows);
    std::cout << path.string() << '\n';
    return kOk;
}

int cmd_grad_check(const CommonFlags& f, bool corrupt) {
    const auto config = resolve(f);
    GradCheckOptions o;
    o.features.assign(static_cast<std::size_t>(config.gcn.layers), config.gcn.features);
    o.K = config.gcn.K;
    o.loss = config.train.loss;
    o.convar = config.train.convar;
    o.seed = config.seed;
    o.corrupt = corrupt;
    const auto report = gradient_check(o);
    std::cout << report.to_json().dump(2) << '\n';
    return report.passed ? kOk : kNumeric;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Higher-order Siamese GCN: similarity learning between connectivity graphs"};
    app.require_subcommand(1);

    CommonFlags gen_flags, train_flags, eval_flags, sweep_flags, grad_flags;
    std::string train_data, eval_data, checkpoint, sweep_spec;
    bool oracle = false, corrupt = false;

    auto* gen = app.add_subcommand("gen-data", "generate a synthetic cohort (CSV per subject + manifest)");
    add_common(gen, gen_flags);

    auto* tr = app.add_subcommand("train", "build the shared graph and train on the training split");
    add_common(tr, train_flags);
    tr->add_option("--data", train_data, "dataset directory or manifest")->required();

    auto* ev = app.add_subcommand("eval", "pair and subject classification on the held-out split");
    add_common(ev, eval_flags);
    ev->add_option("--checkpoint", checkpoint, "checkpoint.bin written by train")->required();
    ev->add_option("--data", eval_data, "dataset directory or manifest")->required();
    ev->add_flag("--oracle-similarity", oracle, "score pairs by true labels (test hook)")->group("");

    auto* sw = app.add_subcommand("sweep", "grid over K, layers, walk_length, window, higher_order");
    add_common(sw, sweep_flags);
    sw->add_option("--sweep", sweep_spec, "sweep spec (JSON object of lists)")->required();

    auto* gc = app.add_subcommand("grad-check", "finite-difference check of the analytic gradients");
    add_common(gc, grad_flags);
    gc->add_flag("--corrupt-gradient", corrupt, "perturb one analytic coordinate (test hook)")->group("");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (*gen) return cmd_gen_data(gen_flags);
        if (*tr) return cmd_train(train_flags, train_data);
        if (*ev) return cmd_eval(eval_flags, checkpoint, eval_data, oracle);
        if (*sw) return cmd_sweep(sweep_flags, sweep_spec);
        if (*gc) return cmd_grad_check(grad_flags, corrupt);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return kNumeric;
    } catch (const Error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    }
    return kOk;
}
