#include "hsgcn/gradcheck.hpp"

#include "hsgcn/error.hpp"
#include "hsgcn/synth.hpp"

#include <cmath>

namespace hsgcn {

namespace {

struct Instance {
    LaplacianSet lap;
    std::vector<Matrix> features;
    PairSet pairs;
};

Instance make_instance(const GradCheckOptions& o) {
    if (o.subjects < 4) throw ValidationError("gradient check needs at least 4 subjects");
    SynthSpec spec;
    spec.n_nodes = o.n_nodes;
    spec.n_communities = 2;
    spec.subjects_per_class = o.subjects / 2;
    spec.seed = o.seed;
    const Cohort cohort = generate_cohort(spec);
    Instance inst;
    std::vector<int> ids;
    for (std::size_t i = 0; i < cohort.size(); ++i) {
        inst.features.push_back(cohort[i].affinity.values());
        ids.push_back(static_cast<int>(i));
    }
    const auto k = std::max(1, o.n_nodes / 4);
    inst.lap = laplacians(knn_graph(mean_affinity(cohort.affinities(ids)), k));
    inst.pairs = make_pairs(cohort, ids);
    return inst;
}

struct Evaluation {
    double loss = 0.0;
    std::vector<bool> signature;  // every kink-relevant comparison
};

Evaluation evaluate(const SiameseModel& model, const Instance& inst, const GradCheckOptions& o) {
    Evaluation ev;
    std::vector<Vector> emb;
    for (const auto& x : inst.features) {
        const auto fwd = stack_forward(model.gcn, inst.lap.scaled, x);
        for (std::size_t l = 0; l < fwd.cache.pre.size(); ++l) {
            if (!model.gcn.rectified(l)) continue;
            const auto& z = fwd.cache.pre[l];
            for (Eigen::Index t = 0; t < z.size(); ++t) ev.signature.push_back(z.data()[t] > 0.0);
        }
        emb.emplace_back(Eigen::Map<const Vector>(fwd.embedding.data(), fwd.embedding.size()));
    }
    std::vector<PairScore> scores;
    for (const auto& p : inst.pairs) {
        scores.push_back({p.i, p.j,
                          score_embeddings(model, emb[static_cast<std::size_t>(p.i)], emb[static_cast<std::size_t>(p.j)]),
                          p.label});
    }
    if (o.loss == LossKind::Hinge) {
        ev.loss = hinge_loss(scores);
        for (const auto& s : scores) ev.signature.push_back(s.label * s.score < 1.0);
    } else {
        ev.loss = convar_loss(scores, o.convar);
        const auto st = convar_stats(scores);
        ev.signature.push_back(st.var_pos > o.convar.variance_threshold);
        ev.signature.push_back(st.var_neg > o.convar.variance_threshold);
        ev.signature.push_back(o.convar.margin - (st.mean_pos - st.mean_neg) > 0.0);
    }
    return ev;
}

struct Coordinate {
    std::string tensor;
    std::string label;
};

std::vector<Coordinate> coordinate_names(const SiameseModel& model) {
    std::vector<Coordinate> names;
    for (std::size_t l = 0; l < model.gcn.layers.size(); ++l) {
        const auto& bank = model.gcn.layers[l];
        const auto tensor = "gcn." + std::to_string(l) + ".theta";
        for (int k = 0; k < bank.order(); ++k) {
            // Column-major within each theta[k], matching pack_parameters.
            for (Eigen::Index j = 0; j < bank.f_out(); ++j) {
                for (Eigen::Index i = 0; i < bank.f_in(); ++i) {
                    names.push_back({tensor, tensor + "[" + std::to_string(k) + "," + std::to_string(i) + "," +
                                                 std::to_string(j) + "]"});
                }
            }
        }
    }
    for (Eigen::Index i = 0; i < model.fc_weights.size(); ++i) {
        names.push_back({"fc.weights", "fc.weights[" + std::to_string(i) + "]"});
    }
    names.push_back({"fc.bias", "fc.bias"});
    return names;
}

}  // namespace

nlohmann::json GradCheckReport::to_json() const {
    return {{"passed", passed},
            {"max_rel_error", max_rel_error},
            {"worst_coordinate", worst_coordinate},
            {"worst_analytic", worst_analytic},
            {"worst_numeric", worst_numeric},
            {"per_tensor", per_tensor},
            {"checked", checked},
            {"step_reduced", step_reduced},
            {"skipped", skipped}};
}

GradCheckReport gradient_check(const GradCheckOptions& o) {
    const Instance inst = make_instance(o);
    ModelShape shape;
    shape.n_nodes = o.n_nodes;
    shape.f_in = o.n_nodes;
    shape.features = o.features;
    shape.order = o.K;
    shape.dropout_keep = 1.0;
    SiameseModel model = init_model(shape, o.seed);

    const auto batch = batch_gradients(model, inst.lap.scaled, inst.features, {}, inst.pairs, o.loss, o.convar, nullptr);
    Vector analytic = pack_gradients(batch.grads);
    if (o.corrupt) analytic(0) += 1e-3 + 0.5 * std::abs(analytic(0));

    const Vector base = pack_parameters(model);
    const auto base_signature = evaluate(model, inst, o).signature;
    const auto names = coordinate_names(model);

    GradCheckReport report;
    Vector probe = base;
    for (Eigen::Index c = 0; c < base.size(); ++c) {
        double h = o.step;
        bool clean = false;
        bool reduced = false;
        double numeric = 0.0;
        for (int attempt = 0; attempt < 4 && !clean; ++attempt, h /= 10.0) {
            probe(c) = base(c) + h;
            unpack_parameters(model, probe);
            const auto plus = evaluate(model, inst, o);
            probe(c) = base(c) - h;
            unpack_parameters(model, probe);
            const auto minus = evaluate(model, inst, o);
            probe(c) = base(c);
            clean = plus.signature == base_signature && minus.signature == base_signature;
            numeric = (plus.loss - minus.loss) / (2.0 * h);
            reduced = reduced || !clean;
        }
        if (reduced) ++report.step_reduced;
        if (!clean) {
            ++report.skipped;
            continue;
        }
        const double a = analytic(c);
        const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), o.floor});
        const auto& name = names[static_cast<std::size_t>(c)];
        auto& tensor_max = report.per_tensor[name.tensor];
        tensor_max = std::max(tensor_max, rel);
        ++report.checked;
        if (rel > report.max_rel_error || report.worst_coordinate.empty()) {
            report.max_rel_error = rel;
            report.worst_coordinate = name.label;
            report.worst_analytic = a;
            report.worst_numeric = numeric;
        }
    }
    unpack_parameters(model, base);
    report.passed = report.skipped == 0 && report.max_rel_error <= o.tolerance;
    return report;
}

}  // namespace hsgcn
