#include "hsgcn/trainer.hpp"

#include "hsgcn/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

namespace hsgcn {

PairSet make_pairs(const Cohort& cohort, std::span<const int> subset) {
    if (subset.size() < 2) throw ValidationError("make_pairs: need at least 2 subjects");
    std::vector<int> ids(subset.begin(), subset.end());
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) throw ValidationError("make_pairs: duplicate subject");
    if (ids.front() < 0 || static_cast<std::size_t>(ids.back()) >= cohort.size()) {
        throw ValidationError("make_pairs: subject index out of range");
    }
    PairSet pairs;
    pairs.reserve(ids.size() * (ids.size() - 1) / 2);
    for (std::size_t a = 0; a < ids.size(); ++a) {
        for (std::size_t b = a + 1; b < ids.size(); ++b) {
            const auto i = static_cast<std::size_t>(ids[a]), j = static_cast<std::size_t>(ids[b]);
            pairs.push_back({ids[a], ids[b], cohort.class_of(i) == cohort.class_of(j) ? 1 : -1});
        }
    }
    return pairs;
}

std::vector<PairSet> balanced_batches(const PairSet& pairs, int batch_pairs, bool balanced, Rng& rng) {
    if (batch_pairs < 1) throw ValidationError("balanced_batches: batch size must be >= 1");
    std::vector<PairSet> batches;
    if (pairs.empty()) return batches;

    if (!balanced) {
        PairSet shuffled = pairs;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        const auto b = static_cast<std::size_t>(batch_pairs);
        for (std::size_t start = 0; start < shuffled.size(); start += b) {
            const auto end = std::min(shuffled.size(), start + b);
            batches.emplace_back(shuffled.begin() + static_cast<std::ptrdiff_t>(start),
                                 shuffled.begin() + static_cast<std::ptrdiff_t>(end));
        }
        return batches;
    }

    if (batch_pairs < 2) throw ValidationError("balanced_batches: balanced batches need at least 2 pairs");
    PairSet pos, neg;
    for (const auto& p : pairs) (p.label > 0 ? pos : neg).push_back(p);
    if (pos.empty() || neg.empty()) {
        throw ValidationError("balanced_batches: no " + std::string(pos.empty() ? "same" : "different") +
                              "-class pairs available; the constrained-variance loss needs both");
    }
    std::shuffle(pos.begin(), pos.end(), rng);
    std::shuffle(neg.begin(), neg.end(), rng);

    const auto pos_slots = static_cast<std::size_t>((batch_pairs + 1) / 2);
    const auto neg_slots = static_cast<std::size_t>(batch_pairs / 2);
    const auto n_batches = std::max((pos.size() + pos_slots - 1) / pos_slots, (neg.size() + neg_slots - 1) / neg_slots);
    const auto take_pos = std::min(pos_slots, pos.size());
    const auto take_neg = std::min(neg_slots, neg.size());
    for (std::size_t t = 0; t < n_batches; ++t) {
        PairSet batch;
        batch.reserve(take_pos + take_neg);
        for (std::size_t s = 0; s < take_pos; ++s) batch.push_back(pos[(t * pos_slots + s) % pos.size()]);
        for (std::size_t s = 0; s < take_neg; ++s) batch.push_back(neg[(t * neg_slots + s) % neg.size()]);
        batches.push_back(std::move(batch));
    }
    return batches;
}

void adam_step(AdamState& state, const AdamConfig& config, Vector& params, const Vector& grads, const Vector* l2_mask) {
    if (params.size() != grads.size() || state.m.size() != params.size() ||
        (l2_mask && l2_mask->size() != params.size())) {
        throw ValidationError("adam_step: shape mismatch");
    }
    Vector g = grads;
    if (config.l2 != 0.0) {
        if (l2_mask) {
            g += config.l2 * params.cwiseProduct(*l2_mask);
        } else {
            g += config.l2 * params;
        }
    }
    ++state.step;
    state.m = config.beta1 * state.m + (1.0 - config.beta1) * g;
    state.v = config.beta2 * state.v + (1.0 - config.beta2) * g.cwiseAbs2();
    const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
    params.array() -= config.lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + config.epsilon);
}

Vector pack_parameters(const SiameseModel& model) {
    Vector flat(static_cast<Eigen::Index>(model.gcn.parameter_count()) + model.fc_weights.size() + 1);
    Eigen::Index at = 0;
    for (const auto& bank : model.gcn.layers) {
        for (const auto& t : bank.theta) {
            flat.segment(at, t.size()) = Eigen::Map<const Vector>(t.data(), t.size());
            at += t.size();
        }
    }
    flat.segment(at, model.fc_weights.size()) = model.fc_weights;
    at += model.fc_weights.size();
    flat(at) = model.fc_bias;
    return flat;
}

void unpack_parameters(SiameseModel& model, const Vector& flat) {
    const auto expected = static_cast<Eigen::Index>(model.gcn.parameter_count()) + model.fc_weights.size() + 1;
    if (flat.size() != expected) throw ValidationError("unpack_parameters: size mismatch");
    Eigen::Index at = 0;
    for (auto& bank : model.gcn.layers) {
        for (auto& t : bank.theta) {
            Eigen::Map<Vector>(t.data(), t.size()) = flat.segment(at, t.size());
            at += t.size();
        }
    }
    model.fc_weights = flat.segment(at, model.fc_weights.size());
    at += model.fc_weights.size();
    model.fc_bias = flat(at);
}

Vector pack_gradients(const ModelGradients& grads) {
    Eigen::Index size = grads.fc_weights.size() + 1;
    for (const auto& layer : grads.gcn.dtheta) {
        for (const auto& t : layer) size += t.size();
    }
    Vector flat(size);
    Eigen::Index at = 0;
    for (const auto& layer : grads.gcn.dtheta) {
        for (const auto& t : layer) {
            flat.segment(at, t.size()) = Eigen::Map<const Vector>(t.data(), t.size());
            at += t.size();
        }
    }
    flat.segment(at, grads.fc_weights.size()) = grads.fc_weights;
    flat(size - 1) = grads.fc_bias;
    return flat;
}

Vector weight_decay_mask(const SiameseModel& model) {
    Vector mask = Vector::Ones(static_cast<Eigen::Index>(model.gcn.parameter_count()) + model.fc_weights.size() + 1);
    mask(mask.size() - 1) = 0.0;
    return mask;
}

LossKind parse_loss(const std::string& name) {
    if (name == "hinge") return LossKind::Hinge;
    if (name == "convar") return LossKind::ConVar;
    throw ConfigError("unknown loss '" + name + "' (expected hinge or convar)");
}

std::string to_string(LossKind loss) { return loss == LossKind::Hinge ? "hinge" : "convar"; }

BatchResult batch_gradients(const SiameseModel& model, const Matrix& scaled, std::span<const Matrix> features,
                            std::span<const std::vector<Matrix>> bases, std::span<const Pair> batch, LossKind loss,
                            const ConVarParams& convar, Rng* dropout_rng) {
    if (batch.empty()) throw ValidationError("batch_gradients: empty batch");

    struct Branch {
        StackForward forward;
        Vector h;
        Vector dh;
        const std::vector<Matrix>* basis = nullptr;
    };
    std::map<int, Branch> branches;
    for (const auto& p : batch) {
        for (int id : {p.i, p.j}) {
            if (id < 0 || static_cast<std::size_t>(id) >= features.size()) {
                throw ValidationError("batch_gradients: subject " + std::to_string(id) + " has no features");
            }
            branches.try_emplace(id);
        }
    }
    for (auto& [id, br] : branches) {
        const auto idx = static_cast<std::size_t>(id);
        if (idx < bases.size() && !bases[idx].empty()) br.basis = &bases[idx];
        br.forward = stack_forward(model.gcn, scaled, features[idx], br.basis);
        br.h = Eigen::Map<const Vector>(br.forward.embedding.data(), br.forward.embedding.size());
        if (br.h.size() != model.fc_weights.size()) throw ValidationError("embedding length does not match FC weights");
        br.dh = Vector::Zero(br.h.size());
    }

    const bool training = dropout_rng != nullptr && model.dropout_keep < 1.0;
    const auto size = model.fc_weights.size();
    std::vector<Vector> masks(batch.size());
    BatchResult result;
    result.scores.reserve(batch.size());
    for (std::size_t t = 0; t < batch.size(); ++t) {
        const auto& p = batch[t];
        masks[t] = Vector::Ones(size);
        if (training) {
            std::bernoulli_distribution keep(model.dropout_keep);
            const double scale = 1.0 / model.dropout_keep;
            for (Eigen::Index e = 0; e < size; ++e) masks[t](e) = keep(*dropout_rng) ? scale : 0.0;
        }
        const Vector prod = branches[p.i].h.cwiseProduct(branches[p.j].h).cwiseProduct(masks[t]);
        result.scores.push_back({p.i, p.j, model.fc_weights.dot(prod) + model.fc_bias, p.label});
    }

    std::vector<double> ds;
    if (loss == LossKind::Hinge) {
        result.loss = hinge_loss(result.scores);
        ds = hinge_grad(result.scores);
    } else {
        result.loss = convar_loss(result.scores, convar);
        ds = convar_grad(result.scores, convar);
    }

    result.grads = ModelGradients::zeros_like(model);
    for (std::size_t t = 0; t < batch.size(); ++t) {
        if (ds[t] == 0.0) continue;
        auto& bi = branches[batch[t].i];
        auto& bj = branches[batch[t].j];
        const Vector gate = ds[t] * model.fc_weights.cwiseProduct(masks[t]);
        result.grads.fc_weights += ds[t] * bi.h.cwiseProduct(bj.h).cwiseProduct(masks[t]);
        result.grads.fc_bias += ds[t];
        bi.dh += gate.cwiseProduct(bj.h);
        bj.dh += gate.cwiseProduct(bi.h);
    }
    for (auto& [id, br] : branches) {
        if (br.dh.isZero(0.0)) continue;
        const auto& emb = br.forward.embedding;
        const Matrix dH = Eigen::Map<const Matrix>(br.dh.data(), emb.rows(), emb.cols());
        result.grads.gcn += stack_backward(model.gcn, scaled, br.forward.cache, dH, false, br.basis);
    }
    return result;
}

void TrainConfig::validate() const {
    if (epochs < 0) throw ConfigError("epochs must be >= 0");
    if (batch_pairs < 1) throw ConfigError("batch_pairs must be >= 1");
    if (loss == LossKind::ConVar && batch_pairs < 4) {
        throw ConfigError("constrained-variance loss needs batch_pairs >= 4 (2 of each polarity)");
    }
    if (!(lr > 0.0)) throw ConfigError("lr must be positive");
    if (l2 < 0.0) throw ConfigError("l2 must be >= 0");
    if (early_stop_patience < 0) throw ConfigError("early_stop_patience must be >= 0");
    if (max_pairs_per_epoch < 0) throw ConfigError("max_pairs_per_epoch must be >= 0");
    try {
        convar.validate();
    } catch (const ValidationError& e) {
        throw ConfigError(e.what());
    }
}

TrainResult train(const Cohort& cohort, std::span<const int> train_ids, const Matrix& scaled, const ModelShape& shape,
                  const TrainConfig& config) {
    config.validate();
    TrainResult result;
    result.model = init_model(shape, config.seed);
    if (config.epochs == 0) return result;

    std::vector<Matrix> features(cohort.size());
    std::vector<std::vector<Matrix>> bases(cohort.size());
    const int first_order = result.model.gcn.layers.front().order();
    for (int id : train_ids) {
        const auto idx = static_cast<std::size_t>(id);
        features[idx] = cohort[idx].affinity.values();
        bases[idx] = cheb_basis(scaled, features[idx], first_order);
    }
    const PairSet all_pairs = make_pairs(cohort, train_ids);

    AdamConfig adam{.lr = config.lr, .l2 = config.l2};
    Vector params = pack_parameters(result.model);
    AdamState state(params.size());
    const Vector decay = weight_decay_mask(result.model);

    SiameseModel working = result.model;
    double best = std::numeric_limits<double>::infinity();
    int stale = 0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        PairSet epoch_pairs = all_pairs;
        if (config.max_pairs_per_epoch > 0 && epoch_pairs.size() > static_cast<std::size_t>(config.max_pairs_per_epoch)) {
            auto rng = make_rng(config.seed, {tag(Stream::PairSample), static_cast<std::uint64_t>(epoch)});
            std::shuffle(epoch_pairs.begin(), epoch_pairs.end(), rng);
            epoch_pairs.resize(static_cast<std::size_t>(config.max_pairs_per_epoch));
        }
        auto batch_rng = make_rng(config.seed, {tag(Stream::Batch), static_cast<std::uint64_t>(epoch)});
        const auto batches =
            balanced_batches(epoch_pairs, config.batch_pairs, config.loss == LossKind::ConVar, batch_rng);

        double weighted = 0.0;
        std::size_t counted = 0;
        for (std::size_t b = 0; b < batches.size(); ++b) {
            auto dropout_rng = make_rng(config.seed, {tag(Stream::Dropout), static_cast<std::uint64_t>(epoch), b});
            const auto step =
                batch_gradients(working, scaled, features, bases, batches[b], config.loss, config.convar, &dropout_rng);
            if (!std::isfinite(step.loss)) {
                throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(b));
            }
            adam_step(state, adam, params, pack_gradients(step.grads), &decay);
            if (!params.allFinite()) {
                throw NumericError("non-finite parameters after epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(b));
            }
            unpack_parameters(working, params);
            weighted += step.loss * static_cast<double>(batches[b].size());
            counted += batches[b].size();
        }
        const double mean_loss = weighted / static_cast<double>(counted);
        const double ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        result.history.push_back({epoch, mean_loss, ms});

        if (mean_loss < best - 1e-5) {
            best = mean_loss;
            result.model = working;
            result.best_epoch = epoch;
            stale = 0;
        } else if (config.early_stop_patience > 0 && ++stale >= config.early_stop_patience) {
            break;
        }
    }
    if (result.best_epoch < 0) result.model = working;
    return result;
}

void write_history_csv(const std::filesystem::path& path, std::span<const EpochRecord> history) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "epoch,mean_loss,wall_ms\n";
    out.precision(17);
    for (const auto& r : history) out << r.epoch << ',' << r.mean_loss << ',' << r.wall_ms << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace hsgcn
