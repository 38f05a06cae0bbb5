#include "hsgcn/siamese.hpp"

#include "hsgcn/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hsgcn {

namespace {

Vector flatten(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

Matrix unflatten(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
    return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

void require_label(int label) {
    if (label != 1 && label != -1) throw ValidationError("pair label must be +1 or -1, got " + std::to_string(label));
}

}  // namespace

Eigen::Index SiameseModel::n_nodes() const {
    const auto width = gcn.f_out();
    return width == 0 ? 0 : fc_weights.size() / width;
}

void SiameseModel::validate() const {
    gcn.validate();
    if (fc_weights.size() == 0 || fc_weights.size() % gcn.f_out() != 0) {
        throw ValidationError("FC weight length " + std::to_string(fc_weights.size()) +
                              " is not a multiple of the embedding width " + std::to_string(gcn.f_out()));
    }
    if (!(dropout_keep > 0.0 && dropout_keep <= 1.0)) throw ValidationError("dropout_keep must lie in (0, 1]");
    if (!fc_weights.allFinite() || !std::isfinite(fc_bias)) throw NumericError("non-finite FC parameters");
}

SiameseModel init_model(const ModelShape& shape, std::uint64_t seed) {
    if (shape.n_nodes < 1) throw ValidationError("init_model: n_nodes must be >= 1");
    SiameseModel model;
    model.gcn = init_stack(shape.f_in, shape.features, shape.order, seed, shape.relu_last);
    model.dropout_keep = shape.dropout_keep;
    const auto fan_in = shape.n_nodes * model.gcn.f_out();
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + 1));
    auto rng = make_rng(seed, {tag(Stream::Init), 1000});
    std::uniform_real_distribution<double> dist(-bound, bound);
    model.fc_weights.resize(fan_in);
    for (Eigen::Index i = 0; i < fan_in; ++i) model.fc_weights(i) = dist(rng);
    model.fc_bias = 0.0;
    model.validate();
    return model;
}

Vector embed(const SiameseModel& model, const Matrix& scaled, const Matrix& x) {
    return flatten(stack_forward(model.gcn, scaled, x).embedding);
}

double score_embeddings(const SiameseModel& model, const Vector& hi, const Vector& hj) {
    if (hi.size() != model.fc_weights.size() || hj.size() != model.fc_weights.size()) {
        throw ValidationError("embedding length does not match FC weights");
    }
    return model.fc_weights.dot(hi.cwiseProduct(hj)) + model.fc_bias;
}

PairForward similarity_forward(const SiameseModel& model, const Matrix& scaled, const Matrix& xi, const Matrix& xj,
                               bool training, Rng* rng) {
    if (xi.rows() != xj.rows() || xi.cols() != xj.cols()) throw ValidationError("pair inputs differ in shape");
    PairForward out;
    auto fi = stack_forward(model.gcn, scaled, xi);
    auto fj = stack_forward(model.gcn, scaled, xj);
    out.cache.hi = flatten(fi.embedding);
    out.cache.hj = flatten(fj.embedding);
    out.cache.branch_i = std::move(fi.cache);
    out.cache.branch_j = std::move(fj.cache);
    if (out.cache.hi.size() != model.fc_weights.size()) {
        throw ValidationError("embedding length " + std::to_string(out.cache.hi.size()) + " does not match FC weights " +
                              std::to_string(model.fc_weights.size()));
    }

    const auto size = out.cache.hi.size();
    out.cache.mask = Vector::Ones(size);
    if (training && model.dropout_keep < 1.0) {
        if (!rng) throw ValidationError("similarity_forward: training mode requires an rng stream");
        std::bernoulli_distribution keep(model.dropout_keep);
        const double scale = 1.0 / model.dropout_keep;
        for (Eigen::Index t = 0; t < size; ++t) out.cache.mask(t) = keep(*rng) ? scale : 0.0;
    }
    const Vector p = out.cache.hi.cwiseProduct(out.cache.hj).cwiseProduct(out.cache.mask);
    out.score = model.fc_weights.dot(p) + model.fc_bias;
    return out;
}

ModelGradients ModelGradients::zeros_like(const SiameseModel& model) {
    return {StackGradients::zeros_like(model.gcn), Vector::Zero(model.fc_weights.size()), 0.0};
}

ModelGradients& ModelGradients::operator+=(const ModelGradients& other) {
    gcn += other.gcn;
    fc_weights += other.fc_weights;
    fc_bias += other.fc_bias;
    return *this;
}

ModelGradients pair_backward(const SiameseModel& model, const Matrix& scaled, const PairCache& cache, double ds) {
    const auto size = model.fc_weights.size();
    if (cache.hi.size() != size || cache.hj.size() != size || cache.mask.size() != size) {
        throw ValidationError("pair_backward: stale cache");
    }
    ModelGradients g;
    const Vector gate = model.fc_weights.cwiseProduct(cache.mask);
    g.fc_weights = ds * cache.hi.cwiseProduct(cache.hj).cwiseProduct(cache.mask);
    g.fc_bias = ds;

    const auto rows = model.n_nodes();
    const auto cols = model.gcn.f_out();
    const Matrix dhi = unflatten(ds * gate.cwiseProduct(cache.hj), rows, cols);
    const Matrix dhj = unflatten(ds * gate.cwiseProduct(cache.hi), rows, cols);
    g.gcn = stack_backward(model.gcn, scaled, cache.branch_i, dhi, false);
    g.gcn += stack_backward(model.gcn, scaled, cache.branch_j, dhj, false);
    return g;
}

double hinge_loss(std::span<const PairScore> scores) {
    if (scores.empty()) throw ValidationError("hinge_loss: no pairs");
    double sum = 0.0;
    for (const auto& p : scores) {
        require_label(p.label);
        sum += std::max(0.0, 1.0 - p.label * p.score);
    }
    return sum / static_cast<double>(scores.size());
}

std::vector<double> hinge_grad(std::span<const PairScore> scores) {
    if (scores.empty()) throw ValidationError("hinge_grad: no pairs");
    const double inv = 1.0 / static_cast<double>(scores.size());
    std::vector<double> ds(scores.size(), 0.0);
    for (std::size_t t = 0; t < scores.size(); ++t) {
        require_label(scores[t].label);
        if (scores[t].label * scores[t].score < 1.0) ds[t] = -scores[t].label * inv;
    }
    return ds;
}

void ConVarParams::validate() const {
    if (!(margin > 0.0)) throw ValidationError("convar: margin must be positive");
    if (!(variance_threshold > 0.0)) throw ValidationError("convar: variance threshold must be positive");
}

ConVarStats convar_stats(std::span<const PairScore> scores) {
    ConVarStats st;
    for (const auto& p : scores) {
        require_label(p.label);
        if (p.label > 0) {
            ++st.n_pos;
            st.mean_pos += p.score;
        } else {
            ++st.n_neg;
            st.mean_neg += p.score;
        }
    }
    if (st.n_pos < 2 || st.n_neg < 2) {
        throw ValidationError("constrained-variance loss needs at least 2 same-class and 2 different-class pairs per "
                              "batch (got " + std::to_string(st.n_pos) + " and " + std::to_string(st.n_neg) +
                              "); use balanced batching");
    }
    st.mean_pos /= static_cast<double>(st.n_pos);
    st.mean_neg /= static_cast<double>(st.n_neg);
    for (const auto& p : scores) {
        if (p.label > 0) {
            st.var_pos += (p.score - st.mean_pos) * (p.score - st.mean_pos);
        } else {
            st.var_neg += (p.score - st.mean_neg) * (p.score - st.mean_neg);
        }
    }
    st.var_pos /= static_cast<double>(st.n_pos);
    st.var_neg /= static_cast<double>(st.n_neg);
    return st;
}

double convar_loss(std::span<const PairScore> scores, const ConVarParams& params) {
    params.validate();
    const auto st = convar_stats(scores);
    return std::max(0.0, st.var_pos - params.variance_threshold) +
           std::max(0.0, st.var_neg - params.variance_threshold) +
           std::max(0.0, params.margin - (st.mean_pos - st.mean_neg));
}

std::vector<double> convar_grad(std::span<const PairScore> scores, const ConVarParams& params) {
    params.validate();
    const auto st = convar_stats(scores);
    const bool var_pos_active = st.var_pos > params.variance_threshold;
    const bool var_neg_active = st.var_neg > params.variance_threshold;
    const bool margin_active = params.margin - (st.mean_pos - st.mean_neg) > 0.0;
    const double np = static_cast<double>(st.n_pos), nn = static_cast<double>(st.n_neg);

    std::vector<double> ds(scores.size(), 0.0);
    for (std::size_t t = 0; t < scores.size(); ++t) {
        const double s = scores[t].score;
        if (scores[t].label > 0) {
            if (var_pos_active) ds[t] += 2.0 * (s - st.mean_pos) / np;
            if (margin_active) ds[t] -= 1.0 / np;
        } else {
            if (var_neg_active) ds[t] += 2.0 * (s - st.mean_neg) / nn;
            if (margin_active) ds[t] += 1.0 / nn;
        }
    }
    return ds;
}

}  // namespace hsgcn
