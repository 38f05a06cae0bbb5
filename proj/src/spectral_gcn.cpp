#include "hsgcn/spectral_gcn.hpp"

#include "hsgcn/error.hpp"
#include "hsgcn/random.hpp"

#include <cmath>
#include <string>

namespace hsgcn {

namespace {

Matrix combine(const std::vector<Matrix>& basis, const ChebFilterBank& bank) {
    Matrix z = basis[0] * bank.theta[0];
    for (std::size_t k = 1; k < basis.size(); ++k) z.noalias() += basis[k] * bank.theta[k];
    return z;
}

void check_layer_input(const ChebFilterBank& bank, const Matrix& scaled, const Matrix& x) {
    if (scaled.rows() != scaled.cols()) throw ValidationError("scaled Laplacian must be square");
    if (x.rows() != scaled.rows()) {
        throw ValidationError("layer input has " + std::to_string(x.rows()) + " rows, graph has " +
                              std::to_string(scaled.rows()) + " nodes");
    }
    if (x.cols() != bank.f_in()) {
        throw ValidationError("layer input has " + std::to_string(x.cols()) + " features, bank expects " +
                              std::to_string(bank.f_in()));
    }
}

}  // namespace

ChebFilterBank ChebFilterBank::zeros(int order, Eigen::Index f_in, Eigen::Index f_out) {
    if (order < 1 || f_in < 1 || f_out < 1) throw ValidationError("filter bank: order and widths must be >= 1");
    return {std::vector<Matrix>(static_cast<std::size_t>(order), Matrix::Zero(f_in, f_out))};
}

std::size_t GCNStack::parameter_count() const {
    std::size_t total = 0;
    for (const auto& bank : layers) total += static_cast<std::size_t>(bank.order() * bank.f_in() * bank.f_out());
    return total;
}

void GCNStack::validate() const {
    if (layers.empty()) throw ValidationError("GCN stack has no layers");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& bank = layers[l];
        if (bank.order() < 1) throw ValidationError("layer " + std::to_string(l) + ": order must be >= 1");
        for (const auto& t : bank.theta) {
            if (t.rows() != bank.f_in() || t.cols() != bank.f_out()) {
                throw ValidationError("layer " + std::to_string(l) + ": inconsistent coefficient shapes");
            }
            if (!t.allFinite()) throw NumericError("layer " + std::to_string(l) + ": non-finite coefficients");
        }
        if (l > 0 && layers[l - 1].f_out() != bank.f_in()) {
            throw ValidationError("layer " + std::to_string(l) + ": f_in " + std::to_string(bank.f_in()) +
                                  " does not match previous f_out " + std::to_string(layers[l - 1].f_out()));
        }
    }
}

std::vector<Matrix> cheb_basis(const Matrix& scaled, const Matrix& x, int order) {
    if (order < 1) throw ValidationError("cheb_basis: K must be >= 1");
    if (scaled.rows() != scaled.cols() || x.rows() != scaled.rows()) {
        throw ValidationError("cheb_basis: signal rows " + std::to_string(x.rows()) + " vs Laplacian " +
                              std::to_string(scaled.rows()) + "x" + std::to_string(scaled.cols()));
    }
    std::vector<Matrix> basis;
    basis.reserve(static_cast<std::size_t>(order));
    basis.push_back(x);
    if (order > 1) basis.push_back(scaled * x);
    for (int k = 2; k < order; ++k) {
        Matrix next = 2.0 * (scaled * basis[k - 1]);
        next -= basis[k - 2];
        basis.push_back(std::move(next));
    }
    return basis;
}

LayerOutput layer_forward(const ChebFilterBank& bank, const Matrix& scaled, const Matrix& x, bool rectify) {
    check_layer_input(bank, scaled, x);
    LayerOutput out;
    out.pre = combine(cheb_basis(scaled, x, bank.order()), bank);
    out.post = rectify ? Matrix(out.pre.cwiseMax(0.0)) : out.pre;
    return out;
}

StackForward stack_forward(const GCNStack& stack, const Matrix& scaled, const Matrix& x,
                           const std::vector<Matrix>* input_basis) {
    if (stack.layers.empty()) throw ValidationError("GCN stack has no layers");
    StackForward out;
    out.cache.stack = &stack;
    out.cache.inputs.reserve(stack.layers.size());
    out.cache.pre.reserve(stack.layers.size());
    Matrix h = x;
    for (std::size_t l = 0; l < stack.layers.size(); ++l) {
        const auto& bank = stack.layers[l];
        check_layer_input(bank, scaled, h);
        Matrix z;
        if (l == 0 && input_basis) {
            if (static_cast<int>(input_basis->size()) != bank.order()) {
                throw ValidationError("stack_forward: precomputed basis has wrong order");
            }
            z = combine(*input_basis, bank);
        } else {
            z = combine(cheb_basis(scaled, h, bank.order()), bank);
        }
        out.cache.inputs.push_back(std::move(h));
        h = stack.rectified(l) ? Matrix(z.cwiseMax(0.0)) : z;
        out.cache.pre.push_back(std::move(z));
    }
    out.embedding = std::move(h);
    return out;
}

StackGradients StackGradients::zeros_like(const GCNStack& stack) {
    StackGradients g;
    for (const auto& bank : stack.layers) {
        g.dtheta.emplace_back(bank.theta.size(), Matrix::Zero(bank.f_in(), bank.f_out()));
    }
    return g;
}

StackGradients& StackGradients::operator+=(const StackGradients& other) {
    if (other.dtheta.size() != dtheta.size()) throw ValidationError("gradient shape mismatch");
    for (std::size_t l = 0; l < dtheta.size(); ++l) {
        for (std::size_t k = 0; k < dtheta[l].size(); ++k) dtheta[l][k] += other.dtheta[l][k];
    }
    return *this;
}

StackGradients stack_backward(const GCNStack& stack, const Matrix& scaled, const StackCache& cache,
                              const Matrix& d_embedding, bool want_input_grad,
                              const std::vector<Matrix>* input_basis) {
    const auto layers = stack.layers.size();
    if (cache.stack != &stack || cache.inputs.size() != layers || cache.pre.size() != layers) {
        throw ValidationError("stack_backward: cache does not belong to this stack");
    }
    for (std::size_t l = 0; l < layers; ++l) {
        const auto& bank = stack.layers[l];
        if (cache.inputs[l].cols() != bank.f_in() || cache.pre[l].cols() != bank.f_out() ||
            cache.pre[l].rows() != scaled.rows()) {
            throw ValidationError("stack_backward: stale cache for layer " + std::to_string(l));
        }
    }
    if (d_embedding.rows() != cache.pre.back().rows() || d_embedding.cols() != cache.pre.back().cols()) {
        throw ValidationError("stack_backward: gradient shape does not match embedding");
    }

    StackGradients grads;
    grads.dtheta.resize(layers);
    Matrix upstream = d_embedding;
    for (std::size_t l = layers; l-- > 0;) {
        const auto& bank = stack.layers[l];
        const auto order = static_cast<std::size_t>(bank.order());
        Matrix dz = stack.rectified(l) ? Matrix((cache.pre[l].array() > 0.0).select(upstream, 0.0)) : upstream;

        const bool reuse = l == 0 && input_basis != nullptr;
        const std::vector<Matrix> basis = reuse ? std::vector<Matrix>{} : cheb_basis(scaled, cache.inputs[l], bank.order());
        const std::vector<Matrix>& b = reuse ? *input_basis : basis;
        if (b.size() != order) throw ValidationError("stack_backward: precomputed basis has wrong order");

        grads.dtheta[l].resize(order);
        for (std::size_t k = 0; k < order; ++k) grads.dtheta[l][k].noalias() = b[k].transpose() * dz;

        if (l == 0 && !want_input_grad) break;

        // Adjoint of the recurrence, using L̂ = L̂ᵀ.
        std::vector<Matrix> db(order);
        for (std::size_t k = 0; k < order; ++k) db[k].noalias() = dz * bank.theta[k].transpose();
        for (std::size_t k = order; k-- > 2;) {
            db[k - 1].noalias() += 2.0 * (scaled * db[k]);
            db[k - 2] -= db[k];
        }
        if (order > 1) db[0].noalias() += scaled * db[1];
        upstream = std::move(db[0]);
        if (l == 0) grads.dx = std::move(upstream);
    }
    return grads;
}

GCNStack init_stack(Eigen::Index f_in, std::span<const int> features, int order, std::uint64_t seed, bool relu_last) {
    if (features.empty()) throw ValidationError("init_stack: at least one layer required");
    if (order < 1) throw ValidationError("init_stack: K must be >= 1");
    if (f_in < 1) throw ValidationError("init_stack: input width must be >= 1");
    GCNStack stack;
    stack.relu_last = relu_last;
    auto width = f_in;
    for (std::size_t l = 0; l < features.size(); ++l) {
        if (features[l] < 1) throw ValidationError("init_stack: layer widths must be >= 1");
        auto bank = ChebFilterBank::zeros(order, width, features[l]);
        const double bound = std::sqrt(6.0 / static_cast<double>(width * order + features[l]));
        auto rng = make_rng(seed, {tag(Stream::Init), l});
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (auto& t : bank.theta) {
            for (Eigen::Index j = 0; j < t.cols(); ++j) {
                for (Eigen::Index i = 0; i < t.rows(); ++i) t(i, j) = dist(rng);
            }
        }
        width = features[l];
        stack.layers.push_back(std::move(bank));
    }
    return stack;
}

}  // namespace hsgcn
