#pragma once

#include "hsgcn/graph_core.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace hsgcn {

/// K Chebyshev coefficient matrices, theta[k] is f_in x f_out.
struct ChebFilterBank {
    std::vector<Matrix> theta;

    int order() const { return static_cast<int>(theta.size()); }
    Eigen::Index f_in() const { return theta.empty() ? 0 : theta.front().rows(); }
    Eigen::Index f_out() const { return theta.empty() ? 0 : theta.front().cols(); }

    static ChebFilterBank zeros(int order, Eigen::Index f_in, Eigen::Index f_out);
};

/// Sequential graph convolutions, each followed by a rectifier unless
/// `relu_last` is false, in which case the final layer stays linear.
struct GCNStack {
    std::vector<ChebFilterBank> layers;
    bool relu_last = true;

    bool rectified(std::size_t layer) const { return relu_last || layer + 1 < layers.size(); }
    Eigen::Index f_in() const { return layers.front().f_in(); }
    Eigen::Index f_out() const { return layers.back().f_out(); }
    std::size_t parameter_count() const;
    void validate() const;
};

/// [T_0(L̂)X, ..., T_{K-1}(L̂)X] by the three-term recurrence.
std::vector<Matrix> cheb_basis(const Matrix& scaled, const Matrix& x, int order);

struct LayerOutput {
    Matrix pre;   // Σ_k T_k(L̂) X θ_k
    Matrix post;  // max(pre, 0), or pre for a linear layer
};

LayerOutput layer_forward(const ChebFilterBank& bank, const Matrix& scaled, const Matrix& x, bool rectify = true);

/// Forward state retained for the backward pass.
struct StackCache {
    const GCNStack* stack = nullptr;
    std::vector<Matrix> inputs;  // input of each layer
    std::vector<Matrix> pre;     // pre-activation of each layer
};

struct StackForward {
    Matrix embedding;
    StackCache cache;
};

/// `input_basis`, when supplied, is cheb_basis(scaled, x, K_0) for the first layer;
/// the trainer precomputes it once per subject.
StackForward stack_forward(const GCNStack& stack, const Matrix& scaled, const Matrix& x,
                           const std::vector<Matrix>* input_basis = nullptr);

struct StackGradients {
    std::vector<std::vector<Matrix>> dtheta;  // [layer][k]
    Matrix dx;                                // empty unless requested

    static StackGradients zeros_like(const GCNStack& stack);
    StackGradients& operator+=(const StackGradients& other);
};

/// Reverse-mode pass through the stack. The rectifier subgradient at 0 is 0.
StackGradients stack_backward(const GCNStack& stack, const Matrix& scaled, const StackCache& cache,
                              const Matrix& d_embedding, bool want_input_grad = true,
                              const std::vector<Matrix>* input_basis = nullptr);

/// Glorot-uniform banks with bound sqrt(6 / (f_in K + f_out)).
GCNStack init_stack(Eigen::Index f_in, std::span<const int> features, int order, std::uint64_t seed,
                    bool relu_last = true);

}  // namespace hsgcn
