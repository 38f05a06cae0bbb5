#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace hsgcn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Adjacency = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Symmetric node-by-node association strengths in [0,1] with unit diagonal.
/// Used both as the per-subject graph and as its node feature matrix.
class AffinityMatrix {
public:
    /// Validates symmetry (1e-12), range [0,1] and exact unit diagonal.
    explicit AffinityMatrix(Matrix values);

    Eigen::Index n_nodes() const { return values_.rows(); }
    const Matrix& values() const { return values_; }
    double operator()(Eigen::Index i, Eigen::Index j) const { return values_(i, j); }

private:
    Matrix values_;
};

/// Undirected unweighted graph stored as a dense 0/1 adjacency with zero diagonal.
class BinaryGraph {
public:
    explicit BinaryGraph(Adjacency adjacency);
    static BinaryGraph empty(Eigen::Index n);

    Eigen::Index n_nodes() const { return adjacency_.rows(); }
    std::size_t edge_count() const { return edge_count_; }
    const Adjacency& adjacency() const { return adjacency_; }
    bool has_edge(Eigen::Index i, Eigen::Index j) const { return adjacency_(i, j) != 0; }
    std::span<const int> neighbors(Eigen::Index i) const { return neighbors_[static_cast<std::size_t>(i)]; }
    std::size_t degree(Eigen::Index i) const { return neighbors_[static_cast<std::size_t>(i)].size(); }

    /// Edges as (i, j) with i < j in lexicographic order.
    std::vector<std::pair<int, int>> edges() const;

    friend bool operator==(const BinaryGraph& a, const BinaryGraph& b) {
        return a.adjacency_ == b.adjacency_;
    }

private:
    Adjacency adjacency_;
    std::size_t edge_count_ = 0;
    std::vector<std::vector<int>> neighbors_;
};

struct LaplacianSet {
    Vector degree;            // diagonal of D
    Matrix normalized;        // I - D^-1/2 A D^-1/2
    double lambda_max = 2.0;  // largest eigenvalue of `normalized`
    bool lambda_converged = false;
    Matrix scaled;            // 2 L / lambda_max - I
};

struct SpectralDecomposition {
    Matrix eigenvectors;  // columns, orthonormal
    Vector eigenvalues;   // ascending
};

/// Replaces negative off-diagonal correlations by zero.
AffinityMatrix threshold_positive(const Matrix& correlation);

AffinityMatrix mean_affinity(std::span<const AffinityMatrix> cohort);

/// Symmetric union of each node's k nearest neighbours under d = 1 - affinity.
/// Ties are broken toward the lower node index.
BinaryGraph knn_graph(const AffinityMatrix& affinity, int k);

struct PowerIterationResult {
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Largest eigenvalue of a symmetric PSD matrix by power iteration with a fixed start vector.
PowerIterationResult largest_eigenvalue(const Matrix& symmetric, double rel_tol = 1e-10,
                                        int max_iterations = 10'000);

/// Throws ValidationError naming the first isolated node.
LaplacianSet laplacians(const BinaryGraph& graph);

SpectralDecomposition decompose(const Matrix& symmetric);

/// Eigendecomposition-based filtering U g(Λ̂) Uᵀ x with g = Σ θ_k T_k.
/// Reference path for the Chebyshev recurrence.
Vector spectral_filter_dense(const LaplacianSet& lap, std::span<const double> theta, const Vector& x);

/// Same filter applied to every column of `x`, reusing one eigendecomposition.
Matrix spectral_filter_dense(const LaplacianSet& lap, std::span<const double> theta, const Matrix& x);

// CSV: n rows of n comma separated decimals, no header.
Matrix read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);
AffinityMatrix read_affinity_csv(const std::filesystem::path& path);
void write_adjacency_csv(const std::filesystem::path& path, const BinaryGraph& g);
BinaryGraph read_adjacency_csv(const std::filesystem::path& path);

}  // namespace hsgcn
