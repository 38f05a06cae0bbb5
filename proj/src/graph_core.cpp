#include "hsgcn/graph_core.hpp"

#include "hsgcn/error.hpp"
#include "hsgcn/random.hpp"
#include "knn_select.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>

namespace hsgcn {

namespace {

std::string cell(Eigen::Index i, Eigen::Index j) {
    return "(" + std::to_string(i) + ", " + std::to_string(j) + ")";
}

void require_square(const Matrix& m, const char* what) {
    if (m.rows() != m.cols() || m.rows() == 0) {
        throw ValidationError(std::string(what) + ": expected a non-empty square matrix, got " +
                              std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
}

double chebyshev_value(int order, double x) {
    if (order == 0) return 1.0;
    double prev = 1.0, cur = x;
    for (int k = 2; k <= order; ++k) {
        const double next = 2.0 * x * cur - prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

}  // namespace

AffinityMatrix::AffinityMatrix(Matrix values) : values_(std::move(values)) {
    require_square(values_, "affinity matrix");
    const auto n = values_.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (values_(i, i) != 1.0) {
            throw ValidationError("affinity matrix: diagonal entry " + cell(i, i) + " must be exactly 1");
        }
        for (Eigen::Index j = 0; j < n; ++j) {
            const double v = values_(i, j);
            if (!(v >= 0.0 && v <= 1.0)) {
                throw ValidationError("affinity matrix: entry " + cell(i, j) + " = " + std::to_string(v) +
                                      " outside [0, 1]");
            }
            if (std::abs(v - values_(j, i)) > 1e-12) {
                throw ValidationError("affinity matrix: asymmetric at " + cell(i, j));
            }
        }
    }
}

BinaryGraph::BinaryGraph(Adjacency adjacency) : adjacency_(std::move(adjacency)) {
    if (adjacency_.rows() != adjacency_.cols()) throw ValidationError("adjacency must be square");
    const auto n = adjacency_.rows();
    neighbors_.resize(static_cast<std::size_t>(n));
    std::size_t ones = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (adjacency_(i, i) != 0) throw ValidationError("adjacency: nonzero diagonal at node " + std::to_string(i));
        for (Eigen::Index j = 0; j < n; ++j) {
            const auto a = adjacency_(i, j);
            if (a > 1) throw ValidationError("adjacency: non-binary entry at " + cell(i, j));
            if (a != adjacency_(j, i)) throw ValidationError("adjacency: asymmetric at " + cell(i, j));
            if (a) {
                ++ones;
                neighbors_[static_cast<std::size_t>(i)].push_back(static_cast<int>(j));
            }
        }
    }
    edge_count_ = ones / 2;
}

BinaryGraph BinaryGraph::empty(Eigen::Index n) { return BinaryGraph(Adjacency::Zero(n, n)); }

std::vector<std::pair<int, int>> BinaryGraph::edges() const {
    std::vector<std::pair<int, int>> out;
    out.reserve(edge_count_);
    for (std::size_t i = 0; i < neighbors_.size(); ++i) {
        for (int j : neighbors_[i]) {
            if (static_cast<int>(i) < j) out.emplace_back(static_cast<int>(i), j);
        }
    }
    return out;
}

AffinityMatrix threshold_positive(const Matrix& correlation) {
    require_square(correlation, "correlation matrix");
    const auto n = correlation.rows();
    Matrix out = correlation;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double v = correlation(i, j);
            if (std::isnan(v)) throw ValidationError("correlation matrix: NaN at " + cell(i, j));
            if (std::abs(v - correlation(j, i)) > 1e-9) {
                throw ValidationError("correlation matrix: asymmetric at " + cell(i, j));
            }
        }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i == j) {
                out(i, j) = 1.0;
                continue;
            }
            // Mirror the upper triangle so sub-1e-9 asymmetries vanish.
            const double v = i < j ? correlation(i, j) : correlation(j, i);
            out(i, j) = std::clamp(v, 0.0, 1.0);
        }
    }
    return AffinityMatrix(std::move(out));
}

AffinityMatrix mean_affinity(std::span<const AffinityMatrix> cohort) {
    if (cohort.empty()) throw ValidationError("mean_affinity: empty cohort");
    const auto n = cohort.front().n_nodes();
    Matrix sum = Matrix::Zero(n, n);
    for (std::size_t s = 0; s < cohort.size(); ++s) {
        if (cohort[s].n_nodes() != n) {
            throw ValidationError("mean_affinity: subject " + std::to_string(s) + " has " +
                                  std::to_string(cohort[s].n_nodes()) + " nodes, expected " + std::to_string(n));
        }
        sum += cohort[s].values();
    }
    sum /= static_cast<double>(cohort.size());
    sum.diagonal().setOnes();
    return AffinityMatrix(std::move(sum));
}

BinaryGraph knn_graph(const AffinityMatrix& affinity, int k) {
    const auto n = affinity.n_nodes();
    if (k < 1 || k >= n) {
        throw ValidationError("knn_graph: k = " + std::to_string(k) + " outside [1, " + std::to_string(n - 1) + "]");
    }
    const Matrix& a = affinity.values();
    return detail::select_union(
        n, k,
        [&](Eigen::Index i, int x, int y) {
            const double dx = 1.0 - a(i, x), dy = 1.0 - a(i, y);
            return dx < dy || (dx == dy && x < y);
        },
        [](Eigen::Index, Eigen::Index) { return true; });
}

PowerIterationResult largest_eigenvalue(const Matrix& m, double rel_tol, int max_iterations) {
    const auto n = m.rows();
    // Fixed start vector from a hash of the index. All-ones is the null vector of
    // the normalized Laplacian of a regular graph, and arithmetic sequences such as
    // frac(i * phi) can be exactly orthogonal to the top eigenvector of symmetric graphs.
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto bits = mix64(static_cast<std::uint64_t>(i) + 0x5eedULL) >> 11;
        v(i) = 1.0 + 0.5 * std::ldexp(static_cast<double>(bits), -53);
    }
    v.normalize();

    // Converged when either the eigen-residual ||Mv - rho v|| or the extrapolated
    // error of the Rayleigh quotient drops below tol * rho. The quotient converges
    // geometrically, so with ratio c = d_k / d_{k-1} of successive increments the
    // remaining error is about d_k c / (1 - c); plain increments understate it
    // badly when the spectral gap is small.
    PowerIterationResult result;
    double prev_rho = 0.0, prev_delta = 0.0;
    for (int it = 1; it <= max_iterations; ++it) {
        const Vector w = m * v;
        const double rho = v.dot(w);
        const double norm = w.norm();
        result.iterations = it;
        result.value = rho;
        if (norm == 0.0) {
            result.converged = true;
            return result;
        }
        const double target = rel_tol * std::abs(rho);
        if ((w - rho * v).norm() <= target) {
            result.converged = true;
            return result;
        }
        if (it > 1) {
            const double delta = rho - prev_rho;
            if (delta == 0.0) {
                result.converged = true;
                return result;
            }
            if (it > 2 && delta > 0.0 && prev_delta > 0.0) {
                const double c = delta / prev_delta;
                if (c < 1.0 && delta * c / (1.0 - c) <= target) {
                    result.converged = true;
                    return result;
                }
            }
            prev_delta = delta;
        }
        prev_rho = rho;
        v = w / norm;
    }
    return result;
}

LaplacianSet laplacians(const BinaryGraph& graph) {
    const auto n = graph.n_nodes();
    LaplacianSet out;
    out.degree.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto d = graph.degree(i);
        if (d == 0) throw ValidationError("laplacians: node " + std::to_string(i) + " is isolated (degree 0)");
        out.degree(i) = static_cast<double>(d);
    }
    out.normalized = Matrix::Identity(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int j : graph.neighbors(i)) {
            out.normalized(i, j) = -1.0 / std::sqrt(out.degree(i) * out.degree(j));
        }
    }

    const auto power = largest_eigenvalue(out.normalized);
    if (power.converged && power.value > 0.0 && power.value <= 2.0 + 1e-9) {
        out.lambda_max = power.value;
        out.lambda_converged = true;
    } else {
        std::clog << "warning: lambda_max power iteration did not converge after " << power.iterations
                  << " iterations; using the bound 2.0\n";
        out.lambda_max = 2.0;
    }
    out.scaled = (2.0 / out.lambda_max) * out.normalized;
    out.scaled.diagonal().array() -= 1.0;
    return out;
}

SpectralDecomposition decompose(const Matrix& symmetric) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetric);
    if (solver.info() != Eigen::Success) throw NumericError("eigendecomposition failed");
    return {solver.eigenvectors(), solver.eigenvalues()};
}

Matrix spectral_filter_dense(const LaplacianSet& lap, std::span<const double> theta, const Matrix& x) {
    if (theta.empty()) throw ValidationError("spectral_filter_dense: K must be >= 1");
    if (x.rows() != lap.normalized.rows()) {
        throw ValidationError("spectral_filter_dense: signal has " + std::to_string(x.rows()) + " rows, graph has " +
                              std::to_string(lap.normalized.rows()) + " nodes");
    }
    const auto spec = decompose(lap.normalized);
    Vector response(spec.eigenvalues.size());
    for (Eigen::Index l = 0; l < response.size(); ++l) {
        const double rescaled = 2.0 * spec.eigenvalues(l) / lap.lambda_max - 1.0;
        double g = 0.0;
        for (std::size_t k = 0; k < theta.size(); ++k) g += theta[k] * chebyshev_value(static_cast<int>(k), rescaled);
        response(l) = g;
    }
    const Matrix& u = spec.eigenvectors;
    return u * (response.asDiagonal() * (u.transpose() * x));
}

Vector spectral_filter_dense(const LaplacianSet& lap, std::span<const double> theta, const Vector& x) {
    return spectral_filter_dense(lap, theta, Matrix(x));
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::size_t start = 0;
        while (true) {
            const auto comma = line.find(',', start);
            auto end = comma == std::string::npos ? line.size() : comma;
            auto b = start;
            while (b < end && line[b] == ' ') ++b;
            while (end > b && line[end - 1] == ' ') --end;
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(line.data() + b, line.data() + end, v);
            if (ec != std::errc() || ptr != line.data() + end || b == end) {
                throw IoError(path.string() + ": row " + std::to_string(rows.size()) + ", column " +
                              std::to_string(row.size()) + ": cannot parse '" + line.substr(b, end - b) + "'");
            }
            row.push_back(v);
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw IoError(path.string() + ": row " + std::to_string(rows.size()) + " has " +
                          std::to_string(row.size()) + " columns, expected " + std::to_string(rows.front().size()));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw IoError(path.string() + ": empty matrix file");
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    return m;
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    char buf[64];
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            const auto res = std::to_chars(buf, buf + sizeof buf, m(i, j));
            out.write(buf, res.ptr - buf);
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

AffinityMatrix read_affinity_csv(const std::filesystem::path& path) {
    Matrix m = read_matrix_csv(path);
    try {
        return AffinityMatrix(std::move(m));
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

void write_adjacency_csv(const std::filesystem::path& path, const BinaryGraph& g) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    const auto& a = g.adjacency();
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            if (j) out << ',';
            out << static_cast<int>(a(i, j));
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

BinaryGraph read_adjacency_csv(const std::filesystem::path& path) {
    const Matrix m = read_matrix_csv(path);
    if (m.rows() != m.cols()) throw IoError(path.string() + ": adjacency must be square");
    Adjacency a(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (m(i, j) != 0.0 && m(i, j) != 1.0) {
                throw IoError(path.string() + ": row " + std::to_string(i) + ", column " + std::to_string(j) +
                              ": adjacency entries must be 0 or 1");
            }
            a(i, j) = static_cast<std::uint8_t>(m(i, j));
        }
    }
    return BinaryGraph(std::move(a));
}

}  // namespace hsgcn
