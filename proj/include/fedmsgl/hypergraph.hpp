#pragma once

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "fedmsgl/types.hpp"

namespace fedmsgl {

/// k-NN similarity hypergraph. H is the n x |E| 0/1 incidence matrix; the
/// degree diagonals are stored as vectors and are exactly recomputable from H.
struct Hypergraph {
    Matrix H;
    Vector edge_weights;   // diagonal of W (identity by default)
    Vector vertex_degree;  // diagonal of Dv: number of hyperedges containing v_i
    Vector edge_degree;    // diagonal of De: number of vertices in e_j

    Eigen::Index vertices() const { return H.rows(); }
    Eigen::Index edges() const { return H.cols(); }
};

/// Per-view affinity A^k = ((G + G^T) + (U^k + (U^k)^T)) / 2, symmetrized by
/// construction; negative entries (the G update is unconstrained) clamp to 0.
inline Matrix view_affinity(const Matrix& G, const Matrix& U_k) {
    if (G.rows() != G.cols() || U_k.rows() != U_k.cols() || G.rows() != U_k.rows())
        throw ShapeError("view_affinity: expected equal square matrices");
    Matrix a = 0.5 * ((G + G.transpose()) + (U_k + U_k.transpose()));
    return a.cwiseMax(0.0);
}

/// Global affinity: elementwise mean of the per-view affinities.
inline Matrix global_affinity(const std::vector<Matrix>& view_affinities) {
    if (view_affinities.empty()) throw ShapeError("global_affinity: no views");
    Matrix sum = view_affinities.front();
    for (std::size_t k = 1; k < view_affinities.size(); ++k) {
        if (view_affinities[k].rows() != sum.rows() || view_affinities[k].cols() != sum.cols())
            throw ShapeError("global_affinity: shape mismatch at view " + std::to_string(k));
        sum += view_affinities[k];
    }
    return sum / double(view_affinities.size());
}

namespace detail {

/// Indices of the k largest off-diagonal entries of row i (negatives treated
/// as 0), ties broken by lower index.
inline std::vector<Eigen::Index> top_k_neighbors(const Matrix& A, Eigen::Index i,
                                                 Eigen::Index k) {
    const Eigen::Index n = A.rows();
    std::vector<Eigen::Index> order;
    order.reserve(static_cast<std::size_t>(n - 1));
    for (Eigen::Index j = 0; j < n; ++j)
        if (j != i) order.push_back(j);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return std::max(A(i, a), 0.0) > std::max(A(i, b), 0.0);
    });
    order.resize(static_cast<std::size_t>(k));
    return order;
}

}  // namespace detail

/// One hyperedge per vertex: e_i = {v_i} plus the k neighbors with largest
/// affinity A(i, .). Duplicate hyperedges are retained, so |E| = n always.
inline Hypergraph knn_hyperedges(const Matrix& A, Eigen::Index k) {
    const Eigen::Index n = A.rows();
    if (A.cols() != n) throw ShapeError("knn_hyperedges: affinity must be square");
    if (k < 1 || k > n - 1)
        throw ConfigError("knn_hyperedges: k = " + std::to_string(k) + " out of range [1, " +
                          std::to_string(n - 1) + "]");

    Hypergraph hg;
    hg.H = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        hg.H(i, i) = 1.0;
        for (const auto j : detail::top_k_neighbors(A, i, k)) hg.H(j, i) = 1.0;
    }
    hg.edge_weights = Vector::Ones(n);
    hg.vertex_degree = hg.H.rowwise().sum();
    hg.edge_degree = hg.H.colwise().sum();
    return hg;
}

/// Normalized hypergraph Laplacian
///   L_h = I - Dv^{-1/2} H W De^{-1} H^T Dv^{-1/2},
/// assembled from its symmetric square-root factor so the result is bitwise
/// symmetric and PSD up to rounding.
inline Matrix hypergraph_laplacian(const Hypergraph& hg) {
    const Eigen::Index n = hg.vertices();
    const Eigen::Index m = hg.edges();
    for (Eigen::Index i = 0; i < n; ++i)
        if (hg.vertex_degree[i] <= 0.0)
            throw NumericError("hypergraph_laplacian: vertex " + std::to_string(i) +
                               " is isolated (zero degree)");
    for (Eigen::Index e = 0; e < m; ++e)
        if (hg.edge_degree[e] <= 0.0)
            throw NumericError("hypergraph_laplacian: hyperedge " + std::to_string(e) +
                               " is empty");

    Matrix factor = hg.H;
    for (Eigen::Index i = 0; i < n; ++i) factor.row(i) /= std::sqrt(hg.vertex_degree[i]);
    for (Eigen::Index e = 0; e < m; ++e)
        factor.col(e) *= std::sqrt(hg.edge_weights[e] / hg.edge_degree[e]);

    Matrix lap = -(factor * factor.transpose());
    lap.diagonal().array() += 1.0;
    return lap;
}

/// Columns of F are orthonormal eigenvectors for the c smallest eigenvalues
/// of the symmetric input, ascending, with the sign fixed so each column's
/// largest-magnitude entry is positive.
inline Matrix spectral_indicator(const Matrix& laplacian, Eigen::Index c) {
    const Eigen::Index n = laplacian.rows();
    if (laplacian.cols() != n) throw ShapeError("spectral_indicator: matrix must be square");
    if (c < 1 || c > n) throw ConfigError("spectral_indicator: c out of range");

    Eigen::SelfAdjointEigenSolver<Matrix> solver(laplacian);
    if (solver.info() != Eigen::Success)
        throw NumericError("spectral_indicator: eigendecomposition failed");

    Matrix f = solver.eigenvectors().leftCols(c);
    for (Eigen::Index j = 0; j < c; ++j) {
        Eigen::Index arg_max = 0;
        double best = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double mag = std::abs(f(i, j));
            if (mag > best) {
                best = mag;
                arg_max = i;
            }
        }
        if (f(arg_max, j) < 0.0) f.col(j) = -f.col(j);
    }
    return f;
}

/// Ablation variant: symmetric-normalized Laplacian of the pairwise k-NN
/// graph. Edge ij is kept when j is among i's top-k or vice versa, weighted
/// by the (clamped) affinity.
inline Matrix pairwise_graph_laplacian(const Matrix& A, Eigen::Index k) {
    const Eigen::Index n = A.rows();
    if (A.cols() != n) throw ShapeError("pairwise_graph_laplacian: affinity must be square");
    if (k < 1 || k > n - 1)
        throw ConfigError("pairwise_graph_laplacian: k = " + std::to_string(k) +
                          " out of range [1, " + std::to_string(n - 1) + "]");

    Matrix w = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (const auto j : detail::top_k_neighbors(A, i, k)) {
            const double value = std::max(A(i, j), 0.0);
            w(i, j) = value;
            w(j, i) = value;
        }

    Vector degree = w.rowwise().sum();
    // treat degrees that vanish relative to the graph scale as singular too;
    // they would only inflate the Laplacian past overflow
    const double floor = degree.maxCoeff() * 1e-14;
    Vector inv_sqrt(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (degree[i] <= floor)
            throw NumericError("pairwise_graph_laplacian: vertex " + std::to_string(i) +
                               " has zero degree");
        inv_sqrt[i] = 1.0 / std::sqrt(degree[i]);
    }

    Matrix lap(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j)
            lap(i, j) = (i == j ? 1.0 : 0.0) - w(i, j) * (inv_sqrt[i] * inv_sqrt[j]);
    }
    return lap;
}

}  // namespace fedmsgl
