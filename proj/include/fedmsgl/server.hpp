#pragma once

#include <limits>
#include <string>
#include <vector>

#include "fedmsgl/hypergraph.hpp"
#include "fedmsgl/types.hpp"

namespace fedmsgl {

enum class LaplacianVariant { hypergraph, pairwise_graph };

inline Matrix build_laplacian(const Matrix& affinity, Eigen::Index k, LaplacianVariant variant) {
    return variant == LaplacianVariant::hypergraph
               ? hypergraph_laplacian(knn_hyperedges(affinity, k))
               : pairwise_graph_laplacian(affinity, k);
}

struct CentralParams {
    double beta = 0.1;
    int central_iters = 5;
    Eigen::Index knn_k = 5;
    Eigen::Index clusters = 2;
    LaplacianVariant variant = LaplacianVariant::hypergraph;

    void validate() const {
        if (beta < 0.0) throw ConfigError("beta must be >= 0");
        if (central_iters < 1) throw ConfigError("central_iters must be >= 1");
        if (clusters < 1) throw ConfigError("cluster count must be >= 1");
        if (knn_k < 1) throw ConfigError("knn_k must be >= 1");
    }
};

/// Server-side state after central integration.
struct GlobalState {
    Matrix G;
    Matrix F;
    Vector theta;
    Matrix affinity;
    Matrix laplacian;
    std::vector<double> objective_trace;  // central objective after each inner iteration
};

/// Adaptive fusion weights theta_k = 1 / (2 exp(||C^k - G||_F)). Clamped to
/// the smallest normal double so underflow cannot produce a zero weight.
inline Vector fusion_weights(const std::vector<Matrix>& c_list, const Matrix& G) {
    if (c_list.empty()) throw ShapeError("fusion_weights: no uploads");
    Vector theta(static_cast<Eigen::Index>(c_list.size()));
    for (std::size_t k = 0; k < c_list.size(); ++k) {
        if (c_list[k].rows() != G.rows() || c_list[k].cols() != G.cols())
            throw ShapeError("fusion_weights: shape mismatch at view " + std::to_string(k));
        const double dist = (c_list[k] - G).norm();
        theta[static_cast<Eigen::Index>(k)] =
            std::max(0.5 * std::exp(-dist), std::numeric_limits<double>::min());
    }
    return theta;
}

/// Pairwise squared distances between rows of F: Z(i,j) = ||f_i - f_j||^2.
/// Symmetric, nonnegative, zero diagonal.
inline Matrix z_vectors(const Matrix& F) {
    const Eigen::Index n = F.rows();
    Matrix z = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double d = (F.row(i) - F.row(j)).squaredNorm();
            z(i, j) = d;
            z(j, i) = d;
        }
    return z;
}

/// Closed-form G update, column i:
///   G(:,i) = (sum_k theta_k C^k(:,i) - beta z_i / 4) / (sum_k theta_k),
/// the exact stationary point of the column objective. G stays unconstrained
/// (entries may go negative).
inline Matrix update_G(const std::vector<Matrix>& c_list, const Vector& theta, const Matrix& Z,
                       double beta) {
    if (c_list.empty() || theta.size() != static_cast<Eigen::Index>(c_list.size()))
        throw ShapeError("update_G: uploads/theta mismatch");
    const double theta_sum = theta.sum();
    if (!(theta_sum > 0.0)) throw NumericError("update_G: sum of weights must be positive");
    Matrix numer = theta[0] * c_list[0];
    for (std::size_t k = 1; k < c_list.size(); ++k)
        numer += theta[static_cast<Eigen::Index>(k)] * c_list[k];
    numer -= (beta / 4.0) * Z;
    return numer / theta_sum;
}

/// F update: eigenvectors of the c smallest eigenvalues of the Laplacian.
inline Matrix update_F(const Matrix& laplacian, Eigen::Index c) {
    return spectral_indicator(laplacian, c);
}

/// Central integration objective: sum_k theta_k ||C^k - G||_F^2 + beta Tr(F^T L F).
inline double central_objective(const std::vector<Matrix>& c_list, const Matrix& G,
                                const Matrix& F, const Matrix& laplacian, const Vector& theta,
                                double beta) {
    double value = 0.0;
    for (std::size_t k = 0; k < c_list.size(); ++k)
        value += theta[static_cast<Eigen::Index>(k)] * (c_list[k] - G).squaredNorm();
    value += beta * (laplacian * F).cwiseProduct(F).sum();
    return value;
}

/// The central loop. Bootstraps G as the unweighted mean of the uploads and
/// Z = 0 (no F yet), then alternates: adaptive weights, closed-form G,
/// affinity + Laplacian rebuild, spectral F, Z refresh.
inline GlobalState central_integration(const std::vector<Matrix>& c_list,
                                       const std::vector<Matrix>& u_list,
                                       const CentralParams& params) {
    params.validate();
    if (c_list.empty() || c_list.size() != u_list.size())
        throw ShapeError("central_integration: need matching C and U uploads");
    const Eigen::Index n = c_list.front().rows();
    if (params.clusters > n) throw ConfigError("cluster count exceeds sample count");
    if (params.knn_k > n - 1) throw ConfigError("knn_k must be <= n - 1");

    GlobalState state;
    state.G = c_list.front();
    for (std::size_t k = 1; k < c_list.size(); ++k) state.G += c_list[k];
    state.G /= double(c_list.size());

    Matrix z = Matrix::Zero(n, n);
    for (int iter = 0; iter < params.central_iters; ++iter) {
        state.theta = fusion_weights(c_list, state.G);
        state.G = update_G(c_list, state.theta, z, params.beta);

        std::vector<Matrix> affinities;
        affinities.reserve(u_list.size());
        for (const auto& u : u_list) affinities.push_back(view_affinity(state.G, u));
        state.affinity = global_affinity(affinities);
        state.laplacian = build_laplacian(state.affinity, params.knn_k, params.variant);
        state.F = update_F(state.laplacian, params.clusters);
        z = z_vectors(state.F);

        state.objective_trace.push_back(
            central_objective(c_list, state.G, state.F, state.laplacian, state.theta,
                              params.beta));
    }
    return state;
}

}  // namespace fedmsgl
