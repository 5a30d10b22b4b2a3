#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "fedmsgl/dataset.hpp"
#include "fedmsgl/types.hpp"

namespace fedmsgl {

/// Denominator convention for the manifold coefficient matrix. The two modes
/// differ in which index is excluded from the distance sum; column_normalized
/// gives each column of M unit off-diagonal mass.
enum class ManifoldMode { paper_literal, column_normalized };

/// Which axis of C and U carries the affine sum-to-one constraint.
enum class ConstraintAxis { columns, rows };

/// How constrained vectors are restored after the unconstrained solve:
/// a single shift + clamp (the default), or an exact simplex projection
/// (ablation only; the shift does not guarantee the sum once clamping fires).
enum class ProjectionKind { kkt_shift, exact_simplex };

struct LocalHyperparams {
    double lambda1 = 1.0;
    double lambda2 = 0.1;
    double lambda3 = 1.0;
    int inner_iters = 5;
    ManifoldMode manifold_mode = ManifoldMode::column_normalized;
    ConstraintAxis constraint_axis = ConstraintAxis::columns;
    ProjectionKind projection = ProjectionKind::kkt_shift;

    void validate() const {
        if (lambda1 <= 0.0 || lambda3 <= 0.0)
            throw ConfigError("lambda1 and lambda3 must be > 0");
        if (lambda2 < 0.0) throw ConfigError("lambda2 must be >= 0");
        if (inner_iters < 0) throw ConfigError("inner_iters must be >= 0");
    }
};

/// One node's trainable state: the consistent part C, the view-specific part
/// U (both n x n, nonnegative, zero diagonal).
struct LocalState {
    Matrix C;
    Matrix U;
};

/// Residuals of the affine constraint recorded after each projection pass.
/// The single-shift projection cannot keep the sum exact once entries clamp,
/// so the violation is reported instead of silently iterated away.
struct ProjectionDiagnostics {
    double max_sum_violation = 0.0;
    long clamped_entries = 0;

    void merge(const ProjectionDiagnostics& other) {
        max_sum_violation = std::max(max_sum_violation, other.max_sum_violation);
        clamped_entries += other.clamped_entries;
    }
};

/// Feasible start: C = U = (1/(2(n-1))) (11^T - I). Zero diagonals, strictly
/// nonnegative off-diagonal, and every constrained vector of C+U sums to 1.
inline LocalState initial_local_state(Eigen::Index n) {
    if (n < 2) throw ShapeError("need at least 2 samples for self-expressive state");
    const double value = 1.0 / (2.0 * double(n - 1));
    Matrix base = Matrix::Constant(n, n, value);
    base.diagonal().setZero();
    return LocalState{base, base};
}

/// Manifold coefficients m_ij = ||x_i - x_j|| / D, m_ii = 0, where D sums
/// distances to x_j over t != i (paper_literal) or t != j (column_normalized).
inline Matrix manifold_coefficients(const Matrix& X, ManifoldMode mode) {
    const Eigen::Index n = X.cols();
    if (n < 2) throw ShapeError("manifold coefficients need n >= 2");

    Matrix dist(n, n);
    dist.setZero();
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double d = (X.col(i) - X.col(j)).norm();
            dist(i, j) = d;
            dist(j, i) = d;
        }
    const Vector colsum = dist.colwise().sum();

    Matrix m(n, n);
    m.setZero();
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            if (i == j) continue;
            const double denom =
                mode == ManifoldMode::paper_literal ? colsum[j] - dist(i, j) : colsum[j];
            if (denom <= 0.0)
                throw NumericError("manifold coefficient denominator is zero at (i=" +
                                   std::to_string(i) + ", j=" + std::to_string(j) +
                                   "): coincident samples");
            m(i, j) = dist(i, j) / denom;
        }
    }
    return m;
}

namespace detail {

inline void check_spd_success(Eigen::ComputationInfo info, const char* what) {
    if (info != Eigen::Success)
        throw NumericError(std::string("Cholesky factorization failed in ") + what);
}

}  // namespace detail

/// Stationary point of the unconstrained C subproblem, solved exactly per
/// column: (lambda1 I + lambda2 diag(M(:,j))^2 + X^T X) c_j = [X^T(X - XU)]_j.
/// `gram` is the cached X^T X. With lambda2 = 0 every column shares one
/// factorization and this reduces to the single-matrix closed form.
inline Matrix solve_c_unconstrained_gram(const Matrix& gram, const Matrix& U, const Matrix& M,
                                         double lambda1, double lambda2) {
    const Eigen::Index n = gram.rows();
    const Matrix rhs = gram - gram * U;  // X^T (X - XU)
    Matrix c_tilde(n, n);
    if (lambda2 == 0.0) {
        Matrix lhs = gram;
        lhs.diagonal().array() += lambda1;
        Eigen::LLT<Matrix> llt(lhs);
        detail::check_spd_success(llt.info(), "solve_c_unconstrained");
        for (Eigen::Index j = 0; j < n; ++j) c_tilde.col(j) = llt.solve(rhs.col(j));
    } else {
        for (Eigen::Index j = 0; j < n; ++j) {
            Matrix lhs = gram;
            lhs.diagonal().array() += lambda1;
            lhs.diagonal() += lambda2 * M.col(j).array().square().matrix();
            Eigen::LLT<Matrix> llt(lhs);
            detail::check_spd_success(llt.info(), "solve_c_unconstrained");
            c_tilde.col(j) = llt.solve(rhs.col(j));
        }
    }
    return c_tilde;
}

inline Matrix solve_c_unconstrained(const Matrix& X, const Matrix& U, const Matrix& M,
                                    double lambda1, double lambda2) {
    return solve_c_unconstrained_gram(X.transpose() * X, U, M, lambda1, lambda2);
}

/// Stationary point of the unconstrained U subproblem:
/// U~ = (lambda3 I + X^T X)^{-1} X^T (X - XC).
inline Matrix solve_u_unconstrained_gram(const Matrix& gram, const Matrix& C, double lambda3) {
    const Eigen::Index n = gram.rows();
    const Matrix rhs = gram - gram * C;
    Matrix lhs = gram;
    lhs.diagonal().array() += lambda3;
    Eigen::LLT<Matrix> llt(lhs);
    detail::check_spd_success(llt.info(), "solve_u_unconstrained");
    Matrix u_tilde(n, n);
    for (Eigen::Index j = 0; j < n; ++j) u_tilde.col(j) = llt.solve(rhs.col(j));
    return u_tilde;
}

inline Matrix solve_u_unconstrained(const Matrix& X, const Matrix& C, double lambda3) {
    return solve_u_unconstrained_gram(X.transpose() * X, C, lambda3);
}

/// KKT restoration of one constrained vector. The shift phi1 spreads the
/// sum deficit of (tilde_v + partner_v) uniformly over the free entries (all
/// entries except diag_index; pass diag_index < 0 when the vector holds no
/// diagonal), then entries clamp at zero and the diagonal is forced to 0.
/// Target: entries of (v + partner_v) sum to 1.
inline Vector project_pair(const Vector& tilde_v, const Vector& partner_v, Eigen::Index diag_index,
                           ProjectionDiagnostics* diag = nullptr,
                           ProjectionKind kind = ProjectionKind::kkt_shift) {
    const Eigen::Index n = tilde_v.size();
    if (partner_v.size() != n) throw ShapeError("project_pair: partner length mismatch");
    if (diag_index >= n) throw ShapeError("project_pair: diag_index out of range");
    const bool has_diag = diag_index >= 0;
    const Eigen::Index free_count = has_diag ? n - 1 : n;
    if (free_count <= 0) throw ShapeError("project_pair: no free entries");

    double tilde_sum = 0.0, partner_sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (has_diag && i == diag_index) continue;
        tilde_sum += tilde_v[i];
        partner_sum += partner_v[i];
    }

    Vector v = Vector::Zero(n);
    long clamped = 0;
    if (kind == ProjectionKind::kkt_shift) {
        const double phi1 = (1.0 - (tilde_sum + partner_sum)) / double(free_count);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (has_diag && i == diag_index) continue;
            const double shifted = tilde_v[i] + phi1;
            if (shifted < 0.0) {
                ++clamped;
                v[i] = 0.0;
            } else {
                v[i] = shifted;
            }
        }
    } else {
        // Exact Euclidean projection onto {v >= 0, sum v = max(0, 1 - sum partner)}.
        const double target = std::max(0.0, 1.0 - partner_sum);
        std::vector<double> sorted;
        sorted.reserve(static_cast<std::size_t>(free_count));
        for (Eigen::Index i = 0; i < n; ++i)
            if (!(has_diag && i == diag_index)) sorted.push_back(tilde_v[i]);
        std::sort(sorted.begin(), sorted.end(), std::greater<double>());
        double cumsum = 0.0, tau = 0.0;
        Eigen::Index support = 0;
        for (std::size_t r = 0; r < sorted.size(); ++r) {
            cumsum += sorted[r];
            const double candidate = (cumsum - target) / double(r + 1);
            if (sorted[r] - candidate > 0.0) {
                tau = candidate;
                support = static_cast<Eigen::Index>(r + 1);
            }
        }
        if (support == 0) tau = (cumsum - target) / double(free_count);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (has_diag && i == diag_index) continue;
            const double w = tilde_v[i] - tau;
            if (w <= 0.0) {
                ++clamped;
                v[i] = 0.0;
            } else {
                v[i] = w;
            }
        }
    }

    if (diag) {
        double out_sum = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) out_sum += v[i] + partner_v[i];
        if (has_diag) out_sum -= v[diag_index] + partner_v[diag_index];
        diag->max_sum_violation = std::max(diag->max_sum_violation, std::abs(out_sum - 1.0));
        diag->clamped_entries += clamped;
    }
    return v;
}

/// Projects every constrained vector of `tilde` against the same vector of
/// `partner`, along the configured axis.
inline Matrix project_matrix(const Matrix& tilde, const Matrix& partner, ConstraintAxis axis,
                             ProjectionDiagnostics* diag = nullptr,
                             ProjectionKind kind = ProjectionKind::kkt_shift) {
    const Eigen::Index n = tilde.rows();
    if (tilde.cols() != n || partner.rows() != n || partner.cols() != n)
        throw ShapeError("project_matrix: expected square matrices of equal size");
    Matrix out(n, n);
    if (axis == ConstraintAxis::columns) {
        for (Eigen::Index j = 0; j < n; ++j)
            out.col(j) = project_pair(tilde.col(j), partner.col(j), j, diag, kind);
    } else {
        for (Eigen::Index i = 0; i < n; ++i)
            out.row(i) = project_pair(tilde.row(i).transpose(), partner.row(i).transpose(), i,
                                      diag, kind)
                             .transpose();
    }
    return out;
}

/// Local training objective:
/// ||X - X(C+U)||_F^2 + lambda1 ||C||_F^2 + lambda2 ||M o C||_F^2 + lambda3 ||U||_F^2.
inline double local_objective(const Matrix& X, const Matrix& C, const Matrix& U, const Matrix& M,
                              double lambda1, double lambda2, double lambda3) {
    const Matrix residual = X - X * (C + U);
    return residual.squaredNorm() + lambda1 * C.squaredNorm() +
           lambda2 * M.cwiseProduct(C).squaredNorm() + lambda3 * U.squaredNorm();
}

/// Per-node immutable context: the private view, its Gram matrix (computed
/// once), and the manifold coefficients.
struct NodeContext {
    int node_id = 0;
    Matrix X;
    Matrix gram;
    Matrix M;

    Eigen::Index samples() const { return X.cols(); }
};

inline NodeContext make_node_context(const NodeHandle& handle, ManifoldMode mode) {
    NodeContext ctx;
    ctx.node_id = handle.id();
    ctx.X = handle.view();
    ctx.gram = ctx.X.transpose() * ctx.X;
    ctx.M = manifold_coefficients(ctx.X, mode);
    return ctx;
}

/// One local phase. If `incoming_G` is present (every round after the first)
/// the consistent part is replaced by it before iterating; then C and U
/// alternate between their exact unconstrained solves and the KKT projection
/// for `inner_iters` iterations. Pure in (ctx, state, G, params).
inline LocalState local_round(const NodeContext& ctx, const LocalState& state,
                              const std::optional<Matrix>& incoming_G,
                              const LocalHyperparams& params,
                              ProjectionDiagnostics* diag = nullptr) {
    params.validate();
    LocalState next = state;
    if (incoming_G) {
        if (incoming_G->rows() != ctx.samples() || incoming_G->cols() != ctx.samples())
            throw ShapeError("incoming G has wrong shape");
        next.C = *incoming_G;
    }
    for (int it = 0; it < params.inner_iters; ++it) {
        const Matrix c_tilde =
            solve_c_unconstrained_gram(ctx.gram, next.U, ctx.M, params.lambda1, params.lambda2);
        next.C = project_matrix(c_tilde, next.U, params.constraint_axis, diag, params.projection);
        const Matrix u_tilde = solve_u_unconstrained_gram(ctx.gram, next.C, params.lambda3);
        next.U = project_matrix(u_tilde, next.C, params.constraint_axis, diag, params.projection);
    }
    return next;
}

inline double local_objective(const NodeContext& ctx, const LocalState& state,
                              const LocalHyperparams& params) {
    return local_objective(ctx.X, state.C, state.U, ctx.M, params.lambda1, params.lambda2,
                           params.lambda3);
}

}  // namespace fedmsgl
