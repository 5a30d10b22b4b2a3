#include <catch2/catch_amalgamated.hpp>

#include "fedmsgl/local_node.hpp"
#include "support/oracles.hpp"

using namespace fedmsgl;
using Catch::Approx;

namespace {

Matrix points_1d(std::initializer_list<double> xs) {
    Matrix m(1, static_cast<Eigen::Index>(xs.size()));
    Eigen::Index j = 0;
    for (const double x : xs) m(0, j++) = x;
    return m;
}

Matrix nonneg_zero_diag(Rng& rng, Eigen::Index n) {
    Matrix m = rng.uniform_matrix(n, n);
    m.diagonal().setZero();
    return m;
}

}  // namespace

TEST_CASE("manifold coefficients, column-normalized denominator") {
    const auto m = manifold_coefficients(points_1d({0.0, 1.0, 3.0}),
                                         ManifoldMode::column_normalized);
    CHECK(m(1, 0) == Approx(1.0 / 4.0));
    CHECK(m(2, 0) == Approx(3.0 / 4.0));
    CHECK(m(0, 1) == Approx(1.0 / 3.0));
    CHECK(m(2, 1) == Approx(2.0 / 3.0));
    CHECK(m(0, 2) == Approx(3.0 / 5.0));
    CHECK(m(1, 2) == Approx(2.0 / 5.0));
    for (Eigen::Index j = 0; j < 3; ++j) {
        CHECK(m(j, j) == 0.0);
        CHECK(m.col(j).sum() == Approx(1.0));
    }
}

TEST_CASE("manifold coefficients, literal denominator") {
    const auto m = manifold_coefficients(points_1d({0.0, 1.0, 3.0}), ManifoldMode::paper_literal);
    CHECK(m(0, 1) == Approx(0.5));  // 1 / (0 + 2)
    CHECK(m(0, 0) == 0.0);
    CHECK(m(1, 1) == 0.0);
    CHECK(m(2, 2) == 0.0);
}

TEST_CASE("manifold coefficients flag coincident samples") {
    Matrix x(2, 3);
    x.col(0) << 1.0, 2.0;
    x.col(1) << 1.0, 2.0;
    x.col(2) << 1.0, 2.0;
    CHECK_THROWS_AS(manifold_coefficients(x, ManifoldMode::paper_literal), NumericError);
    CHECK_THROWS_AS(manifold_coefficients(x, ManifoldMode::column_normalized), NumericError);
    CHECK_THROWS_WITH(manifold_coefficients(x, ManifoldMode::column_normalized),
                      Catch::Matchers::ContainsSubstring("coincident"));
}

TEST_CASE("solve_c_unconstrained identity case") {
    const Matrix x = Matrix::Identity(2, 2);
    const Matrix u = Matrix::Zero(2, 2);
    const Matrix m = Matrix::Zero(2, 2);
    const Matrix c = solve_c_unconstrained(x, u, m, 1.0, 0.0);
    CHECK((c - 0.5 * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("solve_c_unconstrained zeroes the finite-difference gradient") {
    Rng rng(17);
    const Eigen::Index d = 8, n = 12;
    const Matrix x = rng.normal_matrix(d, n);
    const Matrix u = nonneg_zero_diag(rng, n);
    const Matrix m = manifold_coefficients(x, ManifoldMode::column_normalized);
    const double l1 = 0.1, l2 = 0.5;

    const Matrix c_tilde = solve_c_unconstrained(x, u, m, l1, l2);
    const auto objective = [&](const Matrix& c) {
        return local_objective(x, c, u, m, l1, l2, 0.0);
    };
    CHECK(oracle::max_abs_fd_gradient(objective, c_tilde) <= 1e-6);
}

TEST_CASE("solve_c_unconstrained with lambda2 = 0 matches the shared-factorization formula") {
    Rng rng(23);
    const Eigen::Index d = 6, n = 9;
    const Matrix x = rng.normal_matrix(d, n);
    const Matrix u = nonneg_zero_diag(rng, n);
    const Matrix m_zero = Matrix::Zero(n, n);

    const Matrix fast = solve_c_unconstrained(x, u, m_zero, 0.7, 0.0);
    // forcing the per-column path with lambda2 = 1 and M = 0 solves the same systems
    const Matrix per_column = solve_c_unconstrained(x, u, m_zero, 0.7, 1.0);
    CHECK((fast - per_column).cwiseAbs().maxCoeff() == 0.0);

    const Matrix gram = x.transpose() * x;
    const Matrix direct =
        (0.7 * Matrix::Identity(n, n) + gram).llt().solve(gram * (Matrix::Identity(n, n) - u));
    CHECK((fast - direct).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("solve_u_unconstrained identity and zero-residual cases") {
    const Matrix x = Matrix::Identity(2, 2);
    const Matrix u = solve_u_unconstrained(x, Matrix::Zero(2, 2), 1.0);
    CHECK((u - 0.5 * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-14);

    // X - XC = 0 gives a zero right-hand side
    Rng rng(5);
    const Matrix x2 = rng.normal_matrix(4, 6);
    const Matrix c_identity = Matrix::Identity(6, 6);
    const Matrix u2 = solve_u_unconstrained(x2, c_identity, 0.9);
    CHECK(u2.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("solve_u_unconstrained zeroes the finite-difference gradient") {
    Rng rng(31);
    const Eigen::Index d = 7, n = 11;
    const Matrix x = rng.normal_matrix(d, n);
    const Matrix c = nonneg_zero_diag(rng, n);
    const Matrix m = Matrix::Zero(n, n);
    const double l3 = 0.4;

    const Matrix u_tilde = solve_u_unconstrained(x, c, l3);
    const auto objective = [&](const Matrix& u) {
        return local_objective(x, c, u, m, 0.0, 0.0, l3);
    };
    CHECK(oracle::max_abs_fd_gradient(objective, u_tilde) <= 1e-6);
}

TEST_CASE("project_pair shifts to the affine constraint") {
    Vector tilde(2);
    tilde << 0.2, 0.3;
    const Vector partner = Vector::Zero(2);
    const Vector v = project_pair(tilde, partner, -1);
    CHECK(v[0] == Approx(0.45));
    CHECK(v[1] == Approx(0.55));
    CHECK(v.sum() == Approx(1.0));
}

TEST_CASE("project_pair clamps negatives") {
    Vector tilde(2);
    tilde << -0.5, 0.5;
    const Vector v = project_pair(tilde, Vector::Zero(2), -1);
    CHECK(v[0] == 0.0);
    CHECK(v[1] == Approx(1.0));
}

TEST_CASE("project_pair is a fixed point on feasible vectors") {
    Vector tilde(4);
    tilde << 0.1, 0.0, 0.4, 0.2;
    Vector partner(4);
    partner << 0.1, 0.0, 0.1, 0.1;  // sums with tilde to 1
    const Vector v = project_pair(tilde, partner, 1);
    CHECK((v - tilde).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("projection invariants on random vectors") {
    Rng rng(71);
    for (int trial = 0; trial < 200; ++trial) {
        const Eigen::Index n = 3 + static_cast<Eigen::Index>(rng.uniform_int(12));
        const Eigen::Index diag = static_cast<Eigen::Index>(rng.uniform_int(std::uint64_t(n)));
        Vector tilde = rng.normal_matrix(n, 1).col(0);
        Vector partner = rng.uniform_matrix(n, 1).col(0) * 0.05;
        partner[diag] = 0.0;

        ProjectionDiagnostics diag_info;
        const Vector v = project_pair(tilde, partner, diag, &diag_info);

        CHECK(v[diag] == 0.0);
        CHECK(v.minCoeff() >= 0.0);
        double sum = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            if (i != diag) sum += v[i] + partner[i];
        if (diag_info.clamped_entries == 0) CHECK(std::abs(sum - 1.0) <= 1e-9);
    }
}

TEST_CASE("exact simplex projection satisfies the constraint even when clamping") {
    Rng rng(72);
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Index n = 4 + static_cast<Eigen::Index>(rng.uniform_int(10));
        const Eigen::Index diag = static_cast<Eigen::Index>(rng.uniform_int(std::uint64_t(n)));
        Vector tilde = rng.normal_matrix(n, 1).col(0) * 2.0;
        Vector partner = rng.uniform_matrix(n, 1).col(0) * 0.04;
        partner[diag] = 0.0;

        const Vector v =
            project_pair(tilde, partner, diag, nullptr, ProjectionKind::exact_simplex);
        CHECK(v[diag] == 0.0);
        CHECK(v.minCoeff() >= 0.0);
        double sum = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            if (i != diag) sum += v[i] + partner[i];
        CHECK(std::abs(sum - 1.0) <= 1e-9);
    }
}

TEST_CASE("initial local state is feasible") {
    const auto state = initial_local_state(7);
    CHECK(state.C.diagonal().cwiseAbs().maxCoeff() == 0.0);
    CHECK(state.U.diagonal().cwiseAbs().maxCoeff() == 0.0);
    CHECK(state.C.minCoeff() >= 0.0);
    const Vector colsum = (state.C + state.U).colwise().sum();
    for (Eigen::Index j = 0; j < 7; ++j) CHECK(colsum[j] == Approx(1.0));
}

TEST_CASE("local_round with zero inner iterations returns the state unchanged") {
    Rng rng(3);
    NodeContext ctx;
    ctx.X = rng.normal_matrix(5, 8);
    ctx.gram = ctx.X.transpose() * ctx.X;
    ctx.M = manifold_coefficients(ctx.X, ManifoldMode::column_normalized);

    LocalHyperparams params;
    params.inner_iters = 0;
    const auto state = initial_local_state(8);
    const auto next = local_round(ctx, state, std::nullopt, params);
    CHECK((next.C - state.C).cwiseAbs().maxCoeff() == 0.0);
    CHECK((next.U - state.U).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("local objective is non-increasing over inner iterations") {
    Rng rng(41);
    NodeContext ctx;
    ctx.X = rng.normal_matrix(6, 10);
    ctx.gram = ctx.X.transpose() * ctx.X;
    ctx.M = manifold_coefficients(ctx.X, ManifoldMode::column_normalized);

    LocalHyperparams params;
    params.lambda1 = 0.5;
    params.lambda2 = 0.3;
    params.lambda3 = 0.5;
    params.inner_iters = 1;

    auto state = initial_local_state(10);
    double prev = local_objective(ctx, state, params);
    const double initial = prev;
    for (int step = 0; step < 8; ++step) {
        state = local_round(ctx, state, std::nullopt, params);
        const double cur = local_objective(ctx, state, params);
        CHECK(cur <= prev + 1e-6);
        prev = cur;
    }
    CHECK(prev <= initial);
}

TEST_CASE("converged local state is a fixed point of local_round") {
    Rng rng(53);
    NodeContext ctx;
    ctx.X = rng.normal_matrix(5, 9);
    ctx.gram = ctx.X.transpose() * ctx.X;
    ctx.M = manifold_coefficients(ctx.X, ManifoldMode::column_normalized);

    LocalHyperparams params;
    params.lambda1 = 1.0;
    params.lambda2 = 0.2;
    params.lambda3 = 1.0;
    params.inner_iters = 10;

    auto state = initial_local_state(9);
    for (int outer = 0; outer < 60; ++outer) {
        const auto next = local_round(ctx, state, std::nullopt, params);
        const double delta = (next.C - state.C).cwiseAbs().maxCoeff();
        state = next;
        if (delta < 1e-13) break;
    }
    const auto replayed = local_round(ctx, state, state.C, params);
    CHECK((replayed.C - state.C).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("local_round is pure: identical inputs give identical outputs") {
    Rng rng(67);
    NodeContext ctx;
    ctx.X = rng.normal_matrix(4, 7);
    ctx.gram = ctx.X.transpose() * ctx.X;
    ctx.M = manifold_coefficients(ctx.X, ManifoldMode::column_normalized);

    LocalHyperparams params;
    params.inner_iters = 3;
    const auto state = initial_local_state(7);
    const Matrix g = nonneg_zero_diag(rng, 7) * 0.1;

    const auto a = local_round(ctx, state, g, params);
    const auto b = local_round(ctx, state, g, params);
    CHECK((a.C - b.C).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.U - b.U).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("row constraint axis binds row sums instead") {
    Rng rng(81);
    NodeContext ctx;
    ctx.X = rng.normal_matrix(5, 8);
    ctx.gram = ctx.X.transpose() * ctx.X;
    ctx.M = manifold_coefficients(ctx.X, ManifoldMode::column_normalized);

    LocalHyperparams params;
    params.constraint_axis = ConstraintAxis::rows;
    params.inner_iters = 2;
    ProjectionDiagnostics diag;
    const auto state = local_round(ctx, initial_local_state(8), std::nullopt, params, &diag);
    if (diag.clamped_entries == 0) {
        const Vector rowsum = (state.C + state.U).rowwise().sum();
        for (Eigen::Index i = 0; i < 8; ++i) CHECK(rowsum[i] == Approx(1.0).margin(1e-9));
    }
    CHECK(state.C.diagonal().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("local_objective matches a naive elementwise oracle") {
    Rng rng(91);
    const Matrix x = rng.normal_matrix(6, 9);
    const Matrix c = nonneg_zero_diag(rng, 9);
    const Matrix u = nonneg_zero_diag(rng, 9);
    const Matrix m = manifold_coefficients(x, ManifoldMode::column_normalized);

    const double mine = local_objective(x, c, u, m, 0.7, 0.2, 1.3);
    const double naive = oracle::local_objective_naive(x, c, u, m, 0.7, 0.2, 1.3);
    CHECK(mine == Approx(naive).epsilon(1e-10));
}

TEST_CASE("local_objective degenerate values") {
    const Matrix zero = Matrix::Zero(3, 4);
    const Matrix zn = Matrix::Zero(4, 4);
    CHECK(local_objective(zero, zn, zn, zn, 1.0, 1.0, 1.0) == 0.0);

    // exact reconstruction through U alone leaves only the U penalty
    Rng rng(13);
    const Matrix x = rng.normal_matrix(3, 4);
    Matrix u = Matrix::Zero(4, 4);
    // u reproducing X exactly: impossible with zero diagonal in general, so
    // test with the identity-free residual directly: C = 0, U chosen so that
    // X(C+U) = X via a least-squares construction on a rank-deficient case
    Matrix x2(2, 4);
    x2 << 1, 1, 2, 2,
          1, 1, 2, 2;  // duplicated columns: col0=col1, col2=col3
    Matrix u2 = Matrix::Zero(4, 4);
    u2(1, 0) = 1.0;  // x0 = x1
    u2(0, 1) = 1.0;
    u2(3, 2) = 1.0;
    u2(2, 3) = 1.0;
    const double value = local_objective(x2, zn, u2, zn, 2.0, 5.0, 3.0);
    CHECK(value == Approx(3.0 * u2.squaredNorm()));
}
