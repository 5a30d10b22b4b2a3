#include <catch2/catch_amalgamated.hpp>

#include "fedmsgl/server.hpp"
#include "support/oracles.hpp"

using namespace fedmsgl;
using Catch::Approx;

namespace {

std::vector<Matrix> random_uploads(Rng& rng, std::size_t count, Eigen::Index n) {
    std::vector<Matrix> c_list;
    for (std::size_t k = 0; k < count; ++k) {
        Matrix c = rng.uniform_matrix(n, n);
        c.diagonal().setZero();
        // scale columns to sum 1, the shape real uploads have
        for (Eigen::Index j = 0; j < n; ++j) c.col(j) /= c.col(j).sum();
        c_list.push_back(std::move(c));
    }
    return c_list;
}

}  // namespace

TEST_CASE("fusion weights: exact values and range") {
    Rng rng(7);
    const Matrix g = rng.uniform_matrix(5, 5);

    SECTION("identical upload gets weight 1/2") {
        const Vector theta = fusion_weights({g}, g);
        CHECK(theta[0] == 0.5);
    }
    SECTION("distance ln(4) gives weight 1/8") {
        Matrix c = g;
        c(0, 0) += std::log(4.0);
        const Vector theta = fusion_weights({c}, g);
        CHECK(theta[0] == Approx(0.125).epsilon(1e-12));
    }
    SECTION("weights strictly decrease with distance and stay in (0, 1/2]") {
        double prev = 0.5;
        for (double scale : {0.1, 0.5, 2.0, 10.0, 800.0}) {
            Matrix c = g;
            c(1, 2) += scale;
            const Vector theta = fusion_weights({c}, g);
            CHECK(theta[0] > 0.0);
            CHECK(theta[0] <= 0.5);
            CHECK(theta[0] < prev);
            prev = theta[0];
        }
    }
}

TEST_CASE("z_vectors: squared row distances") {
    Matrix f(2, 2);
    f << 1, 0,
         0, 1;
    const Matrix z = z_vectors(f);
    CHECK(z(0, 1) == Approx(2.0));
    CHECK(z(1, 0) == Approx(2.0));
    CHECK(z(0, 0) == 0.0);

    Matrix same(4, 2);
    same << 0.3, 0.7,
            0.3, 0.7,
            0.3, 0.7,
            0.3, 0.7;
    CHECK(z_vectors(same).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("update_G closed form, including negative entries") {
    Matrix c1(2, 1), c2(2, 1);
    c1 << 1, 0;
    c2 << 0, 1;
    Vector theta(2);
    theta << 0.5, 0.5;

    SECTION("beta = 0: weighted mean") {
        const Matrix g = update_G({c1, c2}, theta, Matrix::Zero(2, 1), 0.0);
        CHECK(g(0, 0) == Approx(0.5));
        CHECK(g(1, 0) == Approx(0.5));
    }
    SECTION("spectral pull can push entries negative") {
        Matrix z(2, 1);
        z << 0, 4;
        const Matrix g = update_G({c1, c2}, theta, z, 1.0);
        CHECK(g(0, 0) == Approx(0.5));
        CHECK(g(1, 0) == Approx(-0.5));
    }
}

TEST_CASE("update_G is the exact stationary point, column by column") {
    Rng rng(19);
    const Eigen::Index n = 14;
    const auto c_list = random_uploads(rng, 3, n);
    Matrix f = rng.normal_matrix(n, 3);
    const Matrix z = z_vectors(f);
    Vector theta(3);
    theta << 0.41, 0.18, 0.33;
    const double beta = 0.7;

    const Matrix g = update_G(c_list, theta, z, beta);
    for (Eigen::Index i = 0; i < n; ++i) {
        Vector residual = Vector::Zero(n);
        for (std::size_t k = 0; k < c_list.size(); ++k)
            residual += 2.0 * theta[static_cast<Eigen::Index>(k)] *
                        (g.col(i) - c_list[k].col(i));
        residual += (beta / 2.0) * z.col(i);
        CHECK(residual.cwiseAbs().maxCoeff() <= 1e-10);
    }
}

TEST_CASE("update_G column objective cannot be improved by perturbation") {
    Rng rng(23);
    const Eigen::Index n = 10;
    const auto c_list = random_uploads(rng, 2, n);
    Matrix f = rng.normal_matrix(n, 2);
    const Matrix z = z_vectors(f);
    Vector theta(2);
    theta << 0.5, 0.25;
    const double beta = 0.4;

    const Matrix g = update_G(c_list, theta, z, beta);
    const auto column_objective = [&](Eigen::Index i, const Vector& gi) {
        double value = (beta / 2.0) * z.col(i).dot(gi);
        for (std::size_t k = 0; k < c_list.size(); ++k)
            value += theta[static_cast<Eigen::Index>(k)] *
                     (c_list[k].col(i) - gi).squaredNorm();
        return value;
    };

    const double eps = 1e-4;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double at_solution = column_objective(i, g.col(i));
        for (int dir = 0; dir < 100; ++dir) {
            Vector delta = rng.normal_matrix(n, 1).col(0);
            delta /= delta.norm();
            CHECK(column_objective(i, g.col(i) + eps * delta) >= at_solution);
        }
    }
}

TEST_CASE("central_integration single view with beta = 0 returns the upload") {
    Rng rng(31);
    const auto c_list = random_uploads(rng, 1, 8);
    std::vector<Matrix> u_list = {rng.uniform_matrix(8, 8) * 0.1};
    CentralParams params;
    params.beta = 0.0;
    params.central_iters = 1;
    params.knn_k = 3;
    params.clusters = 2;

    const auto state = central_integration(c_list, u_list, params);
    CHECK((state.G - c_list[0]).cwiseAbs().maxCoeff() == 0.0);
    CHECK(state.theta.size() == 1);
    CHECK(state.theta[0] == 0.5);
}

TEST_CASE("central_integration with identical uploads fixes G at the shared C") {
    Rng rng(37);
    const auto shared = random_uploads(rng, 1, 9).front();
    const std::vector<Matrix> c_list = {shared, shared, shared};
    std::vector<Matrix> u_list;
    for (int k = 0; k < 3; ++k) u_list.push_back(rng.uniform_matrix(9, 9) * 0.05);
    CentralParams params;
    params.beta = 0.0;
    params.central_iters = 4;
    params.knn_k = 3;
    params.clusters = 2;

    const auto state = central_integration(c_list, u_list, params);
    CHECK((state.G - shared).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK(state.objective_trace.size() == 4);
    for (const double v : state.objective_trace) CHECK(std::isfinite(v));
}

TEST_CASE("G-step and F-step each decrease their own subproblem") {
    Rng rng(41);
    const Eigen::Index n = 16;
    const auto c_list = random_uploads(rng, 3, n);
    std::vector<Matrix> u_list;
    for (int k = 0; k < 3; ++k) u_list.push_back(rng.uniform_matrix(n, n) * 0.1);
    const double beta = 0.3;
    const Eigen::Index knn_k = 4;
    const Eigen::Index clusters = 3;

    // bootstrap exactly like the central loop
    Matrix g = c_list[0];
    for (std::size_t k = 1; k < c_list.size(); ++k) g += c_list[k];
    g /= double(c_list.size());
    Matrix z = Matrix::Zero(n, n);
    Matrix f;

    for (int iter = 0; iter < 4; ++iter) {
        const Vector theta = fusion_weights(c_list, g);
        const auto surrogate = [&](const Matrix& gm) {
            double value = (beta / 2.0) * z.cwiseProduct(gm).sum();
            for (std::size_t k = 0; k < c_list.size(); ++k)
                value += theta[static_cast<Eigen::Index>(k)] * (c_list[k] - gm).squaredNorm();
            return value;
        };
        const double before = surrogate(g);
        g = update_G(c_list, theta, z, beta);
        CHECK(surrogate(g) <= before + 1e-6);

        std::vector<Matrix> affinities;
        for (const auto& u : u_list) affinities.push_back(view_affinity(g, u));
        const Matrix lap = hypergraph_laplacian(knn_hyperedges(global_affinity(affinities), knn_k));
        if (f.size() != 0) {
            const double trace_before = (lap * f).cwiseProduct(f).sum();
            const Matrix f_new = update_F(lap, clusters);
            CHECK((lap * f_new).cwiseProduct(f_new).sum() <= trace_before + 1e-6);
            f = f_new;
        } else {
            f = update_F(lap, clusters);
        }
        z = z_vectors(f);
    }
}

TEST_CASE("central_objective values and oracle") {
    Rng rng(43);
    const Eigen::Index n = 7;
    const auto c_list = random_uploads(rng, 2, n);
    const Matrix g = rng.uniform_matrix(n, n);
    Vector theta(2);
    theta << 0.2, 0.4;

    SECTION("beta = 0 matches a naive elementwise oracle") {
        double naive = 0.0;
        for (std::size_t k = 0; k < c_list.size(); ++k)
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = 0; j < n; ++j) {
                    const double d = c_list[k](i, j) - g(i, j);
                    naive += theta[static_cast<Eigen::Index>(k)] * d * d;
                }
        const double mine =
            central_objective(c_list, g, Matrix::Zero(n, 1), Matrix::Zero(n, n), theta, 0.0);
        CHECK(mine == Approx(naive).epsilon(1e-10));
    }
    SECTION("perfect consensus with the full eigenbasis leaves beta * Tr(L)") {
        const auto hg = knn_hyperedges(view_affinity(g, Matrix::Zero(n, n)), 2);
        const Matrix lap = hypergraph_laplacian(hg);
        const Matrix f = spectral_indicator(lap, n);
        const std::vector<Matrix> consensus = {g, g};
        const double value = central_objective(consensus, g, f, lap, theta, 0.9);
        CHECK(value == Approx(0.9 * lap.trace()).margin(1e-8));
        CHECK(value >= 0.0);
    }
}

TEST_CASE("central params validation") {
    CentralParams params;
    params.central_iters = 0;
    CHECK_THROWS_AS(params.validate(), ConfigError);
    params.central_iters = 1;
    params.beta = -0.5;
    CHECK_THROWS_AS(params.validate(), ConfigError);
}
