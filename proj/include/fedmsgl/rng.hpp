#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "fedmsgl/types.hpp"

namespace fedmsgl {

/// Deterministic random generator.
///
/// Wraps mt19937_64 but maps raw bits to doubles/ints by hand, because the
/// std::*_distribution classes are implementation-defined and would break the
/// bit-identical determinism contract across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, bound). Rejection sampling keeps it unbiased.
    std::uint64_t uniform_int(std::uint64_t bound) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % bound;
    }

    /// Standard normal via Box-Muller (one value per call; the pair's second
    /// member is discarded to keep the stream position easy to reason about).
    double normal() {
        double u1;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols) {
        Matrix m(rows, cols);
        for (Eigen::Index j = 0; j < cols; ++j)
            for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal();
        return m;
    }

    Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols) {
        Matrix m(rows, cols);
        for (Eigen::Index j = 0; j < cols; ++j)
            for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = uniform();
        return m;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace fedmsgl
