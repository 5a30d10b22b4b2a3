#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <vector>

#include "fedmsgl/rng.hpp"
#include "fedmsgl/types.hpp"

namespace fedmsgl {

struct ClusteringMetrics {
    double acc = 0.0;
    double purity = 0.0;
    double nmi = 0.0;
};

struct ClusteringResult {
    IntVector labels;
    ClusteringMetrics metrics;
    std::uint64_t seed = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Compacts arbitrary integer labels to 0..k-1 (ascending original value).
inline std::vector<int> compact_ids(const IntVector& labels, int& k_out) {
    std::map<int, int> ids;
    for (Eigen::Index i = 0; i < labels.size(); ++i) ids.emplace(labels[i], 0);
    int next = 0;
    for (auto& [value, id] : ids) id = next++;
    std::vector<int> compact(static_cast<std::size_t>(labels.size()));
    for (Eigen::Index i = 0; i < labels.size(); ++i)
        compact[static_cast<std::size_t>(i)] = ids.at(labels[i]);
    k_out = next;
    return compact;
}

inline Matrix contingency_table(const IntVector& pred, const IntVector& truth) {
    if (pred.size() != truth.size() || pred.size() == 0)
        throw ShapeError("metrics: label vectors must be nonempty and equally sized");
    int kp = 0, kt = 0;
    const auto p = compact_ids(pred, kp);
    const auto t = compact_ids(truth, kt);
    Matrix table = Matrix::Zero(kp, kt);
    for (std::size_t i = 0; i < p.size(); ++i) table(p[i], t[i]) += 1.0;
    return table;
}

/// Kuhn-Munkres with potentials, O(n^3). Minimizes total cost over matchings
/// that cover every row; requires rows <= cols.
inline double hungarian_min_cost(const Matrix& cost, std::vector<int>* row_to_col = nullptr) {
    const int nr = static_cast<int>(cost.rows());
    const int nc = static_cast<int>(cost.cols());
    if (nr > nc) throw ShapeError("hungarian: need rows <= cols");
    const double inf = std::numeric_limits<double>::infinity();

    std::vector<double> u(static_cast<std::size_t>(nr) + 1, 0.0);
    std::vector<double> v(static_cast<std::size_t>(nc) + 1, 0.0);
    std::vector<int> match(static_cast<std::size_t>(nc) + 1, 0);
    std::vector<int> way(static_cast<std::size_t>(nc) + 1, 0);

    for (int i = 1; i <= nr; ++i) {
        match[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(nc) + 1, inf);
        std::vector<char> used(static_cast<std::size_t>(nc) + 1, 0);
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            const int i0 = match[static_cast<std::size_t>(j0)];
            int j1 = 0;
            double delta = inf;
            for (int j = 1; j <= nc; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                                   v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= nc; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (match[static_cast<std::size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<std::size_t>(j0)];
            match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }

    if (row_to_col) row_to_col->assign(static_cast<std::size_t>(nr), -1);
    double total = 0.0;
    for (int j = 1; j <= nc; ++j) {
        const int i = match[static_cast<std::size_t>(j)];
        if (i > 0) {
            total += cost(i - 1, j - 1);
            if (row_to_col) (*row_to_col)[static_cast<std::size_t>(i - 1)] = j - 1;
        }
    }
    return total;
}

}  // namespace detail

/// Clustering accuracy: best agreement over label bijections, solved exactly
/// by optimal assignment on the contingency table.
inline double accuracy(const IntVector& pred, const IntVector& truth) {
    Matrix table = detail::contingency_table(pred, truth);
    if (table.rows() > table.cols()) table.transposeInPlace();
    const double matched = -detail::hungarian_min_cost(-table);
    return matched / double(pred.size());
}

/// Purity: each predicted cluster claims its majority true class.
inline double purity(const IntVector& pred, const IntVector& truth) {
    const Matrix table = detail::contingency_table(pred, truth);
    return table.rowwise().maxCoeff().sum() / double(pred.size());
}

/// Normalized mutual information, sqrt(H_pred * H_truth) normalization.
/// Both partitions trivial => 1; exactly one trivial => 0.
inline double nmi(const IntVector& pred, const IntVector& truth) {
    const Matrix table = detail::contingency_table(pred, truth);
    const double n = double(pred.size());
    const Vector row_p = table.rowwise().sum() / n;
    const Vector col_p = table.colwise().sum().transpose() / n;

    double h_pred = 0.0, h_truth = 0.0, mi = 0.0;
    for (Eigen::Index i = 0; i < row_p.size(); ++i)
        if (row_p[i] > 0.0) h_pred -= row_p[i] * std::log(row_p[i]);
    for (Eigen::Index j = 0; j < col_p.size(); ++j)
        if (col_p[j] > 0.0) h_truth -= col_p[j] * std::log(col_p[j]);
    for (Eigen::Index i = 0; i < table.rows(); ++i)
        for (Eigen::Index j = 0; j < table.cols(); ++j) {
            const double joint = table(i, j) / n;
            if (joint > 0.0) mi += joint * std::log(joint / (row_p[i] * col_p[j]));
        }

    if (h_pred == 0.0 && h_truth == 0.0) return 1.0;
    if (h_pred == 0.0 || h_truth == 0.0) return 0.0;
    return mi / std::sqrt(h_pred * h_truth);
}

// --- k-means ---------------------------------------------------------------

namespace detail {

struct KMeansRun {
    IntVector labels;
    double inertia = std::numeric_limits<double>::infinity();
};

inline KMeansRun kmeans_once(const Matrix& points, int k, Rng& rng, int max_iters = 100) {
    const Eigen::Index n = points.rows();
    const Eigen::Index d = points.cols();

    // k-means++ seeding
    Matrix centers(k, d);
    Vector min_dist2 = Vector::Constant(n, std::numeric_limits<double>::infinity());
    centers.row(0) = points.row(static_cast<Eigen::Index>(rng.uniform_int(std::uint64_t(n))));
    for (int c = 1; c < k; ++c) {
        for (Eigen::Index i = 0; i < n; ++i)
            min_dist2[i] =
                std::min(min_dist2[i], (points.row(i) - centers.row(c - 1)).squaredNorm());
        const double total = min_dist2.sum();
        Eigen::Index chosen = 0;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double cum = 0.0;
            chosen = n - 1;
            for (Eigen::Index i = 0; i < n; ++i) {
                cum += min_dist2[i];
                if (cum > target) {
                    chosen = i;
                    break;
                }
            }
        } else {
            chosen = static_cast<Eigen::Index>(rng.uniform_int(std::uint64_t(n)));
        }
        centers.row(c) = points.row(chosen);
    }

    IntVector labels = IntVector::Constant(n, -1);
    for (int iter = 0; iter < max_iters; ++iter) {
        bool changed = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            int best = 0;
            double best_d = (points.row(i) - centers.row(0)).squaredNorm();
            for (int c = 1; c < k; ++c) {
                const double dd = (points.row(i) - centers.row(c)).squaredNorm();
                if (dd < best_d) {
                    best_d = dd;
                    best = c;
                }
            }
            if (labels[i] != best) {
                labels[i] = best;
                changed = true;
            }
        }
        if (!changed && iter > 0) break;

        Matrix sums = Matrix::Zero(k, d);
        std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            sums.row(labels[i]) += points.row(i);
            ++counts[static_cast<std::size_t>(labels[i])];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) {
                centers.row(c) = sums.row(c) / double(counts[static_cast<std::size_t>(c)]);
            } else {
                // revive an empty cluster with the point farthest from its center
                Eigen::Index far = 0;
                double far_d = -1.0;
                for (Eigen::Index i = 0; i < n; ++i) {
                    if (counts[static_cast<std::size_t>(labels[i])] <= 1) continue;
                    const double dd = (points.row(i) - centers.row(labels[i])).squaredNorm();
                    if (dd > far_d) {
                        far_d = dd;
                        far = i;
                    }
                }
                --counts[static_cast<std::size_t>(labels[far])];
                sums.row(labels[far]) -= points.row(far);
                centers.row(labels[far]) =
                    sums.row(labels[far]) / double(counts[static_cast<std::size_t>(labels[far])]);
                labels[far] = c;
                counts[static_cast<std::size_t>(c)] = 1;
                centers.row(c) = points.row(far);
            }
        }
    }

    KMeansRun run;
    run.labels = labels;
    run.inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        run.inertia += (points.row(i) - centers.row(labels[i])).squaredNorm();
    return run;
}

}  // namespace detail

/// Seeded k-means (k-means++ init) with `restarts` independent runs; the run
/// with the lowest inertia wins, ties going to the lowest restart index.
/// Restart r draws from its own splitmix-derived stream, so a parallel
/// best-of reduction would select the identical winner.
inline IntVector kmeans(const Matrix& points, int k, std::uint64_t seed, int restarts = 50) {
    if (k < 1 || points.rows() < 1) throw ShapeError("kmeans: empty input");
    if (static_cast<Eigen::Index>(k) > points.rows())
        throw ShapeError("kmeans: more clusters than points");
    detail::KMeansRun best;
    for (int r = 0; r < restarts; ++r) {
        Rng rng(detail::splitmix64(seed + static_cast<std::uint64_t>(r)));
        auto run = detail::kmeans_once(points, k, rng);
        if (run.inertia < best.inertia) best = std::move(run);
    }
    return best.labels;
}

/// Indicator rows are length-normalized (zero rows kept as-is) and clustered
/// by seeded k-means with 50 restarts.
inline IntVector labels_from_indicator(const Matrix& F, int c, std::uint64_t seed) {
    if (F.cols() != c) throw ShapeError("labels_from_indicator: F must have c columns");
    Matrix rows = F;
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        const double norm = rows.row(i).norm();
        if (norm > 0.0) rows.row(i) /= norm;
    }
    return kmeans(rows, c, seed);
}

inline ClusteringMetrics compute_metrics(const IntVector& pred, const IntVector& truth) {
    return ClusteringMetrics{accuracy(pred, truth), purity(pred, truth), nmi(pred, truth)};
}

}  // namespace fedmsgl
