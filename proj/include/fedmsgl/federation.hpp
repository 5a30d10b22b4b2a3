#pragma once

#include <chrono>
#include <functional>
#include <future>
#include <memory>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "fedmsgl/dataset.hpp"
#include "fedmsgl/eval.hpp"
#include "fedmsgl/local_node.hpp"
#include "fedmsgl/server.hpp"
#include "fedmsgl/types.hpp"

namespace fedmsgl {

// --- message contract -------------------------------------------------------
//
// Nodes and server exchange only these two types. Neither has a field that
// could carry a d_k-sized object: uploads are the n x n subspace parts plus
// bookkeeping, broadcasts are the n x n global subspace. Raw features never
// leave a node.

struct NodeUpload {
    int node_id = 0;
    Matrix C;
    Matrix U;
    int round_index = 0;
};

struct ServerBroadcast {
    Matrix G;
    int round_index = 0;
};

namespace detail {

inline nlohmann::json matrix_to_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
    const auto rows = j.size();
    const auto cols = rows == 0 ? 0 : j.at(0).size();
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t c = 0; c < cols; ++c)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
                j.at(i).at(c).get<double>();
    return m;
}

}  // namespace detail

inline nlohmann::json to_json(const NodeUpload& msg) {
    return nlohmann::json{{"node_id", msg.node_id},
                          {"C", detail::matrix_to_json(msg.C)},
                          {"U", detail::matrix_to_json(msg.U)},
                          {"round_index", msg.round_index}};
}

inline NodeUpload node_upload_from_json(const nlohmann::json& j) {
    return NodeUpload{j.at("node_id").get<int>(), detail::matrix_from_json(j.at("C")),
                      detail::matrix_from_json(j.at("U")), j.at("round_index").get<int>()};
}

inline nlohmann::json to_json(const ServerBroadcast& msg) {
    return nlohmann::json{{"G", detail::matrix_to_json(msg.G)},
                          {"round_index", msg.round_index}};
}

inline ServerBroadcast server_broadcast_from_json(const nlohmann::json& j) {
    return ServerBroadcast{detail::matrix_from_json(j.at("G")), j.at("round_index").get<int>()};
}

// --- round trace -------------------------------------------------------------

struct RoundTrace {
    int round_index = 0;
    double full_objective = 0.0;
    double central_objective = 0.0;
    std::vector<double> local_objectives;
    Vector theta;
    double wall_ms = 0.0;
    ProjectionDiagnostics diagnostics;
};

/// Canonical trace record. Timing is non-deterministic by nature and is
/// excluded unless explicitly requested; everything else must reproduce
/// bit-for-bit given config + seed.
inline nlohmann::json trace_record(const RoundTrace& t, bool include_timing = false) {
    nlohmann::json rec{{"round", t.round_index},
                       {"objective", t.full_objective},
                       {"central_objective", t.central_objective},
                       {"local_objectives", t.local_objectives},
                       {"theta", std::vector<double>(t.theta.data(), t.theta.data() + t.theta.size())},
                       {"max_sum_violation", t.diagnostics.max_sum_violation},
                       {"clamped_entries", t.diagnostics.clamped_entries}};
    if (include_timing) rec["wall_ms"] = t.wall_ms;
    return rec;
}

// --- federation config and results -------------------------------------------

struct FederationConfig {
    LocalHyperparams local;
    CentralParams central;
    int max_rounds = 20;
    double tol = 1e-4;
    bool parallel_nodes = true;
    int clusters_override = 0;  // used when the dataset carries no labels
    std::uint64_t seed = 0;

    void validate() const {
        local.validate();
        if (max_rounds < 1) throw ConfigError("max_rounds must be >= 1");
        if (tol <= 0.0) throw ConfigError("tol must be > 0");
    }
};

struct RunResult {
    Matrix G;
    Matrix F;
    IntVector labels;
    std::optional<ClusteringMetrics> metrics;
    std::vector<RoundTrace> trace;
    int rounds = 0;
    bool converged = false;
};

/// Relative-change convergence on the tracked objective. Needs two points.
inline bool convergence_check(const std::vector<double>& objective_trace, double tol) {
    const auto sz = objective_trace.size();
    if (sz < 2) return false;
    const double prev = objective_trace[sz - 2];
    const double cur = objective_trace[sz - 1];
    return std::abs(cur - prev) / std::max(std::abs(prev), 1e-12) < tol;
}

/// Full objective: per-node local terms plus the central terms. The local
/// reconstruction terms depend on raw features, so they are evaluated by the
/// node-side callback and only the scalars cross the wire.
inline double full_objective(const std::vector<NodeUpload>& uploads, const Matrix& G,
                             const Matrix& F, const Matrix& laplacian, const Vector& theta,
                             double beta,
                             const std::function<double(const NodeUpload&)>& node_objective) {
    double value = 0.0;
    std::vector<Matrix> c_list;
    c_list.reserve(uploads.size());
    for (const auto& upload : uploads) {
        value += node_objective(upload);
        c_list.push_back(upload.C);
    }
    return value + central_objective(c_list, G, F, laplacian, theta, beta);
}

/// Runs Algorithm 1 end to end inside the in-process federation: parallel
/// local rounds, upload, central integration, broadcast, until the relative
/// change of the full objective drops below tol or max_rounds is reached.
inline RunResult run_federation(std::shared_ptr<const MultiViewDataset> dataset,
                                FederationConfig config) {
    config.validate();
    dataset->validate();

    const int clusters = config.clusters_override > 0 ? config.clusters_override
                                                      : dataset->num_clusters;
    if (clusters < 1)
        throw ConfigError("cluster count unknown: dataset has no labels and no override given");
    config.central.clusters = clusters;

    auto handles = partition(dataset);
    const std::size_t num_nodes = handles.size();

    std::vector<NodeContext> contexts;
    contexts.reserve(num_nodes);
    for (const auto& handle : handles)
        contexts.push_back(make_node_context(handle, config.local.manifold_mode));

    std::vector<LocalState> states(num_nodes, initial_local_state(dataset->n));

    RunResult result;
    std::optional<Matrix> broadcast_G;
    std::vector<double> objective_trace;

    for (int round = 1; round <= config.max_rounds; ++round) {
        const auto start = std::chrono::steady_clock::now();

        // local phase: every node runs on immutable inputs; a failed node
        // aborts the run when its future is collected
        std::vector<ProjectionDiagnostics> diags(num_nodes);
        if (config.parallel_nodes) {
            std::vector<std::future<LocalState>> futures;
            futures.reserve(num_nodes);
            for (std::size_t k = 0; k < num_nodes; ++k)
                futures.push_back(std::async(std::launch::async, [&, k] {
                    return local_round(contexts[k], states[k], broadcast_G, config.local,
                                       &diags[k]);
                }));
            for (std::size_t k = 0; k < num_nodes; ++k) states[k] = futures[k].get();
        } else {
            for (std::size_t k = 0; k < num_nodes; ++k)
                states[k] = local_round(contexts[k], states[k], broadcast_G, config.local,
                                        &diags[k]);
        }

        std::vector<NodeUpload> uploads;
        uploads.reserve(num_nodes);
        for (std::size_t k = 0; k < num_nodes; ++k)
            uploads.push_back(NodeUpload{static_cast<int>(k), states[k].C, states[k].U, round});

        std::vector<Matrix> c_list, u_list;
        for (const auto& u : uploads) {
            c_list.push_back(u.C);
            u_list.push_back(u.U);
        }
        GlobalState global = central_integration(c_list, u_list, config.central);

        RoundTrace trace;
        trace.round_index = round;
        trace.theta = global.theta;
        for (const auto& d : diags) trace.diagnostics.merge(d);
        trace.local_objectives.resize(num_nodes);
        trace.full_objective = full_objective(
            uploads, global.G, global.F, global.laplacian, global.theta, config.central.beta,
            [&](const NodeUpload& upload) {
                const auto k = static_cast<std::size_t>(upload.node_id);
                const double v = local_objective(contexts[k], states[k], config.local);
                trace.local_objectives[k] = v;
                return v;
            });
        trace.central_objective = central_objective(c_list, global.G, global.F, global.laplacian,
                                                    global.theta, config.central.beta);
        if (!std::isfinite(trace.full_objective))
            throw NumericError("full objective became non-finite at round " +
                               std::to_string(round));

        broadcast_G = global.G;
        result.G = global.G;
        result.F = global.F;
        objective_trace.push_back(trace.full_objective);

        trace.wall_ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - start)
                            .count();
        result.trace.push_back(std::move(trace));
        result.rounds = round;

        if (convergence_check(objective_trace, config.tol)) {
            result.converged = true;
            break;
        }
    }

    result.labels = labels_from_indicator(result.F, clusters, config.seed);
    if (dataset->labels) result.metrics = compute_metrics(result.labels, *dataset->labels);
    return result;
}

}  // namespace fedmsgl
