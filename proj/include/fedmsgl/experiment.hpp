#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fedmsgl/config.hpp"
#include "fedmsgl/federation.hpp"
#include "fedmsgl/matrix_io.hpp"

namespace fedmsgl {

struct SeedOutcome {
    std::uint64_t seed = 0;
    RunResult result;
};

inline std::vector<SeedOutcome> run_seeds(const ExperimentConfig& cfg) {
    std::vector<SeedOutcome> outcomes;
    outcomes.reserve(cfg.seeds.size());
    for (const auto seed : cfg.seeds) {
        auto dataset = load_or_synthesize(cfg, seed);
        auto result = run_federation(dataset, make_federation_config(cfg, seed));
        outcomes.push_back(SeedOutcome{seed, std::move(result)});
    }
    return outcomes;
}

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

/// Sample standard deviation (n-1); zero for a single value.
inline MeanStd mean_std(const std::vector<double>& values) {
    MeanStd ms;
    if (values.empty()) return ms;
    for (const double v : values) ms.mean += v;
    ms.mean /= double(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (const double v : values) ss += (v - ms.mean) * (v - ms.mean);
        ms.std = std::sqrt(ss / double(values.size() - 1));
    }
    return ms;
}

inline double median(std::vector<double> values) {
    if (values.empty()) throw ShapeError("median of empty set");
    std::sort(values.begin(), values.end());
    const auto mid = values.size() / 2;
    return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

inline nlohmann::json metrics_summary(const std::vector<SeedOutcome>& outcomes) {
    std::vector<double> acc, pur, nm;
    for (const auto& o : outcomes) {
        if (!o.result.metrics) continue;
        acc.push_back(o.result.metrics->acc);
        pur.push_back(o.result.metrics->purity);
        nm.push_back(o.result.metrics->nmi);
    }
    auto block = [](const MeanStd& ms) {
        return nlohmann::json{{"mean", ms.mean}, {"std", ms.std}};
    };
    nlohmann::json j;
    if (!acc.empty()) {
        j["acc"] = block(mean_std(acc));
        j["purity"] = block(mean_std(pur));
        j["nmi"] = block(mean_std(nm));
    }
    return j;
}

/// Tracks files created by one command so a failure can remove partial
/// output: a run either completes its file set or leaves nothing behind.
class OutputSet {
public:
    explicit OutputSet(std::string dir) : dir_(std::move(dir)) {
        std::filesystem::create_directories(dir_);
    }

    std::string path(const std::string& name) {
        auto p = (std::filesystem::path(dir_) / name).string();
        created_.push_back(p);
        return p;
    }

    void discard_all() {
        for (const auto& p : created_) {
            std::error_code ec;
            std::filesystem::remove(p, ec);
        }
        created_.clear();
    }

    const std::string& dir() const { return dir_; }

private:
    std::string dir_;
    std::vector<std::string> created_;
};

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

/// Per-seed trace file: line-delimited canonical round records.
inline void write_trace_file(const std::string& path, const std::vector<RoundTrace>& trace) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    for (const auto& t : trace) out << trace_record(t).dump() << '\n';
    if (!out) throw IoError("write failed: " + path);
}

inline nlohmann::json seed_record(const SeedOutcome& o) {
    nlohmann::json rec{{"seed", o.seed},
                       {"rounds", o.result.rounds},
                       {"converged", o.result.converged},
                       {"final_objective", o.result.trace.back().full_objective}};
    if (o.result.metrics) {
        rec["acc"] = o.result.metrics->acc;
        rec["purity"] = o.result.metrics->purity;
        rec["nmi"] = o.result.metrics->nmi;
    }
    return rec;
}

/// Executes the config and writes summary.json, timing.json, and per-seed
/// trace/label files. timing.json is the only non-deterministic artifact.
inline nlohmann::json write_run_outputs(const ExperimentConfig& cfg,
                                        const std::vector<SeedOutcome>& outcomes,
                                        OutputSet& outputs) {
    nlohmann::json summary;
    summary["config"] = to_json(cfg);
    summary["nmi_normalization"] = "sqrt";
    summary["per_seed"] = nlohmann::json::array();
    nlohmann::json timing = nlohmann::json::array();
    for (const auto& o : outcomes) {
        summary["per_seed"].push_back(seed_record(o));
        write_trace_file(outputs.path("trace_seed_" + std::to_string(o.seed) + ".jsonl"),
                         o.result.trace);
        write_labels(outputs.path("labels_seed_" + std::to_string(o.seed) + ".txt"),
                     o.result.labels);
        double total_ms = 0.0;
        nlohmann::json rounds = nlohmann::json::array();
        for (const auto& t : o.result.trace) {
            rounds.push_back(t.wall_ms);
            total_ms += t.wall_ms;
        }
        timing.push_back(nlohmann::json{
            {"seed", o.seed}, {"round_wall_ms", rounds}, {"total_wall_ms", total_ms}});
    }
    summary["metrics"] = metrics_summary(outcomes);
    write_json_file(outputs.path("summary.json"), summary);
    write_json_file(outputs.path("timing.json"), timing);
    return summary;
}

// --- sweep -------------------------------------------------------------------

struct SweepCell {
    std::vector<std::pair<std::string, double>> assignment;  // in grid parameter order
};

inline void apply_sweep_value(ExperimentConfig& cfg, const std::string& name, double value) {
    if (name == "lambda1")
        cfg.lambda1 = value;
    else if (name == "lambda2")
        cfg.lambda2 = value;
    else if (name == "lambda3")
        cfg.lambda3 = value;
    else if (name == "beta")
        cfg.beta = value;
    else if (name == "knn_k")
        cfg.knn_k = static_cast<Eigen::Index>(value);
    else
        throw ConfigError("unknown sweep parameter: " + name);
}

/// Expands the configured grid into cells, sorted lexicographically by the
/// hyperparameter tuple (parameters in a fixed canonical order, values
/// ascending). An empty value list selects the paper's default grid.
inline std::vector<SweepCell> expand_sweep_grid(const ExperimentConfig& cfg) {
    static const std::vector<std::string> canonical_order = {"lambda1", "lambda2", "lambda3",
                                                             "beta", "knn_k"};
    std::vector<std::pair<std::string, std::vector<double>>> grid;
    if (cfg.sweep.empty()) {
        for (const auto& name : {"lambda1", "lambda2", "lambda3", "beta"})
            grid.emplace_back(name, default_grid(name));
    } else {
        for (const auto& name : canonical_order) {
            for (const auto& [key, values] : cfg.sweep) {
                if (key != name) continue;
                auto v = values.empty() ? default_grid(name) : values;
                std::sort(v.begin(), v.end());
                grid.emplace_back(name, std::move(v));
            }
        }
        for (const auto& [key, values] : cfg.sweep)
            if (std::find(canonical_order.begin(), canonical_order.end(), key) ==
                canonical_order.end())
                throw ConfigError("unknown sweep parameter: " + key);
    }

    std::vector<SweepCell> cells{SweepCell{}};
    for (const auto& [name, values] : grid) {
        std::vector<SweepCell> expanded;
        expanded.reserve(cells.size() * values.size());
        for (const auto& cell : cells)
            for (const double v : values) {
                SweepCell next = cell;
                next.assignment.emplace_back(name, v);
                expanded.push_back(std::move(next));
            }
        cells = std::move(expanded);
    }
    return cells;
}

inline nlohmann::json run_sweep(const ExperimentConfig& cfg, OutputSet& outputs) {
    const auto cells = expand_sweep_grid(cfg);
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& cell : cells) {
        ExperimentConfig cell_cfg = cfg;
        nlohmann::json hyper;
        for (const auto& [name, value] : cell.assignment) {
            apply_sweep_value(cell_cfg, name, value);
            hyper[name] = value;
        }
        const auto outcomes = run_seeds(cell_cfg);
        std::vector<double> finals;
        for (const auto& o : outcomes) finals.push_back(o.result.trace.back().full_objective);
        nlohmann::json row{{"hyperparams", hyper},
                           {"metrics", metrics_summary(outcomes)},
                           {"final_objective", mean_std(finals).mean}};
        rows.push_back(std::move(row));
    }
    std::ofstream out(outputs.path("sweep.jsonl"));
    for (const auto& row : rows) out << row.dump() << '\n';
    return rows;
}

// --- ablation ------------------------------------------------------------------

/// Runs the identical config with both Laplacian variants over the same
/// seeds and reports paired per-seed metrics with deltas and medians.
inline nlohmann::json run_ablation(const ExperimentConfig& cfg, OutputSet& outputs) {
    ExperimentConfig hyper_cfg = cfg;
    hyper_cfg.laplacian_variant = LaplacianVariant::hypergraph;
    ExperimentConfig graph_cfg = cfg;
    graph_cfg.laplacian_variant = LaplacianVariant::pairwise_graph;

    const auto hyper = run_seeds(hyper_cfg);
    const auto graph = run_seeds(graph_cfg);

    nlohmann::json pairs = nlohmann::json::array();
    std::vector<double> acc_h, acc_g;
    for (std::size_t i = 0; i < hyper.size(); ++i) {
        nlohmann::json pair{{"seed", hyper[i].seed},
                            {"hypergraph", seed_record(hyper[i])},
                            {"pairwise_graph", seed_record(graph[i])}};
        if (hyper[i].result.metrics && graph[i].result.metrics) {
            pair["delta"] = {
                {"acc", hyper[i].result.metrics->acc - graph[i].result.metrics->acc},
                {"purity", hyper[i].result.metrics->purity - graph[i].result.metrics->purity},
                {"nmi", hyper[i].result.metrics->nmi - graph[i].result.metrics->nmi}};
            acc_h.push_back(hyper[i].result.metrics->acc);
            acc_g.push_back(graph[i].result.metrics->acc);
        }
        pairs.push_back(std::move(pair));
    }

    nlohmann::json report{{"config", to_json(cfg)}, {"pairs", pairs}};
    if (!acc_h.empty()) {
        report["median_acc"] = {{"hypergraph", median(acc_h)},
                                {"pairwise_graph", median(acc_g)}};
    }
    write_json_file(outputs.path("ablation.json"), report);
    return report;
}

}  // namespace fedmsgl
