#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "fedmsgl/dataset.hpp"
#include "fedmsgl/federation.hpp"
#include "fedmsgl/types.hpp"

namespace fedmsgl {

// enum <-> string, used by config files and run summaries

inline std::string to_string(ManifoldMode m) {
    return m == ManifoldMode::paper_literal ? "paper_literal" : "column_normalized";
}
inline std::string to_string(ConstraintAxis a) {
    return a == ConstraintAxis::columns ? "columns" : "rows";
}
inline std::string to_string(ProjectionKind p) {
    return p == ProjectionKind::kkt_shift ? "kkt_shift" : "exact_simplex";
}
inline std::string to_string(LaplacianVariant v) {
    return v == LaplacianVariant::hypergraph ? "hypergraph" : "pairwise_graph";
}

inline ManifoldMode manifold_mode_from_string(const std::string& s) {
    if (s == "paper_literal") return ManifoldMode::paper_literal;
    if (s == "column_normalized") return ManifoldMode::column_normalized;
    throw ConfigError("unknown manifold_mode: " + s);
}
inline ConstraintAxis constraint_axis_from_string(const std::string& s) {
    if (s == "columns") return ConstraintAxis::columns;
    if (s == "rows") return ConstraintAxis::rows;
    throw ConfigError("unknown constraint_axis: " + s);
}
inline ProjectionKind projection_from_string(const std::string& s) {
    if (s == "kkt_shift") return ProjectionKind::kkt_shift;
    if (s == "exact_simplex") return ProjectionKind::exact_simplex;
    throw ConfigError("unknown projection: " + s);
}
inline LaplacianVariant laplacian_variant_from_string(const std::string& s) {
    if (s == "hypergraph") return LaplacianVariant::hypergraph;
    if (s == "pairwise_graph") return LaplacianVariant::pairwise_graph;
    throw ConfigError("unknown laplacian_variant: " + s);
}

/// Where the data comes from: a manifest on disk, or the synthetic generator.
using DatasetSource = std::variant<std::string, SynthesisSpec>;

/// Everything a single experiment needs. Defaults here are the documented
/// defaults; a JSON config file overrides fields, CLI flags override both.
struct ExperimentConfig {
    DatasetSource source;
    bool standardize = false;

    double lambda1 = 1.0;
    double lambda2 = 0.1;
    double lambda3 = 1.0;
    double beta = 0.1;
    Eigen::Index knn_k = 5;
    int inner_iters = 5;
    int central_iters = 5;
    int max_rounds = 20;
    double tol = 1e-4;
    ManifoldMode manifold_mode = ManifoldMode::column_normalized;
    ConstraintAxis constraint_axis = ConstraintAxis::columns;
    ProjectionKind projection = ProjectionKind::kkt_shift;
    LaplacianVariant laplacian_variant = LaplacianVariant::hypergraph;
    bool parallel_nodes = true;
    int clusters = 0;  // 0: take the count from dataset labels

    std::vector<std::uint64_t> seeds = {1};
    std::string output_dir;

    // sweep grids: parameter name -> values (empty vector = paper default grid)
    std::vector<std::pair<std::string, std::vector<double>>> sweep;

    void validate() const {
        if (lambda1 <= 0.0 || lambda3 <= 0.0) throw ConfigError("lambda1/lambda3 must be > 0");
        if (lambda2 < 0.0 || beta < 0.0) throw ConfigError("lambda2/beta must be >= 0");
        if (knn_k < 1) throw ConfigError("knn_k must be >= 1");
        if (inner_iters < 0) throw ConfigError("inner_iters must be >= 0");
        if (central_iters < 1) throw ConfigError("central_iters must be >= 1");
        if (max_rounds < 1) throw ConfigError("max_rounds must be >= 1");
        if (tol <= 0.0) throw ConfigError("tol must be > 0");
        if (seeds.empty()) throw ConfigError("seeds must be non-empty");
    }
};

/// Paper hyperparameter ranges, used as the default sweep grids.
inline std::vector<double> default_grid(const std::string& name) {
    if (name == "lambda1" || name == "lambda2" || name == "lambda3")
        return {1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3};
    if (name == "beta") return {1e-2, 1e-1, 1.0, 10.0, 100.0};
    if (name == "knn_k") return {3, 5, 7, 9};
    throw ConfigError("no default sweep grid for parameter: " + name);
}

inline SynthesisSpec synthesis_spec_from_json(const nlohmann::json& j) {
    SynthesisSpec spec;
    spec.n = j.at("n").get<Eigen::Index>();
    spec.c = j.at("clusters").get<int>();
    for (const auto& d : j.at("view_dims")) spec.view_dims.push_back(d.get<Eigen::Index>());
    spec.cluster_separation = j.value("separation", 0.0);
    spec.noise_sigma = j.value("noise_sigma", 0.0);
    spec.latent_dim = j.value("latent_dim", Eigen::Index{8});
    spec.seed = j.value("seed", std::uint64_t{0});
    spec.validate();
    return spec;
}

inline nlohmann::json to_json(const SynthesisSpec& spec) {
    return nlohmann::json{{"n", spec.n},
                          {"clusters", spec.c},
                          {"view_dims", spec.view_dims},
                          {"separation", spec.cluster_separation},
                          {"noise_sigma", spec.noise_sigma},
                          {"latent_dim", spec.latent_dim},
                          {"seed", spec.seed}};
}

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    if (!j.contains("dataset"))
        throw ConfigError("config needs a 'dataset' section ('manifest' or 'synthetic')");
    const auto& ds = j.at("dataset");
    if (ds.contains("manifest")) {
        cfg.source = ds.at("manifest").get<std::string>();
    } else if (ds.contains("synthetic")) {
        cfg.source = synthesis_spec_from_json(ds.at("synthetic"));
    } else {
        throw ConfigError("dataset section needs 'manifest' or 'synthetic'");
    }

    cfg.standardize = j.value("standardize", cfg.standardize);
    cfg.lambda1 = j.value("lambda1", cfg.lambda1);
    cfg.lambda2 = j.value("lambda2", cfg.lambda2);
    cfg.lambda3 = j.value("lambda3", cfg.lambda3);
    cfg.beta = j.value("beta", cfg.beta);
    cfg.knn_k = j.value("knn_k", cfg.knn_k);
    cfg.inner_iters = j.value("inner_iters", cfg.inner_iters);
    cfg.central_iters = j.value("central_iters", cfg.central_iters);
    cfg.max_rounds = j.value("max_rounds", cfg.max_rounds);
    cfg.tol = j.value("tol", cfg.tol);
    if (j.contains("manifold_mode"))
        cfg.manifold_mode = manifold_mode_from_string(j.at("manifold_mode").get<std::string>());
    if (j.contains("constraint_axis"))
        cfg.constraint_axis =
            constraint_axis_from_string(j.at("constraint_axis").get<std::string>());
    if (j.contains("projection"))
        cfg.projection = projection_from_string(j.at("projection").get<std::string>());
    if (j.contains("laplacian_variant"))
        cfg.laplacian_variant =
            laplacian_variant_from_string(j.at("laplacian_variant").get<std::string>());
    cfg.parallel_nodes = j.value("parallel_nodes", cfg.parallel_nodes);
    cfg.clusters = j.value("clusters", cfg.clusters);
    if (j.contains("seeds")) {
        cfg.seeds.clear();
        for (const auto& s : j.at("seeds")) cfg.seeds.push_back(s.get<std::uint64_t>());
    }
    cfg.output_dir = j.value("output_dir", cfg.output_dir);
    if (j.contains("sweep")) {
        for (const auto& [key, value] : j.at("sweep").items()) {
            std::vector<double> values;
            for (const auto& v : value) values.push_back(v.get<double>());
            cfg.sweep.emplace_back(key, std::move(values));
        }
    }
    cfg.validate();
    return cfg;
}

inline nlohmann::json to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    if (std::holds_alternative<std::string>(cfg.source)) {
        j["dataset"] = {{"manifest", std::get<std::string>(cfg.source)}};
    } else {
        j["dataset"] = {{"synthetic", to_json(std::get<SynthesisSpec>(cfg.source))}};
    }
    j["standardize"] = cfg.standardize;
    j["lambda1"] = cfg.lambda1;
    j["lambda2"] = cfg.lambda2;
    j["lambda3"] = cfg.lambda3;
    j["beta"] = cfg.beta;
    j["knn_k"] = cfg.knn_k;
    j["inner_iters"] = cfg.inner_iters;
    j["central_iters"] = cfg.central_iters;
    j["max_rounds"] = cfg.max_rounds;
    j["tol"] = cfg.tol;
    j["manifold_mode"] = to_string(cfg.manifold_mode);
    j["constraint_axis"] = to_string(cfg.constraint_axis);
    j["projection"] = to_string(cfg.projection);
    j["laplacian_variant"] = to_string(cfg.laplacian_variant);
    j["parallel_nodes"] = cfg.parallel_nodes;
    j["clusters"] = cfg.clusters;
    j["seeds"] = cfg.seeds;
    if (!cfg.output_dir.empty()) j["output_dir"] = cfg.output_dir;
    return j;
}

inline FederationConfig make_federation_config(const ExperimentConfig& cfg, std::uint64_t seed) {
    FederationConfig fc;
    fc.local.lambda1 = cfg.lambda1;
    fc.local.lambda2 = cfg.lambda2;
    fc.local.lambda3 = cfg.lambda3;
    fc.local.inner_iters = cfg.inner_iters;
    fc.local.manifold_mode = cfg.manifold_mode;
    fc.local.constraint_axis = cfg.constraint_axis;
    fc.local.projection = cfg.projection;
    fc.central.beta = cfg.beta;
    fc.central.central_iters = cfg.central_iters;
    fc.central.knn_k = cfg.knn_k;
    fc.central.variant = cfg.laplacian_variant;
    fc.max_rounds = cfg.max_rounds;
    fc.tol = cfg.tol;
    fc.parallel_nodes = cfg.parallel_nodes;
    fc.clusters_override = cfg.clusters;
    fc.seed = seed;
    return fc;
}

/// Materializes the configured dataset for one run. Synthetic sources are
/// drawn fresh per run seed (each seed is an independent experiment); file
/// sources ignore the seed here (it still seeds label extraction).
inline std::shared_ptr<const MultiViewDataset> load_or_synthesize(const ExperimentConfig& cfg,
                                                                  std::uint64_t seed) {
    MultiViewDataset ds;
    if (std::holds_alternative<std::string>(cfg.source)) {
        ds = load_dataset(read_manifest(std::get<std::string>(cfg.source)));
    } else {
        SynthesisSpec spec = std::get<SynthesisSpec>(cfg.source);
        spec.seed = seed;
        ds = synthesize(spec);
    }
    if (cfg.standardize) standardize_features(ds);
    return std::make_shared<const MultiViewDataset>(std::move(ds));
}

}  // namespace fedmsgl
