#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fedmsgl/matrix_io.hpp"
#include "fedmsgl/rng.hpp"
#include "fedmsgl/types.hpp"

namespace fedmsgl {

/// A multi-view dataset. Views are d_k x n, column per sample; all views
/// share the sample axis. Labels, when present, are contiguous 0-based
/// cluster ids held by the evaluator, never by nodes.
struct MultiViewDataset {
    std::vector<Matrix> views;
    std::optional<IntVector> labels;
    Eigen::Index n = 0;
    int num_views = 0;
    int num_clusters = 0;

    void validate() const {
        if (views.empty()) throw ShapeError("dataset has no views");
        for (std::size_t k = 0; k < views.size(); ++k) {
            if (views[k].rows() < 1)
                throw ShapeError("view " + std::to_string(k) + " has zero feature rows");
            if (views[k].cols() != n)
                throw ShapeError("view " + std::to_string(k) + " has " +
                                 std::to_string(views[k].cols()) + " samples, expected " +
                                 std::to_string(n));
        }
        if (labels) {
            if (labels->size() != n) throw ShapeError("labels length does not match sample count");
            std::vector<int> seen(static_cast<std::size_t>(num_clusters), 0);
            for (Eigen::Index i = 0; i < n; ++i) {
                const int l = (*labels)[i];
                if (l < 0 || l >= num_clusters)
                    throw ShapeError("label " + std::to_string(l) + " outside [0, " +
                                     std::to_string(num_clusters) + ")");
                seen[static_cast<std::size_t>(l)] = 1;
            }
            for (int cl = 0; cl < num_clusters; ++cl)
                if (!seen[static_cast<std::size_t>(cl)])
                    throw ShapeError("cluster id " + std::to_string(cl) + " has no samples");
        }
    }
};

/// On-disk description of a multi-view dataset: one header-free numeric
/// matrix file per view plus an optional labels file.
struct DatasetManifest {
    std::vector<std::string> view_paths;
    std::optional<std::string> label_path;
    bool rows_are_samples = true;
    char delimiter = ',';
};

/// Generator spec for synthetic multi-view data with heterogeneous feature
/// dimensions. Deterministic: same spec (incl. seed) gives identical bits.
struct SynthesisSpec {
    Eigen::Index n = 0;
    int c = 0;
    std::vector<Eigen::Index> view_dims;
    double cluster_separation = 0.0;
    double noise_sigma = 0.0;
    Eigen::Index latent_dim = 8;
    std::uint64_t seed = 0;

    void validate() const {
        if (c < 2) throw ConfigError("synthesis: need at least 2 clusters");
        if (n < c) throw ConfigError("synthesis: n must be >= c");
        if (view_dims.empty()) throw ConfigError("synthesis: no view dimensions given");
        for (auto d : view_dims)
            if (d < 1) throw ConfigError("synthesis: view dimensions must be >= 1");
        if (cluster_separation < 0.0) throw ConfigError("synthesis: separation must be >= 0");
        if (noise_sigma < 0.0) throw ConfigError("synthesis: noise_sigma must be >= 0");
        if (latent_dim < 1) throw ConfigError("synthesis: latent_dim must be >= 1");
    }
};

// --- manifest file format -------------------------------------------------
//
// Line-oriented `key = value` text:
//   views[] = view_0.csv        (repeatable, order defines view index)
//   labels = labels.txt         (optional)
//   rows_are_samples = true
//   delimiter = ,
// Relative paths are resolved against the manifest's own directory.

inline DatasetManifest read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest: " + path);
    const auto base = std::filesystem::path(path).parent_path();

    auto resolve = [&](const std::string& p) {
        std::filesystem::path fp(p);
        return fp.is_absolute() ? fp.string() : (base / fp).string();
    };

    DatasetManifest mf;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                throw IoError("manifest " + path + ": malformed line " + std::to_string(lineno));
            continue;
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "views[]") {
            mf.view_paths.push_back(resolve(value));
        } else if (key == "labels") {
            mf.label_path = resolve(value);
        } else if (key == "rows_are_samples") {
            if (value != "true" && value != "false")
                throw IoError("manifest " + path + ": rows_are_samples must be true/false");
            mf.rows_are_samples = value == "true";
        } else if (key == "delimiter") {
            if (value.size() != 1)
                throw IoError("manifest " + path + ": delimiter must be a single character");
            mf.delimiter = value[0];
        } else {
            throw IoError("manifest " + path + ": unknown key '" + key + "'");
        }
    }
    if (mf.view_paths.empty()) throw IoError("manifest " + path + ": no views[] entries");
    return mf;
}

inline void write_manifest(const std::string& path, const DatasetManifest& mf) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write manifest: " + path);
    const auto base = std::filesystem::path(path).parent_path();
    auto relativize = [&](const std::string& p) {
        std::error_code ec;
        auto rel = std::filesystem::relative(p, base, ec);
        return ec || rel.empty() ? p : rel.string();
    };
    for (const auto& vp : mf.view_paths) out << "views[] = " << relativize(vp) << '\n';
    if (mf.label_path) out << "labels = " << relativize(*mf.label_path) << '\n';
    out << "rows_are_samples = " << (mf.rows_are_samples ? "true" : "false") << '\n';
    out << "delimiter = " << mf.delimiter << '\n';
    if (!out) throw IoError("write failed: " + path);
}

/// Remaps arbitrary integer labels to contiguous 0-based ids, ordered by
/// ascending original value ({2,2,7,7} -> {0,0,1,1}).
inline IntVector remap_labels(const IntVector& raw, int* num_clusters_out = nullptr) {
    std::map<int, int> ids;
    for (Eigen::Index i = 0; i < raw.size(); ++i) ids.emplace(raw[i], 0);
    int next = 0;
    for (auto& [value, id] : ids) id = next++;
    IntVector mapped(raw.size());
    for (Eigen::Index i = 0; i < raw.size(); ++i) mapped[i] = ids.at(raw[i]);
    if (num_clusters_out) *num_clusters_out = next;
    return mapped;
}

/// Loads the manifest's views (and labels) from disk, normalizing
/// orientation to column-per-sample and label ids to contiguous 0-based.
inline MultiViewDataset load_dataset(const DatasetManifest& manifest) {
    MultiViewDataset ds;
    for (const auto& path : manifest.view_paths) {
        Matrix m = read_matrix(path, manifest.delimiter);
        if (manifest.rows_are_samples) m.transposeInPlace();
        if (!ds.views.empty() && m.cols() != ds.n)
            throw ShapeError("sample-count mismatch: " + path + " has " + std::to_string(m.cols()) +
                             " samples, previous views have " + std::to_string(ds.n));
        ds.n = m.cols();
        ds.views.push_back(std::move(m));
    }
    ds.num_views = static_cast<int>(ds.views.size());
    if (manifest.label_path) {
        IntVector raw = read_labels(*manifest.label_path);
        if (raw.size() != ds.n)
            throw ShapeError("labels file " + *manifest.label_path + " has " +
                             std::to_string(raw.size()) + " entries, expected " +
                             std::to_string(ds.n));
        ds.labels = remap_labels(raw, &ds.num_clusters);
    }
    ds.validate();
    return ds;
}

/// Draws a synthetic multi-view dataset: c cluster centers in latent space
/// (pairwise distance = cluster_separation when latent_dim >= c), round-robin
/// cluster assignment, a random linear map per view, iid Gaussian view noise.
inline MultiViewDataset synthesize(const SynthesisSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);

    // Orthonormalize random directions when the latent space allows it, so
    // the separation parameter is the exact pairwise center distance.
    Matrix dirs = rng.normal_matrix(spec.latent_dim, spec.c);
    if (spec.latent_dim >= spec.c) {
        Eigen::HouseholderQR<Matrix> qr(dirs);
        Matrix q = qr.householderQ() * Matrix::Identity(spec.latent_dim, spec.c);
        dirs = q;
    } else {
        for (int j = 0; j < spec.c; ++j) {
            const double norm = dirs.col(j).norm();
            if (norm > 0.0) dirs.col(j) /= norm;
        }
    }
    const Matrix centers = dirs * (spec.cluster_separation / std::sqrt(2.0));

    MultiViewDataset ds;
    ds.n = spec.n;
    ds.num_views = static_cast<int>(spec.view_dims.size());
    ds.num_clusters = spec.c;
    for (const auto d : spec.view_dims) {
        const Matrix map = rng.normal_matrix(d, spec.latent_dim) / std::sqrt(double(spec.latent_dim));
        // mapping the c centers once and fanning out per column keeps
        // same-cluster samples bitwise identical under zero noise
        const Matrix mapped_centers = map * centers;
        Matrix view(d, spec.n);
        for (Eigen::Index j = 0; j < spec.n; ++j) view.col(j) = mapped_centers.col(j % spec.c);
        if (spec.noise_sigma > 0.0) view += spec.noise_sigma * rng.normal_matrix(d, spec.n);
        ds.views.push_back(std::move(view));
    }
    IntVector labels(spec.n);
    for (Eigen::Index j = 0; j < spec.n; ++j) labels[j] = static_cast<int>(j % spec.c);
    ds.labels = labels;
    ds.validate();
    return ds;
}

/// In-place per-feature standardization (zero mean; unit variance where the
/// variance is nonzero, centered only otherwise).
inline void standardize_features(MultiViewDataset& ds) {
    for (auto& view : ds.views) {
        for (Eigen::Index i = 0; i < view.rows(); ++i) {
            const double mean = view.row(i).mean();
            view.row(i).array() -= mean;
            const double sd = std::sqrt(view.row(i).squaredNorm() / double(view.cols()));
            if (sd > 0.0) view.row(i) /= sd;
        }
    }
}

/// A node's window onto the dataset: exactly its own view, nothing else.
/// Ground-truth labels stay with the evaluator.
class NodeHandle {
public:
    NodeHandle(std::shared_ptr<const MultiViewDataset> ds, int node_id)
        : ds_(std::move(ds)), id_(node_id) {}

    int id() const { return id_; }
    Eigen::Index samples() const { return ds_->n; }
    const Matrix& view() const { return ds_->views[static_cast<std::size_t>(id_)]; }

    const Matrix& view_of(int k) const {
        if (k != id_)
            throw AccessError("node " + std::to_string(id_) + " may not access view " +
                              std::to_string(k));
        return view();
    }

private:
    std::shared_ptr<const MultiViewDataset> ds_;
    int id_;
};

/// Vertical partition: node k receives view k.
inline std::vector<NodeHandle> partition(std::shared_ptr<const MultiViewDataset> ds) {
    ds->validate();
    std::vector<NodeHandle> nodes;
    nodes.reserve(static_cast<std::size_t>(ds->num_views));
    for (int k = 0; k < ds->num_views; ++k) nodes.emplace_back(ds, k);
    return nodes;
}

/// Writes view files + optional labels + manifest into `dir`, returning the
/// manifest path. File names: view_<k>.csv, labels.txt, manifest.txt.
inline std::string write_dataset(const std::string& dir, const MultiViewDataset& ds,
                                 char delimiter = ',') {
    std::filesystem::create_directories(dir);
    DatasetManifest mf;
    mf.rows_are_samples = false;  // written column-per-sample, as held in memory
    mf.delimiter = delimiter;
    for (std::size_t k = 0; k < ds.views.size(); ++k) {
        const auto path = (std::filesystem::path(dir) / ("view_" + std::to_string(k) + ".csv")).string();
        write_matrix(path, ds.views[k], delimiter);
        mf.view_paths.push_back(path);
    }
    if (ds.labels) {
        const auto path = (std::filesystem::path(dir) / "labels.txt").string();
        write_labels(path, *ds.labels);
        mf.label_path = path;
    }
    const auto manifest_path = (std::filesystem::path(dir) / "manifest.txt").string();
    write_manifest(manifest_path, mf);
    return manifest_path;
}

}  // namespace fedmsgl
