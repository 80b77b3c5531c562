#pragma once

#include "slummap/cca.hpp"
#include "slummap/rng.hpp"

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace slummap {

/// n x d samples, one row per sample.
using DataMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when training data cannot support a classifier (one class only).
class DegenerateData : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CcfParams {
    std::size_t n_trees = 10;
    /// Features sampled per node; 0 selects ceil(sqrt(d)).
    std::size_t lambda = 0;
    /// Nodes with fewer rows become leaves.
    std::size_t min_node_size = 2;
    std::uint64_t seed = 0;
    /// Relative eigenvalue cutoff passed to cca_fit.
    double cca_cutoff = kDefaultCutoff;

    std::size_t resolved_lambda(std::size_t n_features) const;
};

struct TreeNode {
    bool leaf = true;
    // internal
    std::vector<std::uint32_t> features;
    std::vector<double> projection;
    double threshold = 0.0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    // leaf
    std::array<std::uint64_t, 2> class_counts{};
    std::array<double, 2> distribution{};

    /// Dot product of `projection` with the selected entries of `row`, in
    /// feature-subset order. Rows with projection <= threshold go left.
    double project(std::span<const double> row) const noexcept {
        double s = 0.0;
        for (std::size_t k = 0; k < features.size(); ++k) s += projection[k] * row[features[k]];
        return s;
    }
};

/// Flat pre-order node array; the root is node 0.
class CcTree {
public:
    CcTree() = default;
    explicit CcTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

    const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
    const TreeNode& leaf_for(std::span<const double> row) const;
    std::size_t depth() const;
    std::size_t leaf_count() const;

private:
    std::vector<TreeNode> nodes_;
};

/// Induces one canonical correlation tree. `labels` are 0/1. When
/// `leaf_rows` is given it receives the training-row indices of each leaf
/// in node order.
CcTree grow_tree(const DataMatrix& x, std::span<const std::uint8_t> labels, const CcfParams& params, Pcg32& rng,
                 std::vector<std::vector<std::size_t>>* leaf_rows = nullptr);

struct CcfModel {
    std::vector<CcTree> trees;
    std::size_t n_features = 0;
    std::vector<std::string> feature_names;
    /// lambda is stored resolved.
    CcfParams training_params;
};

/// Every tree sees the full training set; tree t draws from
/// Pcg32(derive_seed(params.seed, t)). `jobs` caps training threads
/// (0 = hardware concurrency) and never changes the model.
CcfModel train_forest(const DataMatrix& x, std::span<const std::uint8_t> labels, const CcfParams& params,
                      std::vector<std::string> feature_names = {}, unsigned jobs = 1);

struct Predictions {
    std::vector<std::uint8_t> labels;
    std::vector<std::array<double, 2>> probabilities;
};

/// Averages leaf distributions over trees; ties go to class 0.
Predictions predict(const CcfModel& model, const DataMatrix& x, unsigned jobs = 1);

inline constexpr int kModelFormatVersion = 1;

nlohmann::json model_to_json(const CcfModel& model);
CcfModel model_from_json(const nlohmann::json& doc);
std::string serialize_model(const CcfModel& model);
void save_model(const CcfModel& model, const std::filesystem::path& path);
CcfModel load_model(const std::filesystem::path& path);

}  // namespace slummap
