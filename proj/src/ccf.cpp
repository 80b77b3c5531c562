#include "slummap/ccf.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <thread>

namespace slummap {

using nlohmann::json;

namespace {

// Splits must beat this gain; guards against rounding noise on no-op splits.
constexpr double kMinGain = 1e-12;

double node_entropy(std::uint64_t a, std::uint64_t b) {
    const double n = static_cast<double>(a + b);
    double h = 0.0;
    if (a) h -= (a / n) * std::log(a / n);
    if (b) h -= (b / n) * std::log(b / n);
    return h;
}

TreeNode make_leaf(std::uint64_t c0, std::uint64_t c1) {
    TreeNode leaf;
    leaf.leaf = true;
    leaf.class_counts = {c0, c1};
    const double n = static_cast<double>(c0 + c1);
    leaf.distribution = {c0 / n, c1 / n};
    // Exact complement keeps the pair summing to 1.
    leaf.distribution[1] = 1.0 - leaf.distribution[0];
    return leaf;
}

std::optional<Eigen::VectorXd> leading_direction(const DataMatrix& x, std::span<const std::uint8_t> labels,
                                                 std::span<const std::uint32_t> rows,
                                                 std::span<const std::uint32_t> features, double cutoff) {
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto d = static_cast<Eigen::Index>(features.size());
    Eigen::MatrixXd block(n, d);
    std::vector<std::uint8_t> y(rows.size());
    bool has0 = false;
    bool has1 = false;
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto row = rows[static_cast<std::size_t>(r)];
        for (Eigen::Index c = 0; c < d; ++c) block(r, c) = x(row, features[static_cast<std::size_t>(c)]);
        y[static_cast<std::size_t>(r)] = labels[row];
        (labels[row] ? has1 : has0) = true;
    }
    if (!has0 || !has1 || n < 2) return std::nullopt;
    try {
        const CcaResult cca = cca_fit(block, one_hot(y), cutoff);
        Eigen::VectorXd a = cca.projections.col(0);
        if (!a.allFinite() || a.isZero(0.0)) return std::nullopt;
        return a;
    } catch (const CcaDegenerate&) {
        return std::nullopt;
    }
}

struct Pending {
    std::uint32_t node;
    std::vector<std::uint32_t> rows;
};

}  // namespace

std::size_t CcfParams::resolved_lambda(std::size_t n_features) const {
    if (lambda > 0) return lambda;
    return static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n_features))));
}

const TreeNode& CcTree::leaf_for(std::span<const double> row) const {
    if (nodes_.empty()) throw ModelError("empty tree");
    const TreeNode* node = &nodes_[0];
    while (!node->leaf) node = &nodes_[node->project(row) <= node->threshold ? node->left : node->right];
    return *node;
}

std::size_t CcTree::depth() const {
    if (nodes_.empty()) return 0;
    std::vector<std::size_t> depth(nodes_.size(), 0);
    std::size_t deepest = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        deepest = std::max(deepest, depth[i]);
        if (!nodes_[i].leaf) {
            depth[nodes_[i].left] = depth[i] + 1;
            depth[nodes_[i].right] = depth[i] + 1;
        }
    }
    return deepest;
}

std::size_t CcTree::leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const auto& n) { return n.leaf; }));
}

CcTree grow_tree(const DataMatrix& x, std::span<const std::uint8_t> labels, const CcfParams& params, Pcg32& rng,
                 std::vector<std::vector<std::size_t>>* leaf_rows) {
    const auto n_rows = static_cast<std::size_t>(x.rows());
    const auto n_features = static_cast<std::size_t>(x.cols());
    if (n_rows == 0) throw std::invalid_argument("cannot grow a tree on zero rows");
    if (labels.size() != n_rows) throw std::invalid_argument("label count does not match row count");
    if (n_features == 0) throw std::invalid_argument("cannot grow a tree without features");
    const std::size_t lambda = params.resolved_lambda(n_features);
    const std::size_t min_node = std::max<std::size_t>(params.min_node_size, 1);

    std::vector<TreeNode> nodes(1);
    std::vector<Pending> stack;
    stack.push_back({0, std::vector<std::uint32_t>(n_rows)});
    std::iota(stack.back().rows.begin(), stack.back().rows.end(), 0u);
    if (leaf_rows) leaf_rows->clear();

    std::vector<std::pair<double, std::uint32_t>> order;

    while (!stack.empty()) {
        Pending job = std::move(stack.back());
        stack.pop_back();
        const std::vector<std::uint32_t>& rows = job.rows;
        const std::size_t n = rows.size();

        std::uint64_t c1 = 0;
        for (auto r : rows) c1 += labels[r];
        const std::uint64_t c0 = n - c1;

        auto emit_leaf = [&]() {
            nodes[job.node] = make_leaf(c0, c1);
            if (leaf_rows) leaf_rows->emplace_back(rows.begin(), rows.end());
        };

        if (c0 == 0 || c1 == 0 || n < min_node) {
            emit_leaf();
            continue;
        }

        std::vector<std::uint32_t> candidates;
        for (std::size_t f = 0; f < n_features; ++f) {
            const double first = x(rows[0], static_cast<Eigen::Index>(f));
            for (std::size_t i = 1; i < n; ++i) {
                if (x(rows[i], static_cast<Eigen::Index>(f)) != first) {
                    candidates.push_back(static_cast<std::uint32_t>(f));
                    break;
                }
            }
        }
        if (candidates.empty()) {
            emit_leaf();
            continue;
        }

        const std::size_t take = std::min(lambda, candidates.size());
        std::vector<std::uint32_t> features;
        for (auto pick : sample_without_replacement(candidates.size(), take, rng)) features.push_back(candidates[pick]);

        // Projection bootstrap: direction from a resample, threshold from all rows.
        std::vector<std::uint32_t> resample(n);
        for (auto& r : resample) r = rows[rng.below64(n)];
        auto direction = leading_direction(x, labels, resample, features, params.cca_cutoff);
        if (!direction) direction = leading_direction(x, labels, rows, features, params.cca_cutoff);
        if (!direction) {
            direction = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(features.size()));
            (*direction)(0) = 1.0;
        }

        TreeNode split;
        split.leaf = false;
        split.features = features;
        split.projection.assign(direction->data(), direction->data() + direction->size());

        order.clear();
        for (auto r : rows) order.emplace_back(split.project({x.data() + r * n_features, n_features}), r);
        std::sort(order.begin(), order.end());

        const double parent_entropy = node_entropy(c0, c1);
        double best_gain = kMinGain;
        std::size_t best_cut = n;  // left side = order[0..best_cut]
        std::uint64_t left1 = 0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            left1 += labels[order[i].second];
            if (!(order[i].first < order[i + 1].first)) continue;
            const std::uint64_t left_n = i + 1;
            const std::uint64_t left0 = left_n - left1;
            const std::uint64_t right0 = c0 - left0;
            const std::uint64_t right1 = c1 - left1;
            const double gain = parent_entropy - (left_n / static_cast<double>(n)) * node_entropy(left0, left1) -
                                ((n - left_n) / static_cast<double>(n)) * node_entropy(right0, right1);
            if (gain > best_gain) {
                best_gain = gain;
                best_cut = i;
            }
        }
        if (best_cut == n) {
            emit_leaf();
            continue;
        }

        const double lo = order[best_cut].first;
        const double hi = order[best_cut + 1].first;
        double threshold = lo + (hi - lo) / 2.0;
        if (!(threshold >= lo && threshold < hi)) threshold = lo;
        split.threshold = threshold;

        std::vector<std::uint32_t> left_rows;
        std::vector<std::uint32_t> right_rows;
        for (const auto& [value, r] : order) (value <= threshold ? left_rows : right_rows).push_back(r);
        std::sort(left_rows.begin(), left_rows.end());
        std::sort(right_rows.begin(), right_rows.end());

        split.left = static_cast<std::uint32_t>(nodes.size());
        split.right = split.left + 1;
        nodes.emplace_back();
        nodes.emplace_back();
        nodes[job.node] = std::move(split);
        // Left subtree is processed first.
        stack.push_back({nodes[job.node].right, std::move(right_rows)});
        stack.push_back({nodes[job.node].left, std::move(left_rows)});
    }
    return CcTree(std::move(nodes));
}

CcfModel train_forest(const DataMatrix& x, std::span<const std::uint8_t> labels, const CcfParams& params,
                      std::vector<std::string> feature_names, unsigned jobs) {
    const auto n = static_cast<std::size_t>(x.rows());
    if (labels.size() != n) throw std::invalid_argument("label count does not match row count");
    if (n < 2) throw DegenerateData("training needs at least two rows");
    if (params.n_trees < 1) throw std::invalid_argument("forest needs at least one tree");
    const auto ones = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
    if (ones == 0 || ones == n) throw DegenerateData("training set holds a single class");
    for (auto l : labels) {
        if (l > 1) throw std::invalid_argument("labels must be 0 or 1");
    }
    if (!x.allFinite()) throw std::invalid_argument("training features must be finite");
    if (!feature_names.empty() && feature_names.size() != static_cast<std::size_t>(x.cols()))
        throw std::invalid_argument("feature name count does not match column count");

    CcfModel model;
    model.n_features = static_cast<std::size_t>(x.cols());
    model.feature_names = std::move(feature_names);
    model.training_params = params;
    model.training_params.lambda = params.resolved_lambda(model.n_features);
    model.trees.resize(params.n_trees);

    auto grow = [&](std::size_t t) {
        Pcg32 rng(derive_seed(params.seed, t));
        model.trees[t] = grow_tree(x, labels, model.training_params, rng);
    };

    if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
    jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, params.n_trees));
    if (jobs <= 1) {
        for (std::size_t t = 0; t < params.n_trees; ++t) grow(t);
    } else {
        std::vector<std::thread> workers;
        for (unsigned j = 0; j < jobs; ++j) {
            workers.emplace_back([&, j]() {
                for (std::size_t t = j; t < params.n_trees; t += jobs) grow(t);
            });
        }
        for (auto& w : workers) w.join();
    }
    return model;
}

Predictions predict(const CcfModel& model, const DataMatrix& x, unsigned jobs) {
    if (static_cast<std::size_t>(x.cols()) != model.n_features) {
        throw std::invalid_argument("feature dimension " + std::to_string(x.cols()) + " does not match model (" +
                                    std::to_string(model.n_features) + ")");
    }
    if (model.trees.empty()) throw ModelError("model has no trees");
    const auto n = static_cast<std::size_t>(x.rows());
    Predictions out;
    out.labels.resize(n);
    out.probabilities.resize(n);
    const double tree_count = static_cast<double>(model.trees.size());

    auto run = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const std::span<const double> row(x.data() + i * model.n_features, model.n_features);
            double p0 = 0.0;
            double p1 = 0.0;
            for (const auto& tree : model.trees) {
                const auto& leaf = tree.leaf_for(row);
                p0 += leaf.distribution[0];
                p1 += leaf.distribution[1];
            }
            out.probabilities[i] = {p0 / tree_count, p1 / tree_count};
            out.labels[i] = out.probabilities[i][1] > out.probabilities[i][0] ? 1 : 0;
        }
    };

    if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
    jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, std::max<std::size_t>(n, 1)));
    if (jobs <= 1) {
        run(0, n);
    } else {
        std::vector<std::thread> workers;
        const std::size_t chunk = (n + jobs - 1) / jobs;
        for (unsigned j = 0; j < jobs; ++j) {
            const std::size_t begin = j * chunk;
            const std::size_t end = std::min(n, begin + chunk);
            if (begin < end) workers.emplace_back(run, begin, end);
        }
        for (auto& w : workers) w.join();
    }
    return out;
}

json model_to_json(const CcfModel& model) {
    json trees = json::array();
    for (const auto& tree : model.trees) {
        json nodes = json::array();
        for (const auto& node : tree.nodes()) {
            if (node.leaf) {
                nodes.push_back({{"leaf", true},
                                 {"class_counts", node.class_counts},
                                 {"distribution", node.distribution}});
            } else {
                nodes.push_back({{"leaf", false},
                                 {"features", node.features},
                                 {"projection", node.projection},
                                 {"threshold", node.threshold},
                                 {"left", node.left},
                                 {"right", node.right}});
            }
        }
        trees.push_back({{"nodes", std::move(nodes)}});
    }
    const auto& p = model.training_params;
    return json{{"format", "slummap-ccf"},
                {"version", kModelFormatVersion},
                {"n_features", model.n_features},
                {"feature_names", model.feature_names},
                {"training_params",
                 {{"n_trees", p.n_trees},
                  {"lambda", p.lambda},
                  {"min_node_size", p.min_node_size},
                  {"seed", p.seed},
                  {"cca_cutoff", p.cca_cutoff}}},
                {"trees", std::move(trees)}};
}

CcfModel model_from_json(const json& doc) {
    try {
        if (doc.at("format").get<std::string>() != "slummap-ccf") throw ModelError("not a CCF model document");
        const int version = doc.at("version").get<int>();
        if (version != kModelFormatVersion)
            throw ModelError("unsupported model version " + std::to_string(version));

        CcfModel model;
        model.n_features = doc.at("n_features").get<std::size_t>();
        model.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
        if (!model.feature_names.empty() && model.feature_names.size() != model.n_features)
            throw ModelError("feature name count does not match n_features");
        const json& params = doc.at("training_params");
        model.training_params.n_trees = params.at("n_trees").get<std::size_t>();
        model.training_params.lambda = params.at("lambda").get<std::size_t>();
        model.training_params.min_node_size = params.at("min_node_size").get<std::size_t>();
        model.training_params.seed = params.at("seed").get<std::uint64_t>();
        model.training_params.cca_cutoff = params.at("cca_cutoff").get<double>();

        for (const json& tree_doc : doc.at("trees")) {
            std::vector<TreeNode> nodes;
            const json& node_docs = tree_doc.at("nodes");
            for (const json& nd : node_docs) {
                TreeNode node;
                node.leaf = nd.at("leaf").get<bool>();
                if (node.leaf) {
                    node.class_counts = nd.at("class_counts").get<std::array<std::uint64_t, 2>>();
                    node.distribution = nd.at("distribution").get<std::array<double, 2>>();
                    if (std::abs(node.distribution[0] + node.distribution[1] - 1.0) > 1e-12)
                        throw ModelError("leaf distribution does not sum to 1");
                } else {
                    node.features = nd.at("features").get<std::vector<std::uint32_t>>();
                    node.projection = nd.at("projection").get<std::vector<double>>();
                    node.threshold = nd.at("threshold").get<double>();
                    node.left = nd.at("left").get<std::uint32_t>();
                    node.right = nd.at("right").get<std::uint32_t>();
                    if (node.features.empty() || node.features.size() != node.projection.size())
                        throw ModelError("projection length does not match its feature subset");
                    for (auto f : node.features) {
                        if (f >= model.n_features) throw ModelError("feature index out of range");
                    }
                    const auto self = static_cast<std::uint32_t>(nodes.size());
                    if (node.left <= self || node.right <= self || node.left >= node_docs.size() ||
                        node.right >= node_docs.size())
                        throw ModelError("child index out of range");
                }
                nodes.push_back(std::move(node));
            }
            if (nodes.empty()) throw ModelError("tree without nodes");
            model.trees.emplace_back(std::move(nodes));
        }
        if (model.trees.empty()) throw ModelError("model has no trees");
        if (model.trees.size() != model.training_params.n_trees)
            throw ModelError("tree count does not match training_params.n_trees");
        return model;
    } catch (const json::exception& e) {
        throw ModelError(std::string("malformed model document: ") + e.what());
    }
}

std::string serialize_model(const CcfModel& model) {
    return model_to_json(model).dump(1) + "\n";
}

void save_model(const CcfModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ModelError("cannot write model file '" + path.string() + "'");
    out << serialize_model(model);
    if (!out) throw ModelError("write failed for '" + path.string() + "'");
}

CcfModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ModelError("cannot open model file '" + path.string() + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    json doc;
    try {
        doc = json::parse(buffer.str());
    } catch (const json::exception& e) {
        throw ModelError("malformed model file '" + path.string() + "': " + e.what());
    }
    return model_from_json(doc);
}

}  // namespace slummap
