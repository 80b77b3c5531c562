#include "slummap/experiment.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace slummap {

using nlohmann::json;

std::size_t FeatureTable::count(std::uint8_t label) const noexcept {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

FeatureTable FeatureTable::select(const std::vector<std::size_t>& indices) const {
    FeatureTable out;
    out.feature_names = feature_names;
    out.features.resize(static_cast<Eigen::Index>(indices.size()), features.cols());
    out.labels.reserve(indices.size());
    out.provenance.reserve(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        out.features.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(indices[i]));
        out.labels.push_back(labels[indices[i]]);
        out.provenance.push_back(provenance[indices[i]]);
    }
    return out;
}

FeatureTable assemble_table(const FeatureRaster& features, const LabelMask& mask) {
    require_same_shape(features.width, features.height, mask.width(), mask.height(), "features vs label mask");
    std::vector<std::size_t> usable;
    for (std::size_t p = 0; p < features.pixel_count(); ++p) {
        if (features.valid[p] && mask.valid()[p]) usable.push_back(p);
    }
    if (usable.empty()) throw EmptyData("no usable pixels");

    FeatureTable table;
    table.feature_names = features.feature_names;
    const auto d = static_cast<Eigen::Index>(features.feature_count());
    table.features.resize(static_cast<Eigen::Index>(usable.size()), d);
    table.labels.reserve(usable.size());
    table.provenance.reserve(usable.size());
    for (std::size_t i = 0; i < usable.size(); ++i) {
        const std::size_t p = usable[i];
        for (Eigen::Index f = 0; f < d; ++f)
            table.features(static_cast<Eigen::Index>(i), f) = features.value(static_cast<std::size_t>(f), p);
        table.labels.push_back(mask.labels()[p]);
        table.provenance.push_back(
            {static_cast<std::uint32_t>(p / features.width), static_cast<std::uint32_t>(p % features.width)});
    }
    return table;
}

FeatureTable undersample_balance(const FeatureTable& table, std::uint64_t seed) {
    const std::size_t slum = table.count(kSlum);
    const std::size_t non_slum = table.rows() - slum;
    if (slum == 0 || non_slum == 0) throw EmptyData("balancing needs both classes present");

    const std::uint8_t majority = slum > non_slum ? kSlum : kNonSlum;
    const std::size_t keep = std::min(slum, non_slum);
    std::vector<std::size_t> majority_rows;
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < table.rows(); ++i) {
        (table.labels[i] == majority ? majority_rows : kept).push_back(i);
    }
    Pcg32 rng(seed);
    for (auto pick : sample_without_replacement(majority_rows.size(), keep, rng)) kept.push_back(majority_rows[pick]);
    std::sort(kept.begin(), kept.end());
    return table.select(kept);
}

std::pair<FeatureTable, FeatureTable> split_train_test(const FeatureTable& table, double train_fraction,
                                                       std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw std::invalid_argument("train fraction must lie strictly between 0 and 1");
    const std::size_t n = table.rows();
    if (n < 2) throw EmptyData("splitting needs at least two rows");
    auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * train_fraction));
    n_train = std::clamp<std::size_t>(n_train, 1, n - 1);

    Pcg32 rng(seed);
    auto order = sample_without_replacement(n, n, rng);
    std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {table.select(train), table.select(test)};
}

ScalerStats fit_scaler(const FeatureTable& train) {
    if (train.rows() == 0) throw std::invalid_argument("cannot fit a scaler on an empty table");
    const auto n = static_cast<double>(train.rows());
    ScalerStats stats;
    for (Eigen::Index c = 0; c < train.features.cols(); ++c) {
        const auto column = train.features.col(c);
        const double mean = column.sum() / n;
        double ss = 0.0;
        for (Eigen::Index r = 0; r < column.size(); ++r) ss += (column(r) - mean) * (column(r) - mean);
        bool constant = true;
        for (Eigen::Index r = 1; r < column.size() && constant; ++r) constant = column(r) == column(0);
        stats.means.push_back(mean);
        stats.stds.push_back(constant || train.rows() < 2 ? 0.0 : std::sqrt(ss / (n - 1.0)));
    }
    return stats;
}

void apply_scaler_in_place(const ScalerStats& stats, DataMatrix& features) {
    if (static_cast<std::size_t>(features.cols()) != stats.means.size())
        throw std::invalid_argument("scaler dimension does not match the feature table");
    for (Eigen::Index c = 0; c < features.cols(); ++c) {
        const auto col = static_cast<std::size_t>(c);
        if (stats.is_constant(col)) {
            features.col(c).setZero();
        } else {
            features.col(c) = (features.col(c).array() - stats.means[col]) / stats.stds[col];
        }
    }
}

FeatureTable apply_scaler(const ScalerStats& stats, const FeatureTable& table) {
    FeatureTable out = table;
    apply_scaler_in_place(stats, out.features);
    return out;
}

std::uint64_t ConfusionCounts::total() const noexcept {
    return counts[0][0] + counts[0][1] + counts[1][0] + counts[1][1];
}

MetricsReport evaluate(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> truth) {
    if (predicted.size() != truth.size()) throw std::invalid_argument("prediction and truth lengths differ");
    MetricsReport report;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] > 1 || predicted[i] > 1) throw std::invalid_argument("labels must be 0 or 1");
        ++report.confusion.counts[truth[i]][predicted[i]];
    }
    for (std::uint8_t c : {kNonSlum, kSlum}) {
        ClassMetrics& m = c == kSlum ? report.slum : report.non_slum;
        const auto& k = report.confusion;
        const std::uint64_t present = k.tp(c) + k.fn(c);
        if (present == 0) continue;
        m.accuracy = 100.0 * static_cast<double>(k.tp(c)) / static_cast<double>(present);
        m.iou = 100.0 * static_cast<double>(k.tp(c)) / static_cast<double>(k.tp(c) + k.fp(c) + k.fn(c));
    }
    if (report.slum.iou && report.non_slum.iou) report.mean_iou = (*report.slum.iou + *report.non_slum.iou) / 2.0;
    return report;
}

std::string format_percent(std::optional<double> value) {
    if (!value) return "NA";
    // The epsilon absorbs binary representation error at exact halves.
    const double rounded = std::floor(*value * 10.0 + 0.5 + 1e-9) / 10.0;
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.1f", rounded);
    return buffer;
}

const char* technique_name(Technique technique) noexcept {
    return technique == Technique::Spectral ? "spectral" : "glcm";
}

Technique parse_technique(const std::string& text) {
    if (text == "spectral") return Technique::Spectral;
    if (text == "glcm") return Technique::Glcm;
    throw std::invalid_argument("unknown technique '" + text + "' (expected spectral or glcm)");
}

namespace {

json glcm_to_json(const GlcmParams& p) {
    std::vector<int> directions;
    for (auto d : p.directions) directions.push_back(direction_degrees(d));
    std::vector<std::string> measures;
    for (auto m : p.measures) measures.emplace_back(measure_name(m));
    return {{"levels", p.levels}, {"window", p.window}, {"directions", directions},
            {"bands", p.bands},   {"measures", measures}};
}

GlcmParams glcm_from_json(const json& doc) {
    GlcmParams p;
    p.levels = doc.at("levels").get<int>();
    p.window = doc.at("window").get<int>();
    p.directions.clear();
    for (int deg : doc.at("directions").get<std::vector<int>>()) p.directions.push_back(parse_direction(std::to_string(deg)));
    p.bands = doc.at("bands").get<std::vector<std::string>>();
    p.measures.clear();
    for (const auto& m : doc.at("measures").get<std::vector<std::string>>()) p.measures.push_back(parse_measure(m));
    p.validate();
    return p;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

json pipeline_to_json(const PipelineModel& model) {
    return {{"format", "slummap-pipeline"},
            {"version", 1},
            {"technique", technique_name(model.technique)},
            {"glcm", glcm_to_json(model.glcm)},
            {"scaler", {{"means", model.scaler.means}, {"stds", model.scaler.stds}}},
            {"forest", model_to_json(model.forest)}};
}

PipelineModel pipeline_from_json(const json& doc) {
    try {
        if (doc.at("format").get<std::string>() != "slummap-pipeline")
            throw ModelError("not a pipeline model document");
        if (doc.at("version").get<int>() != 1) throw ModelError("unsupported pipeline model version");
        PipelineModel model;
        model.technique = parse_technique(doc.at("technique").get<std::string>());
        model.glcm = glcm_from_json(doc.at("glcm"));
        model.scaler.means = doc.at("scaler").at("means").get<std::vector<double>>();
        model.scaler.stds = doc.at("scaler").at("stds").get<std::vector<double>>();
        model.forest = model_from_json(doc.at("forest"));
        if (model.scaler.means.size() != model.forest.n_features || model.scaler.stds.size() != model.forest.n_features)
            throw ModelError("scaler dimension does not match the forest");
        return model;
    } catch (const json::exception& e) {
        throw ModelError(std::string("malformed pipeline model: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ModelError(std::string("malformed pipeline model: ") + e.what());
    }
}

void save_pipeline(const PipelineModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write model file '" + path.string() + "'");
    out << pipeline_to_json(model).dump(1) << '\n';
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

PipelineModel load_pipeline(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model file '" + path.string() + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    try {
        return pipeline_from_json(json::parse(buffer.str()));
    } catch (const json::exception& e) {
        throw ModelError("malformed model file '" + path.string() + "': " + e.what());
    }
}

FeatureRaster extract_features(const BandStack& stack, Technique technique, const GlcmParams& glcm, unsigned jobs) {
    return technique == Technique::Glcm ? extract_texture(stack, glcm, jobs) : extract_spectral(stack);
}

LabelMask predict_features(const PipelineModel& model, const FeatureRaster& features, unsigned jobs) {
    if (features.feature_count() != model.forest.n_features) {
        throw DimensionMismatch("scene yields " + std::to_string(features.feature_count()) +
                                    " features but the model expects " + std::to_string(model.forest.n_features));
    }
    const std::size_t pixels = features.pixel_count();
    const std::size_t d = features.feature_count();
    std::vector<std::uint8_t> labels(pixels, 0);
    std::vector<std::uint8_t> valid(features.valid);

    // Bounded chunks keep memory flat on large scenes.
    constexpr std::size_t kChunk = 1 << 16;
    std::vector<std::size_t> batch;
    for (std::size_t start = 0; start < pixels; start += kChunk) {
        batch.clear();
        for (std::size_t p = start; p < std::min(pixels, start + kChunk); ++p) {
            if (valid[p]) batch.push_back(p);
        }
        if (batch.empty()) continue;
        DataMatrix x(static_cast<Eigen::Index>(batch.size()), static_cast<Eigen::Index>(d));
        for (std::size_t i = 0; i < batch.size(); ++i) {
            for (std::size_t f = 0; f < d; ++f)
                x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)) = features.value(f, batch[i]);
        }
        apply_scaler_in_place(model.scaler, x);
        const Predictions pred = predict(model.forest, x, jobs);
        for (std::size_t i = 0; i < batch.size(); ++i) labels[batch[i]] = pred.labels[i];
    }
    return LabelMask(features.width, features.height, std::move(labels), std::move(valid));
}

LabelMask predict_scene(const PipelineModel& model, const BandStack& stack, unsigned jobs) {
    return predict_features(model, extract_features(stack, model.technique, model.glcm, jobs), jobs);
}

ExperimentResult run_experiment(const BandStack& stack, const LabelMask& mask, const ExperimentParams& params,
                                const std::string& location) {
    require_same_shape(stack.width(), stack.height(), mask.width(), mask.height(), "image vs label mask");
    if (params.technique == Technique::Glcm) params.glcm.validate();

    ExperimentResult result;
    result.location = location;
    result.technique = params.technique;
    result.master_seed = params.master_seed;
    const auto run_start = Clock::now();
    auto stage_start = run_start;
    auto stage_done = [&](const char* name) {
        result.timings.push_back({name, seconds_since(stage_start)});
        stage_start = Clock::now();
    };

    const FeatureRaster features = extract_features(stack, params.technique, params.glcm, params.jobs);
    stage_done("extract");

    const FeatureTable table = assemble_table(features, mask);
    result.rows.usable = table.rows();
    result.rows.slum = table.count(kSlum);
    stage_done("assemble");

    const FeatureTable balanced = undersample_balance(table, derive_seed(params.master_seed, streams::kBalance));
    result.rows.balanced = balanced.rows();
    stage_done("balance");

    auto [train, test] = split_train_test(balanced, params.train_fraction, derive_seed(params.master_seed, streams::kSplit));
    result.rows.train = train.rows();
    result.rows.test = test.rows();
    stage_done("split");

    const ScalerStats scaler = fit_scaler(train);
    apply_scaler_in_place(scaler, train.features);
    apply_scaler_in_place(scaler, test.features);
    stage_done("scale");

    CcfParams forest_params = params.forest;
    forest_params.seed = derive_seed(params.master_seed, streams::kForest);
    CcfModel forest = train_forest(train.features, train.labels, forest_params, features.feature_names, params.jobs);
    stage_done("train");

    const Predictions test_pred = predict(forest, test.features, params.jobs);
    stage_done("predict");

    result.test_report = evaluate(test_pred.labels, test.labels);
    stage_done("evaluate");

    result.model = PipelineModel{params.technique, params.glcm, scaler, std::move(forest)};
    result.prediction_map = predict_features(result.model, features, params.jobs);
    std::vector<std::uint8_t> map_labels;
    std::vector<std::uint8_t> truth_labels;
    for (std::size_t p = 0; p < mask.pixel_count(); ++p) {
        if (result.prediction_map.valid()[p] && mask.valid()[p]) {
            map_labels.push_back(result.prediction_map.labels()[p]);
            truth_labels.push_back(mask.labels()[p]);
        }
    }
    result.full_image_report = evaluate(map_labels, truth_labels);
    stage_done("map");

    result.total_seconds = seconds_since(run_start);
    result.test_report.seconds = result.total_seconds;
    result.full_image_report.seconds = result.total_seconds;
    return result;
}

std::string metrics_csv(const std::vector<ExperimentResult>& results, bool include_timings) {
    std::ostringstream out;
    out << "location,technique,acc_slum,acc_non,iou_slum,iou_non,miou,seconds\n";
    for (const auto& r : results) {
        const MetricsReport& m = r.test_report;
        out << r.location << ',' << technique_name(r.technique) << ',' << format_percent(m.slum.accuracy) << ','
            << format_percent(m.non_slum.accuracy) << ',' << format_percent(m.slum.iou) << ','
            << format_percent(m.non_slum.iou) << ',' << format_percent(m.mean_iou) << ',';
        if (include_timings) {
            char buffer[32];
            std::snprintf(buffer, sizeof(buffer), "%.2f", r.total_seconds);
            out << buffer;
        } else {
            out << "NA";
        }
        out << '\n';
    }
    return out.str();
}

json metrics_to_json(const MetricsReport& report) {
    auto optional_value = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    const auto& k = report.confusion.counts;
    return {{"confusion",
             {{"truth_non_slum", {{"pred_non_slum", k[0][0]}, {"pred_slum", k[0][1]}}},
              {"truth_slum", {{"pred_non_slum", k[1][0]}, {"pred_slum", k[1][1]}}}}},
            {"slum", {{"accuracy", optional_value(report.slum.accuracy)}, {"iou", optional_value(report.slum.iou)}}},
            {"non_slum",
             {{"accuracy", optional_value(report.non_slum.accuracy)}, {"iou", optional_value(report.non_slum.iou)}}},
            {"mean_iou", optional_value(report.mean_iou)},
            {"formatted",
             {{"acc_slum", format_percent(report.slum.accuracy)},
              {"acc_non", format_percent(report.non_slum.accuracy)},
              {"iou_slum", format_percent(report.slum.iou)},
              {"iou_non", format_percent(report.non_slum.iou)},
              {"miou", format_percent(report.mean_iou)}}}};
}

json experiment_to_json(const ExperimentResult& result, bool include_timings) {
    json doc{{"location", result.location},
             {"technique", technique_name(result.technique)},
             {"master_seed", result.master_seed},
             {"n_features", result.model.forest.n_features},
             {"n_trees", result.model.forest.trees.size()},
             {"lambda", result.model.forest.training_params.lambda},
             {"rows",
              {{"usable", result.rows.usable},
               {"usable_slum", result.rows.slum},
               {"balanced", result.rows.balanced},
               {"train", result.rows.train},
               {"test", result.rows.test}}},
             {"test", metrics_to_json(result.test_report)},
             {"full_image", metrics_to_json(result.full_image_report)}};
    if (include_timings) {
        json stages = json::object();
        for (const auto& t : result.timings) stages[t.stage] = t.seconds;
        doc["timings"] = {{"stages", stages}, {"total_seconds", result.total_seconds}};
    }
    return doc;
}

}  // namespace slummap
