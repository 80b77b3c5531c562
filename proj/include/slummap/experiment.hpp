#pragma once

#include "slummap/ccf.hpp"
#include "slummap/raster.hpp"
#include "slummap/texture.hpp"

#include <nlohmann/json_fwd.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace slummap {

inline constexpr std::uint8_t kNonSlum = 0;
inline constexpr std::uint8_t kSlum = 1;

struct PixelCoord {
    std::uint32_t row;
    std::uint32_t col;
    bool operator==(const PixelCoord&) const = default;
};

/// One row per usable pixel.
struct FeatureTable {
    DataMatrix features;
    std::vector<std::uint8_t> labels;
    std::vector<PixelCoord> provenance;
    std::vector<std::string> feature_names;

    std::size_t rows() const noexcept { return labels.size(); }
    std::size_t count(std::uint8_t label) const noexcept;
    /// Rows `indices` in the given order.
    FeatureTable select(const std::vector<std::size_t>& indices) const;
};

/// Raised when an input leaves nothing to learn from: no usable pixels or
/// a class absent.
class EmptyData : public DegenerateData {
public:
    using DegenerateData::DegenerateData;
};

/// Feature count of a scene differs from what a model was trained on.
class DimensionMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Pixels valid in both inputs, row-major.
FeatureTable assemble_table(const FeatureRaster& features, const LabelMask& mask);

/// Keeps the minority class whole and draws an equal number of majority
/// rows without replacement from Pcg32(seed). Kept rows stay in input order.
FeatureTable undersample_balance(const FeatureTable& table, std::uint64_t seed);

/// Uniform partition: train gets round(N * train_fraction) rows (clamped to
/// [1, N-1]), drawn from Pcg32(seed). Both sides keep input order.
std::pair<FeatureTable, FeatureTable> split_train_test(const FeatureTable& table, double train_fraction,
                                                       std::uint64_t seed);

struct ScalerStats {
    std::vector<double> means;
    std::vector<double> stds;  // sample std, divisor N-1; 0 marks a constant column

    bool is_constant(std::size_t column) const { return stds[column] == 0.0; }
};

ScalerStats fit_scaler(const FeatureTable& train);
/// (v - mean) / std; constant columns map to 0.
FeatureTable apply_scaler(const ScalerStats& stats, const FeatureTable& table);
void apply_scaler_in_place(const ScalerStats& stats, DataMatrix& features);

/// counts[truth][pred].
struct ConfusionCounts {
    std::array<std::array<std::uint64_t, 2>, 2> counts{};

    std::uint64_t tp(std::uint8_t c) const noexcept { return counts[c][c]; }
    std::uint64_t fn(std::uint8_t c) const noexcept { return counts[c][1 - c]; }
    std::uint64_t fp(std::uint8_t c) const noexcept { return counts[1 - c][c]; }
    std::uint64_t total() const noexcept;
};

struct ClassMetrics {
    /// Percentages; absent when the class does not occur in the truth.
    std::optional<double> accuracy;
    std::optional<double> iou;
};

struct MetricsReport {
    ConfusionCounts confusion;
    ClassMetrics slum;
    ClassMetrics non_slum;
    std::optional<double> mean_iou;
    double seconds = 0.0;

    const ClassMetrics& of(std::uint8_t c) const noexcept { return c == kSlum ? slum : non_slum; }
};

/// Per-class recall and IoU in percent.
MetricsReport evaluate(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> truth);

/// One decimal, round half up; "NA" for an absent value.
std::string format_percent(std::optional<double> value);

enum class Technique { Spectral, Glcm };
const char* technique_name(Technique technique) noexcept;
Technique parse_technique(const std::string& text);

struct ExperimentParams {
    Technique technique = Technique::Glcm;
    GlcmParams glcm;
    CcfParams forest;  // forest.seed is ignored; derived from master_seed
    std::uint64_t master_seed = 0;
    double train_fraction = 0.8;
    unsigned jobs = 1;
};

/// Everything needed to map a new scene: feature recipe, scaler, forest.
struct PipelineModel {
    Technique technique = Technique::Glcm;
    GlcmParams glcm;
    ScalerStats scaler;
    CcfModel forest;
};

nlohmann::json pipeline_to_json(const PipelineModel& model);
PipelineModel pipeline_from_json(const nlohmann::json& doc);
void save_pipeline(const PipelineModel& model, const std::filesystem::path& path);
PipelineModel load_pipeline(const std::filesystem::path& path);

/// Runs the feature recipe of `technique` on a scene.
FeatureRaster extract_features(const BandStack& stack, Technique technique, const GlcmParams& glcm, unsigned jobs);

/// Predicts every pixel with valid features; the rest are marked invalid.
/// Throws DimensionMismatch when the feature count differs from the model's.
LabelMask predict_features(const PipelineModel& model, const FeatureRaster& features, unsigned jobs);
LabelMask predict_scene(const PipelineModel& model, const BandStack& stack, unsigned jobs);

struct StageTiming {
    std::string stage;
    double seconds;
};

struct RowCounts {
    std::size_t usable = 0;
    std::size_t slum = 0;
    std::size_t balanced = 0;
    std::size_t train = 0;
    std::size_t test = 0;
};

struct ExperimentResult {
    std::string location;
    Technique technique = Technique::Glcm;
    std::uint64_t master_seed = 0;
    /// Balanced held-out split.
    MetricsReport test_report;
    /// Every pixel valid in both the map and the mask.
    MetricsReport full_image_report;
    LabelMask prediction_map;
    PipelineModel model;
    RowCounts rows;
    std::vector<StageTiming> timings;
    double total_seconds = 0.0;
};

/// extract -> assemble -> balance -> split -> scale -> train -> predict ->
/// evaluate, then a full-scene map.
ExperimentResult run_experiment(const BandStack& stack, const LabelMask& mask, const ExperimentParams& params,
                                const std::string& location = "scene");

/// Columns: location,technique,acc_slum,acc_non,iou_slum,iou_non,miou,seconds.
/// With `include_timings` false the seconds column holds "NA".
std::string metrics_csv(const std::vector<ExperimentResult>& results, bool include_timings = true);
nlohmann::json experiment_to_json(const ExperimentResult& result, bool include_timings = true);
nlohmann::json metrics_to_json(const MetricsReport& report);

}  // namespace slummap
