// slummap command-line entry point.
//
// Exit codes: 0 ok, 2 usage/config error, 3 I/O or malformed file,
// 4 degenerate data (single class, nothing usable), 5 feature dimension
// mismatch between a model and a scene.

#include "slummap/experiment.hpp"
#include "slummap/raster.hpp"
#include "slummap/run_config.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace slummap;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitDegenerate = 4;
constexpr int kExitDimension = 5;

struct CommonOptions {
    std::string config;
    std::optional<std::string> technique;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<unsigned> jobs;
    std::optional<std::string> image;
    std::optional<std::string> mask;
    std::string location = "scene";
    bool no_timings = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--config", o.config, "Run configuration file");
    cmd->add_option("--technique", o.technique, "Feature technique: spectral or glcm");
    cmd->add_option("--seed", o.seed, "Master seed (default 0)");
    cmd->add_option("--out", o.out, "Output directory");
    cmd->add_option("--jobs", o.jobs, "Worker thread cap (0 = all cores)");
    cmd->add_option("--image", o.image, "Scene image header (replaces configured scenes)");
    cmd->add_option("--mask", o.mask, "Label mask header for --image, or for a single configured scene");
    cmd->add_option("--location", o.location, "Location name used with --image")->capture_default_str();
    cmd->add_flag("--no-timings", o.no_timings, "Write NA instead of wall-clock seconds in reports");
}

/// Builds the effective configuration: file values, then flag overrides.
/// `technique_explicit` reports whether either source named a technique.
RunConfig effective_config(const CommonOptions& o, bool* technique_explicit = nullptr) {
    RunConfig config;
    bool explicit_technique = false;
    if (!o.config.empty()) {
        config = RunConfig::from_file(o.config);
        explicit_technique = KeyValueDocument::parse_file(o.config).find("run", "technique") != nullptr;
    }
    try {
        if (o.technique) {
            config.experiment.technique = parse_technique(*o.technique);
            explicit_technique = true;
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("--technique: ") + e.what());
    }
    if (o.seed) config.experiment.master_seed = *o.seed;
    if (o.out) config.out_dir = fs::path(*o.out);
    if (o.jobs) config.experiment.jobs = *o.jobs;
    if (o.no_timings) config.timings = false;
    if (o.image) {
        config.scenes = {SceneConfig{o.location, fs::path(*o.image), o.mask ? fs::path(*o.mask) : fs::path()}};
    } else if (o.mask) {
        if (config.scenes.size() != 1) throw ConfigError("--mask without --image needs exactly one configured scene");
        config.scenes.front().mask = *o.mask;
    }
    if (technique_explicit) *technique_explicit = explicit_technique;
    return config;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::string stem(const SceneConfig& scene, Technique technique) {
    return scene.location + "_" + technique_name(technique);
}

double elapsed(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

int cmd_extract(const CommonOptions& o) {
    const RunConfig config = effective_config(o);
    config.validate(false);
    ensure_dir(config.out_dir);
    for (const auto& scene : config.scenes) {
        const auto start = std::chrono::steady_clock::now();
        const BandStack stack = load_band_stack(scene.image);
        const FeatureRaster features =
            extract_features(stack, config.experiment.technique, config.experiment.glcm, config.experiment.jobs);
        const fs::path header = config.out_dir / (stem(scene, config.experiment.technique) + "_features.hdr");
        save_feature_raster(features, header);
        std::printf("%s: %zu features, %zu valid pixels, %.2f s -> %s\n", scene.location.c_str(),
                    features.feature_count(), features.valid_count(), elapsed(start), header.string().c_str());
    }
    return 0;
}

std::vector<ExperimentResult> run_all(const RunConfig& config) {
    std::vector<ExperimentResult> results;
    for (const auto& scene : config.scenes) {
        const BandStack stack = load_band_stack(scene.image);
        const LabelMask mask = load_label_mask(scene.mask);
        results.push_back(run_experiment(stack, mask, config.experiment, scene.location));
        const auto& r = results.back();
        std::printf("%s/%s: miou %s (slum acc %s, non-slum acc %s), %.2f s\n", r.location.c_str(),
                    technique_name(r.technique), format_percent(r.test_report.mean_iou).c_str(),
                    format_percent(r.test_report.slum.accuracy).c_str(),
                    format_percent(r.test_report.non_slum.accuracy).c_str(), r.total_seconds);
    }
    return results;
}

int cmd_train(const CommonOptions& o) {
    const RunConfig config = effective_config(o);
    config.validate(true);
    ensure_dir(config.out_dir);
    for (const auto& result : run_all(config)) {
        const fs::path model_path = config.out_dir / (result.location + "_" + technique_name(result.technique) + "_model.json");
        save_pipeline(result.model, model_path);
        std::printf("model -> %s\n", model_path.string().c_str());
    }
    return 0;
}

int cmd_experiment(const CommonOptions& o) {
    const RunConfig config = effective_config(o);
    config.validate(true);
    ensure_dir(config.out_dir);
    const auto results = run_all(config);

    nlohmann::json report{{"format", "slummap-report"}, {"version", 1}, {"runs", nlohmann::json::array()}};
    for (const auto& r : results) {
        const std::string base = r.location + "_" + technique_name(r.technique);
        save_prediction_map(r.prediction_map, config.out_dir / (base + "_map.pgm"));
        save_pipeline(r.model, config.out_dir / (base + "_model.json"));
        report["runs"].push_back(experiment_to_json(r, config.timings));
    }
    write_text(config.out_dir / "report.csv", metrics_csv(results, config.timings));
    write_text(config.out_dir / "report.json", report.dump(2) + "\n");
    write_text(config.out_dir / "effective_config.ini", config.to_document().to_string());
    std::printf("reports -> %s\n", (config.out_dir / "report.csv").string().c_str());
    return 0;
}

int cmd_predict(const CommonOptions& o, const std::string& model_path) {
    bool technique_explicit = false;
    const RunConfig config = effective_config(o, &technique_explicit);
    config.validate(false);
    ensure_dir(config.out_dir);
    const PipelineModel model = load_pipeline(model_path);
    // Without an explicit technique the model's own feature recipe applies.
    const Technique technique = technique_explicit ? config.experiment.technique : model.technique;
    const GlcmParams& glcm = technique_explicit ? config.experiment.glcm : model.glcm;
    for (const auto& scene : config.scenes) {
        const BandStack stack = load_band_stack(scene.image);
        const FeatureRaster features = extract_features(stack, technique, glcm, config.experiment.jobs);
        const LabelMask map = predict_features(model, features, config.experiment.jobs);
        const fs::path out = config.out_dir / (stem(scene, technique) + "_map.pgm");
        save_prediction_map(map, out);
        std::printf("%s: map -> %s\n", scene.location.c_str(), out.string().c_str());
    }
    return 0;
}

int cmd_evaluate(const CommonOptions& o, const std::string& map_path) {
    SceneConfig scene{o.location, {}, {}};
    if (!o.config.empty() || o.image) {
        const RunConfig config = effective_config(o);
        if (config.scenes.size() != 1) throw ConfigError("evaluate needs exactly one scene with a mask");
        scene = config.scenes.front();
    } else if (o.mask) {
        scene.mask = *o.mask;
    }
    if (scene.mask.empty()) throw ConfigError("missing key 'scene." + scene.location + ".mask'");
    if (!fs::exists(scene.mask)) throw IoError("mask file does not exist: " + scene.mask.string());
    const fs::path out_dir = o.out ? fs::path(*o.out) : fs::path();

    const LabelMask map = load_prediction_map(map_path);
    const LabelMask mask = load_label_mask(scene.mask);
    require_same_shape(map.width(), map.height(), mask.width(), mask.height(), "prediction map vs label mask");
    std::vector<std::uint8_t> pred;
    std::vector<std::uint8_t> truth;
    for (std::size_t p = 0; p < mask.pixel_count(); ++p) {
        if (map.valid()[p] && mask.valid()[p]) {
            pred.push_back(map.labels()[p]);
            truth.push_back(mask.labels()[p]);
        }
    }
    if (truth.empty()) throw EmptyData("no pixel is valid in both the map and the mask");
    const MetricsReport report = evaluate(pred, truth);
    std::printf("location,acc_slum,acc_non,iou_slum,iou_non,miou\n%s,%s,%s,%s,%s,%s\n", scene.location.c_str(),
                format_percent(report.slum.accuracy).c_str(), format_percent(report.non_slum.accuracy).c_str(),
                format_percent(report.slum.iou).c_str(), format_percent(report.non_slum.iou).c_str(),
                format_percent(report.mean_iou).c_str());
    if (o.out) {
        ensure_dir(out_dir);
        nlohmann::json doc = metrics_to_json(report);
        doc["location"] = scene.location;
        write_text(out_dir / (scene.location + "_evaluation.json"), doc.dump(2) + "\n");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Slum mapping from multi-band imagery with texture features and canonical correlation forests"};
    app.require_subcommand(1);

    CommonOptions extract_opts, train_opts, predict_opts, evaluate_opts, experiment_opts;
    std::string model_path;
    std::string map_path;

    auto* extract = app.add_subcommand("extract", "Write per-pixel feature rasters");
    add_common(extract, extract_opts);
    auto* train = app.add_subcommand("train", "Train a forest per scene and save the pipeline model");
    add_common(train, train_opts);
    auto* predict_cmd = app.add_subcommand("predict", "Map a scene with a saved model");
    add_common(predict_cmd, predict_opts);
    predict_cmd->add_option("--model", model_path, "Pipeline model file")->required();
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a prediction map against a label mask");
    add_common(evaluate_cmd, evaluate_opts);
    evaluate_cmd->add_option("--map", map_path, "Prediction map (P5)")->required();
    auto* experiment = app.add_subcommand("experiment", "Full pipeline: reports, maps and models");
    add_common(experiment, experiment_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*extract) return cmd_extract(extract_opts);
        if (*train) return cmd_train(train_opts);
        if (*predict_cmd) return cmd_predict(predict_opts, model_path);
        if (*evaluate_cmd) return cmd_evaluate(evaluate_opts, map_path);
        if (*experiment) return cmd_experiment(experiment_opts);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DimensionMismatch& e) {
        std::cerr << "dimension mismatch: " << e.what() << '\n';
        return kExitDimension;
    } catch (const DegenerateData& e) {
        std::cerr << "degenerate data: " << e.what() << '\n';
        return kExitDegenerate;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return kExitIo;
    } catch (const RasterError& e) {
        std::cerr << "raster error: " << e.what() << '\n';
        return kExitIo;
    } catch (const ModelError& e) {
        std::cerr << "model error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return kExitConfig;
}
