#include "slummap/run_config.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace slummap {

namespace fs = std::filesystem;

namespace {

const std::set<std::string> kRunKeys{"technique", "seed", "out", "jobs", "train_fraction", "timings"};
const std::set<std::string> kGlcmKeys{"levels", "window", "directions", "bands", "measures"};
const std::set<std::string> kForestKeys{"n_trees", "lambda", "min_node_size"};
const std::set<std::string> kSceneKeys{"image", "mask"};
constexpr const char* kScenePrefix = "scene.";

std::uint64_t parse_unsigned(const std::string& text, const std::string& key) {
    std::size_t pos = 0;
    unsigned long long value = 0;
    try {
        if (!text.empty() && text.front() != '-') value = std::stoull(text, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (text.empty() || pos != text.size()) throw ConfigError("'" + key + "' must be a non-negative integer, got '" + text + "'");
    return value;
}

double parse_real(const std::string& text, const std::string& key) {
    std::size_t pos = 0;
    double value = 0.0;
    try {
        value = std::stod(text, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (text.empty() || pos != text.size()) throw ConfigError("'" + key + "' must be a number, got '" + text + "'");
    return value;
}

bool parse_bool(const std::string& text, const std::string& key) {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw ConfigError("'" + key + "' must be true or false, got '" + text + "'");
}

fs::path resolve(const fs::path& base, const std::string& value) {
    fs::path p(value);
    if (p.is_relative()) p = base / p;
    return p.lexically_normal();
}

// Shortest decimal text that parses back to the same double.
std::string real_text(double v) {
    for (int digits = 15; digits <= 17; ++digits) {
        std::ostringstream out;
        out.precision(digits);
        out << v;
        if (std::stod(out.str()) == v || digits == 17) return out.str();
    }
    return {};
}

}  // namespace

RunConfig RunConfig::from_document(const KeyValueDocument& doc, const fs::path& base_dir) {
    RunConfig config;
    ExperimentParams& ex = config.experiment;
    for (const auto& section : doc.sections()) {
        const auto entries = doc.entries(section);
        if (section.empty()) {
            if (!entries.empty())
                throw ConfigError("key '" + entries.front().first + "' must be inside a [section]");
        } else if (section == "run") {
            for (const auto& [key, value] : entries) {
                const std::string name = "run." + key;
                if (!kRunKeys.count(key)) throw ConfigError("unknown key '" + name + "'");
                try {
                    if (key == "technique") ex.technique = parse_technique(value);
                } catch (const std::invalid_argument& e) {
                    throw ConfigError(name + ": " + e.what());
                }
                if (key == "seed") ex.master_seed = parse_unsigned(value, name);
                if (key == "out") config.out_dir = resolve(base_dir, value);
                if (key == "jobs") ex.jobs = static_cast<unsigned>(parse_unsigned(value, name));
                if (key == "train_fraction") ex.train_fraction = parse_real(value, name);
                if (key == "timings") config.timings = parse_bool(value, name);
            }
        } else if (section == "glcm") {
            for (const auto& [key, value] : entries) {
                const std::string name = "glcm." + key;
                if (!kGlcmKeys.count(key)) throw ConfigError("unknown key '" + name + "'");
                try {
                    if (key == "levels") ex.glcm.levels = static_cast<int>(parse_unsigned(value, name));
                    if (key == "window") ex.glcm.window = static_cast<int>(parse_unsigned(value, name));
                    if (key == "bands") ex.glcm.bands = split_list(value);
                    if (key == "directions") {
                        ex.glcm.directions.clear();
                        for (const auto& d : split_list(value)) ex.glcm.directions.push_back(parse_direction(d));
                    }
                    if (key == "measures") {
                        ex.glcm.measures.clear();
                        for (const auto& m : split_list(value)) ex.glcm.measures.push_back(parse_measure(m));
                    }
                } catch (const std::invalid_argument& e) {
                    throw ConfigError(name + ": " + e.what());
                }
            }
        } else if (section == "forest") {
            for (const auto& [key, value] : entries) {
                const std::string name = "forest." + key;
                if (!kForestKeys.count(key)) throw ConfigError("unknown key '" + name + "'");
                if (key == "n_trees") ex.forest.n_trees = parse_unsigned(value, name);
                if (key == "lambda") ex.forest.lambda = parse_unsigned(value, name);
                if (key == "min_node_size") ex.forest.min_node_size = parse_unsigned(value, name);
            }
        } else if (section.rfind(kScenePrefix, 0) == 0) {
            SceneConfig scene;
            scene.location = section.substr(std::string(kScenePrefix).size());
            if (scene.location.empty()) throw ConfigError("scene section needs a location name");
            for (const auto& [key, value] : entries) {
                if (!kSceneKeys.count(key)) throw ConfigError("unknown key '" + section + "." + key + "'");
                if (key == "image") scene.image = resolve(base_dir, value);
                if (key == "mask") scene.mask = resolve(base_dir, value);
            }
            if (scene.image.empty()) throw ConfigError("missing key '" + section + ".image'");
            config.scenes.push_back(std::move(scene));
        } else {
            throw ConfigError("unknown section [" + section + "]");
        }
    }
    return config;
}

RunConfig RunConfig::from_file(const fs::path& path) {
    if (!fs::exists(path)) throw ConfigError("config file '" + path.string() + "' does not exist");
    const fs::path base = fs::absolute(path).parent_path();
    return from_document(KeyValueDocument::parse_file(path), base);
}

KeyValueDocument RunConfig::to_document() const {
    KeyValueDocument doc;
    const ExperimentParams& ex = experiment;
    doc.set("run", "technique", technique_name(ex.technique));
    doc.set("run", "seed", std::to_string(ex.master_seed));
    doc.set("run", "out", fs::absolute(out_dir).lexically_normal().string());
    doc.set("run", "jobs", std::to_string(ex.jobs));
    doc.set("run", "train_fraction", real_text(ex.train_fraction));
    doc.set("run", "timings", timings ? "true" : "false");

    doc.set("glcm", "levels", std::to_string(ex.glcm.levels));
    doc.set("glcm", "window", std::to_string(ex.glcm.window));
    std::vector<std::string> directions;
    for (auto d : ex.glcm.directions) directions.push_back(std::to_string(direction_degrees(d)));
    doc.set("glcm", "directions", join_list(directions));
    doc.set("glcm", "bands", join_list(ex.glcm.bands));
    std::vector<std::string> measures;
    for (auto m : ex.glcm.measures) measures.emplace_back(measure_name(m));
    doc.set("glcm", "measures", join_list(measures));

    doc.set("forest", "n_trees", std::to_string(ex.forest.n_trees));
    doc.set("forest", "lambda", std::to_string(ex.forest.lambda));
    doc.set("forest", "min_node_size", std::to_string(ex.forest.min_node_size));

    for (const auto& scene : scenes) {
        const std::string section = kScenePrefix + scene.location;
        doc.set(section, "image", fs::absolute(scene.image).lexically_normal().string());
        if (!scene.mask.empty()) doc.set(section, "mask", fs::absolute(scene.mask).lexically_normal().string());
    }
    return doc;
}

void RunConfig::validate(bool need_mask) const {
    if (scenes.empty()) throw ConfigError("no scene configured (add a [scene.<location>] section or --image)");
    std::set<std::string> names;
    for (const auto& scene : scenes) {
        const std::string section = kScenePrefix + scene.location;
        if (!names.insert(scene.location).second) throw ConfigError("duplicate scene '" + scene.location + "'");
        if (!fs::exists(scene.image))
            throw IoError("'" + section + ".image' points to a missing file: " + scene.image.string());
        if (scene.mask.empty()) {
            if (need_mask) throw ConfigError("missing key '" + section + ".mask'");
        } else if (!fs::exists(scene.mask)) {
            throw IoError("'" + section + ".mask' points to a missing file: " + scene.mask.string());
        }
    }
    if (!(experiment.train_fraction > 0.0 && experiment.train_fraction < 1.0))
        throw ConfigError("'run.train_fraction' must lie strictly between 0 and 1");
    if (experiment.forest.n_trees < 1) throw ConfigError("'forest.n_trees' must be at least 1");
    if (experiment.technique == Technique::Glcm) {
        try {
            experiment.glcm.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("[glcm]: ") + e.what());
        }
    }
}

}  // namespace slummap
