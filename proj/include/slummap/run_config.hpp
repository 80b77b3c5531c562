#pragma once

#include "slummap/experiment.hpp"
#include "slummap/text_config.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace slummap {

struct SceneConfig {
    std::string location;
    std::filesystem::path image;
    std::filesystem::path mask;  // empty when not given
};

/// Effective configuration of a CLI run. Sections of the text form:
///   [run]      technique, seed, out, jobs, train_fraction, timings
///   [glcm]     levels, window, directions, bands, measures
///   [forest]   n_trees, lambda (0 = ceil(sqrt(d))), min_node_size
///   [scene.<location>]  image, mask
/// Relative paths resolve against the config file's directory.
struct RunConfig {
    std::vector<SceneConfig> scenes;
    ExperimentParams experiment;
    std::filesystem::path out_dir = "out";
    bool timings = true;

    /// Parses a document; unknown sections or keys are errors.
    static RunConfig from_document(const KeyValueDocument& doc, const std::filesystem::path& base_dir);
    static RunConfig from_file(const std::filesystem::path& path);

    /// Every key spelled out, paths absolute. Parsing the result yields an
    /// identical configuration.
    KeyValueDocument to_document() const;

    /// At least one scene, every referenced path exists, parameters in range.
    /// `need_mask` requires every scene to name a mask. Throws ConfigError
    /// naming the offending key, or IoError for a path that does not exist.
    void validate(bool need_mask) const;
};

}  // namespace slummap
