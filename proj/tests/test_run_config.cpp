#include "slummap/run_config.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace slummap;
namespace fs = std::filesystem;

TEST_CASE("key-value documents") {
    const auto doc = KeyValueDocument::parse("# comment\nwidth = 3\n[run]\n seed = 4 \ntechnique=glcm\n");
    REQUIRE(doc.find("", "width") != nullptr);
    CHECK(*doc.find("", "width") == "3");
    CHECK(*doc.find("run", "seed") == "4");
    CHECK(doc.find("run", "jobs") == nullptr);
    CHECK(doc.has_section("run"));
    CHECK(KeyValueDocument::parse(doc.to_string()).to_string() == doc.to_string());

    CHECK_THROWS_AS(KeyValueDocument::parse("a = 1\na = 2\n"), ConfigError);
    CHECK_THROWS_AS(KeyValueDocument::parse("no equals sign\n"), ConfigError);
    CHECK(split_list(" B2, B3 ,,B4") == std::vector<std::string>{"B2", "B3", "B4"});
    CHECK(join_list({"a", "b"}) == "a,b");
}

TEST_CASE("run configuration") {
    const fs::path base = "/data/cfg";
    const auto doc = KeyValueDocument::parse(
        "[run]\ntechnique = spectral\nseed = 3\ntrain_fraction = 0.75\ntimings = false\n"
        "[glcm]\nlevels = 16\nwindow = 11\ndirections = 0,90\nbands = B4,B8\n"
        "[forest]\nn_trees = 5\n"
        "[scene.alpha]\nimage = a.hdr\nmask = /abs/m.hdr\n"
        "[scene.beta]\nimage = sub/b.hdr\n");
    const RunConfig config = RunConfig::from_document(doc, base);
    CHECK(config.experiment.technique == Technique::Spectral);
    CHECK(config.experiment.master_seed == 3);
    CHECK(config.experiment.train_fraction == 0.75);
    CHECK_FALSE(config.timings);
    CHECK(config.experiment.glcm.levels == 16);
    CHECK(config.experiment.glcm.directions == std::vector<Direction>{Direction::Deg0, Direction::Deg90});
    CHECK(config.experiment.forest.n_trees == 5);
    REQUIRE(config.scenes.size() == 2);
    CHECK(config.scenes[0].location == "alpha");
    CHECK(config.scenes[0].image == fs::path("/data/cfg/a.hdr"));
    CHECK(config.scenes[0].mask == fs::path("/abs/m.hdr"));
    CHECK(config.scenes[1].mask.empty());

    SUBCASE("echo round trip") {
        const auto echoed = config.to_document();
        const RunConfig again = RunConfig::from_document(echoed, "/elsewhere");
        CHECK(again.to_document().to_string() == echoed.to_string());
        CHECK(again.scenes[1].image == config.scenes[1].image);
    }
    SUBCASE("missing image file") {
        try {
            config.validate(false);
            FAIL("expected an IoError");
        } catch (const IoError& e) {
            CHECK(std::string(e.what()).find("scene.alpha.image") != std::string::npos);
        }
    }
}

TEST_CASE("config validation messages") {
    const fs::path dir = fs::temp_directory_path() / "slummap_test_config";
    fs::create_directories(dir);
    std::ofstream(dir / "img.hdr") << "placeholder\n";
    std::ofstream(dir / "run.ini") << "[scene.city]\nimage = img.hdr\n";
    const RunConfig config = RunConfig::from_file(dir / "run.ini");
    CHECK_NOTHROW(config.validate(false));
    try {
        config.validate(true);
        FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("missing key 'scene.city.mask'") != std::string::npos);
    }
}

TEST_CASE("strict parsing") {
    CHECK_THROWS_AS(RunConfig::from_document(KeyValueDocument::parse("[run]\ncolour = red\n"), "."), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_document(KeyValueDocument::parse("[extras]\na = 1\n"), "."), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_document(KeyValueDocument::parse("[run]\nseed = -1\n"), "."), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_document(KeyValueDocument::parse("[glcm]\ndirections = 30\n"), "."), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_document(KeyValueDocument::parse("[scene.x]\nmask = m.hdr\n"), "."), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_document(KeyValueDocument::parse("seed = 1\n"), "."), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_file("/nonexistent/run.ini"), ConfigError);
}
