#include "oracles.hpp"
#include "slummap/rng.hpp"
#include "slummap/texture.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace slummap;

namespace {

GreyImage make_grey(const std::vector<std::vector<int>>& rows, int levels) {
    GreyImage g;
    g.height = rows.size();
    g.width = rows[0].size();
    g.levels = levels;
    for (const auto& row : rows)
        for (int v : row) g.pixels.push_back(static_cast<std::uint8_t>(v));
    return g;
}

std::vector<std::vector<int>> random_window(Pcg32& rng, int h, int w, int levels) {
    std::vector<std::vector<int>> rows(h, std::vector<int>(w));
    for (auto& row : rows)
        for (auto& v : row) v = static_cast<int>(rng.below(static_cast<std::uint32_t>(levels)));
    return rows;
}

std::vector<std::vector<int>> rotate90(const std::vector<std::vector<int>>& rows) {
    const std::size_t h = rows.size();
    const std::size_t w = rows[0].size();
    std::vector<std::vector<int>> out(w, std::vector<int>(h));
    for (std::size_t r = 0; r < w; ++r)
        for (std::size_t c = 0; c < h; ++c) out[r][c] = rows[c][w - 1 - r];
    return out;
}

CooccurrenceMatrix matrix_of(const std::vector<double>& p, int levels) { return CooccurrenceMatrix(levels, p); }

void check_against_oracle(const HaralickFeatures& got, const oracle::Haralick& want, double tol) {
    CHECK(std::abs(got.second_moment - want.second_moment) <= tol);
    CHECK(std::abs(got.contrast - want.contrast) <= tol);
    CHECK(std::abs(got.correlation - want.correlation) <= tol);
    CHECK(std::abs(got.homogeneity - want.homogeneity) <= tol);
    CHECK(std::abs(got.entropy - want.entropy) <= tol);
    CHECK(std::abs(got.mean - want.mean) <= tol);
    CHECK(std::abs(got.variance - want.variance) <= tol);
}

}  // namespace

TEST_CASE("direction offsets") {
    CHECK(direction_offset(Direction::Deg0).row == 0);
    CHECK(direction_offset(Direction::Deg0).col == 1);
    CHECK(direction_offset(Direction::Deg45).row == -1);
    CHECK(direction_offset(Direction::Deg45).col == 1);
    CHECK(direction_offset(Direction::Deg90).row == -1);
    CHECK(direction_offset(Direction::Deg90).col == 0);
    CHECK(direction_offset(Direction::Deg135).row == -1);
    CHECK(direction_offset(Direction::Deg135).col == -1);
    CHECK(parse_direction("135") == Direction::Deg135);
    CHECK_THROWS_AS(parse_direction("30"), std::invalid_argument);
    CHECK(parse_measure(measure_name(Measure::Homogeneity)) == Measure::Homogeneity);
}

TEST_CASE("default parameters yield 28 named features") {
    GlcmParams params;
    CHECK_NOTHROW(params.validate());
    const auto names = params.feature_names();
    REQUIRE(names.size() == 28);
    CHECK(names.front() == "B2_second_moment");
    CHECK(names.back() == "B8_variance");
    params.window = 4;
    CHECK_THROWS_AS(params.validate(), std::invalid_argument);
}

TEST_CASE("quantization") {
    SUBCASE("constant band") {
        const std::vector<std::uint16_t> band(9, 1234);
        for (auto q : quantize(band, 32)) CHECK(q == 0);
    }
    SUBCASE("values 0..15 with 16 levels is the identity") {
        std::vector<std::uint16_t> band(16);
        std::iota(band.begin(), band.end(), 0);
        const auto q = quantize(band, 16);
        for (std::size_t i = 0; i < 16; ++i) CHECK(q[i] == i);
    }
    SUBCASE("full 16-bit range, 32 levels") {
        const std::vector<std::uint16_t> band{0, 2047, 2048, 65535};
        const auto q = quantize(band, 32);
        CHECK(q[1] == 0);
        CHECK(q[2] == 1);
        CHECK(q[3] == 31);
    }
    SUBCASE("monotone and surjective on random bands") {
        Pcg32 rng(17);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<std::uint16_t> band(500);
            for (auto& v : band) v = static_cast<std::uint16_t>(rng.below(5000) + 100);
            const int levels = 2 + static_cast<int>(rng.below(40));
            const auto q = quantize(band, levels);
            std::vector<std::size_t> order(band.size());
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end(), [&](auto a, auto b) { return band[a] < band[b]; });
            for (std::size_t i = 1; i < order.size(); ++i) CHECK(q[order[i - 1]] <= q[order[i]]);
            CHECK(*std::max_element(q.begin(), q.end()) == levels - 1);
            CHECK(*std::min_element(q.begin(), q.end()) == 0);
        }
    }
}

TEST_CASE("co-occurrence examples") {
    SUBCASE("constant 3x3 window") {
        const GreyImage g = make_grey({{5, 5, 5}, {5, 5, 5}, {5, 5, 5}}, 8);
        for (Direction d : kAllDirections) {
            const auto m = cooccurrence(g, d);
            for (int i = 0; i < 8; ++i)
                for (int j = 0; j < 8; ++j) CHECK(m(i, j) == (i == 5 && j == 5 ? 1.0 : 0.0));
        }
    }
    SUBCASE("2x2 window, rows [0,0] and [1,1]") {
        const GreyImage g = make_grey({{0, 0}, {1, 1}}, 2);
        const auto horizontal = cooccurrence(g, Direction::Deg0);
        CHECK(horizontal(0, 0) == 0.5);
        CHECK(horizontal(1, 1) == 0.5);
        CHECK(horizontal(0, 1) == 0.0);
        const auto vertical = cooccurrence(g, Direction::Deg90);
        CHECK(vertical(0, 1) == 0.5);
        CHECK(vertical(1, 0) == 0.5);
        CHECK(vertical(0, 0) == 0.0);
    }
    SUBCASE("no pair at the offset") {
        const GreyImage g = make_grey({{0, 1}}, 2);
        CHECK_THROWS_AS(cooccurrence(g, Direction::Deg90), std::invalid_argument);
    }
    SUBCASE("level out of range") {
        const GreyImage g = make_grey({{0, 3}, {1, 1}}, 2);
        CHECK_THROWS_AS(cooccurrence(g, Direction::Deg0), std::invalid_argument);
    }
}

TEST_CASE("haralick hand values") {
    SUBCASE("all mass at (0,0)") {
        const auto h = haralick(matrix_of({1, 0, 0, 0}, 2));
        CHECK(h.second_moment == 1.0);
        CHECK(h.contrast == 0.0);
        CHECK(h.homogeneity == 1.0);
        CHECK(h.entropy == 0.0);
        CHECK(h.mean == 0.0);
        CHECK(h.variance == 0.0);
        CHECK(h.correlation == 0.0);
    }
    SUBCASE("uniform 2x2") {
        const auto h = haralick(matrix_of({0.25, 0.25, 0.25, 0.25}, 2));
        CHECK(std::abs(h.second_moment - 0.25) <= 1e-12);
        CHECK(std::abs(h.contrast - 0.5) <= 1e-12);
        CHECK(std::abs(h.homogeneity - 0.75) <= 1e-12);
        CHECK(std::abs(h.entropy - std::log(4.0)) <= 1e-12);
        CHECK(std::abs(h.mean - 0.5) <= 1e-12);
        CHECK(std::abs(h.variance - 0.25) <= 1e-12);
        CHECK(std::abs(h.correlation) <= 1e-12);
    }
    SUBCASE("off-diagonal pair") {
        const auto h = haralick(matrix_of({0, 0.5, 0.5, 0}, 2));
        CHECK(std::abs(h.contrast - 1.0) <= 1e-12);
        CHECK(std::abs(h.second_moment - 0.5) <= 1e-12);
        CHECK(std::abs(h.homogeneity - 0.5) <= 1e-12);
        CHECK(std::abs(h.mean - 0.5) <= 1e-12);
        CHECK(std::abs(h.variance - 0.25) <= 1e-12);
        CHECK(std::abs(h.correlation + 1.0) <= 1e-12);
    }
}

TEST_CASE("co-occurrence and haralick agree with the pair-enumeration oracle") {
    Pcg32 rng(2024);
    for (int trial = 0; trial < 300; ++trial) {
        const int h = 2 + static_cast<int>(rng.below(6));
        const int w = 2 + static_cast<int>(rng.below(6));
        const int levels = 1 + static_cast<int>(rng.below(4));
        const auto rows = random_window(rng, h, w, levels);
        const GreyImage g = make_grey(rows, levels);
        oracle::Haralick sum{};
        for (Direction d : kAllDirections) {
            const Offset off = direction_offset(d);
            const auto want = oracle::glcm(rows, levels, off.row, off.col);
            const auto got = cooccurrence(g, d);
            double total = 0;
            for (int i = 0; i < levels; ++i) {
                for (int j = 0; j < levels; ++j) {
                    CHECK(std::abs(got(i, j) - want[i][j]) <= 1e-12);
                    CHECK(got(i, j) == got(j, i));
                    total += got(i, j);
                }
            }
            CHECK(std::abs(total - 1.0) <= 1e-9);
            const auto o = oracle::haralick(want);
            check_against_oracle(haralick(got), o, 1e-9);
            sum.second_moment += o.second_moment / 4;
            sum.contrast += o.contrast / 4;
            sum.correlation += o.correlation / 4;
            sum.homogeneity += o.homogeneity / 4;
            sum.entropy += o.entropy / 4;
            sum.mean += o.mean / 4;
            sum.variance += o.variance / 4;
        }
        check_against_oracle(window_features(g, kAllDirections), sum, 1e-9);
    }
}

TEST_CASE("rotating a window by 90 degrees preserves direction-averaged features") {
    Pcg32 rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        const int h = 3 + static_cast<int>(rng.below(6));
        const int w = 3 + static_cast<int>(rng.below(6));
        const int levels = 2 + static_cast<int>(rng.below(7));
        const auto rows = random_window(rng, h, w, levels);
        const auto rotated = rotate90(rows);
        const GreyImage a = make_grey(rows, levels);
        const GreyImage b = make_grey(rotated, levels);

        const auto m0 = cooccurrence(a, Direction::Deg0).values();
        const auto r90 = cooccurrence(b, Direction::Deg90).values();
        for (std::size_t i = 0; i < m0.size(); ++i) CHECK(std::abs(m0[i] - r90[i]) <= 1e-12);

        const auto fa = window_features(a, kAllDirections);
        const auto fb = window_features(b, kAllDirections);
        for (Measure m : kAllMeasures) CHECK(std::abs(fa.get(m) - fb.get(m)) <= 1e-9);
    }
}

TEST_CASE("haralick outputs stay in range") {
    Pcg32 rng(5);
    for (int trial = 0; trial < 300; ++trial) {
        const int levels = 2 + static_cast<int>(rng.below(31));
        const int side = 3 + static_cast<int>(rng.below(9));
        const GreyImage g = make_grey(random_window(rng, side, side, levels), levels);
        for (Direction d : kAllDirections) {
            const auto f = haralick(cooccurrence(g, d));
            CHECK(f.second_moment > 0.0);
            CHECK(f.second_moment <= 1.0 + 1e-12);
            CHECK(f.homogeneity > 0.0);
            CHECK(f.homogeneity <= 1.0 + 1e-12);
            CHECK(f.entropy >= 0.0);
            CHECK(f.entropy <= 2.0 * std::log(levels) + 1e-12);
            CHECK(f.contrast >= 0.0);
            CHECK(f.correlation >= -1.0);
            CHECK(f.correlation <= 1.0);
            CHECK(f.variance >= 0.0);
        }
    }
}

TEST_CASE("texture extraction") {
    GlcmParams params;
    params.bands = {"B2"};

    SUBCASE("constant image") {
        const BandStack stack(21, 21, {"B2"}, std::vector<std::uint16_t>(21 * 21, 900));
        const auto raster = extract_texture(stack, params);
        CHECK(raster.valid_count() == 9);
        for (std::size_t p = 0; p < raster.pixel_count(); ++p) {
            if (!raster.valid[p]) continue;
            CHECK(raster.value(1, p) == 0.0f);  // contrast
            CHECK(raster.value(4, p) == 0.0f);  // entropy
            CHECK(raster.value(0, p) == 1.0f);  // second moment
        }
    }
    SUBCASE("19x19 image has only its centre valid") {
        Pcg32 rng(1);
        std::vector<std::uint16_t> samples(19 * 19);
        for (auto& v : samples) v = static_cast<std::uint16_t>(rng.below(1000));
        const auto raster = extract_texture(BandStack(19, 19, {"B2"}, samples), params);
        CHECK(raster.valid_count() == 1);
        CHECK(raster.valid[9 * 19 + 9] == 1);
    }
    SUBCASE("unknown band") {
        params.bands = {"B9"};
        CHECK_THROWS_AS(extract_texture(BandStack(5, 5, {"B2"}, std::vector<std::uint16_t>(25)), params),
                        RasterError);
    }
    SUBCASE("checkerboard half has higher contrast than constant half") {
        params.window = 5;
        std::vector<std::uint16_t> samples(25 * 25);
        for (std::size_t r = 0; r < 25; ++r)
            for (std::size_t c = 0; c < 25; ++c)
                samples[r * 25 + c] = c < 12 ? static_cast<std::uint16_t>(((r + c) % 2) * 1000) : 500;
        const auto raster = extract_texture(BandStack(25, 25, {"B2"}, samples), params);
        const float left = raster.value(1, 12 * 25 + 4);
        const float right = raster.value(1, 12 * 25 + 20);
        CHECK(left > right);
    }
}

TEST_CASE("sliding-window extraction matches per-window oracle and ignores thread count") {
    Pcg32 rng(314);
    const std::size_t w = 23, h = 17;
    std::vector<std::uint16_t> samples(w * h * 2);
    for (auto& v : samples) v = static_cast<std::uint16_t>(rng.below(3000));
    const BandStack stack(w, h, {"B3", "B8"}, samples);

    GlcmParams params;
    params.bands = {"B8", "B3"};
    params.levels = 6;
    params.window = 7;
    params.directions = {Direction::Deg45, Direction::Deg90};
    const auto raster = extract_texture(stack, params, 1);
    CHECK(raster.feature_names.front() == "B8_second_moment");

    const auto multi = extract_texture(stack, params, 3);
    CHECK(multi.values == raster.values);
    CHECK(multi.valid == raster.valid);

    for (std::size_t bi = 0; bi < params.bands.size(); ++bi) {
        const auto q = quantize(stack.band(params.bands[bi]), params.levels);
        for (std::size_t y = 3; y + 3 < h; ++y) {
            for (std::size_t x = 3; x + 3 < w; ++x) {
                std::vector<std::vector<int>> win(7, std::vector<int>(7));
                for (int r = 0; r < 7; ++r)
                    for (int c = 0; c < 7; ++c) win[r][c] = q[(y + r - 3) * w + (x + c - 3)];
                oracle::Haralick avg{};
                for (Direction d : params.directions) {
                    const Offset off = direction_offset(d);
                    const auto o = oracle::haralick(oracle::glcm(win, params.levels, off.row, off.col));
                    avg.second_moment += o.second_moment / 2;
                    avg.contrast += o.contrast / 2;
                    avg.correlation += o.correlation / 2;
                    avg.homogeneity += o.homogeneity / 2;
                    avg.entropy += o.entropy / 2;
                    avg.mean += o.mean / 2;
                    avg.variance += o.variance / 2;
                }
                const std::size_t p = y * w + x;
                const double want[] = {avg.second_moment, avg.contrast, avg.correlation, avg.homogeneity,
                                       avg.entropy,       avg.mean,     avg.variance};
                for (std::size_t m = 0; m < 7; ++m) {
                    CHECK(std::abs(raster.value(bi * 7 + m, p) - want[m]) <= 1e-5 * (1 + std::abs(want[m])));
                }
            }
        }
    }
}

TEST_CASE("spectral extraction") {
    std::vector<std::uint16_t> samples(10);
    std::iota(samples.begin(), samples.end(), 0);
    const auto raster = extract_spectral(BandStack(1, 1, scene_band_order(), samples));
    CHECK(raster.feature_count() == 10);
    for (std::size_t f = 0; f < 10; ++f) CHECK(raster.value(f, 0) == static_cast<float>(f));

    const auto small = extract_spectral(BandStack(2, 2, {"B4"}, {1, 2, 3, 4}));
    CHECK(small.valid_count() == 4);
    CHECK(small.feature_count() == 1);
}
