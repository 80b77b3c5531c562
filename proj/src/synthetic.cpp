#include "slummap/synthetic.hpp"

#include "slummap/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace slummap {

namespace {

double uniform_open(Pcg32& rng) {
    return (static_cast<double>(rng.next()) + 0.5) / 4294967296.0;
}

// Box-Muller; one draw per call keeps the stream layout simple.
double standard_normal(Pcg32& rng) {
    const double u1 = uniform_open(rng);
    const double u2 = uniform_open(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

std::pair<BandStack, LabelMask> make_two_texture_scene(const TwoTextureSpec& spec) {
    const std::size_t w = spec.width;
    const std::size_t h = spec.height;
    const std::size_t block = std::max<std::size_t>(spec.block, 1);
    Pcg32 rng(spec.seed);

    std::vector<std::uint8_t> labels(w * h, 0);
    for (const Rect& r : spec.slum_areas) {
        for (std::size_t y = r.row; y < std::min(h, r.row + r.height); ++y) {
            for (std::size_t x = r.col; x < std::min(w, r.col + r.width); ++x) labels[y * w + x] = 1;
        }
    }

    const std::size_t blocks_x = (w + block - 1) / block;
    const std::size_t blocks_y = (h + block - 1) / block;
    std::vector<int> block_sign(blocks_x * blocks_y);
    for (auto& s : block_sign) s = rng.below(2) ? 1 : -1;

    std::vector<int> sign(w * h);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            const std::size_t p = y * w + x;
            const int independent = rng.below(2) ? 1 : -1;
            sign[p] = labels[p] ? independent : block_sign[(y / block) * blocks_x + x / block];
        }
    }

    const auto& bands = scene_band_order();
    const double base[] = {1200, 1400, 1600, 1800, 2000, 2200, 2400, 2500, 2700, 2900};
    std::vector<std::uint16_t> samples(w * h * bands.size());
    for (std::size_t b = 0; b < bands.size(); ++b) {
        for (std::size_t p = 0; p < w * h; ++p) {
            const double v = base[b] + spec.amplitude * sign[p] + spec.noise_sd * standard_normal(rng);
            samples[b * w * h + p] = static_cast<std::uint16_t>(std::clamp(std::lround(v), 0L, 65535L));
        }
    }
    return {BandStack(w, h, bands, std::move(samples)), LabelMask(w, h, std::move(labels))};
}

}  // namespace slummap
