#pragma once

#include "slummap/raster.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace slummap {

struct Rect {
    std::size_t row, col, height, width;
};

/// Ten-band scene whose two classes share one per-pixel intensity
/// distribution and differ only in spatial arrangement: every pixel is
/// base + amplitude * s + noise with s = +-1 equally likely. Slum pixels
/// draw s independently; non-slum pixels share s across `block` x `block`
/// tiles. Slum areas are the given rectangles.
struct TwoTextureSpec {
    std::size_t width = 200;
    std::size_t height = 200;
    std::size_t block = 8;
    std::vector<Rect> slum_areas{{20, 24, 90, 64}, {104, 112, 80, 72}};
    double amplitude = 300.0;
    double noise_sd = 40.0;
    std::uint64_t seed = 7;
};

std::pair<BandStack, LabelMask> make_two_texture_scene(const TwoTextureSpec& spec = {});

}  // namespace slummap
