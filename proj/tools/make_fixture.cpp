// Writes the synthetic two-texture scene used by the acceptance suite.
//   make_fixture <output-dir>

#include "slummap/raster.hpp"
#include "slummap/synthetic.hpp"

#include <cstdio>
#include <filesystem>

int main(int argc, char** argv) {
    if (argc != 2) {
        std::fprintf(stderr, "usage: %s <output-dir>\n", argv[0]);
        return 2;
    }
    const std::filesystem::path dir(argv[1]);
    std::filesystem::create_directories(dir);
    const auto [stack, mask] = slummap::make_two_texture_scene();
    slummap::save_band_stack(stack, dir / "image.hdr");
    slummap::save_label_mask(mask, dir / "mask.hdr");
    std::printf("%zux%zu, %zu bands, slum fraction %.3f -> %s\n", stack.width(), stack.height(), stack.band_count(),
                mask.slum_fraction(), dir.string().c_str());
    return 0;
}
