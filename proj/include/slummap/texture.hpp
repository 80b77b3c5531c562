#pragma once

#include "slummap/raster.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace slummap {

enum class Direction { Deg0, Deg45, Deg90, Deg135 };

enum class Measure { SecondMoment, Contrast, Correlation, Homogeneity, Entropy, Mean, Variance };

inline constexpr std::array<Direction, 4> kAllDirections{Direction::Deg0, Direction::Deg45, Direction::Deg90,
                                                         Direction::Deg135};
inline constexpr std::array<Measure, 7> kAllMeasures{Measure::SecondMoment, Measure::Contrast, Measure::Correlation,
                                                     Measure::Homogeneity,  Measure::Entropy,  Measure::Mean,
                                                     Measure::Variance};

/// (row, col) step from the reference pixel to its neighbour.
struct Offset {
    int row;
    int col;
};
Offset direction_offset(Direction direction) noexcept;
int direction_degrees(Direction direction) noexcept;
Direction parse_direction(const std::string& text);

const char* measure_name(Measure measure) noexcept;
Measure parse_measure(const std::string& text);

struct GlcmParams {
    int levels = 32;
    int window = 19;
    std::vector<Direction> directions{kAllDirections.begin(), kAllDirections.end()};
    std::vector<std::string> bands{"B2", "B3", "B4", "B8"};
    std::vector<Measure> measures{kAllMeasures.begin(), kAllMeasures.end()};

    /// Throws std::invalid_argument on a violated constraint.
    void validate() const;
    /// `<band>_<measure>` in band order, then measure order.
    std::vector<std::string> feature_names() const;
};

/// Row-major grid of grey levels in [0, levels).
struct GreyImage {
    std::size_t width = 0;
    std::size_t height = 0;
    int levels = 0;
    std::vector<std::uint8_t> pixels;

    std::uint8_t at(std::size_t row, std::size_t col) const { return pixels[row * width + col]; }
};

/// Equal-width binning over the band's own min..max:
/// q(v) = min(levels-1, floor((v - min) * levels / (max - min + 1))).
/// Supports up to 256 levels.
std::vector<std::uint8_t> quantize(std::span<const std::uint16_t> band, int levels);

/// Symmetric, normalized grey-level co-occurrence matrix.
class CooccurrenceMatrix {
public:
    CooccurrenceMatrix(int levels, std::vector<double> p);

    int levels() const noexcept { return levels_; }
    double operator()(int i, int j) const { return p_[static_cast<std::size_t>(i) * levels_ + j]; }
    const std::vector<double>& values() const noexcept { return p_; }

private:
    int levels_;
    std::vector<double> p_;
};

/// Counts every in-window ordered pair at the direction's offset, adds the
/// transpose and normalizes. Throws std::invalid_argument when the window
/// holds no pair at that offset or a level is out of range.
CooccurrenceMatrix cooccurrence(const GreyImage& window, Direction direction);

struct HaralickFeatures {
    double second_moment = 0;
    double contrast = 0;
    double correlation = 0;
    double homogeneity = 0;
    double entropy = 0;
    double mean = 0;
    double variance = 0;

    double get(Measure measure) const noexcept;
};

/// Entropy uses ln with 0 ln 0 = 0; correlation is 0 when the variance is 0.
HaralickFeatures haralick(const CooccurrenceMatrix& m);

/// Direction-averaged Haralick measures of one window, computed with the
/// same integer-count kernel extract_texture uses.
HaralickFeatures window_features(const GreyImage& window, std::span<const Direction> directions);

/// Per-pixel texture features for every band in params.bands. Pixels closer
/// than window/2 to a border are invalid. `jobs` caps worker threads
/// (0 = hardware concurrency); the output does not depend on it.
FeatureRaster extract_texture(const BandStack& stack, const GlcmParams& params, unsigned jobs = 1);

/// One feature per band: the raw sample as a real. Every pixel valid.
FeatureRaster extract_spectral(const BandStack& stack);

}  // namespace slummap
