#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace slummap {

/// Raised for malformed or inconsistent raster data (bad header, size
/// mismatch, unsupported dtype, out-of-range label codes).
class RasterError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a file cannot be opened, read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The ten 10 m / 20 m bands kept for classification, in scene order.
inline const std::vector<std::string>& scene_band_order() {
    static const std::vector<std::string> kBands{"B2", "B3", "B4", "B5", "B6",
                                                 "B7", "B8", "B8A", "B11", "B12"};
    return kBands;
}

/// width x height x bands raster of raw 16-bit reflectance counts,
/// band-sequential and row-major.
class BandStack {
public:
    BandStack() = default;
    BandStack(std::size_t width, std::size_t height, std::vector<std::string> band_names,
              std::vector<std::uint16_t> samples);

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t pixel_count() const noexcept { return width_ * height_; }
    std::size_t band_count() const noexcept { return band_names_.size(); }
    const std::vector<std::string>& band_names() const noexcept { return band_names_; }
    const std::vector<std::uint16_t>& samples() const noexcept { return samples_; }

    /// Index of `name`; throws RasterError when absent.
    std::size_t band_index(const std::string& name) const;
    std::span<const std::uint16_t> band(std::size_t index) const;
    std::span<const std::uint16_t> band(const std::string& name) const { return band(band_index(name)); }

    bool operator==(const BandStack&) const = default;

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<std::string> band_names_;
    std::vector<std::uint16_t> samples_;
};

/// Binary ground truth: 0 = non-slum, 1 = slum, plus a validity channel.
class LabelMask {
public:
    LabelMask() = default;
    /// All pixels valid.
    LabelMask(std::size_t width, std::size_t height, std::vector<std::uint8_t> labels);
    LabelMask(std::size_t width, std::size_t height, std::vector<std::uint8_t> labels,
              std::vector<std::uint8_t> valid);

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t pixel_count() const noexcept { return width_ * height_; }
    const std::vector<std::uint8_t>& labels() const noexcept { return labels_; }
    const std::vector<std::uint8_t>& valid() const noexcept { return valid_; }

    std::uint8_t label(std::size_t row, std::size_t col) const { return labels_[row * width_ + col]; }
    bool is_valid(std::size_t row, std::size_t col) const { return valid_[row * width_ + col] != 0; }

    /// Share of valid pixels labelled slum; 0 when nothing is valid.
    double slum_fraction() const noexcept;

    bool operator==(const LabelMask&) const = default;

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<std::uint8_t> labels_;
    std::vector<std::uint8_t> valid_;
};

/// Per-pixel real features. Invalid pixels (window overhang) carry no data.
struct FeatureRaster {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::string> feature_names;
    std::vector<float> values;         // feature-sequential, row-major
    std::vector<std::uint8_t> valid;   // width * height

    std::size_t feature_count() const noexcept { return feature_names.size(); }
    std::size_t pixel_count() const noexcept { return width * height; }
    std::size_t valid_count() const noexcept;
    float value(std::size_t feature, std::size_t pixel) const { return values[feature * pixel_count() + pixel]; }

    /// Checks shape, name uniqueness and finiteness at valid pixels.
    void validate() const;
};

enum class Dtype { U16, U8, F32 };

/// Parsed `key = value` raster header.
struct RasterHeader {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::string> bands;
    Dtype dtype = Dtype::U16;

    std::size_t sample_count() const noexcept { return width * height * bands.size(); }
};

RasterHeader read_header(const std::filesystem::path& header_path);
void write_header(const std::filesystem::path& header_path, const RasterHeader& header);
/// Payload path paired with a header: same basename, `.bin` extension.
std::filesystem::path payload_path(const std::filesystem::path& header_path);

BandStack load_band_stack(const std::filesystem::path& header_path);
void save_band_stack(const BandStack& stack, const std::filesystem::path& header_path);

/// Values must be 0 or 1. The mask file format has no validity channel,
/// so every loaded pixel is valid.
LabelMask load_label_mask(const std::filesystem::path& header_path);
void save_label_mask(const LabelMask& mask, const std::filesystem::path& header_path);

/// f32 payload, one band per feature; invalid pixels are stored as NaN.
FeatureRaster load_feature_raster(const std::filesystem::path& header_path);
void save_feature_raster(const FeatureRaster& raster, const std::filesystem::path& header_path);

/// Grey values used in prediction maps.
inline constexpr std::uint8_t kMapSlum = 255;
inline constexpr std::uint8_t kMapNonSlum = 0;
inline constexpr std::uint8_t kMapInvalid = 128;

/// Binary greymap (P5, maxval 255): slum 255, non-slum 0, invalid 128.
void save_prediction_map(const LabelMask& mask, const std::filesystem::path& path);
/// Inverse of save_prediction_map; any grey other than 0/128/255 is rejected.
LabelMask load_prediction_map(const std::filesystem::path& path);

/// Throws RasterError unless both rasters share width and height.
void require_same_shape(std::size_t width_a, std::size_t height_a, std::size_t width_b,
                        std::size_t height_b, const std::string& what);

}  // namespace slummap
