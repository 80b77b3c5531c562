#include "slummap/raster.hpp"

#include "slummap/text_config.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace slummap {

namespace fs = std::filesystem;

namespace {

constexpr const char* kLayout = "band-sequential row-major";

const char* dtype_name(Dtype dtype) {
    switch (dtype) {
        case Dtype::U16: return "u16";
        case Dtype::U8: return "u8";
        case Dtype::F32: return "f32";
    }
    return "?";
}

std::size_t parse_dimension(const std::string& text, const std::string& key) {
    std::size_t pos = 0;
    unsigned long long value = 0;
    try {
        value = std::stoull(text, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != text.size() || value == 0 || text.front() == '-')
        throw RasterError("header key '" + key + "' must be a positive integer, got '" + text + "'");
    return static_cast<std::size_t>(value);
}

void check_band_names(const std::vector<std::string>& names) {
    std::set<std::string> seen;
    for (const auto& name : names) {
        if (name.empty()) throw RasterError("band names must be non-empty");
        if (!seen.insert(name).second) throw RasterError("duplicate band name '" + name + "'");
    }
}

// A scene carrying all ten classification bands must list them in scene order.
void check_scene_band_order(const std::vector<std::string>& names) {
    std::vector<std::size_t> positions;
    for (const auto& band : scene_band_order()) {
        const auto it = std::find(names.begin(), names.end(), band);
        if (it == names.end()) return;
        positions.push_back(static_cast<std::size_t>(it - names.begin()));
    }
    if (!std::is_sorted(positions.begin(), positions.end()))
        throw RasterError("scene bands must appear in the order B2,B3,B4,B5,B6,B7,B8,B8A,B11,B12");
}

std::vector<char> read_all(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed for '" + path.string() + "'");
    return bytes;
}

void write_all(const fs::path& path, const void* data, std::size_t size) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

template <typename T>
std::vector<T> read_payload(const fs::path& header_path, const RasterHeader& header) {
    const auto bytes = read_all(payload_path(header_path));
    const std::size_t expected = header.sample_count() * sizeof(T);
    if (bytes.size() != expected) {
        throw RasterError("payload '" + payload_path(header_path).string() + "' holds " +
                          std::to_string(bytes.size()) + " bytes, header implies " +
                          std::to_string(expected));
    }
    std::vector<T> values(header.sample_count());
    std::memcpy(values.data(), bytes.data(), bytes.size());
    if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
        for (auto& v : values) {
            auto* p = reinterpret_cast<unsigned char*>(&v);
            std::reverse(p, p + sizeof(T));
        }
    }
    return values;
}

template <typename T>
void write_payload(const fs::path& header_path, const std::vector<T>& values) {
    if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
        std::vector<T> swapped = values;
        for (auto& v : swapped) {
            auto* p = reinterpret_cast<unsigned char*>(&v);
            std::reverse(p, p + sizeof(T));
        }
        write_all(payload_path(header_path), swapped.data(), swapped.size() * sizeof(T));
    } else {
        write_all(payload_path(header_path), values.data(), values.size() * sizeof(T));
    }
}

RasterHeader expect_header(const fs::path& header_path, Dtype dtype) {
    RasterHeader header = read_header(header_path);
    if (header.dtype != dtype) {
        throw RasterError("'" + header_path.string() + "' has dtype " + dtype_name(header.dtype) +
                          ", expected " + dtype_name(dtype));
    }
    return header;
}

}  // namespace

BandStack::BandStack(std::size_t width, std::size_t height, std::vector<std::string> band_names,
                     std::vector<std::uint16_t> samples)
    : width_(width), height_(height), band_names_(std::move(band_names)), samples_(std::move(samples)) {
    if (width_ == 0 || height_ == 0) throw RasterError("band stack dimensions must be >= 1");
    if (band_names_.empty()) throw RasterError("band stack needs at least one band");
    check_band_names(band_names_);
    if (samples_.size() != width_ * height_ * band_names_.size()) {
        throw RasterError("band stack holds " + std::to_string(samples_.size()) + " samples, expected " +
                          std::to_string(width_ * height_ * band_names_.size()));
    }
}

std::size_t BandStack::band_index(const std::string& name) const {
    const auto it = std::find(band_names_.begin(), band_names_.end(), name);
    if (it == band_names_.end()) throw RasterError("unknown band '" + name + "'");
    return static_cast<std::size_t>(it - band_names_.begin());
}

std::span<const std::uint16_t> BandStack::band(std::size_t index) const {
    if (index >= band_count()) throw RasterError("band index out of range");
    return std::span<const std::uint16_t>(samples_).subspan(index * pixel_count(), pixel_count());
}

LabelMask::LabelMask(std::size_t width, std::size_t height, std::vector<std::uint8_t> labels)
    : LabelMask(width, height, std::move(labels), std::vector<std::uint8_t>(width * height, 1)) {}

LabelMask::LabelMask(std::size_t width, std::size_t height, std::vector<std::uint8_t> labels,
                     std::vector<std::uint8_t> valid)
    : width_(width), height_(height), labels_(std::move(labels)), valid_(std::move(valid)) {
    if (width_ == 0 || height_ == 0) throw RasterError("label mask dimensions must be >= 1");
    if (labels_.size() != width_ * height_ || valid_.size() != width_ * height_)
        throw RasterError("label mask size does not match its dimensions");
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (labels_[i] > 1) {
            throw RasterError("label value " + std::to_string(labels_[i]) + " at pixel " + std::to_string(i) +
                              " is not 0 (non-slum) or 1 (slum)");
        }
        valid_[i] = valid_[i] ? 1 : 0;
    }
}

double LabelMask::slum_fraction() const noexcept {
    std::size_t valid_count = 0;
    std::size_t slum = 0;
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (!valid_[i]) continue;
        ++valid_count;
        slum += labels_[i];
    }
    return valid_count == 0 ? 0.0 : static_cast<double>(slum) / static_cast<double>(valid_count);
}

std::size_t FeatureRaster::valid_count() const noexcept {
    return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
}

void FeatureRaster::validate() const {
    if (valid.size() != pixel_count()) throw RasterError("feature raster validity grid has the wrong size");
    if (values.size() != pixel_count() * feature_count())
        throw RasterError("feature raster value grid has the wrong size");
    check_band_names(feature_names);
    for (std::size_t f = 0; f < feature_count(); ++f) {
        for (std::size_t p = 0; p < pixel_count(); ++p) {
            if (valid[p] && !std::isfinite(value(f, p)))
                throw RasterError("non-finite value for feature '" + feature_names[f] + "'");
        }
    }
}

fs::path payload_path(const fs::path& header_path) {
    fs::path out = header_path;
    out.replace_extension(".bin");
    return out;
}

RasterHeader read_header(const fs::path& header_path) {
    if (!fs::exists(header_path)) throw IoError("header '" + header_path.string() + "' does not exist");
    const KeyValueDocument doc = KeyValueDocument::parse_file(header_path);
    auto require = [&](const std::string& key) -> const std::string& {
        const std::string* value = doc.find("", key);
        if (!value) throw RasterError("header '" + header_path.string() + "' lacks key '" + key + "'");
        return *value;
    };

    RasterHeader header;
    header.width = parse_dimension(require("width"), "width");
    header.height = parse_dimension(require("height"), "height");
    header.bands = split_list(require("bands"));
    if (header.bands.empty()) throw RasterError("header declares no bands");
    check_band_names(header.bands);

    const std::string& dtype = require("dtype");
    if (dtype == "u16") header.dtype = Dtype::U16;
    else if (dtype == "u8") header.dtype = Dtype::U8;
    else if (dtype == "f32") header.dtype = Dtype::F32;
    else throw RasterError("unsupported dtype '" + dtype + "'");

    if (require("byte_order") != "little") throw RasterError("only little-endian payloads are supported");
    if (require("layout") != kLayout)
        throw RasterError("unsupported layout '" + require("layout") + "', expected '" + kLayout + "'");
    return header;
}

void write_header(const fs::path& header_path, const RasterHeader& header) {
    std::ostringstream out;
    out << "width = " << header.width << '\n';
    out << "height = " << header.height << '\n';
    out << "bands = " << join_list(header.bands) << '\n';
    out << "dtype = " << dtype_name(header.dtype) << '\n';
    out << "byte_order = little\n";
    out << "layout = " << kLayout << '\n';
    const std::string text = out.str();
    write_all(header_path, text.data(), text.size());
}

BandStack load_band_stack(const fs::path& header_path) {
    const RasterHeader header = expect_header(header_path, Dtype::U16);
    check_scene_band_order(header.bands);
    auto samples = read_payload<std::uint16_t>(header_path, header);
    return BandStack(header.width, header.height, header.bands, std::move(samples));
}

void save_band_stack(const BandStack& stack, const fs::path& header_path) {
    write_header(header_path, {stack.width(), stack.height(), stack.band_names(), Dtype::U16});
    write_payload(header_path, stack.samples());
}

LabelMask load_label_mask(const fs::path& header_path) {
    const RasterHeader header = expect_header(header_path, Dtype::U8);
    if (header.bands.size() != 1) throw RasterError("label mask must have exactly one band");
    auto labels = read_payload<std::uint8_t>(header_path, header);
    return LabelMask(header.width, header.height, std::move(labels));
}

void save_label_mask(const LabelMask& mask, const fs::path& header_path) {
    write_header(header_path, {mask.width(), mask.height(), {"label"}, Dtype::U8});
    write_payload(header_path, mask.labels());
}

FeatureRaster load_feature_raster(const fs::path& header_path) {
    const RasterHeader header = expect_header(header_path, Dtype::F32);
    FeatureRaster raster;
    raster.width = header.width;
    raster.height = header.height;
    raster.feature_names = header.bands;
    raster.values = read_payload<float>(header_path, header);
    raster.valid.assign(raster.pixel_count(), 1);
    for (std::size_t f = 0; f < raster.feature_count(); ++f) {
        for (std::size_t p = 0; p < raster.pixel_count(); ++p) {
            if (std::isnan(raster.value(f, p))) raster.valid[p] = 0;
        }
    }
    for (std::size_t f = 0; f < raster.feature_count(); ++f) {
        for (std::size_t p = 0; p < raster.pixel_count(); ++p) {
            if (!raster.valid[p]) raster.values[f * raster.pixel_count() + p] = 0.0f;
        }
    }
    raster.validate();
    return raster;
}

void save_feature_raster(const FeatureRaster& raster, const fs::path& header_path) {
    raster.validate();
    std::vector<float> payload = raster.values;
    const float nan = std::numeric_limits<float>::quiet_NaN();
    for (std::size_t f = 0; f < raster.feature_count(); ++f) {
        for (std::size_t p = 0; p < raster.pixel_count(); ++p) {
            if (!raster.valid[p]) payload[f * raster.pixel_count() + p] = nan;
        }
    }
    write_header(header_path, {raster.width, raster.height, raster.feature_names, Dtype::F32});
    write_payload(header_path, payload);
}

void save_prediction_map(const LabelMask& mask, const fs::path& path) {
    std::ostringstream out;
    out << "P5\n" << mask.width() << ' ' << mask.height() << "\n255\n";
    std::string bytes = out.str();
    const std::size_t offset = bytes.size();
    bytes.resize(offset + mask.pixel_count());
    for (std::size_t i = 0; i < mask.pixel_count(); ++i) {
        std::uint8_t grey = kMapInvalid;
        if (mask.valid()[i]) grey = mask.labels()[i] ? kMapSlum : kMapNonSlum;
        bytes[offset + i] = static_cast<char>(grey);
    }
    write_all(path, bytes.data(), bytes.size());
}

LabelMask load_prediction_map(const fs::path& path) {
    const auto bytes = read_all(path);
    std::size_t pos = 0;
    auto token = [&]() {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
                ++pos;
            } else {
                break;
            }
        }
        std::string out;
        while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) out += bytes[pos++];
        return out;
    };
    if (token() != "P5") throw RasterError("'" + path.string() + "' is not a binary greymap (P5)");
    const std::size_t width = parse_dimension(token(), "width");
    const std::size_t height = parse_dimension(token(), "height");
    if (token() != "255") throw RasterError("prediction map must have maxval 255");
    ++pos;  // single whitespace byte before the raster
    if (bytes.size() < pos || bytes.size() - pos != width * height)
        throw RasterError("prediction map payload size does not match its dimensions");
    std::vector<std::uint8_t> labels(width * height, 0);
    std::vector<std::uint8_t> valid(width * height, 1);
    for (std::size_t i = 0; i < width * height; ++i) {
        const auto grey = static_cast<std::uint8_t>(bytes[pos + i]);
        if (grey == kMapSlum) labels[i] = 1;
        else if (grey == kMapInvalid) valid[i] = 0;
        else if (grey != kMapNonSlum) throw RasterError("unexpected grey value " + std::to_string(grey) + " in prediction map");
    }
    return LabelMask(width, height, std::move(labels), std::move(valid));
}

void require_same_shape(std::size_t width_a, std::size_t height_a, std::size_t width_b, std::size_t height_b,
                        const std::string& what) {
    if (width_a != width_b || height_a != height_b) {
        throw RasterError(what + ": dimension mismatch (" + std::to_string(width_a) + "x" + std::to_string(height_a) +
                          " vs " + std::to_string(width_b) + "x" + std::to_string(height_b) + ")");
    }
}

}  // namespace slummap
