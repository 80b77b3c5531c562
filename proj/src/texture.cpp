#include "slummap/texture.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace slummap {

Offset direction_offset(Direction direction) noexcept {
    switch (direction) {
        case Direction::Deg0: return {0, 1};
        case Direction::Deg45: return {-1, 1};
        case Direction::Deg90: return {-1, 0};
        case Direction::Deg135: return {-1, -1};
    }
    return {0, 1};
}

int direction_degrees(Direction direction) noexcept {
    switch (direction) {
        case Direction::Deg0: return 0;
        case Direction::Deg45: return 45;
        case Direction::Deg90: return 90;
        case Direction::Deg135: return 135;
    }
    return 0;
}

Direction parse_direction(const std::string& text) {
    if (text == "0") return Direction::Deg0;
    if (text == "45") return Direction::Deg45;
    if (text == "90") return Direction::Deg90;
    if (text == "135") return Direction::Deg135;
    throw std::invalid_argument("unknown direction '" + text + "' (expected 0, 45, 90 or 135)");
}

const char* measure_name(Measure measure) noexcept {
    switch (measure) {
        case Measure::SecondMoment: return "second_moment";
        case Measure::Contrast: return "contrast";
        case Measure::Correlation: return "correlation";
        case Measure::Homogeneity: return "homogeneity";
        case Measure::Entropy: return "entropy";
        case Measure::Mean: return "mean";
        case Measure::Variance: return "variance";
    }
    return "?";
}

Measure parse_measure(const std::string& text) {
    for (Measure m : kAllMeasures) {
        if (text == measure_name(m)) return m;
    }
    throw std::invalid_argument("unknown texture measure '" + text + "'");
}

void GlcmParams::validate() const {
    if (levels < 2 || levels > 256) throw std::invalid_argument("grey levels must be in [2, 256]");
    if (window < 3 || window % 2 == 0) throw std::invalid_argument("window must be odd and >= 3");
    if (directions.empty()) throw std::invalid_argument("at least one direction is required");
    if (bands.empty()) throw std::invalid_argument("at least one band is required");
    if (measures.empty()) throw std::invalid_argument("at least one measure is required");
}

std::vector<std::string> GlcmParams::feature_names() const {
    // Measures are emitted in the canonical order whatever order they were listed in.
    std::vector<std::string> names;
    for (const auto& band : bands) {
        for (Measure m : kAllMeasures) {
            if (std::find(measures.begin(), measures.end(), m) != measures.end())
                names.push_back(band + "_" + measure_name(m));
        }
    }
    return names;
}

std::vector<std::uint8_t> quantize(std::span<const std::uint16_t> band, int levels) {
    if (levels < 2 || levels > 256) throw std::invalid_argument("grey levels must be in [2, 256]");
    std::vector<std::uint8_t> out(band.size(), 0);
    if (band.empty()) return out;
    const auto [lo_it, hi_it] = std::minmax_element(band.begin(), band.end());
    const std::uint64_t lo = *lo_it;
    const std::uint64_t span = static_cast<std::uint64_t>(*hi_it) - lo + 1;
    const auto top = static_cast<std::uint64_t>(levels - 1);
    for (std::size_t i = 0; i < band.size(); ++i) {
        const std::uint64_t q = (band[i] - lo) * static_cast<std::uint64_t>(levels) / span;
        out[i] = static_cast<std::uint8_t>(std::min(top, q));
    }
    return out;
}

CooccurrenceMatrix::CooccurrenceMatrix(int levels, std::vector<double> p) : levels_(levels), p_(std::move(p)) {
    if (levels_ < 1 || p_.size() != static_cast<std::size_t>(levels_) * levels_)
        throw std::invalid_argument("co-occurrence matrix size does not match its level count");
}

double HaralickFeatures::get(Measure measure) const noexcept {
    switch (measure) {
        case Measure::SecondMoment: return second_moment;
        case Measure::Contrast: return contrast;
        case Measure::Correlation: return correlation;
        case Measure::Homogeneity: return homogeneity;
        case Measure::Entropy: return entropy;
        case Measure::Mean: return mean;
        case Measure::Variance: return variance;
    }
    return 0.0;
}

HaralickFeatures haralick(const CooccurrenceMatrix& m) {
    const int n = m.levels();
    HaralickFeatures h;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double p = m(i, j);
            if (p <= 0.0) continue;
            const double d2 = static_cast<double>((i - j) * (i - j));
            h.second_moment += p * p;
            h.contrast += d2 * p;
            h.homogeneity += p / (1.0 + d2);
            h.entropy -= p * std::log(p);
            h.mean += i * p;
        }
    }
    double covariance = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double p = m(i, j);
            if (p <= 0.0) continue;
            h.variance += (i - h.mean) * (i - h.mean) * p;
            covariance += (i - h.mean) * (j - h.mean) * p;
        }
    }
    h.correlation = h.variance > 0.0 ? std::clamp(covariance / h.variance, -1.0, 1.0) : 0.0;
    return h;
}

namespace {

/// Integer co-occurrence counts of one direction. `counts` already holds
/// the symmetrized matrix; `total` is twice the number of ordered pairs.
class PairCounter {
public:
    explicit PairCounter(int levels)
        : levels_(levels), counts_(static_cast<std::size_t>(levels) * levels, 0), marginal_(levels, 0) {}

    void add(std::uint8_t a, std::uint8_t b) noexcept {
        ++counts_[a * levels_ + b];
        ++counts_[b * levels_ + a];
        ++marginal_[a];
        ++marginal_[b];
        total_ += 2;
    }

    void remove(std::uint8_t a, std::uint8_t b) noexcept {
        --counts_[a * levels_ + b];
        --counts_[b * levels_ + a];
        --marginal_[a];
        --marginal_[b];
        total_ -= 2;
    }

    void clear() noexcept {
        std::fill(counts_.begin(), counts_.end(), 0u);
        std::fill(marginal_.begin(), marginal_.end(), 0u);
        total_ = 0;
    }

    std::uint64_t total() const noexcept { return total_; }

    /// Haralick measures of the normalized counts. Depends only on the
    /// count state, so sliding and direct construction agree bit for bit.
    /// `log_table[c]` must hold ln(c) for every c up to total().
    HaralickFeatures evaluate(std::span<const double> log_table) const {
        int lo = 0;
        while (lo < levels_ && marginal_[lo] == 0) ++lo;
        int hi = levels_ - 1;
        while (hi >= lo && marginal_[hi] == 0) --hi;

        HaralickFeatures h;
        const double total = static_cast<double>(total_);
        const double log_total = log_table[total_];
        for (int i = lo; i <= hi; ++i) {
            h.mean += i * (marginal_[i] / total);
        }
        for (int i = lo; i <= hi; ++i) {
            h.variance += (i - h.mean) * (i - h.mean) * (marginal_[i] / total);
        }
        double covariance = 0.0;
        for (int i = lo; i <= hi; ++i) {
            const std::uint32_t* row = counts_.data() + static_cast<std::size_t>(i) * levels_;
            for (int j = lo; j <= hi; ++j) {
                const std::uint32_t c = row[j];
                if (c == 0) continue;
                const double p = c / total;
                const double d2 = static_cast<double>((i - j) * (i - j));
                h.second_moment += p * p;
                h.contrast += d2 * p;
                h.homogeneity += p / (1.0 + d2);
                h.entropy -= p * (log_table[c] - log_total);
                covariance += (i - h.mean) * (j - h.mean) * p;
            }
        }
        h.correlation = h.variance > 0.0 ? std::clamp(covariance / h.variance, -1.0, 1.0) : 0.0;
        return h;
    }

private:
    int levels_;
    std::vector<std::uint32_t> counts_;
    std::vector<std::uint32_t> marginal_;
    std::uint64_t total_ = 0;
};

std::vector<double> make_log_table(std::size_t max_count) {
    std::vector<double> table(max_count + 1, 0.0);
    for (std::size_t c = 1; c <= max_count; ++c) table[c] = std::log(static_cast<double>(c));
    return table;
}

/// Grey-level image plus an axis-aligned window into it.
struct WindowRef {
    const std::uint8_t* pixels;
    std::size_t stride;
    long row0, row1;  // inclusive
    long col0, col1;  // inclusive
};

void add_all_pairs(PairCounter& counter, const WindowRef& w, Offset off) {
    for (long y = w.row0; y <= w.row1; ++y) {
        const long ny = y + off.row;
        if (ny < w.row0 || ny > w.row1) continue;
        for (long x = w.col0; x <= w.col1; ++x) {
            const long nx = x + off.col;
            if (nx < w.col0 || nx > w.col1) continue;
            counter.add(w.pixels[y * w.stride + x], w.pixels[ny * w.stride + nx]);
        }
    }
}

/// Pairs whose reference pixel sits in column `x`, with both rows in range.
template <bool Add>
void update_column(PairCounter& counter, const WindowRef& w, Offset off, long x) {
    const long nx = x + off.col;
    for (long y = w.row0; y <= w.row1; ++y) {
        const long ny = y + off.row;
        if (ny < w.row0 || ny > w.row1) continue;
        const std::uint8_t a = w.pixels[y * w.stride + x];
        const std::uint8_t b = w.pixels[ny * w.stride + nx];
        if constexpr (Add) counter.add(a, b);
        else counter.remove(a, b);
    }
}

/// Moves the window one column right. A pair spans columns {x, x + dc};
/// it leaves when its left column is col0 and enters when its right
/// column is col1 + 1.
void slide_right(PairCounter& counter, WindowRef& w, Offset off) {
    const long leaving = w.col0 + std::max(0, -off.col);
    const long entering = w.col1 + 1 - std::max(0, off.col);
    update_column<false>(counter, w, off, leaving);
    ++w.col0;
    ++w.col1;
    update_column<true>(counter, w, off, entering);
}

HaralickFeatures average(std::span<const HaralickFeatures> per_direction) {
    HaralickFeatures avg;
    for (const auto& h : per_direction) {
        avg.second_moment += h.second_moment;
        avg.contrast += h.contrast;
        avg.correlation += h.correlation;
        avg.homogeneity += h.homogeneity;
        avg.entropy += h.entropy;
        avg.mean += h.mean;
        avg.variance += h.variance;
    }
    const double n = static_cast<double>(per_direction.size());
    avg.second_moment /= n;
    avg.contrast /= n;
    avg.correlation /= n;
    avg.homogeneity /= n;
    avg.entropy /= n;
    avg.mean /= n;
    avg.variance /= n;
    return avg;
}

void check_levels(const GreyImage& image) {
    if (image.levels < 1 || image.levels > 256) throw std::invalid_argument("grey levels must be in [1, 256]");
    if (image.pixels.size() != image.width * image.height)
        throw std::invalid_argument("grey image size does not match its dimensions");
    for (auto v : image.pixels) {
        if (v >= image.levels) throw std::invalid_argument("grey level out of range");
    }
}

}  // namespace

CooccurrenceMatrix cooccurrence(const GreyImage& window, Direction direction) {
    check_levels(window);
    const Offset off = direction_offset(direction);
    const auto n = static_cast<std::size_t>(window.levels);
    const auto height = static_cast<long>(window.height);
    const auto width = static_cast<long>(window.width);
    std::vector<double> p(n * n, 0.0);
    double total = 0.0;
    for (long y = 0; y < height; ++y) {
        for (long x = 0; x < width; ++x) {
            const long ny = y + off.row;
            const long nx = x + off.col;
            if (ny < 0 || nx < 0 || ny >= height || nx >= width) continue;
            const std::size_t a = window.at(y, x);
            const std::size_t b = window.at(ny, nx);
            p[a * n + b] += 1.0;
            p[b * n + a] += 1.0;
            total += 2.0;
        }
    }
    if (total == 0.0) throw std::invalid_argument("window contains no pixel pair at the requested offset");
    for (auto& v : p) v /= total;
    return CooccurrenceMatrix(window.levels, std::move(p));
}

HaralickFeatures window_features(const GreyImage& window, std::span<const Direction> directions) {
    check_levels(window);
    if (directions.empty()) throw std::invalid_argument("at least one direction is required");
    const auto log_table = make_log_table(2 * window.width * window.height);
    const WindowRef ref{window.pixels.data(), window.width, 0, static_cast<long>(window.height) - 1, 0,
                        static_cast<long>(window.width) - 1};
    std::vector<HaralickFeatures> per_direction;
    PairCounter counter(window.levels);
    for (Direction d : directions) {
        counter.clear();
        add_all_pairs(counter, ref, direction_offset(d));
        if (counter.total() == 0)
            throw std::invalid_argument("window contains no pixel pair at the requested offset");
        per_direction.push_back(counter.evaluate(log_table));
    }
    return average(per_direction);
}

FeatureRaster extract_texture(const BandStack& stack, const GlcmParams& params, unsigned jobs) {
    params.validate();
    std::vector<std::size_t> band_indices;
    for (const auto& name : params.bands) band_indices.push_back(stack.band_index(name));

    std::vector<Measure> measures;
    for (Measure m : kAllMeasures) {
        if (std::find(params.measures.begin(), params.measures.end(), m) != params.measures.end())
            measures.push_back(m);
    }

    FeatureRaster out;
    out.width = stack.width();
    out.height = stack.height();
    out.feature_names = params.feature_names();
    const std::size_t pixels = out.pixel_count();
    out.values.assign(out.feature_count() * pixels, 0.0f);
    out.valid.assign(pixels, 0);

    const long half = params.window / 2;
    const long width = static_cast<long>(stack.width());
    const long height = static_cast<long>(stack.height());
    if (width < params.window || height < params.window) return out;

    for (long y = half; y < height - half; ++y) {
        for (long x = half; x < width - half; ++x) out.valid[y * width + x] = 1;
    }

    const auto log_table = make_log_table(2 * static_cast<std::size_t>(params.window) * params.window);
    const long first_row = half;
    const long row_count = height - 2 * half;

    if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
    jobs = static_cast<unsigned>(std::min<long>(jobs, row_count));

    for (std::size_t b = 0; b < band_indices.size(); ++b) {
        const auto grey = quantize(stack.band(band_indices[b]), params.levels);
        float* band_out = out.values.data() + b * measures.size() * pixels;

        auto process_rows = [&](long row_begin, long row_end) {
            std::vector<PairCounter> counters(params.directions.size(), PairCounter(params.levels));
            std::vector<HaralickFeatures> per_direction(params.directions.size());
            for (long y = row_begin; y < row_end; ++y) {
                std::vector<WindowRef> windows;
                for (std::size_t d = 0; d < params.directions.size(); ++d) {
                    windows.push_back({grey.data(), stack.width(), y - half, y + half, 0, params.window - 1});
                    counters[d].clear();
                    add_all_pairs(counters[d], windows[d], direction_offset(params.directions[d]));
                }
                for (long x = half; x < width - half; ++x) {
                    if (x > half) {
                        for (std::size_t d = 0; d < params.directions.size(); ++d)
                            slide_right(counters[d], windows[d], direction_offset(params.directions[d]));
                    }
                    for (std::size_t d = 0; d < params.directions.size(); ++d)
                        per_direction[d] = counters[d].evaluate(log_table);
                    const HaralickFeatures avg = average(per_direction);
                    const std::size_t pixel = static_cast<std::size_t>(y * width + x);
                    for (std::size_t m = 0; m < measures.size(); ++m)
                        band_out[m * pixels + pixel] = static_cast<float>(avg.get(measures[m]));
                }
            }
        };

        if (jobs <= 1) {
            process_rows(first_row, first_row + row_count);
        } else {
            std::vector<std::thread> workers;
            const long chunk = (row_count + jobs - 1) / jobs;
            for (unsigned j = 0; j < jobs; ++j) {
                const long begin = first_row + j * chunk;
                const long end = std::min(first_row + row_count, begin + chunk);
                if (begin < end) workers.emplace_back(process_rows, begin, end);
            }
            for (auto& t : workers) t.join();
        }
    }
    return out;
}

FeatureRaster extract_spectral(const BandStack& stack) {
    FeatureRaster out;
    out.width = stack.width();
    out.height = stack.height();
    out.feature_names = stack.band_names();
    out.values.resize(stack.samples().size());
    std::transform(stack.samples().begin(), stack.samples().end(), out.values.begin(),
                   [](std::uint16_t v) { return static_cast<float>(v); });
    out.valid.assign(out.pixel_count(), 1);
    return out;
}

}  // namespace slummap
