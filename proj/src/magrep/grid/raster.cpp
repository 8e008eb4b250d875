#include "magrep/grid/raster.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace magrep::grid {

double Raster::min_value() const {
    if (values.empty()) throw std::runtime_error("min_value on empty raster");
    return *std::min_element(values.begin(), values.end());
}

double Raster::max_value() const {
    if (values.empty()) throw std::runtime_error("max_value on empty raster");
    return *std::max_element(values.begin(), values.end());
}

void Raster::validate() const {
    if (height < 1 || width < 1) throw std::runtime_error("raster dims must be positive");
    if (values.size() != static_cast<std::size_t>(height) * width)
        throw std::runtime_error("raster value count does not match dims");
    for (double v : values) {
        if (!std::isfinite(v)) throw std::runtime_error("raster contains non-finite value");
    }
}

void LabelMap::validate() const {
    if (height < 1 || width < 1) throw std::runtime_error("label map dims must be positive");
    if (labels.size() != static_cast<std::size_t>(height) * width)
        throw std::runtime_error("label count does not match dims");
    for (std::uint8_t l : labels) {
        if (l > 2) throw std::runtime_error("label outside {0,1,2}: " + std::to_string(int(l)));
    }
}

void PatchSpec::validate() const {
    if (patch_size < 1) throw std::runtime_error("patch_size must be >= 1");
    if (stride < 1) throw std::runtime_error("stride must be >= 1");
}

int reflect_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i = ((i % period) + period) % period;
    return i < n ? i : period - i;
}

Raster extract_patch(const Raster& image, int center_row, int center_col, const PatchSpec& spec) {
    spec.validate();
    if (!image.in_bounds(center_row, center_col)) throw std::runtime_error("center outside raster");
    const int p = spec.patch_size;
    const int r0 = spec.window_start(center_row);
    const int c0 = spec.window_start(center_col);
    Raster patch(p, p);
    for (int r = 0; r < p; ++r) {
        const int sr = reflect_index(r0 + r, image.height);
        for (int c = 0; c < p; ++c) {
            const int sc = reflect_index(c0 + c, image.width);
            patch.at(r, c) = image.at(sr, sc);
        }
    }
    return patch;
}

std::size_t center_count(int height, int width, int stride) {
    const auto rows = static_cast<std::size_t>((height + stride - 1) / stride);
    const auto cols = static_cast<std::size_t>((width + stride - 1) / stride);
    return rows * cols;
}

std::vector<std::pair<int, int>> iter_centers(const Raster& image, const PatchSpec& spec) {
    spec.validate();
    std::vector<std::pair<int, int>> centers;
    centers.reserve(center_count(image.height, image.width, spec.stride));
    for (int r = 0; r < image.height; r += spec.stride)
        for (int c = 0; c < image.width; c += spec.stride) centers.emplace_back(r, c);
    return centers;
}

StitchAccumulator::StitchAccumulator(int out_height, int out_width, const PatchSpec& spec)
    : height_(out_height),
      width_(out_width),
      spec_(spec),
      sum_(static_cast<std::size_t>(out_height) * out_width, 0.0),
      count_(static_cast<std::size_t>(out_height) * out_width, 0) {
    if (out_height < 1 || out_width < 1) throw std::runtime_error("stitch dims must be positive");
    spec.validate();
}

void StitchAccumulator::add(int center_row, int center_col, const Raster& patch) {
    const int p = spec_.patch_size;
    if (patch.height != p || patch.width != p)
        throw std::runtime_error("patch dims do not match patch spec");
    if (center_row < 0 || center_row >= height_ || center_col < 0 || center_col >= width_)
        throw std::runtime_error("center outside raster");
    const int r0 = spec_.window_start(center_row);
    const int c0 = spec_.window_start(center_col);
    const int rbeg = std::max(0, -r0);
    const int rend = std::min(p, height_ - r0);
    const int cbeg = std::max(0, -c0);
    const int cend = std::min(p, width_ - c0);
    for (int r = rbeg; r < rend; ++r) {
        const std::size_t row_off = static_cast<std::size_t>(r0 + r) * width_ + c0;
        for (int c = cbeg; c < cend; ++c) {
            sum_[row_off + c] += patch.at(r, c);
            count_[row_off + c] += 1;
        }
    }
}

void StitchAccumulator::merge(const StitchAccumulator& other) {
    if (other.height_ != height_ || other.width_ != width_)
        throw std::runtime_error("stitch accumulator dim mismatch");
    for (std::size_t i = 0; i < sum_.size(); ++i) {
        sum_[i] += other.sum_[i];
        count_[i] += other.count_[i];
    }
}

Raster StitchAccumulator::result() const {
    Raster out(height_, width_);
    for (std::size_t i = 0; i < sum_.size(); ++i)
        out.values[i] = count_[i] > 0 ? sum_[i] / static_cast<double>(count_[i]) : 0.0;
    return out;
}

bool StitchAccumulator::fully_covered() const {
    return std::all_of(count_.begin(), count_.end(), [](std::int64_t c) { return c > 0; });
}

Raster stitch_overlapping(const std::vector<std::pair<std::pair<int, int>, Raster>>& patches,
                          int out_height, int out_width, const PatchSpec& spec) {
    StitchAccumulator acc(out_height, out_width, spec);
    for (const auto& [center, patch] : patches) acc.add(center.first, center.second, patch);
    return acc.result();
}

Raster resize_nearest(const Raster& image, int new_height, int new_width) {
    if (new_height < 1 || new_width < 1) throw std::runtime_error("resize dims must be >= 1");
    Raster out(new_height, new_width);
    const double row_scale = static_cast<double>(image.height) / new_height;
    const double col_scale = static_cast<double>(image.width) / new_width;
    for (int r = 0; r < new_height; ++r) {
        int sr = static_cast<int>(std::floor((r + 0.5) * row_scale));
        sr = std::min(sr, image.height - 1);
        for (int c = 0; c < new_width; ++c) {
            int sc = static_cast<int>(std::floor((c + 0.5) * col_scale));
            sc = std::min(sc, image.width - 1);
            out.at(r, c) = image.at(sr, sc);
        }
    }
    return out;
}

}  // namespace magrep::grid
