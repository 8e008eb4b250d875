#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace magrep::grid {

// Single-band 2-D grid of real values, row-major. Used for the source
// magnetic image, patches, and stitched activation maps alike.
struct Raster {
    int height = 0;
    int width = 0;
    std::vector<double> values;  // height * width, row-major

    Raster() = default;
    Raster(int h, int w, double fill = 0.0)
        : height(h), width(w), values(static_cast<std::size_t>(h) * w, fill) {}

    double& at(int r, int c) { return values[static_cast<std::size_t>(r) * width + c]; }
    double at(int r, int c) const { return values[static_cast<std::size_t>(r) * width + c]; }
    std::size_t size() const { return values.size(); }
    bool in_bounds(int r, int c) const { return r >= 0 && r < height && c >= 0 && c < width; }

    double min_value() const;
    double max_value() const;

    // Throws if dims are non-positive, the value count mismatches, or any
    // value is non-finite.
    void validate() const;
};

// Per-pixel class grid: 0 = non-deposit, 1 = deposit, 2 = unknown.
struct LabelMap {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> labels;  // row-major

    LabelMap() = default;
    LabelMap(int h, int w, std::uint8_t fill = 2)
        : height(h), width(w), labels(static_cast<std::size_t>(h) * w, fill) {}

    std::uint8_t& at(int r, int c) { return labels[static_cast<std::size_t>(r) * width + c]; }
    std::uint8_t at(int r, int c) const { return labels[static_cast<std::size_t>(r) * width + c]; }

    void validate() const;
};

enum class BoundaryPolicy { kReflect };

// Window geometry for per-pixel patches. For even patch_size the window
// around center c spans [c - P/2, c + P/2 - 1] per axis, so there is exactly
// one patch per pixel at stride 1.
struct PatchSpec {
    int patch_size = 50;
    int stride = 1;
    BoundaryPolicy boundary = BoundaryPolicy::kReflect;

    void validate() const;
    int window_start(int center) const { return center - patch_size / 2; }
};

// Mirror index without repeating the edge sample; indices beyond one
// reflection fold back again ( ... 2 1 | 0 1 2 ... n-1 | n-2 n-3 ... ).
int reflect_index(int i, int n);

Raster extract_patch(const Raster& image, int center_row, int center_col, const PatchSpec& spec);

// Row-major centers, every stride-th pixel; count = ceil(H/s) * ceil(W/s).
std::vector<std::pair<int, int>> iter_centers(const Raster& image, const PatchSpec& spec);
std::size_t center_count(int height, int width, int stride);

// Accumulates overlapping patches at their extraction windows and averages.
// Patch cells whose target pixel falls outside the output are dropped.
class StitchAccumulator {
public:
    StitchAccumulator(int out_height, int out_width, const PatchSpec& spec);

    void add(int center_row, int center_col, const Raster& patch);
    void merge(const StitchAccumulator& other);

    // sum/count per pixel; zero-coverage pixels are 0.
    Raster result() const;
    // coverage count per pixel
    const std::vector<std::int64_t>& coverage() const { return count_; }
    bool fully_covered() const;

private:
    int height_;
    int width_;
    PatchSpec spec_;
    std::vector<double> sum_;
    std::vector<std::int64_t> count_;
};

Raster stitch_overlapping(const std::vector<std::pair<std::pair<int, int>, Raster>>& patches,
                          int out_height, int out_width, const PatchSpec& spec);

// Nearest-neighbor resize; source index = floor((i + 0.5) * src / dst).
Raster resize_nearest(const Raster& image, int new_height, int new_width);

}  // namespace magrep::grid
