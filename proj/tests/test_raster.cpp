#include <doctest.h>

#include <cmath>
#include <limits>

#include "magrep/common/rng.hpp"
#include "magrep/grid/raster.hpp"
#include "oracles.hpp"

using namespace magrep;

namespace {

grid::Raster ramp(int h, int w) {
    grid::Raster r(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) r.at(y, x) = 0.25 * y + 1.5 * x;
    return r;
}

grid::Raster random_raster(int h, int w, util::Rng& rng) {
    grid::Raster r(h, w);
    for (double& v : r.values) v = rng.uniform(-5.0, 5.0);
    return r;
}

std::vector<std::pair<std::pair<int, int>, grid::Raster>> all_patches(const grid::Raster& image,
                                                                      const grid::PatchSpec& spec) {
    std::vector<std::pair<std::pair<int, int>, grid::Raster>> patches;
    for (const auto& [r, c] : grid::iter_centers(image, spec))
        patches.push_back({{r, c}, grid::extract_patch(image, r, c, spec)});
    return patches;
}

}  // namespace

TEST_CASE("reflect_index mirrors without repeating the edge") {
    CHECK(grid::reflect_index(0, 5) == 0);
    CHECK(grid::reflect_index(-1, 5) == 1);
    CHECK(grid::reflect_index(-2, 5) == 2);
    CHECK(grid::reflect_index(5, 5) == 3);
    CHECK(grid::reflect_index(6, 5) == 2);
    CHECK(grid::reflect_index(-1, 2) == 1);
    CHECK(grid::reflect_index(2, 2) == 0);
    CHECK(grid::reflect_index(7, 1) == 0);
    // beyond one reflection folds back again
    CHECK(grid::reflect_index(-5, 3) == 1);
    CHECK(grid::reflect_index(8, 3) == 0);
}

TEST_CASE("extract_patch identity on 1x1") {
    grid::Raster img(1, 1);
    img.at(0, 0) = 42.0;
    const grid::PatchSpec spec{1, 1};
    const grid::Raster patch = grid::extract_patch(img, 0, 0, spec);
    CHECK(patch.height == 1);
    CHECK(patch.width == 1);
    CHECK(patch.at(0, 0) == doctest::Approx(42.0));
}

TEST_CASE("extract_patch reflects past the corner") {
    // 3x3 values 1..9 row-major; window centered at (0,0) starts at (-1,-1),
    // whose reflection is (1,1) = 5
    grid::Raster img(3, 3);
    for (int i = 0; i < 9; ++i) img.values[i] = i + 1;
    const grid::PatchSpec spec{3, 1};
    const grid::Raster patch = grid::extract_patch(img, 0, 0, spec);
    CHECK(patch.at(0, 0) == doctest::Approx(5.0));
    CHECK(patch.at(0, 1) == doctest::Approx(4.0));
    CHECK(patch.at(1, 0) == doctest::Approx(2.0));
    CHECK(patch.at(1, 1) == doctest::Approx(1.0));
    CHECK(patch.at(2, 2) == doctest::Approx(5.0));
}

TEST_CASE("extract_patch rejects out-of-bounds centers") {
    grid::Raster img(4, 4);
    const grid::PatchSpec spec{3, 1};
    CHECK_THROWS_WITH(grid::extract_patch(img, 4, 0, spec), "center outside raster");
    CHECK_THROWS(grid::extract_patch(img, 0, -1, spec));
}

TEST_CASE("even patch window spans [c - P/2, c + P/2 - 1]") {
    grid::Raster img = ramp(8, 8);
    const grid::PatchSpec spec{4, 1};
    const grid::Raster patch = grid::extract_patch(img, 4, 4, spec);
    CHECK(patch.at(0, 0) == doctest::Approx(img.at(2, 2)));
    CHECK(patch.at(3, 3) == doctest::Approx(img.at(5, 5)));
}

TEST_CASE("extract_patch of a centrally symmetric image is symmetric") {
    grid::Raster img(5, 5);
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 5; ++x) img.at(y, x) = std::abs(y - 2) + std::abs(x - 2);
    const grid::PatchSpec spec{5, 1};
    const grid::Raster patch = grid::extract_patch(img, 2, 2, spec);
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 5; ++x)
            CHECK(patch.at(y, x) == doctest::Approx(patch.at(4 - y, 4 - x)));
}

TEST_CASE("iter_centers counts") {
    const grid::PatchSpec stride1{50, 1};
    CHECK(grid::center_count(10, 10, 1) == 100);
    // paper-scale image yields one patch per pixel
    CHECK(grid::center_count(2434, 607, 1) == 1477438);

    grid::Raster img(4, 4);
    const grid::PatchSpec stride2{2, 2};
    const auto centers = grid::iter_centers(img, stride2);
    REQUIRE(centers.size() == 4);
    CHECK(centers[0] == std::pair<int, int>{0, 0});
    CHECK(centers[1] == std::pair<int, int>{0, 2});
    CHECK(centers[2] == std::pair<int, int>{2, 0});
    CHECK(centers[3] == std::pair<int, int>{2, 2});

    // count formula holds exhaustively for all dims and strides up to 64
    std::size_t formula_mismatches = 0;
    for (int h = 1; h <= 64; ++h)
        for (int w = 1; w <= 64; ++w)
            for (int s = 1; s <= 64; ++s) {
                std::size_t rows = 0, cols = 0;
                for (int r = 0; r < h; r += s) ++rows;
                for (int c = 0; c < w; c += s) ++cols;
                if (rows * cols != grid::center_count(h, w, s)) ++formula_mismatches;
            }
    CHECK(formula_mismatches == 0);

    // materialized centers agree with the formula on a sample
    for (int h = 1; h <= 12; ++h)
        for (int w = 1; w <= 12; ++w)
            for (int s = 1; s <= 5; ++s) {
                grid::Raster probe(h, w);
                CHECK(grid::iter_centers(probe, grid::PatchSpec{1, s}).size() ==
                      grid::center_count(h, w, s));
            }
}

TEST_CASE("stitch of a single full-size patch is the identity") {
    grid::Raster img = ramp(6, 6);
    const grid::PatchSpec spec{6, 1};
    const grid::Raster patch = grid::extract_patch(img, 3, 3, spec);
    const grid::Raster out = grid::stitch_overlapping({{{3, 3}, patch}}, 6, 6, spec);
    for (std::size_t i = 0; i < out.values.size(); ++i)
        CHECK(out.values[i] == doctest::Approx(img.values[i]).epsilon(1e-12));
}

TEST_CASE("overlapping constant patches average to the constant") {
    const grid::PatchSpec spec{4, 1};
    grid::Raster patch(4, 4, 7.5);
    const grid::Raster out =
        grid::stitch_overlapping({{{2, 2}, patch}, {{3, 3}, patch}}, 8, 8, spec);
    int covered = 0;
    for (double v : out.values) {
        if (v != 0.0) {
            CHECK(v == doctest::Approx(7.5));
            ++covered;
        }
    }
    CHECK(covered > 16);  // union strictly larger than one window
}

TEST_CASE("per-pixel roundtrip reproduces a ramp within 1e-12") {
    grid::Raster img = ramp(9, 7);
    const grid::PatchSpec spec{4, 1};
    const auto patches = all_patches(img, spec);
    const grid::Raster stitched = grid::stitch_overlapping(patches, 9, 7, spec);
    const grid::Raster expected = oracles::stitch_bruteforce(patches, 9, 7, spec);
    for (std::size_t i = 0; i < img.values.size(); ++i) {
        CHECK(stitched.values[i] == doctest::Approx(img.values[i]).epsilon(1e-12));
        CHECK(stitched.values[i] == doctest::Approx(expected.values[i]).epsilon(1e-12));
    }
}

TEST_CASE("stitch matches the brute-force accumulator on random input") {
    util::Rng rng(2024);
    for (int trial = 0; trial < 5; ++trial) {
        const int h = 3 + static_cast<int>(rng.uniform_int(10));
        const int w = 3 + static_cast<int>(rng.uniform_int(10));
        const int p = 2 + static_cast<int>(rng.uniform_int(4));
        grid::Raster img = random_raster(h, w, rng);
        const grid::PatchSpec spec{p, 1};
        const auto patches = all_patches(img, spec);
        const grid::Raster got = grid::stitch_overlapping(patches, h, w, spec);
        const grid::Raster want = oracles::stitch_bruteforce(patches, h, w, spec);
        for (std::size_t i = 0; i < got.values.size(); ++i)
            CHECK(got.values[i] == doctest::Approx(want.values[i]).epsilon(1e-12));
    }
}

TEST_CASE("stitch is insensitive to patch order") {
    util::Rng rng(7);
    grid::Raster img = random_raster(8, 8, rng);
    const grid::PatchSpec spec{4, 1};
    auto patches = all_patches(img, spec);
    const grid::Raster base = grid::stitch_overlapping(patches, 8, 8, spec);
    rng.shuffle(patches);
    const grid::Raster shuffled = grid::stitch_overlapping(patches, 8, 8, spec);
    for (std::size_t i = 0; i < base.values.size(); ++i)
        CHECK(std::abs(base.values[i] - shuffled.values[i]) < 1e-9);
}

TEST_CASE("stitch with integer inputs is bit-identical across merge layouts") {
    grid::Raster img(8, 6);
    util::Rng rng(99);
    for (double& v : img.values) v = static_cast<double>(rng.uniform_int(100));
    const grid::PatchSpec spec{4, 1};
    const auto patches = all_patches(img, spec);

    grid::StitchAccumulator single(8, 6, spec);
    for (const auto& [c, p] : patches) single.add(c.first, c.second, p);

    // two partial accumulators merged in canonical order
    grid::StitchAccumulator left(8, 6, spec), right(8, 6, spec);
    for (std::size_t i = 0; i < patches.size(); ++i) {
        auto& acc = i < patches.size() / 2 ? left : right;
        acc.add(patches[i].first.first, patches[i].first.second, patches[i].second);
    }
    left.merge(right);

    const grid::Raster a = single.result();
    const grid::Raster b = left.result();
    for (std::size_t i = 0; i < a.values.size(); ++i) CHECK(a.values[i] == b.values[i]);
}

TEST_CASE("stitch coverage mask reports holes at stride 2") {
    const grid::PatchSpec spec{1, 2};
    grid::Raster patch(1, 1, 3.0);
    grid::StitchAccumulator acc(4, 4, spec);
    grid::Raster probe(4, 4);
    for (const auto& [r, c] : grid::iter_centers(probe, spec)) acc.add(r, c, patch);
    CHECK_FALSE(acc.fully_covered());
    const auto& coverage = acc.coverage();
    CHECK(coverage[0] == 1);
    CHECK(coverage[1] == 0);
    CHECK(acc.result().values[1] == 0.0);
}

TEST_CASE("stitch rejects mismatched patch dims") {
    const grid::PatchSpec spec{4, 1};
    grid::StitchAccumulator acc(8, 8, spec);
    grid::Raster bad(3, 3);
    CHECK_THROWS(acc.add(2, 2, bad));
}

TEST_CASE("resize_nearest") {
    grid::Raster img(2, 2);
    img.values = {1, 2, 3, 4};

    SUBCASE("same dims is the identity") {
        const grid::Raster out = grid::resize_nearest(img, 2, 2);
        CHECK(out.values == img.values);
    }
    SUBCASE("2x2 -> 4x4 replicates each value in a block") {
        const grid::Raster out = grid::resize_nearest(img, 4, 4);
        const std::vector<double> expected = {1, 1, 2, 2, 1, 1, 2, 2,
                                              3, 3, 4, 4, 3, 3, 4, 4};
        CHECK(out.values == expected);
    }
    SUBCASE("target dims below 1 are rejected") {
        CHECK_THROWS(grid::resize_nearest(img, 0, 2));
        CHECK_THROWS(grid::resize_nearest(img, 2, -1));
    }
    SUBCASE("50x50 -> 10x10 samples the window centers") {
        grid::Raster big(50, 50);
        for (int y = 0; y < 50; ++y)
            for (int x = 0; x < 50; ++x) big.at(y, x) = y * 50 + x;
        const grid::Raster out = grid::resize_nearest(big, 10, 10);
        CHECK(out.height == 10);
        CHECK(out.width == 10);
        // source index floor((i + 0.5) * 5) = 5i + 2
        CHECK(out.at(0, 0) == doctest::Approx(big.at(2, 2)));
        CHECK(out.at(9, 9) == doctest::Approx(big.at(47, 47)));
    }
}

TEST_CASE("raster validation rejects non-finite values and bad dims") {
    grid::Raster img(2, 2);
    img.values = {1, 2, 3, std::numeric_limits<double>::quiet_NaN()};
    CHECK_THROWS(img.validate());
    grid::LabelMap labels(2, 2);
    labels.labels = {0, 1, 2, 3};
    CHECK_THROWS(labels.validate());
    CHECK_THROWS(grid::PatchSpec{0, 1}.validate());
    CHECK_THROWS(grid::PatchSpec{3, 0}.validate());
}
