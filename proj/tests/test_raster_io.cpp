#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "magrep/common/rng.hpp"
#include "magrep/common/sha256.hpp"
#include "magrep/grid/raster_io.hpp"

using namespace magrep;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* name) {
    const fs::path dir = fs::temp_directory_path() / "magrep_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("sha256 known vectors") {
    CHECK(util::sha256_hex("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(util::sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    std::string long_input(1000, 'a');
    CHECK(util::sha256_hex(long_input) ==
          "41edece42d63e8d9bf515a9ba6932e1c20cbc9f5a5d134645adb5db1b9737ea3");
}

TEST_CASE("f32 roundtrip preserves values at float precision") {
    const auto dir = temp_dir("f32");
    grid::Raster img(3, 4);
    util::Rng rng(5);
    for (double& v : img.values) v = rng.uniform(-100.0, 100.0);
    const std::string path = (dir / "img.f32").string();
    grid::write_raster_f32(img, path);
    CHECK(fs::exists(dir / "img.f32.meta.json"));
    const grid::Raster back = grid::read_raster_f32(path);
    REQUIRE(back.height == 3);
    REQUIRE(back.width == 4);
    for (std::size_t i = 0; i < img.values.size(); ++i)
        CHECK(back.values[i] == doctest::Approx(img.values[i]).epsilon(1e-6));
}

TEST_CASE("pgm roundtrip stays within quantization error") {
    const auto dir = temp_dir("pgm");
    grid::Raster img(5, 5);
    util::Rng rng(11);
    for (double& v : img.values) v = rng.uniform(-2.0, 3.0);
    const std::string path = (dir / "img.pgm").string();

    SUBCASE("16-bit") {
        grid::write_raster_pgm(img, path, 16);
        const grid::Raster back = grid::read_raster_pgm(path);
        for (std::size_t i = 0; i < img.values.size(); ++i)
            CHECK(std::abs(back.values[i] - img.values[i]) < 5.0 / 65535.0 + 1e-9);
    }
    SUBCASE("8-bit") {
        grid::write_raster_pgm(img, path, 8);
        const grid::Raster back = grid::read_raster_pgm(path);
        for (std::size_t i = 0; i < img.values.size(); ++i)
            CHECK(std::abs(back.values[i] - img.values[i]) < 5.0 / 255.0 + 1e-9);
    }
}

TEST_CASE("label map pgm roundtrip is exact") {
    const auto dir = temp_dir("labels");
    grid::LabelMap labels(4, 3, 2);
    labels.at(0, 0) = 1;
    labels.at(2, 1) = 0;
    const std::string path = (dir / "labels.pgm").string();
    grid::write_labels_pgm(labels, path);
    const grid::LabelMap back = grid::read_labels_pgm(path);
    CHECK(back.labels == labels.labels);
}

TEST_CASE("constant raster writes a degenerate but readable pgm") {
    const auto dir = temp_dir("flat");
    grid::Raster img(2, 2, 3.25);
    const std::string path = (dir / "flat.pgm").string();
    grid::write_raster_pgm(img, path);
    const grid::Raster back = grid::read_raster_pgm(path);
    for (double v : back.values) CHECK(v == doctest::Approx(3.25));
}

TEST_CASE("reader errors name the problem") {
    const auto dir = temp_dir("bad");
    CHECK_THROWS(grid::read_raster_f32((dir / "missing.f32").string()));

    std::ofstream bad(dir / "bad.pgm", std::ios::binary);
    bad << "P6\n2 2\n255\n";
    bad.close();
    CHECK_THROWS(grid::read_raster_pgm((dir / "bad.pgm").string()));

    // f32 without its sidecar
    std::ofstream orphan(dir / "orphan.f32", std::ios::binary);
    orphan << "xxxx";
    orphan.close();
    CHECK_THROWS(grid::read_raster_f32((dir / "orphan.f32").string()));
}
