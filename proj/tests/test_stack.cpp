#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "magrep/ae/train.hpp"
#include "magrep/common/rng.hpp"
#include "magrep/stitching/stack.hpp"

using namespace magrep;

namespace {

grid::Raster random_image(int h, int w, std::uint64_t seed) {
    util::Rng rng(seed);
    grid::Raster img(h, w);
    for (double& v : img.values) v = rng.uniform(-10.0, 10.0);
    return img;
}

ae::AutoencoderModel identity_encoder() {
    ae::AutoencoderModel model;
    model.layers.push_back(ae::LayerSpec::conv(1, 1, ae::Activation::kLinear));
    model.layers[0].w(0, 0, 1, 1) = 1.0;
    model.encoder_end = 1;
    return model;
}

}  // namespace

TEST_CASE("default architecture stack has 24 maps at source dims") {
    const grid::Raster img = random_image(32, 24, 6);
    ae::AutoencoderModel model = ae::AutoencoderModel::default_architecture();
    model.init_weights(6);
    model.norm = ae::Normalization::from_raster(img);

    stitching::StitchOptions options;
    options.patch = grid::PatchSpec{8, 1};
    const auto stack = stitching::build_activation_stack(img, model, options);
    REQUIRE(stack.maps.size() == 24);
    for (const auto& m : stack.maps) {
        CHECK(m.height == 32);
        CHECK(m.width == 24);
    }
    CHECK(stack.provenance[0].layer == 1);
    CHECK(stack.provenance[23].layer == 3);

    SUBCASE("encoder-only stitching keeps just the bottleneck maps") {
        options.encoder_layer_only = true;
        const auto bottleneck = stitching::build_activation_stack(img, model, options);
        REQUIRE(bottleneck.maps.size() == 8);
        for (const auto& p : bottleneck.provenance) CHECK(p.layer == 3);
        // per-filter independence: encoder maps are unchanged by skipping layer 1
        for (int f = 0; f < 8; ++f)
            CHECK(bottleneck.maps[f].values == stack.maps[16 + f].values);
    }
}

TEST_CASE("zero-weight model stitches to all-zero maps") {
    const grid::Raster img = random_image(16, 16, 8);
    ae::AutoencoderModel model = ae::AutoencoderModel::default_architecture();
    model.norm = ae::Normalization::from_raster(img);
    stitching::StitchOptions options;
    options.patch = grid::PatchSpec{8, 1};
    const auto stack = stitching::build_activation_stack(img, model, options);
    for (const auto& m : stack.maps)
        for (double v : m.values) CHECK(v == 0.0);
}

TEST_CASE("identity encoder reduces stitching to the grid roundtrip") {
    const grid::Raster img = random_image(8, 8, 10);
    ae::AutoencoderModel model = identity_encoder();
    model.norm = ae::Normalization::from_raster(img);

    stitching::StitchOptions options;
    options.patch = grid::PatchSpec{4, 1};
    const auto stack = stitching::build_activation_stack(img, model, options);
    REQUIRE(stack.maps.size() == 1);
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c)
            CHECK(stack.maps[0].at(r, c) ==
                  doctest::Approx(model.norm.normalize(img.at(r, c))).epsilon(1e-12));
}

TEST_CASE("stack build is deterministic and thread-merge matches exactly") {
    const grid::Raster img = random_image(20, 14, 12);
    ae::AutoencoderModel model = ae::AutoencoderModel::default_architecture();
    model.init_weights(12);
    model.norm = ae::Normalization::from_raster(img);

    stitching::StitchOptions options;
    options.patch = grid::PatchSpec{4, 1};
    const auto a = stitching::build_activation_stack(img, model, options);
    const auto b = stitching::build_activation_stack(img, model, options);
    for (std::size_t m = 0; m < a.maps.size(); ++m) CHECK(a.maps[m].values == b.maps[m].values);
}

TEST_CASE("coverage is complete at stride 1 and reported at stride 2") {
    const grid::Raster img = random_image(10, 10, 14);
    ae::AutoencoderModel model = identity_encoder();
    model.norm = ae::Normalization::from_raster(img);
    stitching::StitchOptions options;
    options.patch = grid::PatchSpec{4, 1};
    const auto stack = stitching::build_activation_stack(img, model, options);
    CHECK(stack.fully_covered());
    for (double c : stack.coverage.values) CHECK(c >= 1.0);
    // interior pixels see a full window of contributions
    CHECK(stack.coverage.at(5, 5) == doctest::Approx(16.0));

    options.patch = grid::PatchSpec{1, 2};
    const auto sparse = stitching::build_activation_stack(img, model, options);
    CHECK_FALSE(sparse.fully_covered());
    CHECK(sparse.coverage.at(0, 0) == doctest::Approx(1.0));
    CHECK(sparse.coverage.at(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("stitching rejects a model normalized on a different range") {
    const grid::Raster img = random_image(8, 8, 15);
    ae::AutoencoderModel model = identity_encoder();
    model.norm = ae::Normalization{0.0, 1.0};  // image spans roughly [-10, 10]
    stitching::StitchOptions options;
    options.patch = grid::PatchSpec{4, 1};
    CHECK_THROWS(stitching::build_activation_stack(img, model, options));
    CHECK_THROWS(stitching::reconstructed_image(img, model, options));
}

TEST_CASE("reconstructed image of the identity model matches the input") {
    const grid::Raster img = random_image(8, 8, 16);
    ae::AutoencoderModel model = identity_encoder();
    model.norm = ae::Normalization::from_raster(img);
    stitching::StitchOptions options;
    options.patch = grid::PatchSpec{4, 1};
    const grid::Raster recon = stitching::reconstructed_image(img, model, options);
    REQUIRE(recon.height == img.height);
    REQUIRE(recon.width == img.width);
    for (std::size_t i = 0; i < img.values.size(); ++i)
        CHECK(recon.values[i] == doctest::Approx(img.values[i]).epsilon(1e-9));
}

TEST_CASE("zero-weight model reconstructs the denormalized zero") {
    const grid::Raster img = random_image(8, 8, 18);
    ae::AutoencoderModel model = ae::AutoencoderModel::default_architecture();
    model.norm = ae::Normalization::from_raster(img);
    stitching::StitchOptions options;
    options.patch = grid::PatchSpec{8, 1};
    const grid::Raster recon = stitching::reconstructed_image(img, model, options);
    for (double v : recon.values) CHECK(v == doctest::Approx(model.norm.min));
}

TEST_CASE("trained model reconstructs a constant image within 0.05") {
    grid::Raster img(16, 16, 7.25);
    ae::AutoencoderModel model = ae::AutoencoderModel::small_architecture(4);
    model.init_weights(23);
    model.norm = ae::Normalization::from_raster(img);

    const grid::PatchSpec patch{8, 1};
    std::vector<grid::Raster> patches;
    for (const auto& [r, c] : grid::iter_centers(img, patch))
        patches.push_back(grid::extract_patch(img, r, c, patch));
    ae::TrainConfig config;
    config.learning_rate = 1e-2;
    config.epochs = 10;
    config.batch_size = 16;
    config.train_subsample = 64;
    config.seed = 23;
    ae::train(model, patches, config);

    stitching::StitchOptions options;
    options.patch = patch;
    const grid::Raster recon = stitching::reconstructed_image(img, model, options);
    for (double v : recon.values) CHECK(std::abs(v - 7.25) < 0.05);
}

TEST_CASE("stack save/load roundtrips through a directory") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "magrep_tests" / "stack_io";
    fs::remove_all(dir);

    const grid::Raster img = random_image(12, 10, 20);
    ae::AutoencoderModel model = ae::AutoencoderModel::default_architecture();
    model.init_weights(20);
    model.norm = ae::Normalization::from_raster(img);
    stitching::StitchOptions options;
    options.patch = grid::PatchSpec{4, 1};
    const auto stack = stitching::build_activation_stack(img, model, options);

    stitching::save_stack(stack, dir.string());
    const auto back = stitching::load_stack(dir.string());
    REQUIRE(back.maps.size() == stack.maps.size());
    CHECK(back.source_height == stack.source_height);
    CHECK(back.coverage.values == stack.coverage.values);  // counts survive f32
    for (std::size_t m = 0; m < stack.maps.size(); ++m) {
        CHECK(back.provenance[m].layer == stack.provenance[m].layer);
        CHECK(back.provenance[m].filter == stack.provenance[m].filter);
        for (std::size_t i = 0; i < stack.maps[m].values.size(); ++i)
            CHECK(back.maps[m].values[i] ==
                  doctest::Approx(stack.maps[m].values[i]).epsilon(1e-6));
    }

    CHECK_THROWS(stitching::load_stack((dir / "nope").string()));
}
