#include "magrep/stitching/stack.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "magrep/common/parallel.hpp"
#include "magrep/grid/raster_io.hpp"

namespace magrep::stitching {

namespace {

using nlohmann::json;

// Shared worker: per-filter stitch accumulators over a range of centers, in
// row-major center order within each chunk. `encode` maps a normalized patch
// tensor to the list of P x P rasters to accumulate.
template <typename EncodeFn>
std::vector<grid::StitchAccumulator> accumulate_stack(const grid::Raster& image,
                                                      const ae::AutoencoderModel& model,
                                                      const StitchOptions& options, int n_maps,
                                                      EncodeFn encode) {
    const auto centers = grid::iter_centers(image, options.patch);
    const int threads = std::max(1, options.threads);

    std::vector<std::vector<grid::StitchAccumulator>> partials;
    partials.reserve(threads);
    for (int t = 0; t < threads; ++t) {
        std::vector<grid::StitchAccumulator> accs;
        accs.reserve(n_maps);
        for (int m = 0; m < n_maps; ++m)
            accs.emplace_back(image.height, image.width, options.patch);
        partials.push_back(std::move(accs));
    }

    util::parallel_chunks(centers.size(), threads, [&](int chunk, std::size_t begin, std::size_t end) {
        grid::Raster resized;
        for (std::size_t ci = begin; ci < end; ++ci) {
            const auto [cr, cc] = centers[ci];
            const grid::Raster patch = grid::extract_patch(image, cr, cc, options.patch);
            const ae::Tensor input = model.norm.normalize_patch(patch);
            const std::vector<grid::Raster> maps = encode(input);
            for (int m = 0; m < n_maps; ++m) {
                const int p = options.patch.patch_size;
                if (maps[m].height == p && maps[m].width == p) {
                    partials[chunk][m].add(cr, cc, maps[m]);
                } else {
                    resized = grid::resize_nearest(maps[m], p, p);
                    partials[chunk][m].add(cr, cc, resized);
                }
            }
        }
    });

    for (int t = 1; t < threads; ++t)
        for (int m = 0; m < n_maps; ++m) partials[0][m].merge(partials[t][m]);
    return std::move(partials[0]);
}

}  // namespace

bool ActivationStack::fully_covered() const {
    for (double c : coverage.values)
        if (c <= 0.0) return false;
    return true;
}

void ActivationStack::validate() const {
    if (maps.size() != provenance.size())
        throw std::runtime_error("stack provenance count mismatch");
    for (const auto& m : maps) {
        if (m.height != source_height || m.width != source_width)
            throw std::runtime_error("stack map dims differ from source image");
        m.validate();
    }
    if (coverage.height != source_height || coverage.width != source_width)
        throw std::runtime_error("stack coverage dims differ from source image");
}

namespace {

// the model normalization must span the image it is applied to
void check_normalization(const grid::Raster& image, const ae::AutoencoderModel& model) {
    const double span = model.norm.degenerate() ? 1.0 : model.norm.max - model.norm.min;
    const double slack = 1e-6 * span;
    if (image.min_value() < model.norm.min - slack || image.max_value() > model.norm.max + slack)
        throw std::runtime_error("image range exceeds the model normalization range");
}

}  // namespace

ActivationStack build_activation_stack(const grid::Raster& image, const ae::AutoencoderModel& model,
                                       const StitchOptions& options) {
    image.validate();
    model.validate();
    check_normalization(image, model);
    const int n_maps = model.encoder_map_count(options.encoder_layer_only);

    // provenance comes from a single probe encode
    std::vector<ae::MapProvenance> provenance;
    {
        const grid::Raster probe =
            grid::extract_patch(image, 0, 0, options.patch);
        ae::encode_activations(model, model.norm.normalize_patch(probe), &provenance,
                               options.encoder_layer_only);
    }

    auto accs = accumulate_stack(image, model, options, n_maps, [&](const ae::Tensor& input) {
        return ae::encode_activations(model, input, nullptr, options.encoder_layer_only);
    });

    ActivationStack stack;
    stack.source_height = image.height;
    stack.source_width = image.width;
    stack.provenance = std::move(provenance);
    stack.maps.reserve(n_maps);
    for (auto& acc : accs) stack.maps.push_back(acc.result());
    stack.coverage = grid::Raster(image.height, image.width);
    const auto& counts = accs[0].coverage();
    for (std::size_t i = 0; i < counts.size(); ++i)
        stack.coverage.values[i] = static_cast<double>(counts[i]);
    stack.validate();
    return stack;
}

grid::Raster reconstructed_image(const grid::Raster& image, const ae::AutoencoderModel& model,
                                 const StitchOptions& options) {
    image.validate();
    model.validate();
    check_normalization(image, model);
    auto accs = accumulate_stack(image, model, options, 1, [&](const ae::Tensor& input) {
        const ae::ForwardResult fwd = ae::forward(model, input);
        return std::vector<grid::Raster>{fwd.reconstruction().channel_raster(0)};
    });
    grid::Raster out = accs[0].result();
    for (double& v : out.values) v = model.norm.denormalize(v);
    return out;
}

void save_stack(const ActivationStack& stack, const std::string& dir) {
    stack.validate();
    std::filesystem::create_directories(dir);
    json meta;
    meta["height"] = stack.source_height;
    meta["width"] = stack.source_width;
    json maps = json::array();
    for (std::size_t i = 0; i < stack.maps.size(); ++i) {
        const auto& prov = stack.provenance[i];
        const std::string name =
            "layer" + std::to_string(prov.layer) + "_filter" + std::to_string(prov.filter) + ".f32";
        grid::write_raster_f32(stack.maps[i], (std::filesystem::path(dir) / name).string());
        maps.push_back({{"file", name}, {"layer", prov.layer}, {"filter", prov.filter}});
    }
    meta["maps"] = maps;
    grid::write_raster_f32(stack.coverage, (std::filesystem::path(dir) / "coverage.f32").string());
    meta["coverage"] = "coverage.f32";
    std::ofstream out(std::filesystem::path(dir) / "stack.meta.json", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write stack meta in " + dir);
    out << meta.dump(2) << "\n";
}

ActivationStack load_stack(const std::string& dir) {
    const auto meta_path = std::filesystem::path(dir) / "stack.meta.json";
    std::ifstream in(meta_path);
    if (!in) throw std::runtime_error("missing stack manifest " + meta_path.string());
    json meta;
    in >> meta;

    ActivationStack stack;
    stack.source_height = meta.at("height").get<int>();
    stack.source_width = meta.at("width").get<int>();
    for (const auto& jm : meta.at("maps")) {
        stack.maps.push_back(
            grid::read_raster_f32((std::filesystem::path(dir) / jm.at("file").get<std::string>()).string()));
        stack.provenance.push_back(
            ae::MapProvenance{jm.at("layer").get<int>(), jm.at("filter").get<int>()});
    }
    stack.coverage = grid::read_raster_f32(
        (std::filesystem::path(dir) / meta.at("coverage").get<std::string>()).string());
    stack.validate();
    return stack;
}

}  // namespace magrep::stitching
