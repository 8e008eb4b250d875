#pragma once

#include <string>
#include <vector>

#include "magrep/ae/model.hpp"
#include "magrep/grid/raster.hpp"

namespace magrep::stitching {

// Full-resolution stitched activation maps, one per filter of the encoder
// conv layers, all sharing the source image dims. The coverage raster holds
// the per-pixel contribution count (identical for every map); stride > 1
// leaves holes, which stitch as 0.
struct ActivationStack {
    std::vector<grid::Raster> maps;
    std::vector<ae::MapProvenance> provenance;
    grid::Raster coverage;
    int source_height = 0;
    int source_width = 0;

    bool fully_covered() const;
    void validate() const;
};

struct StitchOptions {
    grid::PatchSpec patch;
    bool encoder_layer_only = false;  // default stitches every encoder conv layer
    int threads = 1;
};

// Runs every per-pixel patch through the encoder, resizes each activation
// map back to patch size, and overlap-averages per filter. Streaming: the
// patch set is never materialized.
ActivationStack build_activation_stack(const grid::Raster& image, const ae::AutoencoderModel& model,
                                       const StitchOptions& options);

// Same stitching applied to the final reconstruction, denormalized back to
// the source value range.
grid::Raster reconstructed_image(const grid::Raster& image, const ae::AutoencoderModel& model,
                                 const StitchOptions& options);

// Directory of `layer<L>_filter<F>.f32` rasters plus `stack.meta.json`.
void save_stack(const ActivationStack& stack, const std::string& dir);
ActivationStack load_stack(const std::string& dir);

}  // namespace magrep::stitching
