#pragma once

#include <string>

#include "magrep/grid/raster.hpp"

namespace magrep::grid {

// Raster file formats. Both carry a `<name>.meta.json` sidecar with
// {"min","max","height","width"}.
//  - PGM "P5" (8- or 16-bit): values linearly rescaled to the stored range;
//    lossy, for viewing.
//  - raw little-endian f32 (`.f32`): authoritative pipeline format.

void write_raster_pgm(const Raster& raster, const std::string& path, int bits = 16);
Raster read_raster_pgm(const std::string& path);

void write_raster_f32(const Raster& raster, const std::string& path);
Raster read_raster_f32(const std::string& path);

// Label maps are stored as plain 8-bit PGM with values {0,1,2}, no sidecar.
void write_labels_pgm(const LabelMap& labels, const std::string& path);
LabelMap read_labels_pgm(const std::string& path);

std::string sidecar_path(const std::string& raster_path);

}  // namespace magrep::grid
