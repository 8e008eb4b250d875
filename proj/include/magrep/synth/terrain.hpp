#pragma once

#include <cstdint>
#include <vector>

#include "magrep/grid/raster.hpp"

namespace magrep::synth {

struct TerrainConfig {
    int height = 128;
    int width = 96;
    int n_anomalies = 3;
    double anomaly_amplitude = 3.0;
    int anomaly_radius = 6;
    // Gaussian blur radius (sigma, in pixels) applied to the white-noise
    // background before rescaling it to unit spread
    double background_smoothness = 8.0;
    double noise_level = 1.0;  // background amplitude relative to anomalies
    int labeled_deposit = 14;
    int labeled_nondeposit = 17;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Terrain {
    grid::Raster image;
    grid::LabelMap labels;        // sparse: mostly 2 (unknown)
    grid::LabelMap ground_truth;  // dense {0,1}
    std::vector<std::pair<int, int>> anomaly_centers;
};

// Smoothed-noise background plus dipole-like anomalies: a positive Gaussian
// lobe adjacent to a negative one, axis randomized, lobe centers snapped to
// pixels. Ground truth marks pixels within anomaly_radius of an anomaly
// center; the label map reveals only the configured counts per class.
Terrain generate_terrain(const TerrainConfig& config);

}  // namespace magrep::synth
