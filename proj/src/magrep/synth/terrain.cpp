#include "magrep/synth/terrain.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "magrep/common/rng.hpp"

namespace magrep::synth {

namespace {

// separable Gaussian blur, reflect boundary
grid::Raster gaussian_blur(const grid::Raster& in, double sigma) {
    if (sigma <= 0.0) return in;
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> kernel(2 * radius + 1);
    double norm = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        norm += kernel[i + radius];
    }
    for (double& k : kernel) k /= norm;

    grid::Raster tmp(in.height, in.width);
    for (int r = 0; r < in.height; ++r)
        for (int c = 0; c < in.width; ++c) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[i + radius] * in.at(r, grid::reflect_index(c + i, in.width));
            tmp.at(r, c) = acc;
        }
    grid::Raster out(in.height, in.width);
    for (int r = 0; r < in.height; ++r)
        for (int c = 0; c < in.width; ++c) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[i + radius] * tmp.at(grid::reflect_index(r + i, in.height), c);
            out.at(r, c) = acc;
        }
    return out;
}

double sample_std(const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    return std::sqrt(var / static_cast<double>(v.size()));
}

}  // namespace

void TerrainConfig::validate() const {
    if (height < 1 || width < 1) throw std::runtime_error("terrain dims must be positive");
    if (n_anomalies < 1) throw std::runtime_error("n_anomalies must be >= 1");
    if (anomaly_radius < 1) throw std::runtime_error("anomaly_radius must be >= 1");
    if (labeled_deposit < 1 || labeled_nondeposit < 1)
        throw std::runtime_error("labeled counts must be >= 1");
    const int margin = static_cast<int>(std::ceil(2.5 * anomaly_radius));
    if (height <= 2 * margin || width <= 2 * margin)
        throw std::runtime_error("anomalies do not fit inside the raster");
}

Terrain generate_terrain(const TerrainConfig& config) {
    config.validate();
    util::Rng rng(config.seed);
    const int h = config.height, w = config.width;
    const double r = config.anomaly_radius;
    const double sigma = r / 2.0;

    // anomaly centers: interior, pairwise separated so truth disks stay disjoint
    const int margin = static_cast<int>(std::ceil(2.5 * r));
    const double min_sep = 2.5 * r;
    std::vector<std::pair<int, int>> centers;
    int attempts = 0;
    while (static_cast<int>(centers.size()) < config.n_anomalies) {
        if (++attempts > 1000 * config.n_anomalies)
            throw std::runtime_error("could not place anomalies without overlap");
        const int cr = margin + static_cast<int>(rng.uniform_int(h - 2 * margin));
        const int cc = margin + static_cast<int>(rng.uniform_int(w - 2 * margin));
        bool ok = true;
        for (const auto& [pr, pc] : centers) {
            const double d2 = double(pr - cr) * (pr - cr) + double(pc - cc) * (pc - cc);
            if (d2 < min_sep * min_sep) {
                ok = false;
                break;
            }
        }
        if (ok) centers.emplace_back(cr, cc);
    }

    // background: blurred white noise rescaled to unit spread
    grid::Raster image(h, w);
    if (config.noise_level > 0.0) {
        grid::Raster noise(h, w);
        for (double& v : noise.values) v = rng.normal();
        grid::Raster smooth = gaussian_blur(noise, config.background_smoothness);
        const double spread = sample_std(smooth.values);
        const double scale = spread > 0.0 ? config.noise_level / spread : 0.0;
        for (std::size_t i = 0; i < image.values.size(); ++i)
            image.values[i] = smooth.values[i] * scale;
    } else {
        // keep the seed stream aligned with the noisy path
        for (int i = 0; i < h * w; ++i) rng.normal();
    }

    // dipole signatures: lobes at center +- radius along a random axis
    for (const auto& [cr, cc] : centers) {
        const double theta = rng.uniform(0.0, 2.0 * M_PI);
        const int pr = static_cast<int>(std::lround(cr + r * std::sin(theta)));
        const int pc = static_cast<int>(std::lround(cc + r * std::cos(theta)));
        const int nr = static_cast<int>(std::lround(cr - r * std::sin(theta)));
        const int nc = static_cast<int>(std::lround(cc - r * std::cos(theta)));
        const double denom = 2.0 * sigma * sigma;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const double dp = double(y - pr) * (y - pr) + double(x - pc) * (x - pc);
                const double dn = double(y - nr) * (y - nr) + double(x - nc) * (x - nc);
                image.at(y, x) += config.anomaly_amplitude *
                                  (std::exp(-dp / denom) - std::exp(-dn / denom));
            }
    }

    grid::LabelMap truth(h, w, 0);
    for (const auto& [cr, cc] : centers)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const double d2 = double(y - cr) * (y - cr) + double(x - cc) * (x - cc);
                if (d2 <= r * r) truth.at(y, x) = 1;
            }

    // reveal a sparse label map, seeded sample per class
    std::vector<std::size_t> deposit_px, nondeposit_px;
    for (std::size_t i = 0; i < truth.labels.size(); ++i)
        (truth.labels[i] == 1 ? deposit_px : nondeposit_px).push_back(i);
    if (deposit_px.size() < static_cast<std::size_t>(config.labeled_deposit))
        throw std::runtime_error("not enough deposit pixels to label: have " +
                                 std::to_string(deposit_px.size()));
    if (nondeposit_px.size() < static_cast<std::size_t>(config.labeled_nondeposit))
        throw std::runtime_error("not enough non-deposit pixels to label: have " +
                                 std::to_string(nondeposit_px.size()));

    grid::LabelMap labels(h, w, 2);
    rng.shuffle(deposit_px);
    for (int i = 0; i < config.labeled_deposit; ++i) labels.labels[deposit_px[i]] = 1;
    rng.shuffle(nondeposit_px);
    for (int i = 0; i < config.labeled_nondeposit; ++i) labels.labels[nondeposit_px[i]] = 0;

    Terrain terrain;
    terrain.image = std::move(image);
    terrain.labels = std::move(labels);
    terrain.ground_truth = std::move(truth);
    terrain.anomaly_centers = std::move(centers);
    return terrain;
}

}  // namespace magrep::synth
