#pragma once

#include <cstdint>
#include <vector>

#include "magrep/ae/model.hpp"

namespace magrep::ae {

enum class Optimizer { kSgd, kAdam };

struct TrainConfig {
    double learning_rate = 1e-3;
    int epochs = 20;
    int batch_size = 64;
    // Patches drawn (seeded, without replacement) from the available set;
    // -1 trains on all of them.
    long train_subsample = 20000;
    std::uint64_t seed = 0;
    Optimizer optimizer = Optimizer::kAdam;
    int threads = 1;  // >1 shards batch samples; merge order is fixed

    void validate() const;
};

// Adam moment constants; the paper-facing knobs stay in TrainConfig.
struct AdamParams {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct LayerGradients {
    std::vector<double> dweights;
    std::vector<double> dbias;
};

struct GradientSet {
    std::vector<LayerGradients> layers;  // parallel to model.layers (empty for pool/upsample)
    double loss = 0.0;

    static GradientSet zeros_like(const AutoencoderModel& model);
    void add(const GradientSet& other);
    void scale(double s);
};

// Exact analytic gradients of the mean batch MSE (inputs double as targets).
// Maxpool routes to its argmax, upsample sums over replicated cells, ReLU
// gates by the forward sign.
GradientSet compute_gradients(const AutoencoderModel& model, const std::vector<Tensor>& batch,
                              int threads = 1);

struct TrainResult {
    std::vector<double> loss_history;  // one mean-loss entry per epoch
};

// Trains in place on raw-valued patches; each patch is normalized with
// model.norm before entering the network. Bit-reproducible for a fixed
// (seed, threads).
TrainResult train(AutoencoderModel& model, const std::vector<grid::Raster>& patches,
                  const TrainConfig& config);

}  // namespace magrep::ae
