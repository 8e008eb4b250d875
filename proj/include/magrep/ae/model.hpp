#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "magrep/grid/raster.hpp"

namespace magrep::ae {

struct Tensor {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> v;

    Tensor() = default;
    Tensor(int c, int h, int w)
        : channels(c), height(h), width(w),
          v(static_cast<std::size_t>(c) * h * w, 0.0) {}

    double& at(int c, int y, int x) {
        return v[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    double at(int c, int y, int x) const {
        return v[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    std::size_t size() const { return v.size(); }

    static Tensor from_raster(const grid::Raster& r);
    grid::Raster channel_raster(int c) const;
};

enum class LayerKind { kConv, kMaxPool, kUpsample };
enum class Activation { kRelu, kLinear };

// Conv layers are 3x3, stride 1, "same" zero padding; pool/upsample factor 2.
struct LayerSpec {
    LayerKind kind = LayerKind::kConv;
    int in_channels = 0;
    int out_filters = 0;
    Activation activation = Activation::kRelu;
    std::vector<double> weights;  // out_filters * in_channels * 3 * 3
    std::vector<double> bias;     // out_filters

    static LayerSpec conv(int in_channels, int out_filters, Activation act);
    static LayerSpec maxpool();
    static LayerSpec upsample();

    double& w(int o, int i, int ky, int kx) {
        return weights[((static_cast<std::size_t>(o) * in_channels + i) * 3 + ky) * 3 + kx];
    }
    double w(int o, int i, int ky, int kx) const {
        return weights[((static_cast<std::size_t>(o) * in_channels + i) * 3 + ky) * 3 + kx];
    }
};

// Min-max mapping of raw raster values into [0,1], stored with the model.
// A constant raster maps to 0.5 everywhere.
struct Normalization {
    double min = 0.0;
    double max = 1.0;

    static Normalization from_raster(const grid::Raster& r);
    bool degenerate() const { return !(max > min); }
    double normalize(double v) const { return degenerate() ? 0.5 : (v - min) / (max - min); }
    double denormalize(double v) const { return degenerate() ? min : min + v * (max - min); }
    Tensor normalize_patch(const grid::Raster& patch) const;
};

struct AutoencoderModel {
    std::vector<LayerSpec> layers;
    int encoder_end = 3;  // 1-based index of the last encoder layer
    Normalization norm;

    // encoder Conv(16) -> MaxPool(2) -> Conv(8); decoder Conv(8) ->
    // Upsample(2) -> Conv(16) -> Conv(1, linear)
    static AutoencoderModel default_architecture();
    // Small stack for gradient checks and fast tests, same pattern with
    // `filters` per conv layer.
    static AutoencoderModel small_architecture(int filters);

    void validate() const;
    void init_weights(std::uint64_t seed);  // Glorot uniform, seeded
    std::size_t parameter_count() const;
    int pool_stages() const;
    // Number of activation maps emitted by encode_activations.
    int encoder_map_count(bool encoder_layer_only = false) const;
};

struct ForwardResult {
    std::vector<Tensor> activations;            // per layer, post-activation
    std::vector<std::vector<int>> pool_argmax;  // per layer; empty unless maxpool
    const Tensor& reconstruction() const { return activations.back(); }
};

Tensor conv2d_forward(const Tensor& input, const LayerSpec& layer);
Tensor maxpool2_forward(const Tensor& input, std::vector<int>* argmax = nullptr);
Tensor upsample2_forward(const Tensor& input);

// Runs layers [0, up_to_layer) — all layers when up_to_layer < 0. The input
// spatial dims must be divisible by 2 (one pool stage).
ForwardResult forward(const AutoencoderModel& model, const Tensor& input, int up_to_layer = -1);

double mse_loss(const Tensor& reconstruction, const Tensor& target);

struct MapProvenance {
    int layer = 0;   // 1-based model layer index
    int filter = 0;  // channel within that layer
};

// Per-filter 2-D feature maps of the conv layers up to encoder_end, ordered
// (layer asc, filter asc). With encoder_layer_only only the last encoder
// conv layer contributes.
std::vector<grid::Raster> encode_activations(const AutoencoderModel& model, const Tensor& input,
                                             std::vector<MapProvenance>* provenance = nullptr,
                                             bool encoder_layer_only = false);

}  // namespace magrep::ae
