#include "magrep/ae/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "magrep/common/rng.hpp"

namespace magrep::ae {

Tensor Tensor::from_raster(const grid::Raster& r) {
    Tensor t(1, r.height, r.width);
    t.v = r.values;
    return t;
}

grid::Raster Tensor::channel_raster(int c) const {
    grid::Raster out(height, width);
    const std::size_t off = static_cast<std::size_t>(c) * height * width;
    std::copy(v.begin() + off, v.begin() + off + out.size(), out.values.begin());
    return out;
}

LayerSpec LayerSpec::conv(int in_channels, int out_filters, Activation act) {
    LayerSpec l;
    l.kind = LayerKind::kConv;
    l.in_channels = in_channels;
    l.out_filters = out_filters;
    l.activation = act;
    l.weights.assign(static_cast<std::size_t>(out_filters) * in_channels * 9, 0.0);
    l.bias.assign(static_cast<std::size_t>(out_filters), 0.0);
    return l;
}

LayerSpec LayerSpec::maxpool() {
    LayerSpec l;
    l.kind = LayerKind::kMaxPool;
    return l;
}

LayerSpec LayerSpec::upsample() {
    LayerSpec l;
    l.kind = LayerKind::kUpsample;
    return l;
}

Normalization Normalization::from_raster(const grid::Raster& r) {
    return Normalization{r.min_value(), r.max_value()};
}

Tensor Normalization::normalize_patch(const grid::Raster& patch) const {
    Tensor t(1, patch.height, patch.width);
    for (std::size_t i = 0; i < patch.values.size(); ++i) t.v[i] = normalize(patch.values[i]);
    return t;
}

AutoencoderModel AutoencoderModel::default_architecture() {
    AutoencoderModel m;
    m.layers.push_back(LayerSpec::conv(1, 16, Activation::kRelu));
    m.layers.push_back(LayerSpec::maxpool());
    m.layers.push_back(LayerSpec::conv(16, 8, Activation::kRelu));
    m.layers.push_back(LayerSpec::conv(8, 8, Activation::kRelu));
    m.layers.push_back(LayerSpec::upsample());
    m.layers.push_back(LayerSpec::conv(8, 16, Activation::kRelu));
    m.layers.push_back(LayerSpec::conv(16, 1, Activation::kLinear));
    m.encoder_end = 3;
    return m;
}

AutoencoderModel AutoencoderModel::small_architecture(int filters) {
    AutoencoderModel m;
    m.layers.push_back(LayerSpec::conv(1, filters, Activation::kRelu));
    m.layers.push_back(LayerSpec::maxpool());
    m.layers.push_back(LayerSpec::conv(filters, filters, Activation::kRelu));
    m.layers.push_back(LayerSpec::conv(filters, filters, Activation::kRelu));
    m.layers.push_back(LayerSpec::upsample());
    m.layers.push_back(LayerSpec::conv(filters, filters, Activation::kRelu));
    m.layers.push_back(LayerSpec::conv(filters, 1, Activation::kLinear));
    m.encoder_end = 3;
    return m;
}

void AutoencoderModel::validate() const {
    if (layers.empty()) throw std::runtime_error("model has no layers");
    if (encoder_end < 1 || encoder_end > static_cast<int>(layers.size()))
        throw std::runtime_error("encoder_end out of range");
    int channels = 1;
    for (const auto& l : layers) {
        if (l.kind != LayerKind::kConv) continue;
        if (l.in_channels != channels) throw std::runtime_error("conv layer channel mismatch");
        if (l.weights.size() != static_cast<std::size_t>(l.out_filters) * l.in_channels * 9)
            throw std::runtime_error("conv weight count mismatch");
        if (l.bias.size() != static_cast<std::size_t>(l.out_filters))
            throw std::runtime_error("conv bias count mismatch");
        for (double w : l.weights)
            if (!std::isfinite(w)) throw std::runtime_error("non-finite conv weight");
        channels = l.out_filters;
    }
    if (channels != 1) throw std::runtime_error("reconstruction must have 1 channel");
}

void AutoencoderModel::init_weights(std::uint64_t seed) {
    util::Rng rng(seed);
    for (auto& l : layers) {
        if (l.kind != LayerKind::kConv) continue;
        const double fan_in = l.in_channels * 9;
        const double fan_out = l.out_filters * 9;
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        for (auto& w : l.weights) w = rng.uniform(-bound, bound);
        for (auto& b : l.bias) b = 0.0;
    }
}

std::size_t AutoencoderModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weights.size() + l.bias.size();
    return n;
}

int AutoencoderModel::pool_stages() const {
    int n = 0;
    for (const auto& l : layers)
        if (l.kind == LayerKind::kMaxPool) ++n;
    return n;
}

int AutoencoderModel::encoder_map_count(bool encoder_layer_only) const {
    int count = 0;
    int last_conv = -1;
    for (int i = 0; i < encoder_end; ++i)
        if (layers[i].kind == LayerKind::kConv) last_conv = i;
    for (int i = 0; i < encoder_end; ++i) {
        if (layers[i].kind != LayerKind::kConv) continue;
        if (encoder_layer_only && i != last_conv) continue;
        count += layers[i].out_filters;
    }
    return count;
}

Tensor conv2d_forward(const Tensor& input, const LayerSpec& layer) {
    if (layer.kind != LayerKind::kConv) throw std::runtime_error("layer is not conv");
    if (input.channels != layer.in_channels)
        throw std::runtime_error("conv input channel mismatch");
    const int h = input.height, w = input.width;
    Tensor out(layer.out_filters, h, w);
    for (int o = 0; o < layer.out_filters; ++o) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                double acc = layer.bias[o];
                for (int i = 0; i < layer.in_channels; ++i) {
                    for (int ky = 0; ky < 3; ++ky) {
                        const int sy = y + ky - 1;
                        if (sy < 0 || sy >= h) continue;
                        for (int kx = 0; kx < 3; ++kx) {
                            const int sx = x + kx - 1;
                            if (sx < 0 || sx >= w) continue;
                            acc += layer.w(o, i, ky, kx) * input.at(i, sy, sx);
                        }
                    }
                }
                if (layer.activation == Activation::kRelu && acc < 0.0) acc = 0.0;
                out.at(o, y, x) = acc;
            }
        }
    }
    return out;
}

Tensor maxpool2_forward(const Tensor& input, std::vector<int>* argmax) {
    const int oh = (input.height + 1) / 2;
    const int ow = (input.width + 1) / 2;
    Tensor out(input.channels, oh, ow);
    if (argmax) argmax->assign(out.size(), -1);
    for (int c = 0; c < input.channels; ++c) {
        for (int y = 0; y < oh; ++y) {
            for (int x = 0; x < ow; ++x) {
                double best = -std::numeric_limits<double>::infinity();
                int best_idx = -1;
                for (int dy = 0; dy < 2; ++dy) {
                    const int sy = 2 * y + dy;
                    if (sy >= input.height) continue;
                    for (int dx = 0; dx < 2; ++dx) {
                        const int sx = 2 * x + dx;
                        if (sx >= input.width) continue;
                        const int idx =
                            (c * input.height + sy) * input.width + sx;
                        if (input.v[idx] > best) {
                            best = input.v[idx];
                            best_idx = idx;
                        }
                    }
                }
                out.at(c, y, x) = best;
                if (argmax) (*argmax)[(static_cast<std::size_t>(c) * oh + y) * ow + x] = best_idx;
            }
        }
    }
    return out;
}

Tensor upsample2_forward(const Tensor& input) {
    Tensor out(input.channels, input.height * 2, input.width * 2);
    for (int c = 0; c < input.channels; ++c)
        for (int y = 0; y < out.height; ++y)
            for (int x = 0; x < out.width; ++x) out.at(c, y, x) = input.at(c, y / 2, x / 2);
    return out;
}

ForwardResult forward(const AutoencoderModel& model, const Tensor& input, int up_to_layer) {
    const int divisor = 1 << model.pool_stages();
    if (input.height % divisor != 0 || input.width % divisor != 0)
        throw std::runtime_error("patch size must be divisible by " + std::to_string(divisor));
    const int n_layers =
        up_to_layer < 0 ? static_cast<int>(model.layers.size()) : up_to_layer;
    ForwardResult result;
    result.activations.reserve(n_layers);
    result.pool_argmax.resize(n_layers);
    const Tensor* current = &input;
    for (int i = 0; i < n_layers; ++i) {
        const auto& layer = model.layers[i];
        switch (layer.kind) {
            case LayerKind::kConv:
                result.activations.push_back(conv2d_forward(*current, layer));
                break;
            case LayerKind::kMaxPool:
                result.activations.push_back(maxpool2_forward(*current, &result.pool_argmax[i]));
                break;
            case LayerKind::kUpsample:
                result.activations.push_back(upsample2_forward(*current));
                break;
        }
        current = &result.activations.back();
    }
    return result;
}

double mse_loss(const Tensor& reconstruction, const Tensor& target) {
    if (reconstruction.size() != target.size()) throw std::runtime_error("mse shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < target.v.size(); ++i) {
        const double d = reconstruction.v[i] - target.v[i];
        acc += d * d;
    }
    return acc / static_cast<double>(target.v.size());
}

std::vector<grid::Raster> encode_activations(const AutoencoderModel& model, const Tensor& input,
                                             std::vector<MapProvenance>* provenance,
                                             bool encoder_layer_only) {
    const ForwardResult fwd = forward(model, input, model.encoder_end);
    int last_conv = -1;
    for (int i = 0; i < model.encoder_end; ++i)
        if (model.layers[i].kind == LayerKind::kConv) last_conv = i;

    std::vector<grid::Raster> maps;
    if (provenance) provenance->clear();
    for (int i = 0; i < model.encoder_end; ++i) {
        if (model.layers[i].kind != LayerKind::kConv) continue;
        if (encoder_layer_only && i != last_conv) continue;
        const Tensor& act = fwd.activations[i];
        for (int f = 0; f < act.channels; ++f) {
            maps.push_back(act.channel_raster(f));
            if (provenance) provenance->push_back(MapProvenance{i + 1, f});
        }
    }
    return maps;
}

}  // namespace magrep::ae
