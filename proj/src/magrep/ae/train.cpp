#include "magrep/ae/train.hpp"

#include <cmath>
#include <stdexcept>

#include "magrep/common/parallel.hpp"
#include "magrep/common/rng.hpp"

namespace magrep::ae {

namespace {

// Backward through one sample; returns the sample loss and accumulates
// parameter gradients into `grads` (unscaled, caller divides by batch size).
double backprop_sample(const AutoencoderModel& model, const Tensor& input, GradientSet& grads) {
    const ForwardResult fwd = forward(model, input);
    const Tensor& recon = fwd.reconstruction();
    const double loss = mse_loss(recon, input);

    const int n_layers = static_cast<int>(model.layers.size());
    // d(loss)/d(recon)
    Tensor delta(recon.channels, recon.height, recon.width);
    const double inv = 2.0 / static_cast<double>(recon.size());
    for (std::size_t i = 0; i < delta.v.size(); ++i)
        delta.v[i] = inv * (recon.v[i] - input.v[i]);

    for (int li = n_layers - 1; li >= 0; --li) {
        const LayerSpec& layer = model.layers[li];
        const Tensor& in = li == 0 ? input : fwd.activations[li - 1];
        const Tensor& out = fwd.activations[li];

        switch (layer.kind) {
            case LayerKind::kConv: {
                // gate by forward sign, then scatter into dW/db/dIn
                if (layer.activation == Activation::kRelu) {
                    for (std::size_t i = 0; i < delta.v.size(); ++i)
                        if (out.v[i] <= 0.0) delta.v[i] = 0.0;
                }
                LayerGradients& lg = grads.layers[li];
                Tensor din(in.channels, in.height, in.width);
                const int h = out.height, w = out.width;
                for (int o = 0; o < layer.out_filters; ++o) {
                    for (int y = 0; y < h; ++y) {
                        for (int x = 0; x < w; ++x) {
                            const double d = delta.at(o, y, x);
                            if (d == 0.0) continue;
                            lg.dbias[o] += d;
                            for (int i = 0; i < layer.in_channels; ++i) {
                                for (int ky = 0; ky < 3; ++ky) {
                                    const int sy = y + ky - 1;
                                    if (sy < 0 || sy >= h) continue;
                                    for (int kx = 0; kx < 3; ++kx) {
                                        const int sx = x + kx - 1;
                                        if (sx < 0 || sx >= w) continue;
                                        const std::size_t wi =
                                            ((static_cast<std::size_t>(o) * layer.in_channels + i) * 3 + ky) * 3 +
                                            kx;
                                        lg.dweights[wi] += d * in.at(i, sy, sx);
                                        din.at(i, sy, sx) += d * layer.weights[wi];
                                    }
                                }
                            }
                        }
                    }
                }
                delta = std::move(din);
                break;
            }
            case LayerKind::kMaxPool: {
                Tensor din(in.channels, in.height, in.width);
                const auto& argmax = fwd.pool_argmax[li];
                for (std::size_t i = 0; i < delta.v.size(); ++i)
                    if (argmax[i] >= 0) din.v[argmax[i]] += delta.v[i];
                delta = std::move(din);
                break;
            }
            case LayerKind::kUpsample: {
                Tensor din(in.channels, in.height, in.width);
                for (int c = 0; c < delta.channels; ++c)
                    for (int y = 0; y < delta.height; ++y)
                        for (int x = 0; x < delta.width; ++x)
                            din.at(c, y / 2, x / 2) += delta.at(c, y, x);
                delta = std::move(din);
                break;
            }
        }
    }
    return loss;
}

struct AdamState {
    std::vector<LayerGradients> m;
    std::vector<LayerGradients> v;
    long t = 0;

    explicit AdamState(const AutoencoderModel& model) {
        const GradientSet z = GradientSet::zeros_like(model);
        m = z.layers;
        v = z.layers;
    }
};

void apply_update(AutoencoderModel& model, const GradientSet& grads, const TrainConfig& config,
                  AdamState& adam) {
    if (config.optimizer == Optimizer::kSgd) {
        for (std::size_t li = 0; li < model.layers.size(); ++li) {
            LayerSpec& layer = model.layers[li];
            const LayerGradients& lg = grads.layers[li];
            for (std::size_t i = 0; i < layer.weights.size(); ++i)
                layer.weights[i] -= config.learning_rate * lg.dweights[i];
            for (std::size_t i = 0; i < layer.bias.size(); ++i)
                layer.bias[i] -= config.learning_rate * lg.dbias[i];
        }
        return;
    }

    const AdamParams p;
    adam.t += 1;
    const double bc1 = 1.0 - std::pow(p.beta1, static_cast<double>(adam.t));
    const double bc2 = 1.0 - std::pow(p.beta2, static_cast<double>(adam.t));
    auto step = [&](double& param, double g, double& m, double& v) {
        m = p.beta1 * m + (1.0 - p.beta1) * g;
        v = p.beta2 * v + (1.0 - p.beta2) * g * g;
        param -= config.learning_rate * (m / bc1) / (std::sqrt(v / bc2) + p.epsilon);
    };
    for (std::size_t li = 0; li < model.layers.size(); ++li) {
        LayerSpec& layer = model.layers[li];
        const LayerGradients& lg = grads.layers[li];
        for (std::size_t i = 0; i < layer.weights.size(); ++i)
            step(layer.weights[i], lg.dweights[i], adam.m[li].dweights[i], adam.v[li].dweights[i]);
        for (std::size_t i = 0; i < layer.bias.size(); ++i)
            step(layer.bias[i], lg.dbias[i], adam.m[li].dbias[i], adam.v[li].dbias[i]);
    }
}

}  // namespace

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0)) throw std::runtime_error("learning_rate must be >= 0");
    if (epochs < 1) throw std::runtime_error("epochs must be >= 1");
    if (batch_size < 1) throw std::runtime_error("batch_size must be >= 1");
}

GradientSet GradientSet::zeros_like(const AutoencoderModel& model) {
    GradientSet g;
    g.layers.resize(model.layers.size());
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        g.layers[i].dweights.assign(model.layers[i].weights.size(), 0.0);
        g.layers[i].dbias.assign(model.layers[i].bias.size(), 0.0);
    }
    return g;
}

void GradientSet::add(const GradientSet& other) {
    for (std::size_t li = 0; li < layers.size(); ++li) {
        for (std::size_t i = 0; i < layers[li].dweights.size(); ++i)
            layers[li].dweights[i] += other.layers[li].dweights[i];
        for (std::size_t i = 0; i < layers[li].dbias.size(); ++i)
            layers[li].dbias[i] += other.layers[li].dbias[i];
    }
    loss += other.loss;
}

void GradientSet::scale(double s) {
    for (auto& lg : layers) {
        for (auto& w : lg.dweights) w *= s;
        for (auto& b : lg.dbias) b *= s;
    }
    loss *= s;
}

GradientSet compute_gradients(const AutoencoderModel& model, const std::vector<Tensor>& batch,
                              int threads) {
    if (batch.empty()) throw std::runtime_error("empty batch");
    const int n_chunks = std::max(1, threads);
    std::vector<GradientSet> partial(n_chunks, GradientSet::zeros_like(model));
    util::parallel_chunks(batch.size(), threads, [&](int chunk, std::size_t begin, std::size_t end) {
        for (std::size_t s = begin; s < end; ++s)
            partial[chunk].loss += backprop_sample(model, batch[s], partial[chunk]);
    });
    GradientSet total = std::move(partial[0]);
    for (int c = 1; c < n_chunks; ++c) total.add(partial[c]);
    total.scale(1.0 / static_cast<double>(batch.size()));
    return total;
}

TrainResult train(AutoencoderModel& model, const std::vector<grid::Raster>& patches,
                  const TrainConfig& config) {
    config.validate();
    model.validate();
    if (patches.empty()) throw std::runtime_error("no training patches");

    util::Rng rng(config.seed);

    // seeded subsample without replacement
    std::vector<std::size_t> order(patches.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    if (config.train_subsample >= 0 &&
        static_cast<std::size_t>(config.train_subsample) < patches.size()) {
        rng.shuffle(order);
        order.resize(static_cast<std::size_t>(config.train_subsample));
        if (order.empty()) throw std::runtime_error("train_subsample selected no patches");
    }

    std::vector<Tensor> data;
    data.reserve(order.size());
    for (std::size_t idx : order) data.push_back(model.norm.normalize_patch(patches[idx]));

    const std::size_t n = data.size();
    AdamState adam(model);
    TrainResult result;
    result.loss_history.reserve(config.epochs);

    std::vector<std::size_t> epoch_order(n);
    for (std::size_t i = 0; i < n; ++i) epoch_order[i] = i;

    std::vector<Tensor> batch;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(epoch_order);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t stop = std::min(n, start + config.batch_size);
            batch.clear();
            for (std::size_t i = start; i < stop; ++i) batch.push_back(data[epoch_order[i]]);
            const GradientSet grads = compute_gradients(model, batch, config.threads);
            epoch_loss += grads.loss * static_cast<double>(batch.size());
            apply_update(model, grads, config, adam);
        }
        result.loss_history.push_back(epoch_loss / static_cast<double>(n));
    }
    return result;
}

}  // namespace magrep::ae
