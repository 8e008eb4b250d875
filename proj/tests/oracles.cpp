#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace oracles {

using magrep::ae::AutoencoderModel;
using magrep::ae::GradientSet;
using magrep::ae::LayerSpec;
using magrep::ae::Tensor;
using magrep::grid::PatchSpec;
using magrep::grid::Raster;
using magrep::svm::KernelSpec;

Raster stitch_bruteforce(const std::vector<std::pair<std::pair<int, int>, Raster>>& patches,
                         int out_height, int out_width, const PatchSpec& spec) {
    Raster out(out_height, out_width);
    for (int r = 0; r < out_height; ++r) {
        for (int c = 0; c < out_width; ++c) {
            double sum = 0.0;
            long count = 0;
            for (const auto& [center, patch] : patches) {
                const int pr = r - spec.window_start(center.first);
                const int pc = c - spec.window_start(center.second);
                if (pr < 0 || pr >= spec.patch_size || pc < 0 || pc >= spec.patch_size) continue;
                sum += patch.at(pr, pc);
                ++count;
            }
            out.at(r, c) = count > 0 ? sum / static_cast<double>(count) : 0.0;
        }
    }
    return out;
}

Tensor conv3x3_bruteforce(const Tensor& input, const LayerSpec& layer) {
    // pad explicitly, then run a valid correlation
    Tensor padded(input.channels, input.height + 2, input.width + 2);
    for (int c = 0; c < input.channels; ++c)
        for (int y = 0; y < input.height; ++y)
            for (int x = 0; x < input.width; ++x) padded.at(c, y + 1, x + 1) = input.at(c, y, x);

    Tensor out(layer.out_filters, input.height, input.width);
    for (int o = 0; o < layer.out_filters; ++o)
        for (int y = 0; y < input.height; ++y)
            for (int x = 0; x < input.width; ++x) {
                double acc = layer.bias[o];
                for (int i = 0; i < input.channels; ++i)
                    for (int ky = 0; ky < 3; ++ky)
                        for (int kx = 0; kx < 3; ++kx)
                            acc += layer.w(o, i, ky, kx) * padded.at(i, y + ky, x + kx);
                if (layer.activation == magrep::ae::Activation::kRelu) acc = std::max(0.0, acc);
                out.at(o, y, x) = acc;
            }
    return out;
}

namespace {

double batch_loss(const AutoencoderModel& model, const std::vector<Tensor>& batch) {
    double loss = 0.0;
    for (const auto& sample : batch) {
        const auto fwd = magrep::ae::forward(model, sample);
        loss += magrep::ae::mse_loss(fwd.reconstruction(), sample);
    }
    return loss / static_cast<double>(batch.size());
}

}  // namespace

FdCheck finite_difference_check(const AutoencoderModel& model, const std::vector<Tensor>& batch,
                                const GradientSet& analytic, double h) {
    FdCheck check;
    AutoencoderModel probe = model;
    for (std::size_t li = 0; li < model.layers.size(); ++li) {
        auto check_param = [&](double& param, double grad) {
            const double saved = param;
            param = saved + h;
            const double up = batch_loss(probe, batch);
            param = saved - h;
            const double down = batch_loss(probe, batch);
            param = saved;
            const double fd = (up - down) / (2.0 * h);
            const double denom = std::max({std::fabs(fd), std::fabs(grad), 1e-6});
            check.max_rel_error = std::max(check.max_rel_error, std::fabs(fd - grad) / denom);
            ++check.params_checked;
        };
        for (std::size_t i = 0; i < probe.layers[li].weights.size(); ++i)
            check_param(probe.layers[li].weights[i], analytic.layers[li].dweights[i]);
        for (std::size_t i = 0; i < probe.layers[li].bias.size(); ++i)
            check_param(probe.layers[li].bias[i], analytic.layers[li].dbias[i]);
    }
    return check;
}

double fd_kink_margin(const AutoencoderModel& model, const std::vector<Tensor>& batch) {
    double margin = std::numeric_limits<double>::infinity();
    for (const Tensor& sample : batch) {
        const auto fwd = magrep::ae::forward(model, sample);
        for (std::size_t li = 0; li < model.layers.size(); ++li) {
            const Tensor& in = li == 0 ? sample : fwd.activations[li - 1];
            const auto& layer = model.layers[li];
            if (layer.kind == magrep::ae::LayerKind::kConv &&
                layer.activation == magrep::ae::Activation::kRelu) {
                magrep::ae::LayerSpec linear = layer;
                linear.activation = magrep::ae::Activation::kLinear;
                const Tensor pre = magrep::ae::conv2d_forward(in, linear);
                for (double v : pre.v) margin = std::min(margin, std::fabs(v));
            } else if (layer.kind == magrep::ae::LayerKind::kMaxPool) {
                const Tensor& out = fwd.activations[li];
                for (int c = 0; c < in.channels; ++c)
                    for (int y = 0; y < out.height; ++y)
                        for (int x = 0; x < out.width; ++x) {
                            double best = -std::numeric_limits<double>::infinity();
                            double second = best;
                            for (int dy = 0; dy < 2; ++dy)
                                for (int dx = 0; dx < 2; ++dx) {
                                    const int sy = 2 * y + dy, sx = 2 * x + dx;
                                    if (sy >= in.height || sx >= in.width) continue;
                                    const double v = in.at(c, sy, sx);
                                    if (v > best) {
                                        second = best;
                                        best = v;
                                    } else if (v > second) {
                                        second = v;
                                    }
                                }
                            // dead windows carry no gradient; ties there are benign
                            if (best > 0.0 && std::isfinite(second))
                                margin = std::min(margin, best - second);
                        }
            }
        }
    }
    return margin;
}

namespace {

std::vector<double> gram_matrix(const std::vector<std::vector<double>>& X, const KernelSpec& kernel,
                                double gamma) {
    const std::size_t n = X.size();
    std::vector<double> k(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            k[i * n + j] = magrep::svm::kernel_eval(kernel, gamma, X[i], X[j]);
    return k;
}

// Euclidean projection onto {0 <= a <= C, sum_i y_i a_i = 0} by bisection on
// the equality multiplier.
void project(std::vector<double>& alpha, const std::vector<int>& y, double C) {
    const std::size_t n = alpha.size();
    auto constraint = [&](double lambda) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            s += y[i] * std::clamp(alpha[i] - lambda * y[i], 0.0, C);
        return s;  // nonincreasing in lambda
    };
    double bound = C + 1.0;
    for (double a : alpha) bound = std::max(bound, std::fabs(a) + C + 1.0);
    double lo = -bound, hi = bound;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (constraint(mid) > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    const double lambda = 0.5 * (lo + hi);
    for (std::size_t i = 0; i < n; ++i) alpha[i] = std::clamp(alpha[i] - lambda * y[i], 0.0, C);
}

}  // namespace

double dual_objective_of(const std::vector<double>& alpha,
                         const std::vector<std::vector<double>>& X, const std::vector<int>& y,
                         const KernelSpec& kernel, double gamma) {
    const std::size_t n = alpha.size();
    const auto k = gram_matrix(X, kernel, gamma);
    double linear = 0.0, quad = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        linear += alpha[i];
        for (std::size_t j = 0; j < n; ++j)
            quad += alpha[i] * alpha[j] * y[i] * y[j] * k[i * n + j];
    }
    return linear - 0.5 * quad;
}

QpSolution solve_dual_projected_gradient(const std::vector<std::vector<double>>& X,
                                         const std::vector<int>& y, double C,
                                         const KernelSpec& kernel, double gamma, int iterations) {
    const std::size_t n = X.size();
    const auto k = gram_matrix(X, kernel, gamma);

    // infinity-norm bound on the Hessian spectrum
    double lipschitz = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) row += std::fabs(k[i * n + j]);
        lipschitz = std::max(lipschitz, row);
    }
    const double step = 1.0 / (lipschitz + 1.0);

    std::vector<double> alpha(n, 0.0);
    project(alpha, y, C);
    std::vector<double> grad(n);
    for (int it = 0; it < iterations; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            double qa = 0.0;
            for (std::size_t j = 0; j < n; ++j) qa += y[i] * y[j] * k[i * n + j] * alpha[j];
            grad[i] = 1.0 - qa;
        }
        for (std::size_t i = 0; i < n; ++i) alpha[i] += step * grad[i];
        project(alpha, y, C);
    }

    QpSolution sol;
    sol.alpha = alpha;
    sol.objective = dual_objective_of(alpha, X, y, kernel, gamma);
    sol.bias = canonical_bias(alpha, X, y, C, kernel, gamma);
    return sol;
}

double canonical_bias(const std::vector<double>& alpha, const std::vector<std::vector<double>>& X,
                      const std::vector<int>& y, double C, const KernelSpec& kernel,
                      double gamma) {
    const std::size_t n = alpha.size();
    const auto k = gram_matrix(X, kernel, gamma);
    auto margin_sum = [&](std::size_t i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += alpha[j] * y[j] * k[i * n + j];
        return s;
    };

    const double edge = 1e-7 * std::max(1.0, C);
    double free_sum = 0.0;
    std::size_t free_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (alpha[i] > edge && alpha[i] < C - edge) {
            free_sum += y[i] - margin_sum(i);
            ++free_count;
        }
    }
    if (free_count > 0) return free_sum / static_cast<double>(free_count);

    // all alphas at a bound: midpoint of the feasible interval
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const double s = margin_sum(i);
        const bool at_zero = alpha[i] <= edge;
        if (at_zero) {
            if (y[i] > 0)
                lo = std::max(lo, 1.0 - s);
            else
                hi = std::min(hi, -1.0 - s);
        } else {
            if (y[i] > 0)
                hi = std::min(hi, 1.0 - s);
            else
                lo = std::max(lo, -1.0 - s);
        }
    }
    if (!std::isfinite(lo) && !std::isfinite(hi)) return 0.0;
    if (!std::isfinite(lo)) return hi;
    if (!std::isfinite(hi)) return lo;
    return 0.5 * (lo + hi);
}

std::vector<int> predict_with(const std::vector<double>& alpha, double bias,
                              const std::vector<std::vector<double>>& X, const std::vector<int>& y,
                              const std::vector<std::vector<double>>& probes,
                              const KernelSpec& kernel, double gamma) {
    std::vector<int> out;
    out.reserve(probes.size());
    for (const auto& p : probes) {
        double f = bias;
        for (std::size_t j = 0; j < X.size(); ++j)
            f += alpha[j] * y[j] * magrep::svm::kernel_eval(kernel, gamma, X[j], p);
        out.push_back(f >= 0.0 ? 1 : -1);
    }
    return out;
}

}  // namespace oracles
