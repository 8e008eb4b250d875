#include "magrep/svm/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "magrep/common/rng.hpp"

namespace magrep::svm {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

// Platt-style SMO over a dense precomputed Gram matrix. The loop converges
// at half the requested tolerance; the final bias is then recomputed
// canonically (free-SV mean, else the midpoint of the feasible interval),
// which keeps every KKT condition within the full tolerance.
class SmoSolver {
public:
    SmoSolver(const std::vector<std::vector<double>>& X, const std::vector<int>& y,
              const SmoParams& params, double gamma)
        : X_(X),
          y_(y),
          params_(params),
          gamma_(gamma),
          tol_(params.tol * 0.5),
          n_(X.size()),
          rng_(params.seed),
          step_eps_(std::max(params.tol * 0.05, 1e-12)) {
        gram_.assign(n_ * n_, 0.0);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = i; j < n_; ++j) {
                const double k = kernel_eval(params_.kernel, gamma_, X_[i], X_[j]);
                gram_[i * n_ + j] = k;
                gram_[j * n_ + i] = k;
            }
        alpha_.assign(n_, 0.0);
        errors_.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) errors_[i] = -static_cast<double>(y_[i]);
    }

    void solve() {
        int num_changed = 0;
        bool examine_all = true;
        int idle_passes = 0;
        while (num_changed > 0 || examine_all) {
            num_changed = 0;
            if (examine_all) {
                for (std::size_t i = 0; i < n_; ++i) num_changed += examine(i);
            } else {
                for (std::size_t i = 0; i < n_; ++i)
                    if (is_free(alpha_[i])) num_changed += examine(i);
            }
            if (examine_all) {
                examine_all = false;
            } else if (num_changed == 0) {
                examine_all = true;
            }
            idle_passes = num_changed == 0 ? idle_passes + 1 : 0;
            if (idle_passes >= params_.max_passes) break;
        }
    }

    SvmModel build_model() const {
        SvmModel model;
        model.kernel = params_.kernel;
        model.gamma = gamma_;
        model.C = params_.C;
        model.bias = canonical_bias();
        for (std::size_t i = 0; i < n_; ++i) {
            if (alpha_[i] <= 0.0) continue;
            model.support_vectors.push_back(X_[i]);
            model.coeffs.push_back(alpha_[i] * y_[i]);
            model.sv_indices.push_back(static_cast<int>(i));
        }
        return model;
    }

private:
    double k(std::size_t i, std::size_t j) const { return gram_[i * n_ + j]; }
    bool is_free(double a) const { return a > 0.0 && a < params_.C; }

    // y_i - sum_j alpha_j y_j K(i,j) for every i, i.e. what the bias would
    // have to be for point i to sit exactly on its margin
    double margin_bias(std::size_t i) const { return bias_ - errors_[i]; }

    double canonical_bias() const {
        double free_sum = 0.0;
        std::size_t free_count = 0;
        double lo = -std::numeric_limits<double>::infinity();
        double hi = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n_; ++i) {
            const double candidate = margin_bias(i);
            if (is_free(alpha_[i])) {
                free_sum += candidate;
                ++free_count;
            } else if ((alpha_[i] <= 0.0 && y_[i] > 0) || (alpha_[i] > 0.0 && y_[i] < 0)) {
                lo = std::max(lo, candidate);  // b >= y_i - f^_i required
            } else {
                hi = std::min(hi, candidate);
            }
        }
        if (free_count > 0) return free_sum / static_cast<double>(free_count);
        if (!std::isfinite(lo)) return std::isfinite(hi) ? hi : 0.0;
        if (!std::isfinite(hi)) return lo;
        return 0.5 * (lo + hi);
    }

    int examine(std::size_t i2) {
        const double y2 = y_[i2];
        const double a2 = alpha_[i2];
        const double r2 = errors_[i2] * y2;  // y f - 1
        const bool violates = (r2 < -tol_ && a2 < params_.C) || (r2 > tol_ && a2 > 0.0);
        if (!violates) return 0;

        // best |E1 - E2| among free alphas
        std::size_t best = n_;
        double best_gap = -1.0;
        for (std::size_t i = 0; i < n_; ++i) {
            if (!is_free(alpha_[i])) continue;
            const double gap = std::fabs(errors_[i] - errors_[i2]);
            if (gap > best_gap) {
                best_gap = gap;
                best = i;
            }
        }
        if (best < n_ && take_step(best, i2)) return 1;

        // sweep free alphas from a random start, then everything
        const std::size_t start1 = rng_.uniform_int(n_);
        for (std::size_t off = 0; off < n_; ++off) {
            const std::size_t i1 = (start1 + off) % n_;
            if (is_free(alpha_[i1]) && take_step(i1, i2)) return 1;
        }
        const std::size_t start2 = rng_.uniform_int(n_);
        for (std::size_t off = 0; off < n_; ++off) {
            const std::size_t i1 = (start2 + off) % n_;
            if (take_step(i1, i2)) return 1;
        }
        return 0;
    }

    bool take_step(std::size_t i1, std::size_t i2) {
        if (i1 == i2) return false;
        const double a1 = alpha_[i1], a2 = alpha_[i2];
        const double y1 = y_[i1], y2 = y_[i2];
        const double e1 = errors_[i1], e2 = errors_[i2];
        const double s = y1 * y2;
        const double C = params_.C;

        double lo, hi;
        if (y1 != y2) {
            lo = std::max(0.0, a2 - a1);
            hi = std::min(C, C + a2 - a1);
        } else {
            lo = std::max(0.0, a1 + a2 - C);
            hi = std::min(C, a1 + a2);
        }
        if (lo >= hi) return false;

        const double k11 = k(i1, i1), k12 = k(i1, i2), k22 = k(i2, i2);
        const double eta = k11 + k22 - 2.0 * k12;
        double a2_new;
        if (eta > 0.0) {
            a2_new = a2 + y2 * (e1 - e2) / eta;
            a2_new = std::clamp(a2_new, lo, hi);
        } else {
            // objective at the clip bounds
            const double f1 = y1 * (e1 + bias_) - a1 * k11 - s * a2 * k12;
            const double f2 = y2 * (e2 + bias_) - s * a1 * k12 - a2 * k22;
            const double l1 = a1 + s * (a2 - lo);
            const double h1 = a1 + s * (a2 - hi);
            const double obj_lo =
                l1 * f1 + lo * f2 + 0.5 * l1 * l1 * k11 + 0.5 * lo * lo * k22 + s * lo * l1 * k12;
            const double obj_hi =
                h1 * f1 + hi * f2 + 0.5 * h1 * h1 * k11 + 0.5 * hi * hi * k22 + s * hi * h1 * k12;
            if (obj_lo < obj_hi - step_eps_) {
                a2_new = lo;
            } else if (obj_lo > obj_hi + step_eps_) {
                a2_new = hi;
            } else {
                return false;
            }
        }
        if (std::fabs(a2_new - a2) < step_eps_ * (a2_new + a2 + step_eps_)) return false;

        double a1_new = a1 + s * (a2 - a2_new);
        // numerical snap to the box corners
        const double snap = 1e-10 * std::max(1.0, C);
        if (a1_new < snap) a1_new = 0.0;
        if (a1_new > C - snap) a1_new = C;
        if (a2_new < snap) a2_new = 0.0;
        if (a2_new > C - snap) a2_new = C;

        const double d1 = a1_new - a1;
        const double d2 = a2_new - a2;
        const double b1 = bias_ - (e1 + y1 * d1 * k11 + y2 * d2 * k12);
        const double b2 = bias_ - (e2 + y1 * d1 * k12 + y2 * d2 * k22);
        double bias_new;
        if (is_free(a1_new)) {
            bias_new = b1;
        } else if (is_free(a2_new)) {
            bias_new = b2;
        } else {
            bias_new = 0.5 * (b1 + b2);
        }
        const double db = bias_new - bias_;

        for (std::size_t i = 0; i < n_; ++i)
            errors_[i] += y1 * d1 * k(i1, i) + y2 * d2 * k(i2, i) + db;

        alpha_[i1] = a1_new;
        alpha_[i2] = a2_new;
        bias_ = bias_new;
        return true;
    }

    const std::vector<std::vector<double>>& X_;
    const std::vector<int>& y_;
    SmoParams params_;
    double gamma_;
    double tol_;
    std::size_t n_;
    util::Rng rng_;
    double step_eps_;
    std::vector<double> gram_;
    std::vector<double> alpha_;
    std::vector<double> errors_;  // f(x_i) - y_i, kept fresh after every step
    double bias_ = 0.0;
};

}  // namespace

double KernelSpec::resolved_gamma(const std::vector<std::vector<double>>& X) const {
    if (kind == KernelKind::kLinear) return 1.0;
    if (gamma > 0.0) return gamma;
    // "scale": 1 / (n_features * variance over all entries)
    const std::size_t d = X.empty() ? 0 : X[0].size();
    if (d == 0) throw std::runtime_error("cannot resolve gamma on empty features");
    double mean = 0.0;
    std::size_t count = 0;
    for (const auto& row : X)
        for (double v : row) {
            mean += v;
            ++count;
        }
    mean /= static_cast<double>(count);
    double var = 0.0;
    for (const auto& row : X)
        for (double v : row) var += (v - mean) * (v - mean);
    var /= static_cast<double>(count);
    if (var <= 0.0) return 1.0 / static_cast<double>(d);
    return 1.0 / (static_cast<double>(d) * var);
}

double kernel_eval(const KernelSpec& kernel, double gamma, const std::vector<double>& a,
                   const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::runtime_error("kernel dimension mismatch");
    switch (kernel.kind) {
        case KernelKind::kLinear: return dot(a, b);
        case KernelKind::kRbf: return std::exp(-gamma * sq_dist(a, b));
    }
    return 0.0;
}

void SvmModel::validate() const {
    if (support_vectors.size() != coeffs.size())
        throw std::runtime_error("svm coeff count mismatch");
    double balance = 0.0;
    for (double c : coeffs) {
        if (!std::isfinite(c)) throw std::runtime_error("non-finite dual coefficient");
        if (c == 0.0) throw std::runtime_error("support set contains zero-alpha point");
        if (std::fabs(c) > C + 1e-9) throw std::runtime_error("dual coefficient exceeds C");
        balance += c;
    }
    if (std::fabs(balance) > 1e-6) throw std::runtime_error("sum alpha_i y_i deviates from 0");
}

SvmModel train_smo(const std::vector<std::vector<double>>& X, const std::vector<int>& y,
                   const SmoParams& params) {
    if (X.size() != y.size()) throw std::runtime_error("X/y row count mismatch");
    if (X.size() < 2) throw std::runtime_error("need at least 2 training rows");
    if (X.size() > 8192) throw std::runtime_error("training set too large for dense Gram");
    const std::size_t d = X[0].size();
    bool has_pos = false, has_neg = false;
    for (std::size_t i = 0; i < X.size(); ++i) {
        if (X[i].size() != d) throw std::runtime_error("ragged feature rows");
        for (double v : X[i])
            if (!std::isfinite(v)) throw std::runtime_error("non-finite features");
        if (y[i] == 1) {
            has_pos = true;
        } else if (y[i] == -1) {
            has_neg = true;
        } else {
            throw std::runtime_error("labels must be -1 or +1");
        }
    }
    if (!has_pos || !has_neg) throw std::runtime_error("degenerate labels");
    if (!(params.C > 0.0)) throw std::runtime_error("C must be positive");
    if (!(params.tol > 0.0)) throw std::runtime_error("tol must be positive");

    const double gamma = params.kernel.resolved_gamma(X);
    SmoSolver solver(X, y, params, gamma);
    solver.solve();
    SvmModel model = solver.build_model();
    model.validate();
    return model;
}

double decision_function(const SvmModel& model, const std::vector<double>& x) {
    double acc = model.bias;
    for (std::size_t i = 0; i < model.support_vectors.size(); ++i)
        acc += model.coeffs[i] * kernel_eval(model.kernel, model.gamma, model.support_vectors[i], x);
    return acc;
}

int predict_one(const SvmModel& model, const std::vector<double>& x) {
    return decision_function(model, x) >= 0.0 ? 1 : -1;
}

std::vector<int> predict(const SvmModel& model, const std::vector<std::vector<double>>& X) {
    std::vector<int> labels(X.size());
    for (std::size_t i = 0; i < X.size(); ++i) labels[i] = predict_one(model, X[i]);
    return labels;
}

double dual_objective(const SvmModel& model) {
    double linear = 0.0;
    for (double c : model.coeffs) linear += std::fabs(c);
    double quad = 0.0;
    for (std::size_t i = 0; i < model.support_vectors.size(); ++i)
        for (std::size_t j = 0; j < model.support_vectors.size(); ++j)
            quad += model.coeffs[i] * model.coeffs[j] *
                    kernel_eval(model.kernel, model.gamma, model.support_vectors[i],
                                model.support_vectors[j]);
    return linear - 0.5 * quad;
}

KktReport kkt_audit(const SvmModel& model, const std::vector<std::vector<double>>& X,
                    const std::vector<int>& y, double tol) {
    if (model.sv_indices.size() != model.coeffs.size())
        throw std::runtime_error("kkt audit needs training-row provenance");
    std::vector<double> alpha(X.size(), 0.0);
    for (std::size_t s = 0; s < model.sv_indices.size(); ++s)
        alpha[model.sv_indices[s]] = std::fabs(model.coeffs[s]);

    KktReport report;
    const double edge = 1e-9 * std::max(1.0, model.C);
    for (std::size_t i = 0; i < X.size(); ++i) {
        const double yf = y[i] * decision_function(model, X[i]);
        double slack = 0.0;
        if (alpha[i] <= edge) {
            slack = (1.0 - tol) - yf;  // require y f >= 1 - tol
        } else if (alpha[i] >= model.C - edge) {
            slack = yf - (1.0 + tol);  // require y f <= 1 + tol
        } else {
            slack = std::fabs(yf - 1.0) - tol;
        }
        if (slack > 0.0) {
            ++report.violations;
            report.worst_slack = std::max(report.worst_slack, slack);
        }
    }
    return report;
}

}  // namespace magrep::svm
