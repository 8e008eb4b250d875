#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace magrep::svm {

enum class KernelKind { kLinear, kRbf };

struct KernelSpec {
    KernelKind kind = KernelKind::kRbf;
    // gamma <= 0 requests "scale": 1 / (n_features * feature_variance),
    // resolved against the training matrix at fit time.
    double gamma = 0.0;

    double resolved_gamma(const std::vector<std::vector<double>>& X) const;
};

double kernel_eval(const KernelSpec& kernel, double gamma, const std::vector<double>& a,
                   const std::vector<double>& b);

struct SvmModel {
    std::vector<std::vector<double>> support_vectors;
    std::vector<double> coeffs;  // alpha_i * y_i for retained support vectors
    double bias = 0.0;
    KernelSpec kernel;
    double gamma = 1.0;  // resolved value actually used
    double C = 1.0;
    // training-row index per support vector, for KKT audits; empty after
    // deserialization
    std::vector<int> sv_indices;

    void validate() const;
};

struct SmoParams {
    double C = 1.0;
    KernelSpec kernel;
    double tol = 1e-3;
    // consecutive sweeps without an alpha change before giving up; a clean
    // full sweep already terminates earlier
    int max_passes = 10;
    std::uint64_t seed = 0;
};

// Platt-style sequential minimal optimization. Deterministic given the seed.
// Throws "degenerate labels" when only one class is present.
SvmModel train_smo(const std::vector<std::vector<double>>& X, const std::vector<int>& y,
                   const SmoParams& params);

double decision_function(const SvmModel& model, const std::vector<double>& x);

// sign of the decision value; exact 0 maps to +1
int predict_one(const SvmModel& model, const std::vector<double>& x);
std::vector<int> predict(const SvmModel& model, const std::vector<std::vector<double>>& X);

// Dual objective sum(alpha) - 0.5 * sum_ij alpha_i alpha_j y_i y_j K_ij for
// the retained support set (alpha = |coeff|, y = sign(coeff)).
double dual_objective(const SvmModel& model);

struct KktReport {
    int violations = 0;
    double worst_slack = 0.0;

    bool ok() const { return violations == 0; }
};

// Audits alpha/margin relations over the full training set:
//   alpha = 0      =>  y f >= 1 - tol
//   0 < alpha < C  =>  |y f - 1| <= tol
//   alpha = C      =>  y f <= 1 + tol
KktReport kkt_audit(const SvmModel& model, const std::vector<std::vector<double>>& X,
                    const std::vector<int>& y, double tol);

}  // namespace magrep::svm
