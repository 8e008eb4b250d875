#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "magrep/ae/model.hpp"
#include "magrep/eval/metrics.hpp"
#include "magrep/grid/raster.hpp"
#include "magrep/stitching/stack.hpp"
#include "magrep/svm/svm.hpp"

namespace magrep::experiments {

enum class Mode { kPixel, kPatch };
enum class Representation { kSamples, kFeatures };

struct ExperimentConfig {
    Mode mode = Mode::kPixel;
    Representation representation = Representation::kFeatures;
    int positions_per_class = 12;
    int eval_patch_size = 10;  // resize target for patch-mode windows
    svm::KernelSpec kernel;
    double C = 1.0;
    double svm_tol = 1e-3;
    int k_folds = 5;
    std::uint64_t seed = 0;
    grid::PatchSpec patch;  // window geometry shared with the stack build
    bool encoder_layer_only = false;
    int threads = 1;

    void validate() const;
};

struct LabeledPosition {
    int row = 0;
    int col = 0;
    int cls = 0;  // 0 non-deposit, 1 deposit
};

struct Dataset {
    std::vector<std::vector<double>> X;
    std::vector<int> y;                      // -1 / +1 (deposit positive)
    std::vector<std::size_t> row_position;   // provenance: position index per row

    void validate() const;
};

// Balanced per-class draw of labeled pixels, without replacement, seeded.
std::vector<LabeledPosition> sample_positions(const grid::LabelMap& labels, int per_class,
                                              std::uint64_t seed);

// The four dataset layouts, N = stack size, q = positions, s = eval patch:
//   (pixel,   features): q x N          one row per position
//   (pixel,   samples):  (q*N) x 1      one row per (position, map)
//   (patch,   features): q x (N*s^2)    resized windows concatenated map-major
//   (patch,   samples):  (q*N) x s^2    one window row per (position, map)
Dataset build_dataset(const stitching::ActivationStack& stack,
                      const std::vector<LabeledPosition>& positions,
                      const ExperimentConfig& config);

// Per-feature zero-mean unit-variance transform; fit on training rows only.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale;  // 1/std, 1 where std is 0

    static Standardizer fit(const std::vector<std::vector<double>>& X,
                            const std::vector<std::size_t>& rows);
    std::vector<double> transform(const std::vector<double>& x) const;
};

// Everything needed to classify new feature vectors, and to rebuild the
// full-image map.
struct ClassifierChain {
    Standardizer scaler;
    svm::SvmModel model;
    Mode mode = Mode::kPixel;
    Representation representation = Representation::kFeatures;
    int eval_patch_size = 10;
    grid::PatchSpec patch;
};

// Instrumentation for leak audits: records which rows fed each fold's scaler
// fit and which were held out.
struct CvAudit {
    std::vector<std::vector<std::size_t>> scaler_fit_rows;
    std::vector<std::vector<std::size_t>> held_out_rows;
};

struct ExperimentResult {
    eval::Metrics metrics;
    ClassifierChain chain;  // refit on all rows
    std::vector<LabeledPosition> positions;
};

// Samples positions, builds the dataset, runs position-grouped stratified
// k-fold CV (standardizer fit on training folds only), then refits on all
// rows. Pure function of (stack, labels, config).
ExperimentResult run_experiment_on_stack(const stitching::ActivationStack& stack,
                                         const grid::LabelMap& labels,
                                         const ExperimentConfig& config, CvAudit* audit = nullptr);

// Convenience wrapper that builds the stack first (or reuses a cached one).
ExperimentResult run_experiment(const grid::Raster& image, const grid::LabelMap& labels,
                                const ae::AutoencoderModel& model, const ExperimentConfig& config,
                                const stitching::ActivationStack* cached_stack = nullptr,
                                CvAudit* audit = nullptr);

// Features-representation classifier applied to every pixel. Throws for
// samples-mode chains.
grid::LabelMap classify_full_image(const stitching::ActivationStack& stack,
                                   const ClassifierChain& chain, int threads = 1);

std::string metrics_to_json(const eval::Metrics& metrics, const ExperimentConfig& config);

const char* mode_name(Mode m);
const char* representation_name(Representation r);

}  // namespace magrep::experiments
