#include "magrep/experiments/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "magrep/common/parallel.hpp"
#include "magrep/common/rng.hpp"

namespace magrep::experiments {

namespace {

using nlohmann::json;

constexpr std::uint64_t kPositionStream = 0x706f736974696f6eULL;
constexpr std::uint64_t kFoldStream = 0x666f6c6473ULL;
constexpr std::uint64_t kSmoStream = 0x736d6fULL;

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t tag) {
    return util::splitmix64(seed ^ util::splitmix64(tag));
}

// resized window of one stitched map around a position
std::vector<double> window_features(const grid::Raster& map, const LabeledPosition& pos,
                                    const ExperimentConfig& config) {
    const grid::Raster window = grid::extract_patch(map, pos.row, pos.col, config.patch);
    const grid::Raster resized =
        grid::resize_nearest(window, config.eval_patch_size, config.eval_patch_size);
    return resized.values;
}

svm::SvmModel fit_svm(const std::vector<std::vector<double>>& X, const std::vector<int>& y,
                      const ExperimentConfig& config, std::uint64_t seed) {
    svm::SmoParams params;
    params.C = config.C;
    params.kernel = config.kernel;
    params.tol = config.svm_tol;
    params.seed = seed;
    return svm::train_smo(X, y, params);
}

std::vector<double> pixel_feature_vector(const stitching::ActivationStack& stack, int row,
                                         int col) {
    std::vector<double> x;
    x.reserve(stack.maps.size());
    for (const auto& map : stack.maps) x.push_back(map.at(row, col));
    return x;
}

std::vector<double> patch_feature_vector(const stitching::ActivationStack& stack,
                                         const LabeledPosition& pos,
                                         const ExperimentConfig& config) {
    std::vector<double> x;
    x.reserve(stack.maps.size() * config.eval_patch_size * config.eval_patch_size);
    for (const auto& map : stack.maps) {
        const auto w = window_features(map, pos, config);
        x.insert(x.end(), w.begin(), w.end());
    }
    return x;
}

}  // namespace

const char* mode_name(Mode m) { return m == Mode::kPixel ? "pixel" : "patch"; }
const char* representation_name(Representation r) {
    return r == Representation::kSamples ? "samples" : "features";
}

void ExperimentConfig::validate() const {
    patch.validate();
    if (positions_per_class < 1) throw std::runtime_error("positions_per_class must be >= 1");
    if (eval_patch_size < 1) throw std::runtime_error("eval_patch_size must be >= 1");
    if (k_folds < 2) throw std::runtime_error("k_folds must be >= 2");
    if (2 * positions_per_class < k_folds)
        throw std::runtime_error("too few positions for the requested fold count");
    if (!(C > 0.0)) throw std::runtime_error("C must be positive");
}

void Dataset::validate() const {
    if (X.size() != y.size() || X.size() != row_position.size())
        throw std::runtime_error("dataset row bookkeeping mismatch");
    bool has_pos = false, has_neg = false;
    for (int label : y) {
        if (label == 1) has_pos = true;
        if (label == -1) has_neg = true;
    }
    if (!has_pos || !has_neg) throw std::runtime_error("dataset must contain both classes");
    for (const auto& row : X)
        for (double v : row)
            if (!std::isfinite(v)) throw std::runtime_error("dataset contains non-finite value");
}

std::vector<LabeledPosition> sample_positions(const grid::LabelMap& labels, int per_class,
                                              std::uint64_t seed) {
    labels.validate();
    std::vector<std::pair<int, int>> deposits, nondeposits;
    for (int r = 0; r < labels.height; ++r)
        for (int c = 0; c < labels.width; ++c) {
            if (labels.at(r, c) == 1) deposits.emplace_back(r, c);
            if (labels.at(r, c) == 0) nondeposits.emplace_back(r, c);
        }
    const auto need = static_cast<std::size_t>(per_class);
    if (deposits.size() < need)
        throw std::runtime_error("class deposit has only " + std::to_string(deposits.size()) +
                                 " labeled pixels, need " + std::to_string(per_class));
    if (nondeposits.size() < need)
        throw std::runtime_error("class non-deposit has only " +
                                 std::to_string(nondeposits.size()) + " labeled pixels, need " +
                                 std::to_string(per_class));

    util::Rng rng(seed);
    rng.shuffle(deposits);
    rng.shuffle(nondeposits);
    std::vector<LabeledPosition> positions;
    positions.reserve(2 * need);
    for (std::size_t i = 0; i < need; ++i)
        positions.push_back(LabeledPosition{deposits[i].first, deposits[i].second, 1});
    for (std::size_t i = 0; i < need; ++i)
        positions.push_back(LabeledPosition{nondeposits[i].first, nondeposits[i].second, 0});
    return positions;
}

Dataset build_dataset(const stitching::ActivationStack& stack,
                      const std::vector<LabeledPosition>& positions,
                      const ExperimentConfig& config) {
    stack.validate();
    if (stack.maps.empty()) throw std::runtime_error("empty activation stack");
    for (const auto& p : positions)
        if (p.row < 0 || p.row >= stack.source_height || p.col < 0 || p.col >= stack.source_width)
            throw std::runtime_error("position outside stack dims");

    Dataset ds;
    for (std::size_t pi = 0; pi < positions.size(); ++pi) {
        const LabeledPosition& pos = positions[pi];
        const int label = pos.cls == 1 ? 1 : -1;
        if (config.representation == Representation::kFeatures) {
            ds.X.push_back(config.mode == Mode::kPixel
                               ? pixel_feature_vector(stack, pos.row, pos.col)
                               : patch_feature_vector(stack, pos, config));
            ds.y.push_back(label);
            ds.row_position.push_back(pi);
        } else {
            // one row per (position, map)
            for (const auto& map : stack.maps) {
                if (config.mode == Mode::kPixel) {
                    ds.X.push_back({map.at(pos.row, pos.col)});
                } else {
                    ds.X.push_back(window_features(map, pos, config));
                }
                ds.y.push_back(label);
                ds.row_position.push_back(pi);
            }
        }
    }
    ds.validate();
    return ds;
}

Standardizer Standardizer::fit(const std::vector<std::vector<double>>& X,
                               const std::vector<std::size_t>& rows) {
    if (rows.empty()) throw std::runtime_error("standardizer fit on no rows");
    const std::size_t d = X[rows[0]].size();
    Standardizer s;
    s.mean.assign(d, 0.0);
    s.scale.assign(d, 1.0);
    for (std::size_t r : rows)
        for (std::size_t j = 0; j < d; ++j) s.mean[j] += X[r][j];
    for (double& m : s.mean) m /= static_cast<double>(rows.size());
    std::vector<double> var(d, 0.0);
    for (std::size_t r : rows)
        for (std::size_t j = 0; j < d; ++j) {
            const double dev = X[r][j] - s.mean[j];
            var[j] += dev * dev;
        }
    for (std::size_t j = 0; j < d; ++j) {
        const double sigma = std::sqrt(var[j] / static_cast<double>(rows.size()));
        s.scale[j] = sigma > 0.0 ? 1.0 / sigma : 1.0;
    }
    return s;
}

std::vector<double> Standardizer::transform(const std::vector<double>& x) const {
    if (x.size() != mean.size()) throw std::runtime_error("standardizer dim mismatch");
    std::vector<double> out(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) out[j] = (x[j] - mean[j]) * scale[j];
    return out;
}

ExperimentResult run_experiment_on_stack(const stitching::ActivationStack& stack,
                                         const grid::LabelMap& labels,
                                         const ExperimentConfig& config, CvAudit* audit) {
    config.validate();
    if (labels.height != stack.source_height || labels.width != stack.source_width)
        throw std::runtime_error("label map dims differ from stack");

    const auto positions = sample_positions(labels, config.positions_per_class,
                                            stream_seed(config.seed, kPositionStream));
    const Dataset ds = build_dataset(stack, positions, config);

    // folds are over positions; all rows of a position travel together
    std::vector<int> position_classes(positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i) position_classes[i] = positions[i].cls;
    const auto folds =
        eval::kfold_split(positions.size(), config.k_folds, position_classes, true,
                          stream_seed(config.seed, kFoldStream));

    std::vector<std::vector<std::size_t>> rows_of_position(positions.size());
    for (std::size_t r = 0; r < ds.row_position.size(); ++r)
        rows_of_position[ds.row_position[r]].push_back(r);

    eval::Metrics metrics;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        std::vector<char> held(positions.size(), 0);
        for (std::size_t p : folds[f]) held[p] = 1;
        std::vector<std::size_t> train_rows, test_rows;
        for (std::size_t p = 0; p < positions.size(); ++p)
            for (std::size_t r : rows_of_position[p]) (held[p] ? test_rows : train_rows).push_back(r);

        const Standardizer scaler = Standardizer::fit(ds.X, train_rows);
        if (audit) {
            audit->scaler_fit_rows.push_back(train_rows);
            audit->held_out_rows.push_back(test_rows);
        }
        std::vector<std::vector<double>> x_train, x_test;
        std::vector<int> y_train, y_test;
        for (std::size_t r : train_rows) {
            x_train.push_back(scaler.transform(ds.X[r]));
            y_train.push_back(ds.y[r]);
        }
        for (std::size_t r : test_rows) {
            x_test.push_back(scaler.transform(ds.X[r]));
            y_test.push_back(ds.y[r]);
        }
        const svm::SvmModel fold_model =
            fit_svm(x_train, y_train, config, stream_seed(config.seed, kSmoStream + 1 + f));
        metrics.fold_accuracies.push_back(eval::accuracy(y_test, svm::predict(fold_model, x_test)));
    }
    double acc_sum = 0.0;
    for (double a : metrics.fold_accuracies) acc_sum += a;
    metrics.mean_cv_accuracy = acc_sum / static_cast<double>(metrics.fold_accuracies.size());

    // final refit on every row; overall accuracy is resubstitution-style
    std::vector<std::size_t> all_rows(ds.X.size());
    for (std::size_t r = 0; r < ds.X.size(); ++r) all_rows[r] = r;
    const Standardizer scaler = Standardizer::fit(ds.X, all_rows);
    std::vector<std::vector<double>> x_all;
    x_all.reserve(ds.X.size());
    for (const auto& row : ds.X) x_all.push_back(scaler.transform(row));
    const svm::SvmModel final_model =
        fit_svm(x_all, ds.y, config, stream_seed(config.seed, kSmoStream));
    const std::vector<int> y_hat = svm::predict(final_model, x_all);
    metrics.overall_accuracy = eval::accuracy(ds.y, y_hat);
    metrics.f1 = eval::f1_binary(ds.y, y_hat, 1);
    metrics.confusion = eval::confusion_matrix(ds.y, y_hat, 1);

    ExperimentResult result;
    result.metrics = std::move(metrics);
    result.chain.scaler = scaler;
    result.chain.model = final_model;
    result.chain.mode = config.mode;
    result.chain.representation = config.representation;
    result.chain.eval_patch_size = config.eval_patch_size;
    result.chain.patch = config.patch;
    result.positions = positions;
    return result;
}

ExperimentResult run_experiment(const grid::Raster& image, const grid::LabelMap& labels,
                                const ae::AutoencoderModel& model, const ExperimentConfig& config,
                                const stitching::ActivationStack* cached_stack, CvAudit* audit) {
    if (labels.height != image.height || labels.width != image.width)
        throw std::runtime_error("label map dims differ from image");
    if (cached_stack) {
        if (cached_stack->source_height != image.height || cached_stack->source_width != image.width)
            throw std::runtime_error("stack dims differ from image");
        return run_experiment_on_stack(*cached_stack, labels, config, audit);
    }
    stitching::StitchOptions options;
    options.patch = config.patch;
    options.encoder_layer_only = config.encoder_layer_only;
    options.threads = config.threads;
    const stitching::ActivationStack stack = stitching::build_activation_stack(image, model, options);
    return run_experiment_on_stack(stack, labels, config, audit);
}

grid::LabelMap classify_full_image(const stitching::ActivationStack& stack,
                                   const ClassifierChain& chain, int threads) {
    stack.validate();
    if (chain.representation != Representation::kFeatures)
        throw std::runtime_error("full-image classification requires a features-mode classifier");
    const std::size_t expected =
        chain.mode == Mode::kPixel
            ? stack.maps.size()
            : stack.maps.size() * chain.eval_patch_size * chain.eval_patch_size;
    if (chain.scaler.mean.size() != expected)
        throw std::runtime_error("stack/model feature dimension mismatch");

    ExperimentConfig window_config;
    window_config.patch = chain.patch;
    window_config.eval_patch_size = chain.eval_patch_size;

    grid::LabelMap out(stack.source_height, stack.source_width, 0);
    const std::size_t n = out.labels.size();
    util::parallel_chunks(n, threads, [&](int, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const int r = static_cast<int>(i) / stack.source_width;
            const int c = static_cast<int>(i) % stack.source_width;
            std::vector<double> x;
            if (chain.mode == Mode::kPixel) {
                x = pixel_feature_vector(stack, r, c);
            } else {
                x = patch_feature_vector(stack, LabeledPosition{r, c, 0}, window_config);
            }
            const int label = svm::predict_one(chain.model, chain.scaler.transform(x));
            out.labels[i] = label == 1 ? 1 : 0;
        }
    });
    return out;
}

std::string metrics_to_json(const eval::Metrics& metrics, const ExperimentConfig& config) {
    json j;
    j["mode"] = mode_name(config.mode);
    j["representation"] = representation_name(config.representation);
    j["kernel"] = config.kernel.kind == svm::KernelKind::kRbf ? "rbf" : "linear";
    j["C"] = config.C;
    j["seed"] = config.seed;
    j["fold_accuracies"] = metrics.fold_accuracies;
    j["mean_cv_accuracy"] = metrics.mean_cv_accuracy;
    j["overall_accuracy"] = metrics.overall_accuracy;
    j["f1"] = metrics.f1;
    j["confusion"] = {{"tp", metrics.confusion.tp},
                      {"fp", metrics.confusion.fp},
                      {"fn", metrics.confusion.fn},
                      {"tn", metrics.confusion.tn}};
    return j.dump(2) + "\n";
}

}  // namespace magrep::experiments
