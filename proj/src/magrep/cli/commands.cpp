#include "magrep/cli/commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>

#include "magrep/ae/model_io.hpp"
#include "magrep/ae/train.hpp"
#include "magrep/common/rng.hpp"
#include "magrep/common/sha256.hpp"
#include "magrep/experiments/experiment.hpp"
#include "magrep/grid/raster_io.hpp"
#include "magrep/stitching/stack.hpp"
#include "magrep/svm/svm_io.hpp"
#include "magrep/synth/terrain.hpp"

namespace magrep::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::uint64_t stage_seed(const json& config, const std::string& section) {
    if (config.contains(section) && config[section].contains("seed"))
        return config[section]["seed"].get<std::uint64_t>();
    return config.at("seed").get<std::uint64_t>();
}

int stage_threads(const json& config) { return config.value("threads", 1); }

grid::PatchSpec patch_from_config(const json& config) {
    grid::PatchSpec spec;
    const json& p = config.at("patch");
    spec.patch_size = p.value("patch_size", 16);
    spec.stride = p.value("stride", 1);
    spec.validate();
    return spec;
}

ae::TrainConfig train_from_config(const json& config) {
    ae::TrainConfig tc;
    const json& t = config.at("train");
    tc.learning_rate = t.value("learning_rate", 1e-3);
    tc.epochs = t.value("epochs", 20);
    tc.batch_size = t.value("batch_size", 64);
    tc.train_subsample = t.value("train_subsample", 20000L);
    tc.optimizer = t.value("optimizer", std::string("adam")) == "sgd" ? ae::Optimizer::kSgd
                                                                      : ae::Optimizer::kAdam;
    tc.seed = stage_seed(config, "train");
    tc.threads = stage_threads(config);
    tc.validate();
    return tc;
}

synth::TerrainConfig terrain_from_config(const json& config) {
    synth::TerrainConfig t;
    const json& s = config.at("terrain");
    t.height = s.value("height", 128);
    t.width = s.value("width", 96);
    t.n_anomalies = s.value("n_anomalies", 3);
    t.anomaly_amplitude = s.value("anomaly_amplitude", 3.0);
    t.anomaly_radius = s.value("anomaly_radius", 6);
    t.background_smoothness = s.value("background_smoothness", 8.0);
    t.noise_level = s.value("noise_level", 1.0);
    t.labeled_deposit = s.value("labeled_deposit", 14);
    t.labeled_nondeposit = s.value("labeled_nondeposit", 17);
    t.seed = stage_seed(config, "terrain");
    t.validate();
    return t;
}

experiments::ExperimentConfig experiment_from_config(const json& config) {
    experiments::ExperimentConfig xc;
    const json& e = config.at("experiment");
    const std::string mode = e.value("mode", std::string("pixel"));
    if (mode != "pixel" && mode != "patch") throw std::runtime_error("unknown mode: " + mode);
    xc.mode = mode == "pixel" ? experiments::Mode::kPixel : experiments::Mode::kPatch;
    const std::string rep = e.value("representation", std::string("features"));
    if (rep != "features" && rep != "samples")
        throw std::runtime_error("unknown representation: " + rep);
    xc.representation = rep == "features" ? experiments::Representation::kFeatures
                                          : experiments::Representation::kSamples;
    xc.positions_per_class = e.value("positions_per_class", 12);
    xc.eval_patch_size = e.value("eval_patch_size", 10);
    xc.kernel.kind = e.value("kernel", std::string("rbf")) == "linear" ? svm::KernelKind::kLinear
                                                                       : svm::KernelKind::kRbf;
    xc.kernel.gamma = e.value("gamma", 0.0);
    xc.C = e.value("C", 1.0);
    xc.svm_tol = e.value("svm_tol", 1e-3);
    xc.k_folds = e.value("k_folds", 5);
    xc.seed = stage_seed(config, "experiment");
    xc.patch = patch_from_config(config);
    xc.encoder_layer_only = config.at("stitch").value("encoder_layer_only", false);
    xc.threads = stage_threads(config);
    xc.validate();
    return xc;
}

void require_input(const std::string& path, const std::string& what) {
    if (path.empty()) throw std::runtime_error("missing required input: " + what);
    if (!fs::exists(path)) throw std::runtime_error("missing " + what + ": " + path);
}

// manifest.json: provenance chain for every artifact in the directory
class ManifestWriter {
public:
    ManifestWriter(std::string command, const json& config, std::uint64_t seed, std::string out_dir)
        : command_(std::move(command)), out_dir_(std::move(out_dir)) {
        manifest_["command"] = command_;
        manifest_["config"] = config;
        manifest_["config_sha256"] = util::sha256_hex(config.dump());
        manifest_["seed"] = seed;
        fs::create_directories(out_dir_);
    }

    void input(const std::string& label, const std::string& path) {
        inputs_[label] = {{"path", path}, {"sha256", util::sha256_file_hex(path)}};
    }

    void input_dir(const std::string& label, const std::string& dir) {
        std::vector<std::string> files;
        for (const auto& entry : fs::directory_iterator(dir))
            if (entry.is_regular_file()) files.push_back(entry.path().string());
        std::sort(files.begin(), files.end());
        util::Sha256 h;
        for (const auto& f : files) h.update(util::sha256_file_hex(f));
        inputs_[label] = {{"path", dir}, {"sha256", h.hex_digest()}};
    }

    void output(const std::string& name) { output_names_.push_back(name); }

    void finish() {
        manifest_["inputs"] = inputs_;
        json outs = json::object();
        std::sort(output_names_.begin(), output_names_.end());
        for (const auto& name : output_names_)
            outs[name] = util::sha256_file_hex((fs::path(out_dir_) / name).string());
        manifest_["outputs"] = outs;
        std::ofstream out(fs::path(out_dir_) / "manifest.json", std::ios::binary);
        if (!out) throw std::runtime_error("cannot write manifest in " + out_dir_);
        out << manifest_.dump(2) << "\n";
    }

private:
    std::string command_;
    std::string out_dir_;
    json manifest_;
    json inputs_ = json::object();
    std::vector<std::string> output_names_;
};

std::string cell_suffix(const experiments::ExperimentConfig& xc) {
    return std::string(experiments::mode_name(xc.mode)) + "_" +
           experiments::representation_name(xc.representation);
}

void save_chain(const experiments::ClassifierChain& chain, const std::string& dir,
                const std::string& suffix, ManifestWriter& manifest) {
    const std::string svm_json = "svm_" + suffix + ".json";
    const std::string svm_blob = "svm_" + suffix + ".f32";
    svm::save_svm(chain.model, (fs::path(dir) / svm_json).string(),
                  (fs::path(dir) / svm_blob).string());

    json j;
    j["mode"] = experiments::mode_name(chain.mode);
    j["representation"] = experiments::representation_name(chain.representation);
    j["eval_patch_size"] = chain.eval_patch_size;
    j["patch_size"] = chain.patch.patch_size;
    j["stride"] = chain.patch.stride;
    j["scaler_mean"] = chain.scaler.mean;
    j["scaler_scale"] = chain.scaler.scale;
    j["svm_file"] = svm_json;
    const std::string chain_name = "chain_" + suffix + ".json";
    std::ofstream out(fs::path(dir) / chain_name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + chain_name);
    out << j.dump(2) << "\n";
    manifest.output(chain_name);
    manifest.output(svm_json);
    manifest.output(svm_blob);
}

experiments::ClassifierChain load_chain(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("missing classifier chain: " + path);
    json j;
    in >> j;
    experiments::ClassifierChain chain;
    chain.mode = j.at("mode").get<std::string>() == "pixel" ? experiments::Mode::kPixel
                                                            : experiments::Mode::kPatch;
    chain.representation = j.at("representation").get<std::string>() == "features"
                               ? experiments::Representation::kFeatures
                               : experiments::Representation::kSamples;
    chain.eval_patch_size = j.at("eval_patch_size").get<int>();
    chain.patch.patch_size = j.at("patch_size").get<int>();
    chain.patch.stride = j.at("stride").get<int>();
    chain.scaler.mean = j.at("scaler_mean").get<std::vector<double>>();
    chain.scaler.scale = j.at("scaler_scale").get<std::vector<double>>();
    chain.model =
        svm::load_svm((fs::path(path).parent_path() / j.at("svm_file").get<std::string>()).string());
    return chain;
}

}  // namespace

json default_config() {
    return json{
        {"seed", 0},
        {"threads", 1},
        {"terrain",
         {{"height", 128},
          {"width", 96},
          {"n_anomalies", 3},
          {"anomaly_amplitude", 3.0},
          {"anomaly_radius", 6},
          {"background_smoothness", 8.0},
          {"noise_level", 1.0},
          {"labeled_deposit", 14},
          {"labeled_nondeposit", 17}}},
        {"patch", {{"patch_size", 16}, {"stride", 1}}},
        {"train",
         {{"learning_rate", 1e-3},
          {"epochs", 20},
          {"batch_size", 64},
          {"train_subsample", 20000},
          {"optimizer", "adam"}}},
        {"stitch", {{"encoder_layer_only", false}}},
        {"experiment",
         {{"mode", "pixel"},
          {"representation", "features"},
          {"positions_per_class", 12},
          {"eval_patch_size", 10},
          {"kernel", "rbf"},
          {"gamma", 0.0},
          {"C", 1.0},
          {"svm_tol", 1e-3},
          {"k_folds", 5}}},
    };
}

json load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error("invalid config JSON in " + path + ": " + e.what());
    }
    if (!j.is_object()) throw std::runtime_error("config root must be a JSON object");
    return j;
}

json merge_config(json base, const json& file_config, const std::vector<std::string>& overrides) {
    base.merge_patch(file_config);
    for (const auto& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("override must be key=value: " + kv);
        std::string key = kv.substr(0, eq);
        const std::string value = kv.substr(eq + 1);
        for (auto& ch : key)
            if (ch == '.') ch = '/';
        json parsed;
        try {
            parsed = json::parse(value);
        } catch (const json::exception&) {
            parsed = value;  // bare strings stay strings
        }
        base[json::json_pointer("/" + key)] = parsed;
    }
    return base;
}

void cmd_synth(const json& config, const CommandPaths& paths) {
    const auto tc = terrain_from_config(config);
    ManifestWriter manifest("synth", config, tc.seed, paths.out_dir);

    const synth::Terrain terrain = synth::generate_terrain(tc);
    const fs::path dir(paths.out_dir);
    grid::write_raster_f32(terrain.image, (dir / "terrain.f32").string());
    grid::write_raster_pgm(terrain.image, (dir / "terrain.pgm").string());
    grid::write_labels_pgm(terrain.labels, (dir / "labels.pgm").string());
    grid::write_labels_pgm(terrain.ground_truth, (dir / "ground_truth.pgm").string());
    for (const char* name : {"terrain.f32", "terrain.f32.meta.json", "terrain.pgm",
                             "terrain.pgm.meta.json", "labels.pgm", "ground_truth.pgm"})
        manifest.output(name);
    manifest.finish();
}

void cmd_train_ae(const json& config, const CommandPaths& paths) {
    require_input(paths.image, "terrain raster (--image)");
    const auto tc = train_from_config(config);
    const auto patch_spec = patch_from_config(config);
    ManifestWriter manifest("train-ae", config, tc.seed, paths.out_dir);
    manifest.input("image", paths.image);

    const grid::Raster image = grid::read_raster_f32(paths.image);
    ae::AutoencoderModel model = ae::AutoencoderModel::default_architecture();
    model.init_weights(util::splitmix64(tc.seed ^ 0x696e6974ULL));
    model.norm = ae::Normalization::from_raster(image);

    // subsample centers before extraction so the full patch set is never
    // materialized
    auto centers = grid::iter_centers(image, patch_spec);
    ae::TrainConfig effective = tc;
    if (tc.train_subsample >= 0 &&
        static_cast<std::size_t>(tc.train_subsample) < centers.size()) {
        util::Rng rng(util::splitmix64(tc.seed ^ 0x73756273ULL));
        rng.shuffle(centers);
        centers.resize(static_cast<std::size_t>(tc.train_subsample));
        effective.train_subsample = -1;
    }
    std::vector<grid::Raster> patches;
    patches.reserve(centers.size());
    for (const auto& [r, c] : centers) patches.push_back(grid::extract_patch(image, r, c, patch_spec));

    const ae::TrainResult result = ae::train(model, patches, effective);

    const fs::path dir(paths.out_dir);
    ae::save_model(model, (dir / "model.json").string(), (dir / "model_weights.f32").string(), &tc);

    std::ofstream csv(dir / "loss_history.csv", std::ios::binary);
    if (!csv) throw std::runtime_error("cannot write loss_history.csv");
    csv << "epoch,loss\n";
    char line[64];
    for (std::size_t e = 0; e < result.loss_history.size(); ++e) {
        std::snprintf(line, sizeof(line), "%zu,%.17g\n", e + 1, result.loss_history[e]);
        csv << line;
    }
    csv.close();

    for (const char* name : {"model.json", "model_weights.f32", "loss_history.csv"})
        manifest.output(name);
    manifest.finish();
}

void cmd_stitch(const json& config, const CommandPaths& paths) {
    require_input(paths.image, "terrain raster (--image)");
    require_input(paths.model, "autoencoder model (--model)");
    ManifestWriter manifest("stitch", config, stage_seed(config, "stitch"), paths.out_dir);
    manifest.input("image", paths.image);
    manifest.input("model", paths.model);

    const grid::Raster image = grid::read_raster_f32(paths.image);
    const ae::AutoencoderModel model = ae::load_model(paths.model);

    stitching::StitchOptions options;
    options.patch = patch_from_config(config);
    options.encoder_layer_only = config.at("stitch").value("encoder_layer_only", false);
    options.threads = stage_threads(config);

    const stitching::ActivationStack stack = stitching::build_activation_stack(image, model, options);
    const fs::path dir(paths.out_dir);
    const fs::path stack_dir = dir / "stack";
    stitching::save_stack(stack, stack_dir.string());

    const grid::Raster recon = stitching::reconstructed_image(image, model, options);
    grid::write_raster_f32(recon, (dir / "reconstructed.f32").string());
    grid::write_raster_pgm(recon, (dir / "reconstructed.pgm").string());

    for (const auto& entry : fs::directory_iterator(stack_dir))
        manifest.output("stack/" + entry.path().filename().string());
    for (const char* name : {"reconstructed.f32", "reconstructed.f32.meta.json",
                             "reconstructed.pgm", "reconstructed.pgm.meta.json"})
        manifest.output(name);
    manifest.finish();
}

void cmd_experiment(const json& config, const CommandPaths& paths) {
    require_input(paths.labels, "label map (--labels)");
    if (paths.stack.empty()) throw std::runtime_error("missing required input: stack directory (--stack)");
    if (!fs::exists(fs::path(paths.stack) / "stack.meta.json"))
        throw std::runtime_error("missing stitched stack: " + paths.stack +
                                 " has no stack.meta.json (run `stitch` first)");

    const auto base_xc = experiment_from_config(config);
    ManifestWriter manifest("experiment", config, base_xc.seed, paths.out_dir);
    manifest.input("labels", paths.labels);
    manifest.input_dir("stack", paths.stack);

    const grid::LabelMap labels = grid::read_labels_pgm(paths.labels);
    const stitching::ActivationStack stack = stitching::load_stack(paths.stack);

    std::vector<experiments::ExperimentConfig> cells;
    if (paths.all_cells) {
        for (auto mode : {experiments::Mode::kPixel, experiments::Mode::kPatch})
            for (auto rep :
                 {experiments::Representation::kFeatures, experiments::Representation::kSamples}) {
                auto xc = base_xc;
                xc.mode = mode;
                xc.representation = rep;
                cells.push_back(xc);
            }
    } else {
        cells.push_back(base_xc);
    }

    const fs::path dir(paths.out_dir);
    for (const auto& xc : cells) {
        const auto result = experiments::run_experiment_on_stack(stack, labels, xc);
        const std::string suffix = cell_suffix(xc);
        const std::string metrics_name = "metrics_" + suffix + ".json";
        std::ofstream out(dir / metrics_name, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + metrics_name);
        out << experiments::metrics_to_json(result.metrics, xc);
        out.close();
        manifest.output(metrics_name);
        if (xc.representation == experiments::Representation::kFeatures)
            save_chain(result.chain, paths.out_dir, suffix, manifest);
    }
    manifest.finish();
}

void cmd_classify(const json& config, const CommandPaths& paths) {
    require_input(paths.chain, "classifier chain (--chain)");
    if (paths.stack.empty()) throw std::runtime_error("missing required input: stack directory (--stack)");
    if (!fs::exists(fs::path(paths.stack) / "stack.meta.json"))
        throw std::runtime_error("missing stitched stack: " + paths.stack +
                                 " has no stack.meta.json (run `stitch` first)");
    ManifestWriter manifest("classify", config, stage_seed(config, "classify"), paths.out_dir);
    manifest.input("chain", paths.chain);
    manifest.input_dir("stack", paths.stack);

    const auto chain = load_chain(paths.chain);
    const stitching::ActivationStack stack = stitching::load_stack(paths.stack);
    const grid::LabelMap classified =
        experiments::classify_full_image(stack, chain, stage_threads(config));

    const fs::path dir(paths.out_dir);
    grid::write_labels_pgm(classified, (dir / "classified.pgm").string());
    // view variant scaled to {0,255}
    grid::LabelMap view = classified;
    for (auto& l : view.labels) l = l == 1 ? 255 : 0;
    std::ofstream out(dir / "classified_view.pgm", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write classified_view.pgm");
    out << "P5\n" << view.width << " " << view.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(view.labels.data()),
              static_cast<std::streamsize>(view.labels.size()));
    out.close();

    manifest.output("classified.pgm");
    manifest.output("classified_view.pgm");
    manifest.finish();
}

void cmd_evaluate(const json& config, const CommandPaths& paths) {
    require_input(paths.pred, "predicted map (--pred)");
    require_input(paths.truth, "reference map (--truth)");
    ManifestWriter manifest("evaluate", config, stage_seed(config, "evaluate"), paths.out_dir);
    manifest.input("pred", paths.pred);
    manifest.input("truth", paths.truth);

    const grid::LabelMap pred = grid::read_labels_pgm(paths.pred);
    const grid::LabelMap truth = grid::read_labels_pgm(paths.truth);
    if (pred.height != truth.height || pred.width != truth.width)
        throw std::runtime_error("predicted and reference maps differ in dims");

    // unknown (2) reference pixels are skipped
    std::vector<int> y_true, y_pred;
    for (std::size_t i = 0; i < truth.labels.size(); ++i) {
        if (truth.labels[i] == 2) continue;
        y_true.push_back(truth.labels[i]);
        y_pred.push_back(pred.labels[i]);
    }
    if (y_true.empty()) throw std::runtime_error("reference map has no labeled pixels");

    const auto confusion = eval::confusion_matrix(y_true, y_pred, 1);
    json j;
    j["evaluated_pixels"] = y_true.size();
    j["accuracy"] = eval::accuracy(y_true, y_pred);
    j["f1"] = eval::f1_binary(y_true, y_pred, 1);
    j["confusion"] = {{"tp", confusion.tp},
                      {"fp", confusion.fp},
                      {"fn", confusion.fn},
                      {"tn", confusion.tn}};
    std::ofstream out(fs::path(paths.out_dir) / "evaluation.json", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write evaluation.json");
    out << j.dump(2) << "\n";
    out.close();
    manifest.output("evaluation.json");
    manifest.finish();
}

}  // namespace magrep::cli
