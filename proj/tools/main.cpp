#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "magrep/cli/commands.hpp"

namespace {

using magrep::cli::CommandPaths;
using nlohmann::json;

struct CommonArgs {
    std::string config_file;
    std::vector<std::string> overrides;
    long long seed = -1;
    int threads = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_file, "JSON config file");
    cmd->add_option("--set", args.overrides,
                    "override a config key, dotted path (e.g. --set train.epochs=5)");
    cmd->add_option("--seed", args.seed, "seed for every stage (overrides config)");
    cmd->add_option("--threads", args.threads, "worker cap (overrides config)");
}

json effective_config(const CommonArgs& args) {
    json file = json::object();
    if (!args.config_file.empty()) file = magrep::cli::load_config_file(args.config_file);
    std::vector<std::string> overrides = args.overrides;
    if (args.seed >= 0) overrides.push_back("seed=" + std::to_string(args.seed));
    if (args.threads > 0) overrides.push_back("threads=" + std::to_string(args.threads));
    return magrep::cli::merge_config(magrep::cli::default_config(), file, overrides);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"scarce-label magnetic raster classification pipeline"};
    app.require_subcommand(1);

    CommonArgs common;
    CommandPaths paths;

    auto* synth = app.add_subcommand("synth", "generate a synthetic terrain with sparse labels");
    add_common(synth, common);
    synth->add_option("--out", paths.out_dir, "output directory")->required();

    auto* train = app.add_subcommand("train-ae", "train the patch autoencoder");
    add_common(train, common);
    train->add_option("--image", paths.image, "terrain raster (.f32)")->required();
    train->add_option("--out", paths.out_dir, "output directory")->required();

    auto* stitch = app.add_subcommand("stitch", "build the stitched activation stack");
    add_common(stitch, common);
    stitch->add_option("--image", paths.image, "terrain raster (.f32)")->required();
    stitch->add_option("--model", paths.model, "autoencoder model (.json)")->required();
    stitch->add_option("--out", paths.out_dir, "output directory")->required();

    auto* experiment = app.add_subcommand("experiment", "run a classification experiment cell");
    add_common(experiment, common);
    experiment->add_option("--stack", paths.stack, "stitched stack directory")->required();
    experiment->add_option("--labels", paths.labels, "label map (.pgm)")->required();
    experiment->add_option("--out", paths.out_dir, "output directory")->required();
    experiment->add_flag("--all-cells", paths.all_cells,
                         "run all four mode x representation cells");
    experiment->add_option("--mode", [&](const std::vector<std::string>& v) {
        common.overrides.push_back("experiment.mode=" + v.back());
        return true;
    }, "pixel | patch");
    experiment->add_option("--representation", [&](const std::vector<std::string>& v) {
        common.overrides.push_back("experiment.representation=" + v.back());
        return true;
    }, "features | samples");

    auto* classify = app.add_subcommand("classify", "classify the full image with a fitted chain");
    add_common(classify, common);
    classify->add_option("--stack", paths.stack, "stitched stack directory")->required();
    classify->add_option("--chain", paths.chain, "classifier chain (.json)")->required();
    classify->add_option("--out", paths.out_dir, "output directory")->required();

    auto* evaluate = app.add_subcommand("evaluate", "score a classified map against a reference");
    add_common(evaluate, common);
    evaluate->add_option("--pred", paths.pred, "predicted map (.pgm)")->required();
    evaluate->add_option("--truth", paths.truth, "reference map (.pgm)")->required();
    evaluate->add_option("--out", paths.out_dir, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        const json config = effective_config(common);
        if (synth->parsed()) magrep::cli::cmd_synth(config, paths);
        if (train->parsed()) magrep::cli::cmd_train_ae(config, paths);
        if (stitch->parsed()) magrep::cli::cmd_stitch(config, paths);
        if (experiment->parsed()) magrep::cli::cmd_experiment(config, paths);
        if (classify->parsed()) magrep::cli::cmd_classify(config, paths);
        if (evaluate->parsed()) magrep::cli::cmd_evaluate(config, paths);
    } catch (const std::exception& e) {
        const json err = {{"error", e.what()}};
        std::cerr << err.dump() << std::endl;
        return 1;
    }
    return 0;
}
