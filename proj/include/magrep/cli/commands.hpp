#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace magrep::cli {

// Effective run configuration: defaults overlaid with the config file and
// then with flag overrides (flags win). `seed` and `threads` at the top
// level flow into every stage unless a stage section overrides them.
nlohmann::json default_config();
nlohmann::json load_config_file(const std::string& path);
// `overrides` are dotted key=value pairs, e.g. "train.epochs=5".
nlohmann::json merge_config(nlohmann::json base, const nlohmann::json& file_config,
                            const std::vector<std::string>& overrides);

struct CommandPaths {
    std::string out_dir;
    std::string image;   // terrain .f32
    std::string labels;  // labels .pgm
    std::string model;   // model .json
    std::string stack;   // stack directory
    std::string chain;   // classifier chain .json
    std::string pred;    // predicted label map .pgm
    std::string truth;   // reference label map .pgm
    bool all_cells = false;
};

// Each command writes its artifacts plus a manifest.json recording the
// effective config hash, seed, and input/output content hashes. All outputs
// are byte-reproducible given identical config and seed.
void cmd_synth(const nlohmann::json& config, const CommandPaths& paths);
void cmd_train_ae(const nlohmann::json& config, const CommandPaths& paths);
void cmd_stitch(const nlohmann::json& config, const CommandPaths& paths);
void cmd_experiment(const nlohmann::json& config, const CommandPaths& paths);
void cmd_classify(const nlohmann::json& config, const CommandPaths& paths);
void cmd_evaluate(const nlohmann::json& config, const CommandPaths& paths);

}  // namespace magrep::cli
