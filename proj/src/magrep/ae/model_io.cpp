#include "magrep/ae/model_io.hpp"

#include <bit>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace magrep::ae {

namespace {

using nlohmann::json;

const char* kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::kConv: return "conv";
        case LayerKind::kMaxPool: return "maxpool";
        case LayerKind::kUpsample: return "upsample";
    }
    return "?";
}

LayerKind kind_from_name(const std::string& s) {
    if (s == "conv") return LayerKind::kConv;
    if (s == "maxpool") return LayerKind::kMaxPool;
    if (s == "upsample") return LayerKind::kUpsample;
    throw std::runtime_error("unknown layer kind: " + s);
}

void append_f32(std::ofstream& out, const std::vector<double>& values) {
    static_assert(std::endian::native == std::endian::little);
    for (double v : values) {
        const float f = static_cast<float>(v);
        out.write(reinterpret_cast<const char*>(&f), 4);
    }
}

std::vector<double> read_f32(std::ifstream& in, std::size_t offset, std::size_t count) {
    in.seekg(static_cast<std::streamoff>(offset));
    std::vector<double> values(count);
    for (std::size_t i = 0; i < count; ++i) {
        float f = 0.0f;
        in.read(reinterpret_cast<char*>(&f), 4);
        values[i] = f;
    }
    if (!in) throw std::runtime_error("truncated weight blob");
    return values;
}

}  // namespace

void save_model(const AutoencoderModel& model, const std::string& json_path,
                const std::string& blob_path, const TrainConfig* config_echo) {
    model.validate();

    std::ofstream blob(blob_path, std::ios::binary);
    if (!blob) throw std::runtime_error("cannot write " + blob_path);

    json manifest;
    manifest["encoder_end"] = model.encoder_end;
    manifest["normalization"] = {{"min", model.norm.min}, {"max", model.norm.max}};
    manifest["weights_file"] = std::filesystem::path(blob_path).filename().string();

    json layers = json::array();
    std::size_t offset = 0;
    for (const auto& l : model.layers) {
        json jl;
        jl["kind"] = kind_name(l.kind);
        if (l.kind == LayerKind::kConv) {
            jl["in_channels"] = l.in_channels;
            jl["out_filters"] = l.out_filters;
            jl["activation"] = l.activation == Activation::kRelu ? "relu" : "linear";
            jl["kernel"] = 3;
            jl["weights_offset"] = offset;
            jl["weights_count"] = l.weights.size();
            append_f32(blob, l.weights);
            offset += 4 * l.weights.size();
            jl["bias_offset"] = offset;
            jl["bias_count"] = l.bias.size();
            append_f32(blob, l.bias);
            offset += 4 * l.bias.size();
        } else {
            jl["factor"] = 2;
        }
        layers.push_back(jl);
    }
    manifest["layers"] = layers;

    if (config_echo) {
        manifest["train_config"] = {
            {"learning_rate", config_echo->learning_rate},
            {"epochs", config_echo->epochs},
            {"batch_size", config_echo->batch_size},
            {"train_subsample", config_echo->train_subsample},
            {"seed", config_echo->seed},
            {"optimizer", config_echo->optimizer == Optimizer::kAdam ? "adam" : "sgd"},
            {"threads", config_echo->threads},
        };
    }

    blob.close();
    if (!blob) throw std::runtime_error("write failed: " + blob_path);

    std::ofstream out(json_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + json_path);
    out << manifest.dump(2) << "\n";
}

AutoencoderModel load_model(const std::string& json_path) {
    std::ifstream in(json_path);
    if (!in) throw std::runtime_error("cannot read " + json_path);
    json manifest;
    in >> manifest;

    const auto blob_path =
        (std::filesystem::path(json_path).parent_path() /
         manifest.at("weights_file").get<std::string>())
            .string();
    std::ifstream blob(blob_path, std::ios::binary);
    if (!blob) throw std::runtime_error("cannot read " + blob_path);

    AutoencoderModel model;
    model.encoder_end = manifest.at("encoder_end").get<int>();
    model.norm.min = manifest.at("normalization").at("min").get<double>();
    model.norm.max = manifest.at("normalization").at("max").get<double>();

    for (const auto& jl : manifest.at("layers")) {
        const LayerKind kind = kind_from_name(jl.at("kind").get<std::string>());
        if (kind == LayerKind::kConv) {
            LayerSpec l = LayerSpec::conv(
                jl.at("in_channels").get<int>(), jl.at("out_filters").get<int>(),
                jl.at("activation").get<std::string>() == "relu" ? Activation::kRelu
                                                                 : Activation::kLinear);
            l.weights = read_f32(blob, jl.at("weights_offset").get<std::size_t>(),
                                 jl.at("weights_count").get<std::size_t>());
            l.bias = read_f32(blob, jl.at("bias_offset").get<std::size_t>(),
                              jl.at("bias_count").get<std::size_t>());
            model.layers.push_back(std::move(l));
        } else if (kind == LayerKind::kMaxPool) {
            model.layers.push_back(LayerSpec::maxpool());
        } else {
            model.layers.push_back(LayerSpec::upsample());
        }
    }
    model.validate();
    return model;
}

}  // namespace magrep::ae
