#include "magrep/svm/svm_io.hpp"

#include <bit>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace magrep::svm {

namespace {
using nlohmann::json;
}

void save_svm(const SvmModel& model, const std::string& json_path, const std::string& blob_path) {
    model.validate();
    static_assert(std::endian::native == std::endian::little);

    std::ofstream blob(blob_path, std::ios::binary);
    if (!blob) throw std::runtime_error("cannot write " + blob_path);
    for (const auto& sv : model.support_vectors)
        for (double v : sv) {
            const float f = static_cast<float>(v);
            blob.write(reinterpret_cast<const char*>(&f), 4);
        }
    blob.close();
    if (!blob) throw std::runtime_error("write failed: " + blob_path);

    json j;
    j["kernel"] = model.kernel.kind == KernelKind::kRbf ? "rbf" : "linear";
    j["gamma"] = model.gamma;
    j["C"] = model.C;
    j["bias"] = model.bias;
    j["coeffs"] = model.coeffs;
    j["n_support"] = model.support_vectors.size();
    j["n_features"] = model.support_vectors.empty() ? 0 : model.support_vectors[0].size();
    j["sv_file"] = std::filesystem::path(blob_path).filename().string();

    std::ofstream out(json_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + json_path);
    out << j.dump(2) << "\n";
}

SvmModel load_svm(const std::string& json_path) {
    std::ifstream in(json_path);
    if (!in) throw std::runtime_error("cannot read " + json_path);
    json j;
    in >> j;

    SvmModel model;
    model.kernel.kind = j.at("kernel").get<std::string>() == "rbf" ? KernelKind::kRbf
                                                                   : KernelKind::kLinear;
    model.gamma = j.at("gamma").get<double>();
    model.kernel.gamma = model.gamma;
    model.C = j.at("C").get<double>();
    model.bias = j.at("bias").get<double>();
    model.coeffs = j.at("coeffs").get<std::vector<double>>();

    const auto n = j.at("n_support").get<std::size_t>();
    const auto d = j.at("n_features").get<std::size_t>();
    const auto blob_path =
        (std::filesystem::path(json_path).parent_path() / j.at("sv_file").get<std::string>())
            .string();
    std::ifstream blob(blob_path, std::ios::binary);
    if (!blob) throw std::runtime_error("cannot read " + blob_path);
    model.support_vectors.assign(n, std::vector<double>(d, 0.0));
    for (auto& sv : model.support_vectors)
        for (double& v : sv) {
            float f = 0.0f;
            blob.read(reinterpret_cast<char*>(&f), 4);
            v = f;
        }
    if (!blob) throw std::runtime_error("truncated support vector blob: " + blob_path);
    model.validate();
    return model;
}

}  // namespace magrep::svm
