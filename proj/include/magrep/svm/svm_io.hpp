#pragma once

#include <string>

#include "magrep/svm/svm.hpp"

namespace magrep::svm {

// `<stem>.json` (kernel, C, bias, per-SV coeff) + `<stem>.f32` support
// vector blob, row-major.
void save_svm(const SvmModel& model, const std::string& json_path, const std::string& blob_path);
SvmModel load_svm(const std::string& json_path);

}  // namespace magrep::svm
