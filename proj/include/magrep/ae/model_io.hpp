#pragma once

#include <string>

#include "magrep/ae/model.hpp"
#include "magrep/ae/train.hpp"

namespace magrep::ae {

// Model on disk: `<stem>.json` manifest (layer specs, encoder_end,
// normalization, config echo, per-tensor byte offsets) plus `<stem>.f32`
// little-endian weight blob.
void save_model(const AutoencoderModel& model, const std::string& json_path,
                const std::string& blob_path, const TrainConfig* config_echo = nullptr);

AutoencoderModel load_model(const std::string& json_path);

}  // namespace magrep::ae
