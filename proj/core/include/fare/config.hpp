#pragma once

#include <string>

#include "fare/data.hpp"
#include "fare/train.hpp"

namespace fare {

// Parsers for the JSON experiment configs. Field names mirror the structs;
// unknown keys are rejected with the offending key path.
SynthConfig synth_config_from_json(const std::string& text);
TrainConfig train_config_from_json(const std::string& text);

std::string synth_config_to_json(const SynthConfig& cfg);
std::string train_config_to_json(const TrainConfig& cfg);

SynthConfig load_synth_config(const std::string& path);
TrainConfig load_train_config(const std::string& path);

}  // namespace fare
