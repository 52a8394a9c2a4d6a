#pragma once

// Single JSON run configuration with strict key validation and content
// hashing, so every artifact can be tied back to the exact settings that
// produced it.

#include <string>

#include "scdp/datagen.hpp"
#include "scdp/eval.hpp"
#include "scdp/training.hpp"

namespace scdp {

struct RunConfig {
  sim::SimParams sim;
  CollectConfig datagen;
  TrainConfig train;
  EvalConfig eval;
};

// Parses the JSON text. Unknown keys at any level are hard errors naming the
// offending section and key.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config_file(const std::string& path);

std::string config_to_json(const RunConfig& cfg);

// FNV-1a over the canonical serialization; stable across reorderings of the
// input file.
std::string config_hash(const RunConfig& cfg);

}  // namespace scdp
