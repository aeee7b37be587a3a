#pragma once

#include <string>

#include "nsvlmc/data.hpp"
#include "nsvlmc/model.hpp"

namespace nsvlmc {

// Versioned checkpoint container: magic, format version, a JSON header with
// the resolved spec / normalization / named parameter shapes, then the flat
// parameter vector as IEEE-754 doubles.
void save_checkpoint(const std::string& path, const ModelState& state,
                     const NormStats& norm, const std::string& config_json);

struct Checkpoint {
  ModelState state;
  NormStats norm;
  std::string config_json;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace nsvlmc
