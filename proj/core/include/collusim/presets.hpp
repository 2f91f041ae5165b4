#pragma once

#include <string>
#include <vector>

namespace collusim {

// Experiment presets keyed by the series they reproduce. Scaled variants
// shrink horizons, windows and session counts to desk scale and tag their
// outputs; full variants keep the reference parameters.
std::vector<std::string> preset_names();
bool is_preset(const std::string& name);
std::string preset_config(const std::string& name, bool scaled);

}  // namespace collusim
