#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "spm/phmm.hpp"

namespace spm::phmm {

/// JSON document {n_states, p, initial[], transition[][], means[][],
/// covariance[][]}. Doubles survive the round trip bit-for-bit.
nlohmann::json model_to_json(const ModelParams& model);
ModelParams model_from_json(const nlohmann::json& doc);

void save_model(const ModelParams& model, const std::filesystem::path& path);
ModelParams load_model(const std::filesystem::path& path);

}  // namespace spm::phmm
