#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "celltrack/numerics/layers.hpp"

namespace celltrack::models {

/// Writes manifest.json ({"kind", "meta", "parameters": [{name, file, dims}]})
/// and one .ctn file per parameter into `directory`.
void save_checkpoint(const std::filesystem::path& directory, const std::string& kind, const nlohmann::json& meta,
                     const numerics::NamedParameters<float>& params);

/// Reads a checkpoint written by save_checkpoint into `params` (matched by name,
/// dims must agree) and returns the "meta" object. Throws MissingArtifactError
/// when the manifest is absent and IoError on a kind or shape mismatch.
nlohmann::json load_checkpoint(const std::filesystem::path& directory, const std::string& kind,
                               const numerics::NamedParameters<float>& params);

/// "meta" of a checkpoint without loading parameters.
nlohmann::json read_manifest(const std::filesystem::path& directory, const std::string& kind);

}  // namespace celltrack::models
