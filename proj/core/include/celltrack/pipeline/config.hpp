#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "celltrack/events/event_sim.hpp"
#include "celltrack/models/event_stats.hpp"
#include "celltrack/models/m1.hpp"
#include "celltrack/models/m2.hpp"
#include "celltrack/models/m3.hpp"
#include "celltrack/synth/scene.hpp"

namespace celltrack::pipeline {

struct Paths {
  std::filesystem::path video;
  std::filesystem::path annotations;
  std::filesystem::path workdir = "celltrack-work";
};

struct M1Section {
  /// Resolution M1 runs at; unset means the global factor. Must divide it.
  std::optional<std::size_t> downscale;
  /// Forces the cell channel instead of scoring channels.
  std::optional<std::size_t> channel;
  models::M1Config model;
};

struct M2Section {
  models::M2Config model;
  models::PercentileRule percentile_rule = models::PercentileRule::Linear;
};

struct M3Section {
  std::optional<std::size_t> k;       // unset = "auto"
  std::optional<std::size_t> frames;  // unset = "auto"
  /// First training frame; unset takes the last `frames` frames of the training range.
  std::optional<std::size_t> train_begin;
  models::M3Config model;
};

struct EvaluationSection {
  double spatial = 10.0;
  std::vector<int> temporal{1, 3};
};

struct PipelineConfig {
  Paths paths;
  std::uint64_t seed = 0;
  std::size_t downscale = 4;
  /// Frames [0, N) train, [N, T) test. Unset: every frame is used for both.
  std::optional<std::size_t> train_frames;
  std::size_t log_every = 100;
  M1Section m1;
  events::EventSimConfig event_sim;
  M2Section m2;
  M3Section m3;
  EvaluationSection evaluation;
  synth::SceneConfig synth;

  std::size_t m1_downscale() const { return m1.downscale.value_or(downscale); }
  void validate() const;
};

/// Strict: unknown keys and mistyped values throw ConfigError naming the key path.
PipelineConfig parse_config(const nlohmann::json& j);
nlohmann::json to_json(const PipelineConfig& cfg);

/// Parses a UTF-8 JSON file; malformed input throws ConfigError.
nlohmann::json read_config_file(const std::filesystem::path& path);

/// Sets a dotted key path ("m3.k") in `j`, creating objects on the way.
void set_path(nlohmann::json& j, const std::string& dotted, nlohmann::json value);

/// Text after '=' in a --set flag: JSON when it parses, a plain string otherwise.
nlohmann::json parse_flag_value(const std::string& text);

}  // namespace celltrack::pipeline
