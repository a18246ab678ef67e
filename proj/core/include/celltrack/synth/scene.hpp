#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <utility>
#include <vector>

#include "celltrack/imaging/volume.hpp"

namespace celltrack::synth {

/// Parameters of a synthetic phase-contrast-like cell video. Lengths are in
/// pixels, rates per cell per frame.
struct SceneConfig {
  std::size_t height = 96;
  std::size_t width = 128;
  std::size_t frames = 160;
  std::size_t initial_cells = 25;
  double radius_min = 4.0;
  double radius_max = 6.0;
  double step_sigma = 0.6;
  double growth_rate = 0.03;
  double mitosis_rate = 0.02;
  int event_length_min = 4;
  int event_length_max = 9;
  /// Frames a daughter must exist before it can divide again.
  int min_cell_age = 12;
  double background = 0.5;
  double cell_level = 0.25;
  double halo_contrast = 0.3;
  double halo_width = 2.0;
  double mitotic_level = 0.92;
  double noise_sigma = 0.04;
  /// Minimum background gap between neighbouring cell interiors.
  double min_gap = 2.0;
  bool enable_death = false;
  double death_rate = 0.002;
  std::uint64_t seed = 1;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

enum class EventKind { Mitosis, Death };
std::string_view to_string(EventKind kind);

/// One planted event. The cell is out of its normal stage for frames
/// [start_frame, end_frame].
struct EventRecord {
  EventKind kind = EventKind::Mitosis;
  int start_frame = 0;
  int end_frame = 0;
  double row = 0.0;
  double col = 0.0;
  double radius = 0.0;
  /// Completion point for mitosis: first frame with disjoint daughters, at their midpoint.
  imaging::EventPoint completion;

  int length() const { return end_frame - start_frame + 1; }
};

struct GroundTruth {
  std::vector<imaging::EventPoint> annotations;  // one per mitosis, sorted
  imaging::BinaryVolume normal_mask;             // interiors of cells in their normal stage
  std::vector<EventRecord> events;               // in start order
  std::vector<std::size_t> cell_counts;          // live cells per frame
};

struct Scene {
  imaging::FrameSequence frames;
  GroundTruth truth;
};

/// Renders the video. Deterministic for a given config. Throws Error naming the
/// frame when cells cannot be placed.
Scene simulate(const SceneConfig& cfg);

/// Writes frames/ (PGM), annotations.csv, normal_mask.ctn and ground_truth.json.
void save_scene(const Scene& scene, const SceneConfig& cfg, const std::filesystem::path& directory);

}  // namespace celltrack::synth
