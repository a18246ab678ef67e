#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "celltrack/imaging/regions.hpp"
#include "celltrack/imaging/volume.hpp"

namespace celltrack::events {

struct EventSimConfig {
  double region_probability = 0.3;
  /// Removal lengths are uniform on [length_min, length_max], clipped to the region interior.
  int length_min = 2;
  int length_max = 10;
  /// Frames at each end of a region that are never removed.
  int min_flank = 1;
  std::uint64_t seed = 0;

  void validate() const;
  double mean_length() const { return 0.5 * (length_min + length_max); }
};

/// Frames [start, end] of region `region` (an index into label_regions output).
struct Removal {
  std::size_t region = 0;
  int start = 0;
  int end = 0;

  int length() const { return end - start + 1; }
  auto operator<=>(const Removal&) const = default;
};

/// Context c and events e with c + e = y and c * e = 0.
struct TrainingPair {
  imaging::BinaryVolume context;
  imaging::BinaryVolume events;
  std::vector<Removal> removals;
};

/// Temporal length >= 2 * min_flank + 2.
bool eligible(const imaging::Region3D& region, const EventSimConfig& cfg);

/// Draws removals for `regions` using `rng`.
std::vector<Removal> draw_removals(const std::vector<imaging::Region3D>& regions, const EventSimConfig& cfg,
                                   std::mt19937_64& rng);

/// Moves every footprint of each removal's region within its interval from y into e.
TrainingPair apply_removals(const imaging::BinaryVolume& y, const std::vector<imaging::Region3D>& regions,
                            const std::vector<Removal>& removals);

/// label_regions, draw_removals and apply_removals with a generator seeded from cfg.seed.
TrainingPair generate_pair(const imaging::BinaryVolume& y, const EventSimConfig& cfg);
TrainingPair generate_pair(const imaging::BinaryVolume& y, const EventSimConfig& cfg, std::mt19937_64& rng);

/// context.ctn, events.ctn and removals.json (seed and intervals).
void save_pair(const TrainingPair& pair, const EventSimConfig& cfg, const std::filesystem::path& directory);

}  // namespace celltrack::events
