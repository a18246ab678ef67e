#include "celltrack/events/event_sim.hpp"

#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "celltrack/error.hpp"
#include "celltrack/imaging/io.hpp"

namespace celltrack::events {

void EventSimConfig::validate() const {
  if (!(region_probability >= 0.0 && region_probability <= 1.0)) {
    throw ConfigError("event_sim.region_probability: must lie in [0, 1]");
  }
  if (length_min < 1) throw ConfigError("event_sim.length_min: must be at least 1");
  if (length_max < length_min) throw ConfigError("event_sim.length_max: must be >= length_min");
  if (min_flank < 1) throw ConfigError("event_sim.min_flank: must be at least 1");
}

bool eligible(const imaging::Region3D& region, const EventSimConfig& cfg) {
  return region.temporal_length() >= 2 * cfg.min_flank + 2;
}

std::vector<Removal> draw_removals(const std::vector<imaging::Region3D>& regions, const EventSimConfig& cfg,
                                   std::mt19937_64& rng) {
  cfg.validate();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> length_dist(cfg.length_min, cfg.length_max);
  std::vector<Removal> out;
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const auto& reg = regions[i];
    if (!eligible(reg, cfg)) continue;
    if (unit(rng) >= cfg.region_probability) continue;
    const int lo = reg.first_frame + cfg.min_flank;
    const int hi = reg.last_frame - cfg.min_flank;
    const int length = std::min(length_dist(rng), hi - lo + 1);
    const int start = std::uniform_int_distribution<int>(lo, hi - length + 1)(rng);
    out.push_back({i, start, start + length - 1});
  }
  return out;
}

TrainingPair apply_removals(const imaging::BinaryVolume& y, const std::vector<imaging::Region3D>& regions,
                            const std::vector<Removal>& removals) {
  TrainingPair pair;
  pair.context = y;
  pair.events = imaging::BinaryVolume(y.frames, y.height, y.width);
  pair.removals = removals;
  for (const auto& rm : removals) {
    if (rm.region >= regions.size()) {
      throw ShapeError("removal names region " + std::to_string(rm.region) + " of " +
                       std::to_string(regions.size()));
    }
    const auto& reg = regions[rm.region];
    if (rm.start > rm.end || rm.start < reg.first_frame || rm.end > reg.last_frame) {
      throw ShapeError("removal [" + std::to_string(rm.start) + ", " + std::to_string(rm.end) +
                       "] outside region span [" + std::to_string(reg.first_frame) + ", " +
                       std::to_string(reg.last_frame) + "]");
    }
    for (int t = rm.start; t <= rm.end; ++t) {
      for (const auto& v : reg.footprint(t)) {
        const auto idx = y.index(static_cast<std::size_t>(v.t), static_cast<std::size_t>(v.row),
                                 static_cast<std::size_t>(v.col));
        pair.context.voxels[idx] = 0;
        pair.events.voxels[idx] = 1;
      }
    }
  }
  return pair;
}

TrainingPair generate_pair(const imaging::BinaryVolume& y, const EventSimConfig& cfg, std::mt19937_64& rng) {
  const auto regions = imaging::label_regions(y);
  if (regions.empty()) {
    spdlog::warn("generate_pair: input volume is empty; returning empty context and events");
    return {imaging::BinaryVolume(y.frames, y.height, y.width), imaging::BinaryVolume(y.frames, y.height, y.width),
            {}};
  }
  return apply_removals(y, regions, draw_removals(regions, cfg, rng));
}

TrainingPair generate_pair(const imaging::BinaryVolume& y, const EventSimConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  return generate_pair(y, cfg, rng);
}

void save_pair(const TrainingPair& pair, const EventSimConfig& cfg, const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  imaging::save_binary_volume(directory / "context.ctn", pair.context);
  imaging::save_binary_volume(directory / "events.ctn", pair.events);
  nlohmann::json removals = nlohmann::json::array();
  for (const auto& rm : pair.removals) {
    removals.push_back({{"region", rm.region}, {"start", rm.start}, {"end", rm.end}});
  }
  const nlohmann::json doc = {{"seed", cfg.seed},
                              {"region_probability", cfg.region_probability},
                              {"length_min", cfg.length_min},
                              {"length_max", cfg.length_max},
                              {"min_flank", cfg.min_flank},
                              {"removals", removals}};
  std::ofstream out(directory / "removals.json");
  if (!out) throw IoError("cannot write " + (directory / "removals.json").string());
  out << doc.dump(2) << '\n';
}

}  // namespace celltrack::events
