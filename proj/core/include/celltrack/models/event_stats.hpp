#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "celltrack/imaging/volume.hpp"

namespace celltrack::models {

enum class PercentileRule { Linear, NearestRank };

PercentileRule parse_percentile_rule(const std::string& name);
std::string to_string(PercentileRule rule);

/// Percentile q in [0, 1] of an ascending list. Linear interpolates between the
/// closest ranks at position q * (n - 1); NearestRank takes the ceil(q * n)-th value.
double percentile(const std::vector<int>& sorted, double q, PercentileRule rule = PercentileRule::Linear);

/// Temporal lengths of predicted events (frames).
struct EventStats {
  double mean = 0.0;
  double std_dev = 0.0;  // population
  double p50 = 0.0;
  double p75 = 0.0;
  std::size_t count = 0;
  std::vector<int> lengths;  // ascending

  bool empty() const { return count == 0; }
};

EventStats stats_from_lengths(std::vector<int> lengths, PercentileRule rule = PercentileRule::Linear);

/// Binarize at 0.5 (strict), label 3D regions, summarize their temporal lengths.
EventStats event_statistics(const imaging::Volume3<float>& probabilities,
                            PercentileRule rule = PercentileRule::Linear);

/// "mean / p75", e.g. "6.38 / 8.0".
std::string format_mean_p75(const EventStats& stats);

struct KRecommendation {
  int k = 0;
  int lower_bound = 0;
  int frames_primary = 0;
  int frames_alternate = 0;
};

/// k = round-half-up(p75), raised to ceil(mean); frames k + 6 and k + 10.
/// Throws ConfigError on empty stats.
KRecommendation recommend_k(const EventStats& stats);

nlohmann::json to_json(const EventStats& stats);
nlohmann::json to_json(const KRecommendation& rec);
EventStats stats_from_json(const nlohmann::json& j);
KRecommendation recommendation_from_json(const nlohmann::json& j);

/// "length,count" rows for every observed length.
void write_histogram_csv(const EventStats& stats, const std::filesystem::path& file);

}  // namespace celltrack::models
