#include "celltrack/models/event_stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <numeric>

#include "celltrack/error.hpp"
#include "celltrack/imaging/morphology.hpp"
#include "celltrack/imaging/regions.hpp"

namespace celltrack::models {

PercentileRule parse_percentile_rule(const std::string& name) {
  if (name == "linear") return PercentileRule::Linear;
  if (name == "nearest_rank") return PercentileRule::NearestRank;
  throw ConfigError("m2.percentile_rule: expected 'linear' or 'nearest_rank', got '" + name + "'");
}

std::string to_string(PercentileRule rule) { return rule == PercentileRule::Linear ? "linear" : "nearest_rank"; }

double percentile(const std::vector<int>& sorted, double q, PercentileRule rule) {
  if (sorted.empty()) throw Error("percentile of an empty list");
  const std::size_t n = sorted.size();
  if (rule == PercentileRule::NearestRank) {
    const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
    return sorted[std::clamp<std::size_t>(rank, 1, n) - 1];
  }
  const double pos = q * static_cast<double>(n - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, n - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

EventStats stats_from_lengths(std::vector<int> lengths, PercentileRule rule) {
  EventStats s;
  std::sort(lengths.begin(), lengths.end());
  s.count = lengths.size();
  if (!lengths.empty()) {
    const double n = static_cast<double>(lengths.size());
    s.mean = std::accumulate(lengths.begin(), lengths.end(), 0.0) / n;
    double ss = 0;
    for (int v : lengths) ss += (v - s.mean) * (v - s.mean);
    s.std_dev = std::sqrt(ss / n);
    s.p50 = percentile(lengths, 0.5, rule);
    s.p75 = percentile(lengths, 0.75, rule);
  }
  s.lengths = std::move(lengths);
  return s;
}

EventStats event_statistics(const imaging::Volume3<float>& probabilities, PercentileRule rule) {
  std::vector<int> lengths;
  for (const auto& region : imaging::label_regions(imaging::binarize(probabilities, 0.5))) {
    lengths.push_back(region.temporal_length());
  }
  return stats_from_lengths(std::move(lengths), rule);
}

std::string format_mean_p75(const EventStats& stats) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f / %.1f", stats.mean, stats.p75);
  return buf;
}

KRecommendation recommend_k(const EventStats& stats) {
  if (stats.empty()) throw ConfigError("m3.k: 'auto' needs at least one predicted event; set k explicitly");
  KRecommendation r;
  r.lower_bound = static_cast<int>(std::ceil(stats.mean - 1e-9));
  r.k = std::max(static_cast<int>(std::floor(stats.p75 + 0.5)), r.lower_bound);
  r.frames_primary = r.k + 6;
  r.frames_alternate = r.k + 10;
  return r;
}

nlohmann::json to_json(const EventStats& stats) {
  return {{"mean", stats.mean}, {"std", stats.std_dev}, {"p50", stats.p50}, {"p75", stats.p75}, {"count", stats.count}};
}

nlohmann::json to_json(const KRecommendation& rec) {
  return {{"k", rec.k},
          {"lower_bound", rec.lower_bound},
          {"frames_primary", rec.frames_primary},
          {"frames_alternate", rec.frames_alternate}};
}

EventStats stats_from_json(const nlohmann::json& j) {
  EventStats s;
  s.mean = j.at("mean").get<double>();
  s.std_dev = j.at("std").get<double>();
  s.p50 = j.at("p50").get<double>();
  s.p75 = j.at("p75").get<double>();
  s.count = j.at("count").get<std::size_t>();
  return s;
}

KRecommendation recommendation_from_json(const nlohmann::json& j) {
  return {j.at("k").get<int>(), j.at("lower_bound").get<int>(), j.at("frames_primary").get<int>(),
          j.at("frames_alternate").get<int>()};
}

void write_histogram_csv(const EventStats& stats, const std::filesystem::path& file) {
  std::map<int, std::size_t> counts;
  for (int v : stats.lengths) ++counts[v];
  std::ofstream out(file);
  if (!out) throw IoError("cannot write " + file.string());
  out << "length,count\n";
  for (const auto& [len, n] : counts) out << len << ',' << n << '\n';
}

}  // namespace celltrack::models
