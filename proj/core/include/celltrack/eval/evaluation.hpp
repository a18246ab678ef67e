#pragma once

#include <cstddef>
#include <vector>

#include <nlohmann/json.hpp>

#include "celltrack/imaging/volume.hpp"

namespace celltrack::eval {

using imaging::EventPoint;

struct Tolerance {
  double spatial = 10.0;  // pixels, Euclidean, inclusive
  int temporal = 1;       // frames, inclusive
};

struct MatchedPair {
  std::size_t detection = 0;
  std::size_t annotation = 0;
  double distance = 0.0;
  int frame_offset = 0;  // |dt|
};

struct MatchResult {
  std::vector<MatchedPair> pairs;
  std::vector<std::size_t> unmatched_detections;
  std::vector<std::size_t> unmatched_annotations;
  Tolerance tolerance;
};

/// Greedy one-to-one matching: every pair within tolerance is a candidate, and
/// candidates are accepted in increasing (distance, |dt|, detection index,
/// annotation index) order while both ends are free.
MatchResult match(const std::vector<EventPoint>& detections, const std::vector<EventPoint>& annotations,
                  const Tolerance& tolerance = {});

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  Tolerance tolerance;
};

/// 2PR / (P + R), or 0 when P + R = 0.
double f1_score(double precision, double recall);

Metrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn, const Tolerance& tolerance = {});
Metrics compute_metrics(const MatchResult& m);

/// {"th", "spatial", "precision", "recall", "f1", "tp", "fp", "fn"}.
nlohmann::json to_json(const Metrics& m);

}  // namespace celltrack::eval
