#include "celltrack/eval/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <tuple>

namespace celltrack::eval {

MatchResult match(const std::vector<EventPoint>& detections, const std::vector<EventPoint>& annotations,
                  const Tolerance& tolerance) {
  std::vector<MatchedPair> candidates;
  for (std::size_t d = 0; d < detections.size(); ++d) {
    for (std::size_t a = 0; a < annotations.size(); ++a) {
      const int dt = std::abs(detections[d].frame - annotations[a].frame);
      if (dt > tolerance.temporal) continue;
      const double dist = std::hypot(static_cast<double>(detections[d].row - annotations[a].row),
                                     static_cast<double>(detections[d].col - annotations[a].col));
      if (dist > tolerance.spatial) continue;
      candidates.push_back({d, a, dist, dt});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const MatchedPair& x, const MatchedPair& y) {
    return std::tie(x.distance, x.frame_offset, x.detection, x.annotation) <
           std::tie(y.distance, y.frame_offset, y.detection, y.annotation);
  });

  MatchResult out;
  out.tolerance = tolerance;
  std::vector<bool> det_used(detections.size(), false), ann_used(annotations.size(), false);
  for (const auto& c : candidates) {
    if (det_used[c.detection] || ann_used[c.annotation]) continue;
    det_used[c.detection] = ann_used[c.annotation] = true;
    out.pairs.push_back(c);
  }
  for (std::size_t d = 0; d < detections.size(); ++d) {
    if (!det_used[d]) out.unmatched_detections.push_back(d);
  }
  for (std::size_t a = 0; a < annotations.size(); ++a) {
    if (!ann_used[a]) out.unmatched_annotations.push_back(a);
  }
  return out;
}

double f1_score(double precision, double recall) {
  const double s = precision + recall;
  return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

Metrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn, const Tolerance& tolerance) {
  Metrics m;
  m.tp = tp;
  m.fp = fp;
  m.fn = fn;
  m.tolerance = tolerance;
  m.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  m.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  m.f1 = f1_score(m.precision, m.recall);
  return m;
}

Metrics compute_metrics(const MatchResult& m) {
  return metrics_from_counts(m.pairs.size(), m.unmatched_detections.size(), m.unmatched_annotations.size(),
                             m.tolerance);
}

nlohmann::json to_json(const Metrics& m) {
  return {{"th", m.tolerance.temporal}, {"spatial", m.tolerance.spatial}, {"precision", m.precision},
          {"recall", m.recall},         {"f1", m.f1},                     {"tp", m.tp},
          {"fp", m.fp},                 {"fn", m.fn}};
}

}  // namespace celltrack::eval
