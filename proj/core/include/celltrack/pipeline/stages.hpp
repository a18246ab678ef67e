#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "celltrack/eval/evaluation.hpp"
#include "celltrack/pipeline/config.hpp"

namespace celltrack::pipeline {

/// Artifact locations under the work directory.
struct Layout {
  std::filesystem::path root;

  std::filesystem::path m1_dir() const { return root / "m1"; }
  std::filesystem::path cell_maps() const { return root / "maps" / "cell_maps.ctn"; }
  std::filesystem::path m2_dir() const { return root / "m2"; }
  std::filesystem::path event_probabilities() const { return root / "stats" / "event_probabilities.ctn"; }
  std::filesystem::path stats() const { return root / "stats" / "stats.json"; }
  std::filesystem::path recommendation() const { return root / "stats" / "k_recommendation.json"; }
  std::filesystem::path histogram() const { return root / "stats" / "histogram.csv"; }
  std::filesystem::path m3_dir() const { return root / "m3"; }
  std::filesystem::path detections() const { return root / "detect" / "detections.csv"; }
  std::filesystem::path metrics() const { return root / "eval" / "metrics.json"; }
};

inline Layout layout(const PipelineConfig& cfg) { return {cfg.paths.workdir}; }

struct FrameRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
};

/// [0, N) and [N, T); both are [0, T) without a split.
FrameRange training_range(const PipelineConfig& cfg, std::size_t total_frames);
FrameRange test_range(const PipelineConfig& cfg, std::size_t total_frames);

/// k and the M3 training frames after resolving "auto".
struct M3Plan {
  std::size_t k = 0;
  FrameRange frames;
};

struct LoadedM1 {
  models::M1Model<float> model;
  std::size_t downscale = 1;
};

/// The M1 checkpoint of the work directory; MissingArtifactError names train-m1.
LoadedM1 load_m1(const Layout& dirs);

/// Renders the synth scene into `out` (frames/, annotations.csv, ...).
void simulate(const PipelineConfig& cfg, const std::filesystem::path& out);
void train_m1(const PipelineConfig& cfg);
void extract_maps(const PipelineConfig& cfg);
void train_m2(const PipelineConfig& cfg);
models::EventStats stats(const PipelineConfig& cfg);
M3Plan plan_m3(const PipelineConfig& cfg, std::size_t total_frames);
M3Plan train_m3(const PipelineConfig& cfg);
std::vector<imaging::EventPoint> detect(const PipelineConfig& cfg);
std::vector<eval::Metrics> evaluate(const PipelineConfig& cfg);

/// Every stage from train-m1 to evaluate.
std::vector<eval::Metrics> run_all(const PipelineConfig& cfg);

struct SweepCell {
  std::size_t k = 0;
  std::size_t frames = 0;
  std::vector<eval::Metrics> metrics;
};

/// train-m3, detect and evaluate per (k, frames), each in workdir/sweep/k<K>_f<F>.
/// Writes workdir/sweep/summary.csv. Cells with frames < k are skipped.
std::vector<SweepCell> sweep(const PipelineConfig& cfg, const std::vector<std::size_t>& ks,
                             const std::vector<std::size_t>& frames);

}  // namespace celltrack::pipeline
