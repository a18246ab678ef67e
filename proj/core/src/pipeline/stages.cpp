#include "celltrack/pipeline/stages.hpp"

#include <fstream>

#include <spdlog/spdlog.h>

#include "celltrack/error.hpp"
#include "celltrack/imaging/io.hpp"
#include "celltrack/imaging/transform.hpp"
#include "celltrack/models/checkpoint.hpp"

namespace celltrack::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

imaging::FrameSequence load_video(const PipelineConfig& cfg) {
  if (cfg.paths.video.empty()) throw ConfigError("paths.video: not set");
  if (!fs::is_directory(cfg.paths.video)) {
    throw ConfigError("paths.video: " + cfg.paths.video.string() + " is not a directory");
  }
  return imaging::load_sequence(cfg.paths.video);
}

std::vector<imaging::EventPoint> load_annotations(const PipelineConfig& cfg) {
  if (cfg.paths.annotations.empty()) throw ConfigError("paths.annotations: not set");
  if (!fs::exists(cfg.paths.annotations)) {
    throw ConfigError("paths.annotations: " + cfg.paths.annotations.string() + " does not exist");
  }
  return imaging::read_points_csv(cfg.paths.annotations);
}

void require(const fs::path& artifact, const std::string& stage) {
  if (!fs::exists(artifact)) {
    throw MissingArtifactError("missing " + artifact.string() + "; run the " + stage + " stage first");
  }
}

void prepare(const fs::path& file) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
}

void write_json(const fs::path& file, const json& j) {
  prepare(file);
  std::ofstream os(file);
  if (!os) throw IoError("cannot open " + file.string() + " for writing");
  os << j.dump(2) << '\n';
  if (!os) throw IoError("failed writing " + file.string());
}

json read_json(const fs::path& file) {
  std::ifstream is(file);
  if (!is) throw IoError("cannot open " + file.string());
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw IoError(file.string() + ": " + e.what());
  }
}

models::ProgressFn progress(const std::string& stage, std::size_t every) {
  return [stage, every](std::size_t it, double loss) {
    if (it % every == 0) spdlog::info("{} iteration {} loss {:.4f}", stage, it, loss);
  };
}

}  // namespace

LoadedM1 load_m1(const Layout& dirs) {
  require(dirs.m1_dir() / "manifest.json", "train-m1");
  const auto meta = models::read_manifest(dirs.m1_dir(), "M1");
  models::M1Config arch;
  arch.channels = meta.at("channels").get<std::size_t>();
  arch.hidden = meta.at("hidden").get<std::size_t>();
  arch.kernel = meta.at("kernel").get<std::size_t>();
  numerics::Rng rng(0);
  auto model = models::M1Model<float>::create(arch, rng);
  models::load_checkpoint(dirs.m1_dir(), "M1", model.parameters());
  model.selected_channel = meta.at("selected_channel").get<int>();
  return {std::move(model), meta.at("downscale").get<std::size_t>()};
}

namespace {

models::M2Model<float> load_m2(const Layout& dirs) {
  require(dirs.m2_dir() / "manifest.json", "train-m2");
  const auto meta = models::read_manifest(dirs.m2_dir(), "M2");
  models::M2Config arch;
  arch.hidden = meta.at("hidden").get<std::size_t>();
  arch.kernel = meta.at("kernel").get<std::size_t>();
  numerics::Rng rng(0);
  auto model = models::M2Model<float>::create(arch, rng);
  models::load_checkpoint(dirs.m2_dir(), "M2", model.parameters());
  return model;
}

struct LoadedM3 {
  models::M3Model<float> model;
  std::size_t downscale = 1;
  std::size_t stride = 1;
};

LoadedM3 load_m3(const Layout& dirs) {
  require(dirs.m3_dir() / "manifest.json", "train-m3");
  const auto meta = models::read_manifest(dirs.m3_dir(), "M3");
  models::M3Config arch;
  arch.k = meta.at("k").get<std::size_t>();
  arch.hidden = meta.at("hidden").get<std::size_t>();
  arch.kernel = meta.at("kernel").get<std::size_t>();
  arch.decoder_hidden = meta.at("decoder_hidden").get<std::size_t>();
  numerics::Rng rng(0);
  auto model = models::M3Model<float>::create(arch, rng);
  models::load_checkpoint(dirs.m3_dir(), "M3", model.parameters());
  return {std::move(model), meta.at("downscale").get<std::size_t>(), meta.at("stride").get<std::size_t>()};
}

/// Cell maps at the pipeline resolution.
imaging::BinaryVolume m2_input(const PipelineConfig& cfg, const Layout& dirs) {
  require(dirs.cell_maps(), "extract-maps");
  const auto m1_factor = models::read_manifest(dirs.m1_dir(), "M1").at("downscale").get<std::size_t>();
  if (cfg.downscale % m1_factor != 0) {
    throw ConfigError("downscale: " + std::to_string(cfg.downscale) + " is not a multiple of the M1 resolution " +
                      std::to_string(m1_factor));
  }
  return imaging::downscale_mask(imaging::load_binary_volume(dirs.cell_maps()), cfg.downscale / m1_factor);
}

}  // namespace

FrameRange training_range(const PipelineConfig& cfg, std::size_t total_frames) {
  if (!cfg.train_frames) return {0, total_frames};
  if (*cfg.train_frames >= total_frames) {
    throw ConfigError("train_frames: " + std::to_string(*cfg.train_frames) + " leaves no test frames out of " +
                      std::to_string(total_frames));
  }
  return {0, *cfg.train_frames};
}

FrameRange test_range(const PipelineConfig& cfg, std::size_t total_frames) {
  if (!cfg.train_frames) return {0, total_frames};
  return {training_range(cfg, total_frames).end, total_frames};
}

void simulate(const PipelineConfig& cfg, const fs::path& out) {
  const auto scene = synth::simulate(cfg.synth);
  synth::save_scene(scene, cfg.synth, out);
  spdlog::info("simulated {} frames of {}x{} with {} annotated events into {}", cfg.synth.frames, cfg.synth.height,
               cfg.synth.width, scene.truth.annotations.size(), out.string());
}

void train_m1(const PipelineConfig& cfg) {
  const auto dirs = layout(cfg);
  const auto video = load_video(cfg);
  const auto range = training_range(cfg, video.frames);
  const auto seq = imaging::downscale(video.slice(range.begin, range.size()), cfg.m1_downscale());
  spdlog::info("M1 on frames [{}, {}) at {}x{}", range.begin, range.end, seq.height, seq.width);

  auto result = models::m1_train(seq, cfg.m1.model, progress("M1", cfg.log_every));
  auto& model = result.model;
  const auto scores = models::channel_scores(model, seq, cfg.m1.model);
  if (cfg.m1.channel) {
    model.selected_channel = static_cast<int>(*cfg.m1.channel);
  } else {
    model.selected_channel = static_cast<int>(models::select_cell_channel(model, seq, cfg.m1.model));
  }
  spdlog::info("M1 cell channel {} of {}", model.selected_channel, model.channels);

  const json meta{{"channels", cfg.m1.model.channels},
                  {"hidden", cfg.m1.model.hidden},
                  {"kernel", cfg.m1.model.kernel},
                  {"downscale", cfg.m1_downscale()},
                  {"selected_channel", model.selected_channel},
                  {"channel_scores", scores},
                  {"train_frames", {range.begin, range.end}},
                  {"iterations", cfg.m1.model.iterations},
                  {"seed", cfg.m1.model.seed}};
  models::save_checkpoint(dirs.m1_dir(), "M1", meta, model.parameters());
}

void extract_maps(const PipelineConfig& cfg) {
  const auto dirs = layout(cfg);
  const auto m1 = load_m1(dirs);
  const auto video = load_video(cfg);
  const auto range = training_range(cfg, video.frames);
  const auto seq = imaging::downscale(video.slice(range.begin, range.size()), m1.downscale);
  const auto y = models::extract_cell_maps(m1.model, seq);
  prepare(dirs.cell_maps());
  imaging::save_binary_volume(dirs.cell_maps(), y);
  spdlog::info("cell maps {}x{}x{} written to {}", y.frames, y.height, y.width, dirs.cell_maps().string());
}

void train_m2(const PipelineConfig& cfg) {
  const auto dirs = layout(cfg);
  const auto y = m2_input(cfg, dirs);
  spdlog::info("M2 on {} frames at {}x{}", y.frames, y.height, y.width);
  const auto result = models::m2_train(y, cfg.event_sim, cfg.m2.model, progress("M2", cfg.log_every));
  auto model = result.model;
  const json meta{{"hidden", cfg.m2.model.hidden},
                  {"kernel", cfg.m2.model.kernel},
                  {"window", cfg.m2.model.window},
                  {"iterations", cfg.m2.model.iterations},
                  {"seed", cfg.m2.model.seed}};
  models::save_checkpoint(dirs.m2_dir(), "M2", meta, model.parameters());
}

models::EventStats stats(const PipelineConfig& cfg) {
  const auto dirs = layout(cfg);
  const auto model = load_m2(dirs);
  const auto y = m2_input(cfg, dirs);
  const auto probabilities = models::m2_infer(model, y);
  prepare(dirs.event_probabilities());
  imaging::save_volume(dirs.event_probabilities(), probabilities);

  const auto st = models::event_statistics(probabilities, cfg.m2.percentile_rule);
  write_json(dirs.stats(), models::to_json(st));
  models::write_histogram_csv(st, dirs.histogram());
  if (st.empty()) {
    fs::remove(dirs.recommendation());
    spdlog::warn("M2 predicted no events; k cannot be recommended");
    return st;
  }
  const auto rec = models::recommend_k(st);
  write_json(dirs.recommendation(), models::to_json(rec));
  spdlog::info("{} predicted events, mean / p75 length {}; recommended k = {}, frames = {} (or {})", st.count,
               models::format_mean_p75(st), rec.k, rec.frames_primary, rec.frames_alternate);
  return st;
}

M3Plan plan_m3(const PipelineConfig& cfg, std::size_t total_frames) {
  const auto range = training_range(cfg, total_frames);
  std::size_t k = 0, frames = 0;
  if (cfg.m3.k && cfg.m3.frames) {
    k = *cfg.m3.k;
    frames = *cfg.m3.frames;
  } else if (cfg.m3.k) {
    k = *cfg.m3.k;
    frames = k + 6;
  } else {
    const auto dirs = layout(cfg);
    require(dirs.stats(), "stats");
    const auto rec = models::recommend_k(models::stats_from_json(read_json(dirs.stats())));
    k = static_cast<std::size_t>(rec.k);
    frames = cfg.m3.frames.value_or(static_cast<std::size_t>(rec.frames_primary));
  }
  if (frames < k) throw ConfigError("m3.frames: " + std::to_string(frames) + " is fewer than k = " + std::to_string(k));
  if (frames > range.size()) {
    throw ConfigError("m3.frames: " + std::to_string(frames) + " exceeds the " + std::to_string(range.size()) +
                      "-frame training range");
  }
  const std::size_t begin = cfg.m3.train_begin.value_or(range.end - frames);
  if (begin < range.begin || begin + frames > range.end) {
    throw ConfigError("m3.train_begin: frames [" + std::to_string(begin) + ", " + std::to_string(begin + frames) +
                      ") leave the training range");
  }
  return {k, {begin, begin + frames}};
}

M3Plan train_m3(const PipelineConfig& cfg) {
  const auto dirs = layout(cfg);
  const auto video = load_video(cfg);
  const auto plan = plan_m3(cfg, video.frames);
  spdlog::info("resolved k = {}, frames = {} (frames [{}, {}))", plan.k, plan.frames.size(), plan.frames.begin,
               plan.frames.end);

  const auto annotations = load_annotations(cfg);
  const auto labels = models::build_labels(annotations, video.frames, video.height, video.width, cfg.downscale)
                          .slice_frames(plan.frames.begin, plan.frames.size());
  const auto seq = imaging::downscale(video.slice(plan.frames.begin, plan.frames.size()), cfg.downscale);
  auto m3cfg = cfg.m3.model;
  m3cfg.k = plan.k;
  auto result = models::m3_train(seq, labels, m3cfg, progress("M3", cfg.log_every));

  const json meta{{"k", plan.k},
                  {"frames", {plan.frames.begin, plan.frames.end}},
                  {"hidden", m3cfg.hidden},
                  {"kernel", m3cfg.kernel},
                  {"decoder_hidden", m3cfg.decoder_hidden},
                  {"dropout", m3cfg.dropout},
                  {"stride", m3cfg.stride},
                  {"downscale", cfg.downscale},
                  {"iterations", m3cfg.iterations},
                  {"seed", m3cfg.seed}};
  models::save_checkpoint(dirs.m3_dir(), "M3", meta, result.model.parameters());
  return plan;
}

std::vector<imaging::EventPoint> detect(const PipelineConfig& cfg) {
  const auto dirs = layout(cfg);
  const auto m3 = load_m3(dirs);
  const auto video = load_video(cfg);
  const auto range = test_range(cfg, video.frames);
  if (range.size() < m3.model.k) {
    throw ConfigError("train_frames: the test range has " + std::to_string(range.size()) + " frames, fewer than k = " +
                      std::to_string(m3.model.k));
  }
  const auto seq = imaging::downscale(video.slice(range.begin, range.size()), m3.downscale);
  const auto detections =
      models::m3_detect(m3.model, seq, m3.downscale, static_cast<int>(range.begin), m3.stride);
  prepare(dirs.detections());
  imaging::write_points_csv(dirs.detections(), detections);
  spdlog::info("{} detections on frames [{}, {})", detections.size(), range.begin, range.end);
  return detections;
}

std::vector<eval::Metrics> evaluate(const PipelineConfig& cfg) {
  const auto dirs = layout(cfg);
  require(dirs.detections(), "detect");
  const auto detections = imaging::read_points_csv(dirs.detections());
  const auto video = load_video(cfg);
  const auto range = test_range(cfg, video.frames);
  std::vector<imaging::EventPoint> annotations;
  for (const auto& p : load_annotations(cfg)) {
    if (p.frame >= static_cast<int>(range.begin) && p.frame < static_cast<int>(range.end)) annotations.push_back(p);
  }

  std::vector<eval::Metrics> out;
  json results = json::array();
  for (int th : cfg.evaluation.temporal) {
    const eval::Tolerance tol{cfg.evaluation.spatial, th};
    out.push_back(eval::compute_metrics(eval::match(detections, annotations, tol)));
    results.push_back(eval::to_json(out.back()));
    spdlog::info("th = {}: precision {:.3f} recall {:.3f} F1 {:.3f}", th, out.back().precision, out.back().recall,
                 out.back().f1);
  }
  write_json(dirs.metrics(), {{"frames", {range.begin, range.end}},
                              {"detections", detections.size()},
                              {"annotations", annotations.size()},
                              {"results", results}});
  return out;
}

std::vector<eval::Metrics> run_all(const PipelineConfig& cfg) {
  train_m1(cfg);
  extract_maps(cfg);
  train_m2(cfg);
  stats(cfg);
  train_m3(cfg);
  detect(cfg);
  return evaluate(cfg);
}

std::vector<SweepCell> sweep(const PipelineConfig& cfg, const std::vector<std::size_t>& ks,
                             const std::vector<std::size_t>& frames) {
  const auto root = layout(cfg).root / "sweep";
  std::vector<SweepCell> cells;
  for (std::size_t k : ks) {
    for (std::size_t f : frames) {
      if (f < k) {
        spdlog::info("sweep: skipping k = {} with {} frames", k, f);
        continue;
      }
      auto cell_cfg = cfg;
      cell_cfg.paths.workdir = root / ("k" + std::to_string(k) + "_f" + std::to_string(f));
      cell_cfg.m3.k = k;
      cell_cfg.m3.frames = f;
      train_m3(cell_cfg);
      detect(cell_cfg);
      cells.push_back({k, f, evaluate(cell_cfg)});
    }
  }
  fs::create_directories(root);
  std::ofstream os(root / "summary.csv");
  os << "k,frames,th,precision,recall,f1\n";
  for (const auto& c : cells) {
    for (const auto& m : c.metrics) {
      os << c.k << ',' << c.frames << ',' << m.tolerance.temporal << ',' << m.precision << ',' << m.recall << ','
         << m.f1 << '\n';
    }
  }
  if (!os) throw IoError("failed writing " + (root / "summary.csv").string());
  return cells;
}

}  // namespace celltrack::pipeline
