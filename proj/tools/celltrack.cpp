#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "celltrack/error.hpp"
#include "celltrack/pipeline/stages.hpp"

namespace {

using nlohmann::json;
using namespace celltrack;

struct Overrides {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::string> workdir, video, annotations, k, frames;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> downscale, m1_downscale, train_frames, train_begin;
};

json build_config(const Overrides& o) {
  json j = o.config.empty() ? json::object() : pipeline::read_config_file(o.config);
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    pipeline::set_path(j, s.substr(0, eq), pipeline::parse_flag_value(s.substr(eq + 1)));
  }
  if (o.workdir) pipeline::set_path(j, "paths.workdir", *o.workdir);
  if (o.video) pipeline::set_path(j, "paths.video", *o.video);
  if (o.annotations) pipeline::set_path(j, "paths.annotations", *o.annotations);
  if (o.seed) pipeline::set_path(j, "seed", *o.seed);
  if (o.downscale) pipeline::set_path(j, "downscale", *o.downscale);
  if (o.m1_downscale) pipeline::set_path(j, "m1.downscale", *o.m1_downscale);
  if (o.train_frames) pipeline::set_path(j, "train_frames", *o.train_frames);
  if (o.train_begin) pipeline::set_path(j, "m3.train_begin", *o.train_begin);
  if (o.k) pipeline::set_path(j, "m3.k", pipeline::parse_flag_value(*o.k));
  if (o.frames) pipeline::set_path(j, "m3.frames", pipeline::parse_flag_value(*o.frames));
  return j;
}

void print_metrics(const std::vector<eval::Metrics>& metrics) {
  json out = json::array();
  for (const auto& m : metrics) out.push_back(eval::to_json(m));
  std::cout << out.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cell event detection pipeline"};
  app.require_subcommand(1);
  app.fallthrough();

  Overrides o;
  std::string log_level = "info";
  app.add_option("-c,--config", o.config, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--set", o.sets, "Override a config key: --set m3.iterations=500");
  app.add_option("--workdir", o.workdir, "Artifact directory");
  app.add_option("--video", o.video, "Directory of PGM frames");
  app.add_option("--annotations", o.annotations, "Event annotations CSV (frame,row,col)");
  app.add_option("--seed", o.seed, "Global seed");
  app.add_option("--downscale", o.downscale, "Pipeline downscale factor");
  app.add_option("--m1-downscale", o.m1_downscale, "Downscale factor for M1 only");
  app.add_option("--train-frames", o.train_frames, "Train on frames [0, N), test on [N, T)");
  app.add_option("--k", o.k, "M3 sequence length or 'auto'");
  app.add_option("--frames", o.frames, "M3 training frames or 'auto'");
  app.add_option("--train-begin", o.train_begin, "First M3 training frame");
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off");

  std::string simulate_out;
  auto* simulate = app.add_subcommand("simulate", "Render a synthetic video with annotations");
  simulate->add_option("-o,--out", simulate_out, "Output directory")->required();
  auto* train_m1 = app.add_subcommand("train-m1", "Train the cell-map autoencoder");
  auto* extract = app.add_subcommand("extract-maps", "Write binary cell maps for the training range");
  auto* train_m2 = app.add_subcommand("train-m2", "Train the event predictor on simulated removals");
  auto* stats = app.add_subcommand("stats", "Predict events and recommend the sequence length");
  auto* train_m3 = app.add_subcommand("train-m3", "Train the bidirectional detector");
  auto* detect = app.add_subcommand("detect", "Detect events on the test range");
  auto* evaluate = app.add_subcommand("evaluate", "Score detections against annotations");
  auto* run_all = app.add_subcommand("run-all", "Run every stage from train-m1 to evaluate");
  std::vector<std::size_t> sweep_ks, sweep_frames;
  auto* sweep = app.add_subcommand("sweep", "Train and score M3 over a grid of k and frame counts");
  sweep->add_option("--k-list", sweep_ks, "Sequence lengths")->required()->delimiter(',');
  sweep->add_option("--frames-list", sweep_frames, "Training frame counts")->required()->delimiter(',');
  auto* show = app.add_subcommand("show-config", "Print the resolved config as JSON");

  CLI11_PARSE(app, argc, argv);

  auto logger = spdlog::stderr_color_mt("celltrack");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    const auto cfg = pipeline::parse_config(build_config(o));
    if (*simulate) {
      pipeline::simulate(cfg, simulate_out);
    } else if (*train_m1) {
      pipeline::train_m1(cfg);
    } else if (*extract) {
      pipeline::extract_maps(cfg);
    } else if (*train_m2) {
      pipeline::train_m2(cfg);
    } else if (*stats) {
      std::cout << models::to_json(pipeline::stats(cfg)).dump(2) << '\n';
    } else if (*train_m3) {
      pipeline::train_m3(cfg);
    } else if (*detect) {
      pipeline::detect(cfg);
    } else if (*evaluate) {
      print_metrics(pipeline::evaluate(cfg));
    } else if (*run_all) {
      print_metrics(pipeline::run_all(cfg));
    } else if (*sweep) {
      pipeline::sweep(cfg, sweep_ks, sweep_frames);
    } else if (*show) {
      std::cout << pipeline::to_json(cfg).dump(2) << '\n';
    }
  } catch (const ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return 2;
  } catch (const MissingArtifactError& e) {
    spdlog::error("{}", e.what());
    return 3;
  } catch (const NumericError& e) {
    spdlog::error("numeric failure: {}", e.what());
    return 4;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
