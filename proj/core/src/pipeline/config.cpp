#include "celltrack/pipeline/config.hpp"

#include <concepts>
#include <fstream>
#include <set>
#include <sstream>

#include "celltrack/error.hpp"

namespace celltrack::pipeline {

using nlohmann::json;

namespace {

class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(label() + "expected an object");
  }

  Section child(const std::string& key) {
    seen_.insert(key);
    return Section(j_.at(key), qualified(key));
  }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  template <std::unsigned_integral U>
  void get(const std::string& key, U& out) {
    read(key, [&](const json& v) { out = static_cast<U>(as_size(v, key)); });
  }
  void get(const std::string& key, int& out) {
    read(key, [&](const json& v) {
      if (!v.is_number_integer()) fail(key, "expected an integer");
      out = v.get<int>();
    });
  }
  void get(const std::string& key, double& out) {
    read(key, [&](const json& v) {
      if (!v.is_number()) fail(key, "expected a number");
      out = v.get<double>();
    });
  }
  void get(const std::string& key, bool& out) {
    read(key, [&](const json& v) {
      if (!v.is_boolean()) fail(key, "expected true or false");
      out = v.get<bool>();
    });
  }
  void get(const std::string& key, std::string& out) {
    read(key, [&](const json& v) {
      if (!v.is_string()) fail(key, "expected a string");
      out = v.get<std::string>();
    });
  }
  void get(const std::string& key, std::filesystem::path& out) {
    read(key, [&](const json& v) {
      if (!v.is_string()) fail(key, "expected a path string");
      out = v.get<std::string>();
    });
  }
  void get(const std::string& key, std::optional<std::size_t>& out) {
    read(key, [&](const json& v) { out = as_size(v, key); });
  }
  /// Integer or "auto".
  void get_auto(const std::string& key, std::optional<std::size_t>& out) {
    read(key, [&](const json& v) {
      if (v.is_string()) {
        if (v.get<std::string>() != "auto") fail(key, "expected a positive integer or \"auto\"");
        out.reset();
      } else {
        out = as_size(v, key);
      }
    });
  }
  void get(const std::string& key, std::vector<int>& out) {
    read(key, [&](const json& v) {
      if (!v.is_array()) fail(key, "expected an array of integers");
      out.clear();
      for (const auto& e : v) {
        if (!e.is_number_integer()) fail(key, "expected an array of integers");
        out.push_back(e.get<int>());
      }
    });
  }

  /// Throws on keys no getter asked for.
  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.contains(key)) throw ConfigError("unknown config key '" + qualified(key) + "'");
    }
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigError(qualified(key) + ": " + what);
  }

 private:
  template <typename F>
  void read(const std::string& key, F&& f) {
    seen_.insert(key);
    if (has(key)) f(j_.at(key));
  }

  std::uint64_t as_size(const json& v, const std::string& key) const {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      fail(key, "expected a nonnegative integer");
    }
    return v.get<std::uint64_t>();
  }

  std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  std::string label() const { return path_.empty() ? "config: " : path_ + ": "; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_m1(Section s, M1Section& m) {
  auto& c = m.model;
  s.get("downscale", m.downscale);
  s.get("channel", m.channel);
  s.get("channels", c.channels);
  s.get("hidden", c.hidden);
  s.get("kernel", c.kernel);
  s.get("noise", c.noise);
  s.get("channel_drop", c.channel_drop);
  s.get("iterations", c.iterations);
  s.get("learning_rate", c.learning_rate);
  s.get("decay", c.decay);
  s.get("area_min", c.area_min);
  s.get("area_max", c.area_max);
  s.get("compactness_min", c.compactness_min);
  s.get("selection_frames", c.selection_frames);
  s.finish();
}

void read_event_sim(Section s, events::EventSimConfig& c) {
  s.get("region_probability", c.region_probability);
  s.get("length_min", c.length_min);
  s.get("length_max", c.length_max);
  s.get("min_flank", c.min_flank);
  s.finish();
}

void read_m2(Section s, M2Section& m) {
  auto& c = m.model;
  s.get("hidden", c.hidden);
  s.get("kernel", c.kernel);
  s.get("window", c.window);
  s.get("iterations", c.iterations);
  s.get("learning_rate", c.learning_rate);
  s.get("decay", c.decay);
  std::string rule = models::to_string(m.percentile_rule);
  s.get("percentile_rule", rule);
  m.percentile_rule = models::parse_percentile_rule(rule);
  s.finish();
}

void read_m3(Section s, M3Section& m) {
  auto& c = m.model;
  s.get_auto("k", m.k);
  s.get_auto("frames", m.frames);
  s.get("train_begin", m.train_begin);
  s.get("hidden", c.hidden);
  s.get("kernel", c.kernel);
  s.get("decoder_hidden", c.decoder_hidden);
  s.get("dropout", c.dropout);
  s.get("iterations", c.iterations);
  s.get("learning_rate", c.learning_rate);
  s.get("decay", c.decay);
  s.get("stride", c.stride);
  s.finish();
}

void read_synth(Section s, synth::SceneConfig& c) {
  s.get("height", c.height);
  s.get("width", c.width);
  s.get("frames", c.frames);
  s.get("initial_cells", c.initial_cells);
  s.get("radius_min", c.radius_min);
  s.get("radius_max", c.radius_max);
  s.get("step_sigma", c.step_sigma);
  s.get("growth_rate", c.growth_rate);
  s.get("mitosis_rate", c.mitosis_rate);
  s.get("event_length_min", c.event_length_min);
  s.get("event_length_max", c.event_length_max);
  s.get("min_cell_age", c.min_cell_age);
  s.get("background", c.background);
  s.get("cell_level", c.cell_level);
  s.get("halo_contrast", c.halo_contrast);
  s.get("halo_width", c.halo_width);
  s.get("mitotic_level", c.mitotic_level);
  s.get("noise_sigma", c.noise_sigma);
  s.get("min_gap", c.min_gap);
  s.get("enable_death", c.enable_death);
  s.get("death_rate", c.death_rate);
  s.get("seed", c.seed);
  s.finish();
}

json auto_or(const std::optional<std::size_t>& v) { return v ? json(*v) : json("auto"); }

template <typename T>
json null_or(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

void PipelineConfig::validate() const {
  if (downscale < 1) throw ConfigError("downscale: must be positive");
  if (m1.downscale && (*m1.downscale < 1 || downscale % *m1.downscale != 0)) {
    throw ConfigError("m1.downscale: must be a positive divisor of downscale");
  }
  if (train_frames && *train_frames < 1) throw ConfigError("train_frames: must be positive");
  if (log_every < 1) throw ConfigError("log_every: must be positive");
  if (m1.channel && *m1.channel >= m1.model.channels) throw ConfigError("m1.channel: must be below m1.channels");
  if (m3.k && *m3.k < 1) throw ConfigError("m3.k: must be positive");
  if (m3.frames && m3.k && *m3.frames < *m3.k) throw ConfigError("m3.frames: must be at least m3.k");
  if (!(evaluation.spatial >= 0)) throw ConfigError("evaluation.spatial: must be nonnegative");
  if (evaluation.temporal.empty()) throw ConfigError("evaluation.temporal: needs at least one tolerance");
  for (int th : evaluation.temporal) {
    if (th < 0) throw ConfigError("evaluation.temporal: tolerances must be nonnegative");
  }
  m1.model.validate();
  event_sim.validate();
  m2.model.validate();
  auto m3cfg = m3.model;
  m3cfg.k = m3.k.value_or(1);
  m3cfg.validate();
  synth.validate();
}

PipelineConfig parse_config(const json& j) {
  PipelineConfig cfg;
  const json empty = json::object();
  Section root(j.is_null() ? empty : j, "");
  if (root.has("paths")) {
    auto p = root.child("paths");
    p.get("video", cfg.paths.video);
    p.get("annotations", cfg.paths.annotations);
    p.get("workdir", cfg.paths.workdir);
    p.finish();
  }
  root.get("seed", cfg.seed);
  root.get("downscale", cfg.downscale);
  root.get("train_frames", cfg.train_frames);
  root.get("log_every", cfg.log_every);
  if (root.has("m1")) read_m1(root.child("m1"), cfg.m1);
  if (root.has("event_sim")) read_event_sim(root.child("event_sim"), cfg.event_sim);
  if (root.has("m2")) read_m2(root.child("m2"), cfg.m2);
  if (root.has("m3")) read_m3(root.child("m3"), cfg.m3);
  if (root.has("evaluation")) {
    auto e = root.child("evaluation");
    e.get("spatial", cfg.evaluation.spatial);
    e.get("temporal", cfg.evaluation.temporal);
    e.finish();
  }
  if (root.has("synth")) read_synth(root.child("synth"), cfg.synth);
  root.finish();

  cfg.m1.model.seed = cfg.seed;
  cfg.event_sim.seed = cfg.seed + 1;
  cfg.m2.model.seed = cfg.seed + 2;
  cfg.m3.model.seed = cfg.seed + 3;
  cfg.validate();
  return cfg;
}

json to_json(const PipelineConfig& cfg) {
  const auto& m1 = cfg.m1.model;
  const auto& m2 = cfg.m2.model;
  const auto& m3 = cfg.m3.model;
  const auto& s = cfg.synth;
  const auto& e = cfg.event_sim;
  return {
      {"paths",
       {{"video", cfg.paths.video.string()},
        {"annotations", cfg.paths.annotations.string()},
        {"workdir", cfg.paths.workdir.string()}}},
      {"seed", cfg.seed},
      {"downscale", cfg.downscale},
      {"train_frames", null_or(cfg.train_frames)},
      {"log_every", cfg.log_every},
      {"m1",
       {{"downscale", null_or(cfg.m1.downscale)},
        {"channel", null_or(cfg.m1.channel)},
        {"channels", m1.channels},
        {"hidden", m1.hidden},
        {"kernel", m1.kernel},
        {"noise", m1.noise},
        {"channel_drop", m1.channel_drop},
        {"iterations", m1.iterations},
        {"learning_rate", m1.learning_rate},
        {"decay", m1.decay},
        {"area_min", m1.area_min},
        {"area_max", m1.area_max},
        {"compactness_min", m1.compactness_min},
        {"selection_frames", m1.selection_frames}}},
      {"event_sim",
       {{"region_probability", e.region_probability},
        {"length_min", e.length_min},
        {"length_max", e.length_max},
        {"min_flank", e.min_flank}}},
      {"m2",
       {{"hidden", m2.hidden},
        {"kernel", m2.kernel},
        {"window", m2.window},
        {"iterations", m2.iterations},
        {"learning_rate", m2.learning_rate},
        {"decay", m2.decay},
        {"percentile_rule", models::to_string(cfg.m2.percentile_rule)}}},
      {"m3",
       {{"k", auto_or(cfg.m3.k)},
        {"frames", auto_or(cfg.m3.frames)},
        {"train_begin", null_or(cfg.m3.train_begin)},
        {"hidden", m3.hidden},
        {"kernel", m3.kernel},
        {"decoder_hidden", m3.decoder_hidden},
        {"dropout", m3.dropout},
        {"iterations", m3.iterations},
        {"learning_rate", m3.learning_rate},
        {"decay", m3.decay},
        {"stride", m3.stride}}},
      {"evaluation", {{"spatial", cfg.evaluation.spatial}, {"temporal", cfg.evaluation.temporal}}},
      {"synth",
       {{"height", s.height},
        {"width", s.width},
        {"frames", s.frames},
        {"initial_cells", s.initial_cells},
        {"radius_min", s.radius_min},
        {"radius_max", s.radius_max},
        {"step_sigma", s.step_sigma},
        {"growth_rate", s.growth_rate},
        {"mitosis_rate", s.mitosis_rate},
        {"event_length_min", s.event_length_min},
        {"event_length_max", s.event_length_max},
        {"min_cell_age", s.min_cell_age},
        {"background", s.background},
        {"cell_level", s.cell_level},
        {"halo_contrast", s.halo_contrast},
        {"halo_width", s.halo_width},
        {"mitotic_level", s.mitotic_level},
        {"noise_sigma", s.noise_sigma},
        {"min_gap", s.min_gap},
        {"enable_death", s.enable_death},
        {"death_rate", s.death_rate},
        {"seed", s.seed}}},
  };
}

json read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return json::parse(buffer.str());
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
}

void set_path(json& j, const std::string& dotted, json value) {
  if (dotted.empty()) throw ConfigError("empty config key");
  json* node = &j;
  std::size_t pos = 0;
  while (true) {
    const auto dot = dotted.find('.', pos);
    const auto key = dotted.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
    if (key.empty()) throw ConfigError("malformed config key '" + dotted + "'");
    if (node->is_null()) *node = json::object();
    if (!node->is_object()) throw ConfigError("config key '" + dotted + "' goes through a non-object value");
    if (dot == std::string::npos) {
      (*node)[key] = std::move(value);
      return;
    }
    node = &(*node)[key];
    pos = dot + 1;
  }
}

json parse_flag_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return text;
  }
}

}  // namespace celltrack::pipeline
