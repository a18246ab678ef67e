#include "celltrack/synth/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include <nlohmann/json.hpp>

#include "celltrack/error.hpp"
#include "celltrack/imaging/io.hpp"

namespace celltrack::synth {

using imaging::EventPoint;

namespace {

using Rng = std::mt19937_64;

enum class CellState { Normal, Mitotic, Dying };

struct Disc {
  double row, col, radius;
};

struct Cell {
  double row = 0, col = 0;
  double radius = 0, target_radius = 0;
  int born = 0;
  bool wants_division = false;
  CellState state = CellState::Normal;
  // active event
  int start = 0, end = 0;
  double axis_row = 0, axis_col = 0;
  double daughter_radius[2] = {0, 0};
  double separation = 0;  // final centre offset of each daughter

  Disc daughter(int d, double fraction = 1.0) const {
    const double sign = d == 0 ? 1.0 : -1.0;
    return {row + sign * fraction * separation * axis_row, col + sign * fraction * separation * axis_col,
            daughter_radius[d]};
  }

  // Space the cell claims, including the final daughter positions of a division.
  std::vector<Disc> footprint() const {
    switch (state) {
      case CellState::Mitotic:
        return {{row, col, radius}, daughter(0), daughter(1)};
      case CellState::Dying:
        return {{row, col, radius * 1.3}};
      case CellState::Normal:
        break;
    }
    return {{row, col, radius}};
  }
};

// Painter with per-pixel priorities so interiors cover halos regardless of order.
class Canvas {
 public:
  Canvas(std::size_t h, std::size_t w, float fill) : h_(h), w_(w), level_(h * w, fill), prio_(h * w, 0) {}

  template <typename F>
  void for_disc(double row, double col, double radius, F&& f) const {
    const double r2 = radius * radius;
    const auto lo_r = static_cast<long>(std::max(0.0, std::ceil(row - radius)));
    const auto hi_r = static_cast<long>(std::min<double>(static_cast<double>(h_) - 1, std::floor(row + radius)));
    const auto lo_c = static_cast<long>(std::max(0.0, std::ceil(col - radius)));
    const auto hi_c = static_cast<long>(std::min<double>(static_cast<double>(w_) - 1, std::floor(col + radius)));
    for (long r = lo_r; r <= hi_r; ++r) {
      for (long c = lo_c; c <= hi_c; ++c) {
        const double dr = static_cast<double>(r) - row, dc = static_cast<double>(c) - col;
        if (dr * dr + dc * dc <= r2) f(static_cast<std::size_t>(r) * w_ + static_cast<std::size_t>(c));
      }
    }
  }

  void paint(double row, double col, double radius, float level, int priority) {
    for_disc(row, col, radius, [&](std::size_t i) {
      if (priority >= prio_[i]) {
        prio_[i] = priority;
        level_[i] = level;
      }
    });
  }

  std::vector<float>& levels() { return level_; }

 private:
  std::size_t h_, w_;
  std::vector<float> level_;
  std::vector<int> prio_;
};

bool inside(const SceneConfig& cfg, double row, double col, double radius) {
  return row >= radius && col >= radius && row <= static_cast<double>(cfg.height) - 1 - radius &&
         col <= static_cast<double>(cfg.width) - 1 - radius;
}

bool has_room(const std::vector<Cell>& cells, std::size_t self, const std::vector<Disc>& claim, double gap) {
  for (std::size_t j = 0; j < cells.size(); ++j) {
    if (j == self) continue;
    for (const Disc& other : cells[j].footprint()) {
      for (const Disc& mine : claim) {
        const double dr = other.row - mine.row, dc = other.col - mine.col;
        const double need = other.radius + mine.radius + gap;
        if (dr * dr + dc * dc < need * need) return false;
      }
    }
  }
  return true;
}

constexpr int kDivisionAxes = 6;

int round_half_up(double x) { return static_cast<int>(std::floor(x + 0.5)); }

// Offset of the daughters from the parent centre at frame t of a division
// (fraction of the final separation reached over three frames).
double split_fraction(const Cell& cell, int t) { return static_cast<double>(t - (cell.end - 2)) / 3.0; }

}  // namespace

std::string_view to_string(EventKind kind) { return kind == EventKind::Mitosis ? "mitosis" : "death"; }

void SceneConfig::validate() const {
  auto fail = [](const char* field, const char* why) {
    throw ConfigError(std::string("scene.") + field + ": " + why);
  };
  if (height < 8) fail("height", "must be at least 8");
  if (width < 8) fail("width", "must be at least 8");
  if (frames < 1) fail("frames", "must be at least 1");
  if (initial_cells < 1) fail("initial_cells", "must be positive");
  if (!(radius_min > 0)) fail("radius_min", "must be positive");
  if (!(radius_max >= radius_min)) fail("radius_max", "must be >= radius_min");
  if (!(step_sigma >= 0)) fail("step_sigma", "must be nonnegative");
  if (!(growth_rate >= 0)) fail("growth_rate", "must be nonnegative");
  if (!(mitosis_rate >= 0 && mitosis_rate <= 1)) fail("mitosis_rate", "must lie in [0, 1]");
  if (event_length_min < 2) fail("event_length_min", "must be at least 2");
  if (event_length_max < event_length_min) fail("event_length_max", "must be >= event_length_min");
  if (min_cell_age < 0) fail("min_cell_age", "must be nonnegative");
  if (!(halo_width >= 0)) fail("halo_width", "must be nonnegative");
  if (!(noise_sigma >= 0)) fail("noise_sigma", "must be nonnegative");
  if (!(min_gap >= 0)) fail("min_gap", "must be nonnegative");
  if (!(death_rate >= 0 && death_rate <= 1)) fail("death_rate", "must lie in [0, 1]");
  for (double level : {background, cell_level, mitotic_level}) {
    if (!(level >= 0 && level <= 1)) fail("background/cell_level/mitotic_level", "must lie in [0, 1]");
  }
}

Scene simulate(const SceneConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> length_dist(cfg.event_length_min, cfg.event_length_max);
  const int total_frames = static_cast<int>(cfg.frames);

  Scene scene;
  scene.frames = imaging::FrameSequence(cfg.frames, cfg.height, cfg.width);
  scene.frames.frame_rate = 1.0;
  scene.frames.source_id = "synthcells:" + std::to_string(cfg.seed);
  auto& truth = scene.truth;
  truth.normal_mask = imaging::BinaryVolume(cfg.frames, cfg.height, cfg.width);
  truth.cell_counts.assign(cfg.frames, 0);

  std::vector<Cell> cells;
  for (std::size_t i = 0; i < cfg.initial_cells; ++i) {
    const double radius = cfg.radius_min + (cfg.radius_max - cfg.radius_min) * unit(rng);
    bool placed = false;
    for (int attempt = 0; attempt < 2000 && !placed; ++attempt) {
      const double row = radius + (static_cast<double>(cfg.height) - 1 - 2 * radius) * unit(rng);
      const double col = radius + (static_cast<double>(cfg.width) - 1 - 2 * radius) * unit(rng);
      if (!inside(cfg, row, col, radius)) continue;
      Cell cell;
      cell.row = row;
      cell.col = col;
      cell.radius = cell.target_radius = radius;
      cell.born = -cfg.min_cell_age;
      if (!has_room(cells, cells.size(), {{row, col, radius}}, cfg.min_gap)) continue;
      cells.push_back(cell);
      placed = true;
    }
    if (!placed) {
      throw Error("synthcells: no room to place cell " + std::to_string(i) + " at frame 0");
    }
  }

  for (int t = 0; t < total_frames; ++t) {
    if (t > 0) {
      // Finish events that ended on the previous frame.
      std::vector<Cell> next;
      next.reserve(cells.size() + 4);
      for (auto& cell : cells) {
        if (cell.state == CellState::Mitotic && cell.end + 1 == t) {
          for (int d = 0; d < 2; ++d) {
            const Disc disc = cell.daughter(d);
            Cell child;
            child.row = disc.row;
            child.col = disc.col;
            child.radius = disc.radius;
            child.target_radius = cfg.radius_min + (cfg.radius_max - cfg.radius_min) * unit(rng);
            child.born = t;
            next.push_back(child);
          }
          continue;
        }
        if (cell.state == CellState::Dying && cell.end + 1 == t) continue;
        next.push_back(cell);
      }
      cells = std::move(next);

      for (std::size_t i = 0; i < cells.size(); ++i) {
        Cell& cell = cells[i];
        if (cell.state != CellState::Normal || cell.born == t) continue;

        const bool mature = t - cell.born >= cfg.min_cell_age && cell.radius >= cfg.radius_min;
        if (mature && cfg.mitosis_rate > 0 && !cell.wants_division && unit(rng) < cfg.mitosis_rate) {
          cell.wants_division = true;
        }
        if (mature && cell.wants_division) {
          const int length = length_dist(rng);
          const double theta0 = std::numbers::pi * unit(rng);
          Cell trial = cell;
          trial.state = CellState::Mitotic;
          trial.wants_division = false;
          trial.start = t;
          trial.end = t + length - 1;
          for (double& rd : trial.daughter_radius) rd = cell.radius / std::numbers::sqrt2 * (0.9 + 0.2 * unit(rng));
          trial.separation = 0.5 * (trial.daughter_radius[0] + trial.daughter_radius[1] + cfg.min_gap);
          bool fits = false;
          for (int a = 0; a < kDivisionAxes && !fits && trial.end + 1 < total_frames; ++a) {
            const double theta = theta0 + std::numbers::pi * a / kDivisionAxes;
            trial.axis_row = std::sin(theta);
            trial.axis_col = std::cos(theta);
            fits = has_room(cells, i, trial.footprint(), cfg.min_gap);
            for (int d = 0; d < 2 && fits; ++d) {
              const Disc disc = trial.daughter(d);
              fits = inside(cfg, disc.row, disc.col, disc.radius);
            }
          }
          if (fits) {
            EventRecord rec;
            rec.kind = EventKind::Mitosis;
            rec.start_frame = trial.start;
            rec.end_frame = trial.end;
            rec.row = cell.row;
            rec.col = cell.col;
            rec.radius = cell.radius;
            rec.completion = {trial.end + 1, round_half_up(cell.row), round_half_up(cell.col)};
            truth.events.push_back(rec);
            cell = trial;
            continue;
          }
        }
        if (cfg.enable_death && mature && unit(rng) < cfg.death_rate) {
          const int length = length_dist(rng);
          Cell trial = cell;
          trial.state = CellState::Dying;
          trial.start = t;
          trial.end = t + length - 1;
          if (trial.end + 1 < total_frames && has_room(cells, i, trial.footprint(), cfg.min_gap)) {
            EventRecord rec;
            rec.kind = EventKind::Death;
            rec.start_frame = trial.start;
            rec.end_frame = trial.end;
            rec.row = cell.row;
            rec.col = cell.col;
            rec.radius = cell.radius;
            rec.completion = {trial.end, round_half_up(cell.row), round_half_up(cell.col)};
            truth.events.push_back(rec);
            cell = trial;
            continue;
          }
        }

        const double nr = cell.row + cfg.step_sigma * gauss(rng);
        const double nc = cell.col + cfg.step_sigma * gauss(rng);
        if (inside(cfg, nr, nc, cell.radius) && has_room(cells, i, {{nr, nc, cell.radius}}, cfg.min_gap)) {
          cell.row = nr;
          cell.col = nc;
        }
        if (cell.radius < cell.target_radius) {
          const double grown = std::min(cell.target_radius, cell.radius + cfg.growth_rate);
          if (inside(cfg, cell.row, cell.col, grown) && has_room(cells, i, {{cell.row, cell.col, grown}}, cfg.min_gap)) {
            cell.radius = grown;
          }
        }
      }
    }

    Canvas canvas(cfg.height, cfg.width, static_cast<float>(cfg.background));
    auto mask = truth.normal_mask.frame(static_cast<std::size_t>(t));
    const auto halo = static_cast<float>(cfg.background + cfg.halo_contrast);
    for (const auto& cell : cells) {
      switch (cell.state) {
        case CellState::Normal:
          canvas.paint(cell.row, cell.col, cell.radius + cfg.halo_width, halo, 1);
          canvas.paint(cell.row, cell.col, cell.radius, static_cast<float>(cfg.cell_level), 2);
          canvas.for_disc(cell.row, cell.col, cell.radius, [&](std::size_t p) { mask[p] = 1; });
          break;
        case CellState::Mitotic: {
          if (t <= cell.end - 2) {
            canvas.paint(cell.row, cell.col, 0.8 * cell.radius, static_cast<float>(cfg.mitotic_level), 3);
          } else {
            for (int d = 0; d < 2; ++d) {
              const Disc disc = cell.daughter(d, split_fraction(cell, t));
              canvas.paint(disc.row, disc.col, disc.radius, static_cast<float>(cfg.mitotic_level), 3);
            }
          }
          break;
        }
        case CellState::Dying: {
          const double progress = static_cast<double>(t - cell.start + 1) / static_cast<double>(cell.end - cell.start + 2);
          const double radius = cell.radius * (1.0 + 0.3 * progress);
          const double level = cfg.cell_level + (cfg.background - cfg.cell_level) * progress;
          canvas.paint(cell.row, cell.col, radius + cfg.halo_width,
                       static_cast<float>(cfg.background + cfg.halo_contrast * (1.0 - progress)), 1);
          canvas.paint(cell.row, cell.col, radius, static_cast<float>(level), 2);
          break;
        }
      }
    }

    auto frame = scene.frames.frame(static_cast<std::size_t>(t));
    const auto& levels = canvas.levels();
    for (std::size_t p = 0; p < frame.size(); ++p) {
      const double v = levels[p] + cfg.noise_sigma * gauss(rng);
      frame[p] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
    truth.cell_counts[static_cast<std::size_t>(t)] = cells.size();
  }

  for (const auto& ev : truth.events) {
    if (ev.kind == EventKind::Mitosis) truth.annotations.push_back(ev.completion);
  }
  std::sort(truth.annotations.begin(), truth.annotations.end());
  return scene;
}

void save_scene(const Scene& scene, const SceneConfig& cfg, const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  imaging::save_sequence(scene.frames, directory / "frames");
  imaging::write_points_csv(directory / "annotations.csv", scene.truth.annotations);
  imaging::save_binary_volume(directory / "normal_mask.ctn", scene.truth.normal_mask);

  nlohmann::json events = nlohmann::json::array();
  for (const auto& ev : scene.truth.events) {
    events.push_back({{"kind", to_string(ev.kind)},
                      {"start_frame", ev.start_frame},
                      {"end_frame", ev.end_frame},
                      {"length", ev.length()},
                      {"row", ev.row},
                      {"col", ev.col},
                      {"completion", {ev.completion.frame, ev.completion.row, ev.completion.col}}});
  }
  nlohmann::json doc = {{"seed", cfg.seed},
                        {"frames", cfg.frames},
                        {"height", cfg.height},
                        {"width", cfg.width},
                        {"events", events},
                        {"cell_counts", scene.truth.cell_counts}};
  std::ofstream out(directory / "ground_truth.json");
  if (!out) throw IoError("cannot write " + (directory / "ground_truth.json").string());
  out << doc.dump(2) << '\n';
}

}  // namespace celltrack::synth
