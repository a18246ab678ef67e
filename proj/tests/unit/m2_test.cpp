#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>

#include "celltrack/models/checkpoint.hpp"
#include "celltrack/models/event_stats.hpp"
#include "celltrack/models/m2.hpp"
#include "celltrack/numerics/gradcheck.hpp"
#include "test_support.hpp"

using namespace celltrack;
using models::EventStats;
using models::M2Config;
using models::M2Model;
using models::PercentileRule;

namespace {

EventStats stats_with(double mean, double p75) {
  EventStats s;
  s.mean = mean;
  s.p75 = p75;
  s.p50 = std::min(mean, p75);
  s.count = 10;
  return s;
}

// Blob of side 3 lit for `length` frames starting at `start`.
void plant(imaging::Volume3<float>& v, int start, int length, std::size_t r, std::size_t c, float value = 0.9f) {
  for (int t = start; t < start + length; ++t) {
    for (std::size_t dr = 0; dr < 3; ++dr) {
      for (std::size_t dc = 0; dc < 3; ++dc) v.at(static_cast<std::size_t>(t), r + dr, c + dc) = value;
    }
  }
}

// Discs that persist over the whole sequence, so every region is eligible for removal.
imaging::BinaryVolume static_cells(std::size_t frames, std::size_t size) {
  imaging::BinaryVolume y(frames, size, size);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t r = 0; r < size; ++r) {
      for (std::size_t c = 0; c < size; ++c) {
        const bool a = (r - 5) * (r - 5) + (c - 5) * (c - 5) <= 6;
        const bool b = (r - 14) * (r - 14) + (c - 13) * (c - 13) <= 6;
        y.at(t, r, c) = (a || b) ? 1 : 0;
      }
    }
  }
  return y;
}

M2Config small_config() {
  M2Config cfg;
  cfg.hidden = 6;
  cfg.window = 8;
  cfg.iterations = 0;
  return cfg;
}

}  // namespace

TEST(Percentile, TwoValuesInterpolateBetweenRanks) {
  const auto s = models::stats_from_lengths({8, 5});
  // position q * (n - 1): p50 at 0.5, p75 at 0.75 between 5 and 8
  EXPECT_DOUBLE_EQ(s.mean, 6.5);
  EXPECT_DOUBLE_EQ(s.p50, 5 + 0.5 * 3);
  EXPECT_DOUBLE_EQ(s.p75, 5 + 0.75 * 3);
  EXPECT_DOUBLE_EQ(s.std_dev, 1.5);
  EXPECT_EQ(s.lengths, (std::vector<int>{5, 8}));
}

TEST(Percentile, ConstantList) {
  const auto s = models::stats_from_lengths({4, 4, 4, 4});
  EXPECT_EQ(s.mean, 4);
  EXPECT_EQ(s.std_dev, 0);
  EXPECT_EQ(s.p50, 4);
  EXPECT_EQ(s.p75, 4);
  EXPECT_EQ(s.count, 4u);
}

TEST(Percentile, NearestRankSwitch) {
  const std::vector<int> sorted{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  EXPECT_EQ(models::percentile(sorted, 0.75, PercentileRule::NearestRank), 8);
  EXPECT_EQ(models::percentile(sorted, 0.5, PercentileRule::NearestRank), 5);
  EXPECT_DOUBLE_EQ(models::percentile(sorted, 0.75, PercentileRule::Linear), 7.75);
  EXPECT_EQ(models::parse_percentile_rule("nearest_rank"), PercentileRule::NearestRank);
  EXPECT_THROW(models::parse_percentile_rule("median"), ConfigError);
}

TEST(EventStatistics, ReferenceLengthListFormatsMeanAndP75) {
  std::vector<int> lengths;
  for (auto [len, n] : std::vector<std::pair<int, int>>{{3, 5}, {4, 8}, {5, 7}, {6, 6}, {7, 6}, {8, 12}, {9, 3}, {12, 3}}) {
    lengths.insert(lengths.end(), static_cast<std::size_t>(n), len);
  }
  const auto s = models::stats_from_lengths(lengths);
  EXPECT_NEAR(s.mean, 6.38, 1e-12);
  EXPECT_DOUBLE_EQ(s.p75, 8.0);
  EXPECT_EQ(models::format_mean_p75(s), "6.38 / 8.0");
}

TEST(EventStatistics, PlantedLengthsAreRecoveredExactly) {
  imaging::Volume3<float> v(30, 20, 20, 0.0f);
  const std::vector<int> planted{2, 5, 7, 11, 1};
  plant(v, 0, 2, 1, 1);
  plant(v, 3, 5, 1, 10);
  plant(v, 10, 7, 10, 1);
  plant(v, 19, 11, 10, 10);
  plant(v, 29, 1, 15, 15);
  auto expected = planted;
  std::sort(expected.begin(), expected.end());
  EXPECT_EQ(models::event_statistics(v).lengths, expected);
}

TEST(EventStatistics, ThresholdIsStrict) {
  imaging::Volume3<float> v(5, 8, 8, 0.0f);
  plant(v, 1, 3, 2, 2, 0.5f);
  const auto s = models::event_statistics(v);
  EXPECT_TRUE(s.empty());
  EXPECT_THROW(models::recommend_k(s), ConfigError);
}

TEST(RecommendK, PublishedCase) {
  const auto r = models::recommend_k(stats_with(6.38, 8.0));
  EXPECT_EQ(r.k, 8);
  EXPECT_EQ(r.lower_bound, 7);
  EXPECT_EQ(r.frames_primary, 14);
  EXPECT_EQ(r.frames_alternate, 18);
}

TEST(RecommendK, LowerBoundAndRounding) {
  EXPECT_EQ(models::recommend_k(stats_with(9.0, 8.0)).k, 9);
  EXPECT_EQ(models::recommend_k(stats_with(6.0, 8.4)).k, 8);
  EXPECT_EQ(models::recommend_k(stats_with(6.0, 8.5)).k, 9);
}

TEST(RecommendK, MonotoneInUpperQuartile) {
  for (double mean : {2.0, 4.5, 6.38, 9.9}) {
    int previous = 0;
    for (double p75 = 1.0; p75 <= 20.0; p75 += 0.05) {
      const auto r = models::recommend_k(stats_with(mean, p75));
      EXPECT_GE(r.k, previous);
      EXPECT_GE(r.k, r.lower_bound);
      previous = r.k;
    }
  }
}

TEST(EventStatistics, JsonAndHistogram) {
  test::TempDir dir;
  const auto s = models::stats_from_lengths({5, 8, 8});
  const auto j = models::to_json(s);
  EXPECT_EQ(j.size(), 5u);
  EXPECT_EQ(j["count"], 3);
  const auto back = models::stats_from_json(j);
  EXPECT_EQ(back.mean, s.mean);
  EXPECT_EQ(back.p75, s.p75);
  models::write_histogram_csv(s, dir.path() / "h.csv");
  std::ifstream in(dir.path() / "h.csv");
  std::string all((std::istreambuf_iterator<char>(in)), {});
  EXPECT_EQ(all, "length,count\n5,1\n8,2\n");
  const auto r = models::recommend_k(s);
  EXPECT_EQ(models::recommendation_from_json(models::to_json(r)).frames_alternate, r.frames_alternate);
}

TEST(M2, ZeroIterationsKeepsXavierInitialisation) {
  auto cfg = small_config();
  cfg.seed = 3;
  const auto result = models::m2_train(static_cells(10, 20), events::EventSimConfig{}, cfg);
  numerics::Rng rng(3);
  auto fresh = M2Model<float>::create(cfg, rng);
  auto a = const_cast<M2Model<float>&>(result.model).parameters();
  auto b = fresh.parameters();
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_TRUE(std::equal(a[i].second->data().begin(), a[i].second->data().end(), b[i].second->data().begin()));
  }
}

TEST(M2, WindowLongerThanSequenceIsRejected) {
  auto cfg = small_config();
  cfg.window = 11;
  try {
    models::m2_train(static_cells(10, 20), events::EventSimConfig{}, cfg);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("m2.window"), std::string::npos);
  }
}

TEST(M2, TrainingIsDeterministicForSeed) {
  auto cfg = small_config();
  cfg.iterations = 8;
  events::EventSimConfig sim;
  sim.seed = 4;
  const auto y = static_cells(12, 20);
  EXPECT_EQ(models::m2_train(y, sim, cfg).losses, models::m2_train(y, sim, cfg).losses);
}

TEST(M2, EmptyEventsDriveOutputsTowardZero) {
  auto cfg = small_config();
  cfg.iterations = 200;
  cfg.seed = 1;
  events::EventSimConfig sim;
  sim.region_probability = 0.0;
  const auto y = static_cells(16, 20);
  const auto result = models::m2_train(y, sim, cfg);
  const auto e = models::m2_infer(result.model, y);
  double mean = 0;
  for (float v : e.voxels) mean += v;
  mean /= static_cast<double>(e.size());
  EXPECT_LT(mean, 0.1);
  EXPECT_TRUE(models::event_statistics(e).empty());
}

TEST(M2, InferenceShapeRangeAndPurity) {
  numerics::Rng rng(5);
  const auto model = M2Model<float>::create(small_config(), rng);
  const auto y = static_cells(7, 20);
  const auto a = models::m2_infer(model, y);
  const auto b = models::m2_infer(model, y);
  EXPECT_EQ(a.frames, 7u);
  EXPECT_EQ(a.height, 20u);
  EXPECT_EQ(a.width, 20u);
  EXPECT_EQ(a.voxels, b.voxels);
  for (float v : a.voxels) {
    EXPECT_GT(v, 0.0f);
    EXPECT_LT(v, 1.0f);
  }
}

TEST(M2, InferenceMatchesTrainingForwardPass) {
  numerics::Rng rng(6);
  const auto model = M2Model<float>::create(small_config(), rng);
  const auto y = static_cells(5, 20);
  const auto e = models::m2_infer(model, y);
  const auto out = models::m2_forward(model, models::volume_frames<float>(y));
  for (std::size_t t = 0; t < y.frames; ++t) {
    EXPECT_TRUE(std::equal(out[t].data().begin(), out[t].data().end(), e.frame(t).begin())) << "frame " << t;
  }
}

TEST(M2, CheckpointRoundTripPreservesInference) {
  test::TempDir dir;
  numerics::Rng rng(7);
  auto model = M2Model<float>::create(small_config(), rng);
  models::save_checkpoint(dir.path(), "M2", {{"window", 8}}, model.parameters());
  numerics::Rng other(8);
  auto loaded = M2Model<float>::create(small_config(), other);
  models::load_checkpoint(dir.path(), "M2", loaded.parameters());
  const auto y = static_cells(4, 20);
  EXPECT_EQ(models::m2_infer(model, y).voxels, models::m2_infer(loaded, y).voxels);
}

TEST(M2, FullWindowLossGradientMatchesFiniteDifferences) {
  M2Config cfg;
  cfg.hidden = 3;
  numerics::Rng rng(9);
  auto model = M2Model<float>::create(cfg, rng);
  // Zero biases put every blank pixel exactly on a relu kink.
  std::uniform_real_distribution<float> u(0.05f, 0.3f);
  for (auto& [name, p] : model.parameters()) {
    if (name.ends_with(".bias")) {
      for (auto& v : p->mutable_data()) v = u(rng);
    }
  }
  auto ref = model.cast<double>();
  const auto y = test::random_binary_volume(4, 8, 8, 0.4, 10);
  const auto e = test::random_binary_volume(4, 8, 8, 0.2, 11);
  const auto c = models::volume_frames<float>(y), ev = models::volume_frames<float>(e);
  const auto cd = models::volume_frames<double>(y), evd = models::volume_frames<double>(e);
  const auto rep = numerics::finite_diff_check_reference<float>(
      [&] { return models::m2_loss(model, c, ev); }, model.parameters(),
      [&] { return models::m2_loss(ref, cd, evd); }, ref.parameters(), {.epsilon = 1e-6});
  EXPECT_TRUE(rep.passed(1e-3)) << rep.worst_parameter << "[" << rep.worst_index << "] err " << rep.max_relative_error;
}
