#include <gtest/gtest.h>

#include <fstream>

#include <nlohmann/json.hpp>

#include "celltrack/events/event_sim.hpp"
#include "celltrack/imaging/io.hpp"
#include "test_support.hpp"

using namespace celltrack;
using events::EventSimConfig;
using imaging::BinaryVolume;

namespace {

// A 2x2 square moving one column per frame, present in frames [first, last].
void plant_track(BinaryVolume& v, int first, int last, int row, int col0) {
  for (int t = first; t <= last; ++t) {
    for (int dr = 0; dr < 2; ++dr) {
      for (int dc = 0; dc < 2; ++dc) v.at(t, row + dr, col0 + (t - first) / 2 + dc) = 1;
    }
  }
}

BinaryVolume tracks_fixture() {
  BinaryVolume y(20, 16, 24);
  plant_track(y, 0, 19, 1, 1);
  plant_track(y, 2, 15, 6, 3);
  plant_track(y, 5, 7, 11, 2);  // too short for a removal
  plant_track(y, 0, 11, 12, 12);
  return y;
}

bool partitions(const events::TrainingPair& p, const BinaryVolume& y) {
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (p.context.voxels[i] && p.events.voxels[i]) return false;
    if (p.context.voxels[i] + p.events.voxels[i] != y.voxels[i]) return false;
  }
  return true;
}

}  // namespace

TEST(EventSim, ZeroProbabilityKeepsEverything) {
  const auto y = tracks_fixture();
  EventSimConfig cfg;
  cfg.region_probability = 0.0;
  const auto pair = events::generate_pair(y, cfg);
  EXPECT_EQ(pair.context, y);
  EXPECT_TRUE(std::all_of(pair.events.voxels.begin(), pair.events.voxels.end(), [](auto v) { return v == 0; }));
  EXPECT_TRUE(pair.removals.empty());
}

TEST(EventSim, ForcedIntervalRemovesExactlyThoseFootprints) {
  BinaryVolume y(10, 8, 8);
  for (std::size_t t = 0; t < 10; ++t) {
    y.at(t, 3, 3) = y.at(t, 3, 4) = y.at(t, 4, 3) = 1;
  }
  const auto regions = imaging::label_regions(y);
  ASSERT_EQ(regions.size(), 1u);
  const auto pair = events::apply_removals(y, regions, {{0, 3, 5}});

  BinaryVolume expected_e(10, 8, 8), expected_c = y;
  for (std::size_t t = 3; t <= 5; ++t) {
    for (auto [r, c] : {std::pair{3, 3}, {3, 4}, {4, 3}}) {
      expected_e.at(t, r, c) = 1;
      expected_c.at(t, r, c) = 0;
    }
  }
  EXPECT_EQ(pair.events, expected_e);
  EXPECT_EQ(pair.context, expected_c);
  for (std::size_t t : {0, 1, 2, 6, 7, 8, 9}) EXPECT_TRUE(pair.context.at(t, 3, 3));
}

TEST(EventSim, ForcedIntervalOutsideRegionRejected) {
  BinaryVolume y(6, 4, 4);
  for (std::size_t t = 1; t < 5; ++t) y.at(t, 1, 1) = 1;
  const auto regions = imaging::label_regions(y);
  EXPECT_THROW(events::apply_removals(y, regions, {{0, 0, 2}}), ShapeError);
  EXPECT_THROW(events::apply_removals(y, regions, {{1, 2, 2}}), ShapeError);
}

TEST(EventSim, RandomVolumesPartitionAndReappear) {
  EventSimConfig cfg;
  cfg.region_probability = 0.7;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const auto y = test::random_binary_volume(14, 10, 10, 0.15, seed);
    cfg.seed = seed;
    const auto pair = events::generate_pair(y, cfg);
    ASSERT_TRUE(partitions(pair, y)) << "seed " << seed;
    const auto regions = imaging::label_regions(y);
    for (const auto& rm : pair.removals) {
      const auto& reg = regions[rm.region];
      EXPECT_GE(rm.start, reg.first_frame + cfg.min_flank);
      EXPECT_LE(rm.end, reg.last_frame - cfg.min_flank);
      bool before = false, after = false;
      for (const auto& v : reg.voxels) {
        const bool kept = pair.context.at(v.t, v.row, v.col);
        before = before || (v.t < rm.start && kept);
        after = after || (v.t > rm.end && kept);
      }
      EXPECT_TRUE(before && after) << "seed " << seed << " region " << rm.region;
    }
  }
}

TEST(EventSim, ShortRegionsAreNeverSelected) {
  const auto y = tracks_fixture();
  const auto regions = imaging::label_regions(y);
  EventSimConfig cfg;
  cfg.region_probability = 1.0;
  std::mt19937_64 rng(4);
  for (int i = 0; i < 50; ++i) {
    for (const auto& rm : events::draw_removals(regions, cfg, rng)) {
      EXPECT_GE(regions[rm.region].temporal_length(), 2 * cfg.min_flank + 2);
    }
  }
  std::size_t eligible = 0;
  for (const auto& r : regions) eligible += events::eligible(r, cfg);
  EXPECT_EQ(eligible, 3u);
}

TEST(EventSim, RemovalLengthMeanMatchesConfig) {
  BinaryVolume y(40, 6, 6);
  for (std::size_t t = 0; t < 40; ++t) y.at(t, 2, 2) = 1;
  const auto regions = imaging::label_regions(y);
  EventSimConfig cfg;
  cfg.region_probability = 1.0;
  std::mt19937_64 rng(99);
  double total = 0;
  const int draws = 1000;
  for (int i = 0; i < draws; ++i) {
    const auto rms = events::draw_removals(regions, cfg, rng);
    ASSERT_EQ(rms.size(), 1u);
    total += rms[0].length();
  }
  EXPECT_NEAR(total / draws, cfg.mean_length(), 0.1 * cfg.mean_length());
}

TEST(EventSim, LengthIsClippedToInterior) {
  BinaryVolume y(5, 4, 4);
  for (std::size_t t = 0; t < 5; ++t) y.at(t, 1, 1) = 1;
  EventSimConfig cfg;
  cfg.region_probability = 1.0;
  cfg.length_min = 8;
  cfg.length_max = 8;
  std::mt19937_64 rng(1);
  const auto rms = events::draw_removals(imaging::label_regions(y), cfg, rng);
  ASSERT_EQ(rms.size(), 1u);
  EXPECT_EQ(rms[0].start, 1);
  EXPECT_EQ(rms[0].end, 3);
}

TEST(EventSim, EmptyInputGivesEmptyPair) {
  const BinaryVolume y(4, 5, 5);
  const auto pair = events::generate_pair(y, EventSimConfig{});
  EXPECT_EQ(pair.context, y);
  EXPECT_EQ(pair.events, y);
}

TEST(EventSim, SeededDeterminism) {
  const auto y = tracks_fixture();
  EventSimConfig cfg;
  cfg.region_probability = 0.5;
  cfg.seed = 1234;
  const auto a = events::generate_pair(y, cfg);
  const auto b = events::generate_pair(y, cfg);
  EXPECT_EQ(a.removals, b.removals);
  EXPECT_EQ(a.events, b.events);
}

TEST(EventSim, SavePairWritesSidecar) {
  test::TempDir dir;
  const auto y = tracks_fixture();
  EventSimConfig cfg;
  cfg.region_probability = 1.0;
  cfg.seed = 7;
  const auto pair = events::generate_pair(y, cfg);
  events::save_pair(pair, cfg, dir.path());
  EXPECT_EQ(imaging::load_binary_volume(dir.path() / "context.ctn"), pair.context);
  EXPECT_EQ(imaging::load_binary_volume(dir.path() / "events.ctn"), pair.events);
  std::ifstream in(dir.path() / "removals.json");
  const auto doc = nlohmann::json::parse(in);
  EXPECT_EQ(doc["seed"], 7);
  ASSERT_EQ(doc["removals"].size(), pair.removals.size());
  EXPECT_EQ(doc["removals"][0]["start"], pair.removals[0].start);
}
