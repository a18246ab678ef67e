#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "celltrack/imaging/morphology.hpp"
#include "celltrack/models/checkpoint.hpp"
#include "celltrack/models/m1.hpp"
#include "celltrack/numerics/gradcheck.hpp"
#include "celltrack/synth/scene.hpp"
#include "test_support.hpp"

using namespace celltrack;
using models::M1Config;
using models::M1Model;
using numerics::Tensor;

namespace {

imaging::FrameSequence tiny_video(std::size_t frames = 6) {
  synth::SceneConfig sc;
  sc.height = 32;
  sc.width = 32;
  sc.frames = frames;
  sc.initial_cells = 3;
  sc.radius_min = 4;
  sc.radius_max = 5;
  sc.mitosis_rate = 0;
  sc.seed = 17;
  return synth::simulate(sc).frames;
}

Tensor<float> frame_tensor(const imaging::FrameSequence& seq, std::size_t t) {
  const auto f = seq.frame(t);
  return Tensor<float>::constant({1, seq.height, seq.width}, {f.begin(), f.end()});
}

bool one_hot(const std::vector<float>& h, std::size_t n, std::size_t plane) {
  for (std::size_t p = 0; p < plane; ++p) {
    int nonzero = 0;
    for (std::size_t c = 0; c < n; ++c) nonzero += h[c * plane + p] != 0.0f;
    if (nonzero != 1) return false;
  }
  return true;
}

double binary_entropy_sum(std::span<const float> x) {
  double s = 0;
  for (float v : x) {
    const double p = std::clamp(static_cast<double>(v), 1e-7, 1 - 1e-7);
    s -= p * std::log(p) + (1 - p) * std::log(1 - p);
  }
  return s;
}

}  // namespace

TEST(M1, InferenceFeatureMapsAreOneHot) {
  const auto seq = tiny_video(3);
  numerics::Rng rng(1);
  const auto model = M1Model<float>::create(M1Config{}, rng);
  for (std::size_t t = 0; t < seq.frames; ++t) {
    EXPECT_TRUE(one_hot(models::m1_feature_maps(model, seq, t), model.channels, seq.frame_size()));
  }
}

TEST(M1, ReconstructionInsideOpenUnitInterval) {
  const auto seq = tiny_video(2);
  numerics::Rng rng(2);
  const auto model = M1Model<float>::create(M1Config{}, rng);
  auto pert = models::M1Perturbation<float>::draw(6, 32, 32, 0.2, rng);
  for (const models::M1Perturbation<float>* p : {static_cast<const models::M1Perturbation<float>*>(nullptr), static_cast<const models::M1Perturbation<float>*>(&pert)}) {
    const auto out = models::m1_forward(model, frame_tensor(seq, 0), p);
    for (float v : out.reconstruction.data()) {
      EXPECT_GT(v, 0.0f);
      EXPECT_LT(v, 1.0f);
    }
    EXPECT_EQ(out.h.dims(), (numerics::Shape{6, 32, 32}));
  }
}

TEST(M1, PerturbationIsReproducibleForSeed) {
  numerics::Rng a(99), b(99);
  const auto pa = models::M1Perturbation<float>::draw(6, 8, 8, 0.2, a);
  const auto pb = models::M1Perturbation<float>::draw(6, 8, 8, 0.2, b);
  EXPECT_EQ(pa.dropped_channel, pb.dropped_channel);
  EXPECT_EQ(pa.noise, pb.noise);
  EXPECT_LT(pa.dropped_channel, 6u);
  for (float v : pa.noise) EXPECT_LE(std::abs(v), 0.2f);
}

TEST(M1, TrainModeZeroesDroppedChannelBeforeDecoding) {
  const auto seq = tiny_video(1);
  numerics::Rng rng(3);
  auto model = M1Model<float>::create(M1Config{}, rng);
  models::M1Perturbation<float> pert;
  pert.noise.assign(6 * 32 * 32, 0.0f);
  const auto x = frame_tensor(seq, 0);
  const auto clean = models::m1_forward(model, x);
  // Dropping a channel that is nowhere active changes nothing.
  const auto h = clean.h.data();
  for (std::size_t c = 0; c < 6; ++c) {
    const bool blank = std::all_of(h.begin() + c * 1024, h.begin() + (c + 1) * 1024, [](float v) { return v == 0; });
    pert.dropped_channel = c;
    const auto dropped = models::m1_forward(model, x, &pert);
    const bool same = std::equal(dropped.reconstruction.data().begin(), dropped.reconstruction.data().end(),
                                 clean.reconstruction.data().begin());
    EXPECT_EQ(same, blank) << "channel " << c;
  }
}

TEST(M1, ZeroIterationsKeepsXavierInitialisation) {
  M1Config cfg;
  cfg.iterations = 0;
  cfg.seed = 5;
  const auto trained = models::m1_train(tiny_video(2), cfg);
  numerics::Rng rng(5);
  auto fresh = M1Model<float>::create(cfg, rng);
  auto a = const_cast<M1Model<float>&>(trained.model).parameters();
  auto b = fresh.parameters();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_TRUE(std::equal(a[i].second->data().begin(), a[i].second->data().end(), b[i].second->data().begin()))
        << a[i].first;
  }
  EXPECT_TRUE(trained.losses.empty());
}

TEST(M1, TrainingIsDeterministicForSeed) {
  M1Config cfg;
  cfg.iterations = 30;
  cfg.seed = 8;
  const auto seq = tiny_video(3);
  EXPECT_EQ(models::m1_train(seq, cfg).losses, models::m1_train(seq, cfg).losses);
}

TEST(M1, TrainingHalvesLossAboveEntropyFloor) {
  // BCE against grey-level targets cannot fall below sum H(x), so the decrease
  // is measured on the excess over that floor.
  const auto seq = tiny_video(6);
  M1Config cfg;
  cfg.iterations = 2000;
  cfg.seed = 1;
  const auto result = models::m1_train(seq, cfg);
  std::vector<double> floor(seq.frames);
  for (std::size_t t = 0; t < seq.frames; ++t) floor[t] = binary_entropy_sum(seq.frame(t));
  auto excess = [&](std::size_t begin) {
    double s = 0;
    for (std::size_t i = begin; i < begin + 100; ++i) s += result.losses[i] - floor[i % seq.frames];
    return s / 100;
  };
  const double first = excess(0), last = excess(cfg.iterations - 100);
  EXPECT_GT(first, 0);
  EXPECT_LT(last, 0.5 * first) << "first " << first << " last " << last;
}

TEST(M1, SingleChannelAutoencoderFitsConstantVideo) {
  imaging::FrameSequence seq(4, 16, 16, 0.0f);
  M1Config cfg;
  cfg.channels = 1;
  cfg.noise = 0.0;
  cfg.channel_drop = false;
  cfg.iterations = 1500;
  cfg.seed = 2;
  const auto result = models::m1_train(seq, cfg);
  const double per_pixel = result.losses.back() / static_cast<double>(seq.frame_size());
  EXPECT_LT(per_pixel, 0.01);
}

TEST(M1, NonFiniteLossAbortsWithIteration) {
  auto seq = tiny_video(2);
  seq.voxels[5] = std::numeric_limits<float>::quiet_NaN();
  M1Config cfg;
  cfg.iterations = 3;
  try {
    models::m1_train(seq, cfg);
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("iteration 0"), std::string::npos);
  }
}

TEST(M1, BlankChannelScoresZeroAndDegenerateModelIsRejected) {
  const auto seq = tiny_video(2);
  numerics::Rng rng(4);
  auto model = M1Model<float>::create(M1Config{}, rng);
  // Force channel 0 to win everywhere: huge bias, zero kernel.
  auto k = model.enc3.kernel.mutable_data();
  std::fill(k.begin(), k.end(), 0.0f);
  auto b = model.enc3.bias.mutable_data();
  std::fill(b.begin(), b.end(), 0.0f);
  b[0] = 10.0f;
  const auto scores = models::channel_scores(model, seq, M1Config{});
  for (std::size_t c = 1; c < scores.size(); ++c) EXPECT_EQ(scores[c], 0.0);
  // Channel 0 covers the whole frame, beyond area_max.
  EXPECT_EQ(scores[0], 0.0);
  EXPECT_THROW(models::select_cell_channel(model, seq, M1Config{}), NumericError);
  EXPECT_EQ(models::activated_channels(model, seq), 1u);
}

TEST(M1, ExtractionIsBinaryAndIdempotent) {
  const auto seq = tiny_video(3);
  numerics::Rng rng(6);
  auto model = M1Model<float>::create(M1Config{}, rng);
  EXPECT_THROW(models::extract_cell_maps(model, seq), ConfigError);
  model.selected_channel = 2;
  const auto a = models::extract_cell_maps(model, seq);
  const auto b = models::extract_cell_maps(model, seq);
  EXPECT_EQ(a, b);
  for (auto v : a.voxels) EXPECT_TRUE(v == 0 || v == 1);
  // Equals erode(binarize(h_c > 0)) frame by frame.
  const auto h = models::m1_feature_maps(model, seq, 1);
  const auto bin = imaging::binarize(std::span<const float>(h.data() + 2 * 1024, 1024), 0.0);
  const auto eroded = imaging::erode2d(bin, 32, 32);
  EXPECT_TRUE(std::equal(eroded.begin(), eroded.end(), a.frame(1).begin()));
}

TEST(M1, CheckpointRoundTrip) {
  test::TempDir dir;
  numerics::Rng rng(10);
  auto model = M1Model<float>::create(M1Config{}, rng);
  model.selected_channel = 3;
  models::save_checkpoint(dir.path(), "M1", {{"selected_channel", 3}}, model.parameters());
  numerics::Rng other(11);
  auto loaded = M1Model<float>::create(M1Config{}, other);
  const auto meta = models::load_checkpoint(dir.path(), "M1", loaded.parameters());
  EXPECT_EQ(meta["selected_channel"], 3);
  auto pa = model.parameters(), pb = loaded.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_TRUE(std::equal(pa[i].second->data().begin(), pa[i].second->data().end(), pb[i].second->data().begin()));
  }
  EXPECT_THROW(models::load_checkpoint(dir.path(), "M2", loaded.parameters()), IoError);
  EXPECT_THROW(models::load_checkpoint(dir.path() / "absent", "M1", loaded.parameters()), MissingArtifactError);
}

TEST(M1, FullLossGradientMatchesFiniteDifferences) {
  M1Config cfg;
  cfg.channels = 3;
  cfg.hidden = 3;
  numerics::Rng rng(12);
  auto model = M1Model<float>::create(cfg, rng);
  auto ref = model.cast<double>();
  const auto seq = test::random_sequence(1, 8, 8, 13);
  const auto f = seq.frame(0);
  const auto x = Tensor<float>::constant({1, 8, 8}, {f.begin(), f.end()});
  const auto xd = Tensor<double>::constant({1, 8, 8}, {f.begin(), f.end()});
  const auto pert = models::M1Perturbation<float>::draw(3, 8, 8, 0.2, rng);
  models::M1Perturbation<double> pert_d{pert.dropped_channel, {pert.noise.begin(), pert.noise.end()}};
  const auto rep = numerics::finite_diff_check_reference<float>(
      [&] { return models::m1_loss(model, x, &pert); }, model.parameters(),
      [&] { return models::m1_loss(ref, xd, &pert_d); }, ref.parameters());
  EXPECT_TRUE(rep.passed(1e-3)) << rep.worst_parameter << "[" << rep.worst_index << "] err "
                                << rep.max_relative_error;
}
