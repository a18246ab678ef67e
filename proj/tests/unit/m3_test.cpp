#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "celltrack/imaging/morphology.hpp"
#include "celltrack/imaging/regions.hpp"
#include "celltrack/imaging/transform.hpp"
#include "celltrack/models/m3.hpp"
#include "celltrack/numerics/gradcheck.hpp"
#include "test_support.hpp"

using namespace celltrack;
using models::M3Config;
using models::M3Model;
using numerics::Tensor;

namespace {

M3Config small_config(std::size_t k) {
  M3Config cfg;
  cfg.hidden = 4;
  cfg.decoder_hidden = 4;
  cfg.k = k;
  cfg.iterations = 0;
  return cfg;
}

std::vector<Tensor<float>> frames_of(const imaging::FrameSequence& seq) {
  std::vector<Tensor<float>> out;
  for (std::size_t t = 0; t < seq.frames; ++t) {
    const auto f = seq.frame(t);
    out.push_back(Tensor<float>::constant({1, seq.height, seq.width}, {f.begin(), f.end()}));
  }
  return out;
}

// Mirrors every kernel left-right.
template <typename T>
void mirror_kernel(numerics::LayerParams<T>& layer) {
  auto k = layer.kernel.mutable_data();
  const std::size_t kw = layer.kernel.dim(3);
  for (std::size_t row = 0; row < k.size() / kw; ++row) std::reverse(k.begin() + row * kw, k.begin() + (row + 1) * kw);
}

}  // namespace

TEST(BuildLabels, EmptyAnnotationsGiveEmptyVolume) {
  const auto v = models::build_labels({}, 10, 40, 40, 4);
  EXPECT_EQ(v.frames, 10u);
  EXPECT_EQ(v.height, 10u);
  EXPECT_TRUE(std::all_of(v.voxels.begin(), v.voxels.end(), [](auto x) { return x == 0; }));
}

TEST(BuildLabels, InteriorAnnotationBecomesSevenCube) {
  const auto v = models::build_labels({{10, 43, 81}}, 20, 80, 120, 4);
  ASSERT_EQ(v.height, 20u);
  ASSERT_EQ(v.width, 30u);
  std::size_t lit = 0;
  for (std::size_t t = 0; t < v.frames; ++t) {
    for (std::size_t r = 0; r < v.height; ++r) {
      for (std::size_t c = 0; c < v.width; ++c) {
        const bool inside = std::abs(int(t) - 10) <= 3 && std::abs(int(r) - 10) <= 3 && std::abs(int(c) - 20) <= 3;
        EXPECT_EQ(v.at(t, r, c), inside ? 1 : 0);
        lit += v.at(t, r, c);
      }
    }
  }
  EXPECT_EQ(lit, 343u);
}

TEST(BuildLabels, FrameZeroAnnotationMatchesBruteForceDilation) {
  const auto v = models::build_labels({{0, 20, 20}}, 8, 40, 40, 2);
  imaging::BinaryVolume seed(8, 20, 20);
  seed.at(0, 10, 10) = 1;
  EXPECT_EQ(v, test::brute_force_dilate(seed, 3));
  std::size_t frames_lit = 0;
  for (std::size_t t = 0; t < v.frames; ++t) frames_lit += v.at(t, 10, 10);
  EXPECT_EQ(frames_lit, 4u);
}

TEST(BuildLabels, OutOfRangeAnnotationNamesItsRow) {
  try {
    models::build_labels({{0, 1, 1}, {3, 50, 1}}, 10, 40, 40, 4);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos) << e.what();
  }
}

TEST(WindowStarts, StrideTwoCoversEveryFrame) {
  for (std::size_t k = 1; k <= 10; ++k) {
    for (std::size_t T = k; T <= k + 30; ++T) {
      const auto starts = models::window_starts(T, k, 2);
      ASSERT_FALSE(starts.empty());
      EXPECT_EQ(starts.front(), 0u);
      EXPECT_EQ(starts.back() + k, T);
      std::vector<int> covered(T, 0);
      for (std::size_t s : starts) {
        for (std::size_t t = s; t < s + k; ++t) covered[t] = 1;
      }
      EXPECT_TRUE(std::all_of(covered.begin(), covered.end(), [](int c) { return c == 1; })) << k << " " << T;
    }
  }
}

TEST(M3, WrongWindowLengthIsRejected) {
  numerics::Rng rng(1);
  const auto model = M3Model<float>::create(small_config(4), rng);
  EXPECT_THROW(models::m3_forward(model, frames_of(test::random_sequence(3, 6, 6, 2))), ShapeError);
}

TEST(M3, InferenceIsPureAndBounded) {
  numerics::Rng rng(2);
  const auto model = M3Model<float>::create(small_config(4), rng);
  const auto x = frames_of(test::random_sequence(4, 8, 8, 3));
  const auto a = models::m3_forward(model, x);
  const auto b = models::m3_forward(model, x);
  for (std::size_t t = 0; t < 4; ++t) {
    EXPECT_TRUE(std::equal(a[t].data().begin(), a[t].data().end(), b[t].data().begin()));
    for (float v : a[t].data()) {
      EXPECT_GT(v, 0.0f);
      EXPECT_LT(v, 1.0f);
    }
  }
}

TEST(M3, SwappingUnitsAndReversingTimeReversesOutputs) {
  numerics::Rng rng(3);
  const auto model = M3Model<float>::create(small_config(5), rng);
  auto swapped = model.template cast<float>();
  std::swap(swapped.forward, swapped.backward);
  // The decoder sees [forward; backward] hidden channels, so its input halves swap too.
  const std::size_t hid = model.forward.hidden_channels, kk = model.dec1.kernel_size() * model.dec1.kernel_size();
  auto k = swapped.dec1.kernel.mutable_data();
  const auto orig = model.dec1.kernel.data();
  for (std::size_t o = 0; o < model.dec1.out_channels(); ++o) {
    for (std::size_t c = 0; c < 2 * hid; ++c) {
      const std::size_t src = (c + hid) % (2 * hid);
      std::copy_n(orig.begin() + (o * 2 * hid + src) * kk, kk, k.begin() + (o * 2 * hid + c) * kk);
    }
  }
  auto x = frames_of(test::random_sequence(5, 7, 7, 4));
  const auto a = models::m3_forward(model, x);
  std::reverse(x.begin(), x.end());
  const auto b = models::m3_forward(swapped, x);
  for (std::size_t t = 0; t < 5; ++t) {
    const auto av = a[t].data(), bv = b[4 - t].data();
    for (std::size_t i = 0; i < av.size(); ++i) EXPECT_NEAR(av[i], bv[i], 1e-6f);
  }
}

TEST(M3, FullBidirectionalLossGradientMatchesFiniteDifferences) {
  M3Config cfg = small_config(3);
  cfg.hidden = 2;
  cfg.decoder_hidden = 3;
  numerics::Rng rng(5);
  auto model = M3Model<float>::create(cfg, rng);
  auto ref = model.cast<double>();
  const auto seq = test::random_sequence(3, 6, 6, 6);
  const auto labels = test::random_binary_volume(3, 6, 6, 0.3, 7);
  std::vector<Tensor<float>> x, z;
  std::vector<Tensor<double>> xd, zd;
  for (std::size_t t = 0; t < 3; ++t) {
    const auto f = seq.frame(t);
    const auto l = labels.frame(t);
    x.push_back(Tensor<float>::constant({1, 6, 6}, {f.begin(), f.end()}));
    xd.push_back(Tensor<double>::constant({1, 6, 6}, {f.begin(), f.end()}));
    z.push_back(Tensor<float>::constant({1, 6, 6}, {l.begin(), l.end()}));
    zd.push_back(Tensor<double>::constant({1, 6, 6}, {l.begin(), l.end()}));
  }
  models::DropoutMasks<float> masks;
  models::DropoutMasks<double> masks_d;
  for (std::size_t t = 0; t < 3; ++t) {
    masks.push_back(numerics::dropout_mask<float>(4 * 36, 0.3, rng));
    masks_d.emplace_back(masks.back().begin(), masks.back().end());
  }
  const auto rep = numerics::finite_diff_check_reference<float>(
      [&] { return models::m3_loss(model, x, z, masks); }, model.parameters(),
      [&] { return models::m3_loss(ref, xd, zd, masks_d); }, ref.parameters(), {.epsilon = 1e-4});
  EXPECT_TRUE(rep.passed(1e-3)) << rep.worst_parameter << "[" << rep.worst_index << "] err " << rep.max_relative_error;
}

TEST(M3, SilentModelDetectsNothing) {
  numerics::Rng rng(8);
  auto model = M3Model<float>::create(small_config(4), rng);
  auto b = model.dec2.bias.mutable_data();
  b[0] = -50.0f;
  EXPECT_TRUE(models::m3_detect(model, test::random_sequence(9, 8, 8, 9), 4).empty());
}

TEST(M3, SingleBlockGivesOneScaledDetection) {
  imaging::BinaryVolume act(20, 30, 30);
  for (std::size_t t = 5; t < 12; ++t) {
    for (std::size_t r = 10; r < 17; ++r) {
      for (std::size_t c = 3; c < 10; ++c) act.at(t, r, c) = 1;
    }
  }
  const auto det = models::detections_from_activation(act, 4, 100);
  ASSERT_EQ(det.size(), 1u);
  EXPECT_EQ(det[0], (imaging::EventPoint{108, 13 * 4, 6 * 4}));
}

TEST(M3, OneDetectionPerActivatedRegion) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto act = test::random_binary_volume(6, 12, 12, 0.15, seed);
    EXPECT_EQ(models::detections_from_activation(act, 2).size(), test::count_flood_fill_regions(act));
  }
}

TEST(M3, TrainingFramesEqualToKUseOneWindow) {
  auto cfg = small_config(5);
  cfg.iterations = 12;
  const auto seq = test::random_sequence(5, 8, 8, 10);
  const auto result = models::m3_train(seq, imaging::BinaryVolume(5, 8, 8), cfg);
  EXPECT_EQ(result.window_starts, std::vector<std::size_t>(12, 0));
  EXPECT_THROW(models::m3_train(test::random_sequence(4, 8, 8, 10), imaging::BinaryVolume(4, 8, 8), cfg), ConfigError);
}

TEST(M3, TrainingIsDeterministicForSeed) {
  auto cfg = small_config(3);
  cfg.iterations = 10;
  cfg.seed = 11;
  const auto seq = test::random_sequence(9, 8, 8, 12);
  const auto labels = test::random_binary_volume(9, 8, 8, 0.1, 13);
  const auto a = models::m3_train(seq, labels, cfg);
  const auto b = models::m3_train(seq, labels, cfg);
  EXPECT_EQ(a.losses, b.losses);
  EXPECT_EQ(a.window_starts, b.window_starts);
}

TEST(M3, EmptyLabelsDriveOutputsTowardZero) {
  auto cfg = small_config(4);
  cfg.iterations = 1000;
  cfg.seed = 14;
  const auto seq = test::random_sequence(12, 12, 12, 15);
  const auto result = models::m3_train(seq, imaging::BinaryVolume(12, 12, 12), cfg);
  double mean = 0;
  std::size_t n = 0;
  for (std::size_t s = 0; s + 4 <= 12; ++s) {
    std::vector<Tensor<float>> x;
    for (std::size_t t = s; t < s + 4; ++t) {
      const auto f = seq.frame(t);
      x.push_back(Tensor<float>::constant({1, 12, 12}, {f.begin(), f.end()}));
    }
    for (const auto& o : models::m3_forward(result.model, x)) {
      for (float v : o.data()) mean += v, ++n;
    }
  }
  EXPECT_LT(mean / static_cast<double>(n), 0.05);
}

TEST(M3, IdentityTaskLossFallsAcrossSpans) {
  auto cfg = small_config(4);
  cfg.iterations = 600;
  cfg.dropout = 0.0;
  cfg.seed = 16;
  const auto seq = test::random_sequence(10, 10, 10, 17);
  const auto labels = imaging::binarize(seq, 0.7);
  const auto result = models::m3_train(seq, labels, cfg);
  std::vector<double> spans;
  for (std::size_t s = 0; s < cfg.iterations; s += 100) {
    spans.push_back(std::accumulate(result.losses.begin() + s, result.losses.begin() + s + 100, 0.0) / 100);
  }
  for (std::size_t i = 1; i < spans.size(); ++i) EXPECT_LT(spans[i], spans[i - 1]) << "span " << i;
}

TEST(M3, HorizontalFlipCommutesWithDetection) {
  auto cfg = small_config(4);
  cfg.iterations = 60;
  cfg.seed = 18;
  const auto seq = test::random_sequence(11, 12, 14, 19);
  const auto labels = imaging::binarize(seq, 0.8);
  const auto model = models::m3_train(seq, labels, cfg).model;
  auto mirrored = model.template cast<float>();
  for (auto* layer : {&mirrored.forward.gates, &mirrored.backward.gates, &mirrored.dec1, &mirrored.dec2}) {
    mirror_kernel(*layer);
  }
  const auto flipped = imaging::apply_transform(seq, imaging::Transform::FlipHorizontal);
  const auto a = models::m3_activation(model, seq);
  const auto b = models::m3_activation(mirrored, flipped);
  EXPECT_EQ(imaging::apply_transform(a, imaging::Transform::FlipHorizontal), b);
}
