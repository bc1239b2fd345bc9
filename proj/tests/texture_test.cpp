#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "forge/texture.hpp"

namespace forge {
namespace {

TerrainParams noise_params() {
  TerrainParams p;
  p.width = 32.0;
  p.depth = 32.0;
  p.octaves = 3;
  p.base_frequency = 0.1;
  p.amplitude = 1.0;
  return p;
}

TEST(TextureFromNoise, ZeroAmplitudeIsHalf) {
  TerrainParams p = noise_params();
  p.amplitude = 0.0;
  const Texture t = texture_from_noise(8, 8, p, Seed{1});
  for (double v : t.values()) EXPECT_EQ(v, 0.5);
}

TEST(TextureFromNoise, ClosureOverRandomSeeds) {
  const TerrainParams p = noise_params();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Texture t = texture_from_noise(32, 32, p, Seed{seed});
    for (double v : t.values()) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
    }
  }
}

TEST(TextureFromNoise, Deterministic) {
  const TerrainParams p = noise_params();
  const Texture a = texture_from_noise(16, 16, p, Seed{5});
  const Texture b = texture_from_noise(16, 16, p, Seed{5});
  EXPECT_EQ(a.values(), b.values());
}

TEST(TextureFromVoronoi, DistanceNormalizationEndpoints) {
  const Texture t = texture_from_voronoi(33, 33, 1, Seed{3}, VoronoiMode::kDistance);
  double min_v = 2.0, max_v = -1.0;
  for (double v : t.values()) {
    min_v = std::min(min_v, v);
    max_v = std::max(max_v, v);
  }
  EXPECT_LT(min_v, 0.05);  // near the site
  EXPECT_DOUBLE_EQ(max_v, 1.0);
}

TEST(TextureFromVoronoi, DistanceFieldIsLipschitz) {
  const Texture t = texture_from_voronoi(32, 32, 5, Seed{9}, VoronoiMode::kDistance);
  // Recover the un-normalized field scale: max distance realized at value 1.
  // Distance-to-nearest-site is 1-Lipschitz in pixel space, so after
  // un-normalizing adjacent pixels differ by at most 1 (plus slack).
  double max_d = 0.0;
  for (int py = 0; py < 32; ++py) {
    for (int px = 0; px + 1 < 32; ++px) {
      max_d = std::max(max_d, std::abs(t.at(px + 1, py) - t.at(px, py)));
    }
  }
  // Normalization divides by the max distance; max_d * max_dist <= 1 px.
  // With a 32x32 texture and 5 sites the max distance is at least a few
  // pixels, so neighbor deltas must be well below 1 in normalized units.
  EXPECT_LE(max_d, 0.5);
}

TEST(TextureFromVoronoi, CellularSingleSiteConstant) {
  const Texture t = texture_from_voronoi(16, 16, 1, Seed{4}, VoronoiMode::kCellular);
  for (double v : t.values()) EXPECT_EQ(v, t.at(0, 0));
}

TEST(TextureLogic, InvertInvolution) {
  const Texture t = texture_from_noise(16, 16, noise_params(), Seed{8});
  const Texture back = texture_logic(LogicOp::kInvert, texture_logic(LogicOp::kInvert, t));
  for (int py = 0; py < 16; ++py) {
    for (int px = 0; px < 16; ++px) {
      ASSERT_NEAR(back.at(px, py), t.at(px, py), 1e-15);
    }
  }
}

TEST(TextureLogic, MultiplyIdentity) {
  const Texture t = texture_from_noise(16, 16, noise_params(), Seed{8});
  const Texture ones(16, 16, 1.0);
  const Texture out = texture_logic(LogicOp::kMultiply, t, &ones);
  EXPECT_EQ(out.values(), t.values());
}

TEST(TextureLogic, Threshold) {
  const Texture t(8, 8, 0.7);
  const Texture out = texture_logic(LogicOp::kThreshold, t, nullptr, 0.5);
  for (double v : out.values()) EXPECT_EQ(v, 1.0);
}

TEST(TextureLogic, MinMaxProperties) {
  const Texture a = texture_from_noise(16, 16, noise_params(), Seed{1});
  const Texture b = texture_from_noise(16, 16, noise_params(), Seed{2});
  const Texture mn_ab = texture_logic(LogicOp::kMin, a, &b);
  const Texture mn_ba = texture_logic(LogicOp::kMin, b, &a);
  EXPECT_EQ(mn_ab.values(), mn_ba.values());  // commutative
  const Texture mn_aa = texture_logic(LogicOp::kMin, a, &a);
  EXPECT_EQ(mn_aa.values(), a.values());  // idempotent
  const Texture mx_ab = texture_logic(LogicOp::kMax, a, &b);
  EXPECT_EQ(texture_logic(LogicOp::kMax, b, &a).values(), mx_ab.values());
}

TEST(TextureLogic, DimensionMismatchRejected) {
  const Texture a(8, 8);
  const Texture b(4, 4);
  EXPECT_THROW(texture_logic(LogicOp::kMultiply, a, &b), std::invalid_argument);
}

TEST(TextureLogic, ClosureProperty) {
  const Texture a = texture_from_noise(16, 16, noise_params(), Seed{1});
  const Texture b = texture_from_noise(16, 16, noise_params(), Seed{2});
  for (LogicOp op : {LogicOp::kInvert, LogicOp::kMultiply, LogicOp::kMin, LogicOp::kMax,
                     LogicOp::kThreshold, LogicOp::kAddClamped}) {
    const bool binary = op == LogicOp::kMultiply || op == LogicOp::kMin || op == LogicOp::kMax ||
                        op == LogicOp::kAddClamped;
    const Texture out = texture_logic(op, a, binary ? &b : nullptr);
    for (double v : out.values()) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
    }
  }
}

TEST(SampleTexture, ConstantEverywhere) {
  Texture t(8, 8, 0.3);
  t.set_world_extent(0.0, 0.0, 10.0, 10.0);
  EXPECT_DOUBLE_EQ(sample_texture(t, {5.0, 5.0}), 0.3);
  EXPECT_DOUBLE_EQ(sample_texture(t, {0.1, 9.9}), 0.3);
}

TEST(SampleTexture, PixelCenterIdentity) {
  Texture t(4, 4);
  t.set(2, 1, 0.8);
  t.set_world_extent(0.0, 0.0, 4.0, 4.0);
  EXPECT_DOUBLE_EQ(sample_texture(t, {2.5, 1.5}), 0.8);
}

TEST(SampleTexture, LinearBetweenPixels) {
  Texture t(2, 1);
  t.set(0, 0, 0.0);
  t.set(1, 0, 1.0);
  t.set_world_extent(0.0, 0.0, 2.0, 1.0);
  EXPECT_DOUBLE_EQ(sample_texture(t, {1.0, 0.5}), 0.5);  // midpoint of centers
}

TEST(SampleTexture, ClampsToEdgeOutsideExtent) {
  Texture t(2, 2);
  t.set(0, 0, 0.2);
  t.set(1, 0, 0.4);
  t.set(0, 1, 0.6);
  t.set(1, 1, 0.8);
  t.set_world_extent(0.0, 0.0, 2.0, 2.0);
  EXPECT_DOUBLE_EQ(sample_texture(t, {-5.0, -5.0}), 0.2);
  EXPECT_DOUBLE_EQ(sample_texture(t, {100.0, 100.0}), 0.8);
}

TEST(PgmIO, RoundTripWithinQuantization) {
  const Texture t = texture_from_noise(16, 16, noise_params(), Seed{77});
  const std::string path = (std::filesystem::temp_directory_path() / "tex_test.pgm").string();
  save_pgm(t, path);
  const Texture loaded = load_pgm(path);
  ASSERT_EQ(loaded.width(), t.width());
  for (int py = 0; py < 16; ++py) {
    for (int px = 0; px < 16; ++px) {
      ASSERT_NEAR(loaded.at(px, py), t.at(px, py), 0.5 / 255.0 + 1e-9);
    }
  }
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace forge
