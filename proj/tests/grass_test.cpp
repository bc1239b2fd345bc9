#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "forge/grass.hpp"
#include "forge/parallel.hpp"

namespace forge {
namespace {

Heightmap flat_heightmap(double extent) {
  TerrainParams p;
  p.width = extent;
  p.depth = extent;
  p.grid_resolution = 2;
  return Heightmap(p, {0.0, 0.0, 0.0, 0.0});
}

TEST(SampleAnchors, UniformDensityExactBudget) {
  // Constant density d with full tiles: every tile gets floor(d*P + 0.5).
  const Texture t(8, 8, 0.5);
  const auto anchors = sample_anchors(t, 4, 10);  // 4 tiles, 5 anchors each
  EXPECT_EQ(anchors.size(), 20u);
  std::map<std::uint32_t, int> per_tile;
  for (const auto& a : anchors) per_tile[a.tile]++;
  ASSERT_EQ(per_tile.size(), 4u);
  for (const auto& [tile, n] : per_tile) EXPECT_EQ(n, 5);
}

TEST(SampleAnchors, ZeroDensityGivesNothing) {
  const Texture t(8, 8, 0.0);
  EXPECT_TRUE(sample_anchors(t, 4, 100).empty());
}

TEST(SampleAnchors, RoundingOracle) {
  // d = 0.24, P = 10 -> floor(2.4 + 0.5) = 2; d = 0.25 -> floor(3.0) = 3.
  EXPECT_EQ(sample_anchors(Texture(4, 4, 0.24), 4, 10).size(), 2u);
  EXPECT_EQ(sample_anchors(Texture(4, 4, 0.25), 4, 10).size(), 3u);
}

TEST(SampleAnchors, EdgeTileUsesActualPixelCount) {
  // 6x4 texture with tile size 4: tiles of 4x4 and 2x4 pixels. With a
  // constant texture both tiles see the same mean density, so both get the
  // same budget even though the edge tile has fewer pixels.
  const Texture t(6, 4, 1.0);
  const auto anchors = sample_anchors(t, 4, 7);
  std::map<std::uint32_t, int> per_tile;
  for (const auto& a : anchors) per_tile[a.tile]++;
  ASSERT_EQ(per_tile.size(), 2u);
  EXPECT_EQ(per_tile[0], 7);
  EXPECT_EQ(per_tile[1], 7);
}

TEST(SampleAnchors, GridLayoutRowMajor) {
  // One 4x4 tile, p = 5 anchors -> g = ceil(sqrt(5)) = 3 grid; first five
  // cells row-major: (0,0),(1,0),(2,0),(0,1),(1,1) at centers spaced 4/3.
  const Texture t(4, 4, 0.5);
  const auto anchors = sample_anchors(t, 4, 10);
  ASSERT_EQ(anchors.size(), 5u);
  const double step = 4.0 / 3.0;
  const double half = step / 2.0;
  const Vec2 expected[5] = {{half, half},
                            {half + step, half},
                            {half + 2 * step, half},
                            {half, half + step},
                            {half + step, half + step}};
  for (int i = 0; i < 5; ++i) {
    EXPECT_NEAR(anchors[static_cast<std::size_t>(i)].tex_pos.x, expected[i].x, 1e-12);
    EXPECT_NEAR(anchors[static_cast<std::size_t>(i)].tex_pos.y, expected[i].y, 1e-12);
    EXPECT_EQ(anchors[static_cast<std::size_t>(i)].index_in_tile,
              static_cast<std::uint32_t>(i));
  }
}

TEST(SampleAnchors, AnchorsStayInsideTheirTile) {
  Texture t(16, 16);
  RngStream r{Seed{2}};
  for (int py = 0; py < 16; ++py) {
    for (int px = 0; px < 16; ++px) t.set(px, py, r.uniform01());
  }
  const int t_s = 4;
  for (const auto& a : sample_anchors(t, t_s, 50)) {
    const int tx = static_cast<int>(a.tile) % 4;
    const int ty = static_cast<int>(a.tile) / 4;
    ASSERT_GE(a.tex_pos.x, tx * t_s);
    ASSERT_LE(a.tex_pos.x, (tx + 1) * t_s);
    ASSERT_GE(a.tex_pos.y, ty * t_s);
    ASSERT_LE(a.tex_pos.y, (ty + 1) * t_s);
  }
}

TEST(BladeGeometry, VertexCountContract) {
  for (int S : {1, 2, 4, 7}) {
    GrassParams p;
    p.segments = S;
    RngStream s{Seed{3}};
    EXPECT_EQ(blade_geometry(p, s).size(), static_cast<std::size_t>(2 * S + 1));
    EXPECT_EQ(p.vertices_per_blade(), 2 * S + 1);
  }
}

TEST(BladeGeometry, NoBendNoSpinOracle) {
  // With bend and spin disabled and degenerate draw ranges, the blade is the
  // plain tapered strip: pairs at z = h*i/S with half-width w*(1-i/S)/2.
  GrassParams p;
  p.segments = 4;
  p.blade_height_min = p.blade_height_max = 0.5;
  p.blade_width_min = p.blade_width_max = 0.04;
  p.max_bend = 0.0;
  p.scale_min = p.scale_max = 1.0;
  RngStream s{Seed{5}};
  const auto v = blade_geometry(p, s);
  ASSERT_EQ(v.size(), 9u);
  for (int i = 1; i <= 4; ++i) {
    const double f = i / 4.0;
    const double half_w = 0.04 * (1.0 - f) / 2.0;
    const auto& left = v[static_cast<std::size_t>(2 * (i - 1))];
    const auto& right = v[static_cast<std::size_t>(2 * (i - 1) + 1)];
    EXPECT_NEAR(left.z, 0.5 * f, 1e-12);
    EXPECT_NEAR(right.z, 0.5 * f, 1e-12);
    EXPECT_NEAR(std::hypot(left.x, left.y), half_w, 1e-12);
    EXPECT_NEAR(std::hypot(right.x, right.y), half_w, 1e-12);
  }
  // Tip: zero width at full height.
  EXPECT_NEAR(v[8].x, 0.0, 1e-12);
  EXPECT_NEAR(v[8].y, 0.0, 1e-12);
  EXPECT_NEAR(v[8].z, 0.5, 1e-12);
}

TEST(BladeGeometry, ScaleIsUniform) {
  GrassParams p;
  p.segments = 3;
  p.blade_height_min = p.blade_height_max = 1.0;
  p.blade_width_min = p.blade_width_max = 0.1;
  p.max_bend = 0.0;
  p.scale_min = p.scale_max = 2.0;
  RngStream s{Seed{5}};
  const auto v = blade_geometry(p, s);
  EXPECT_NEAR(v.back().z, 2.0, 1e-12);  // tip at scale * h
}

TEST(BladeGeometry, SpinPreservesHeightsAndWidths) {
  GrassParams p;
  p.segments = 3;
  p.max_bend = 0.0;
  RngStream s{Seed{17}};
  const auto v = blade_geometry(p, s);
  // Rotation about up keeps z and the radial distance per vertex; widths of a
  // pair must still match.
  for (int i = 0; i < 3; ++i) {
    const auto& a = v[static_cast<std::size_t>(2 * i)];
    const auto& b = v[static_cast<std::size_t>(2 * i + 1)];
    EXPECT_NEAR(a.z, b.z, 1e-12);
    EXPECT_NEAR(std::hypot(a.x, a.y), std::hypot(b.x, b.y), 1e-12);
  }
}

TEST(BladeGeometry, BendDisplacesTipMost) {
  GrassParams p;
  p.segments = 4;
  p.blade_height_min = p.blade_height_max = 1.0;
  p.blade_width_min = p.blade_width_max = 0.0;
  p.max_bend = 0.3;
  p.scale_min = p.scale_max = 1.0;
  RngStream s{Seed{21}};
  const auto v = blade_geometry(p, s);
  // With zero width every vertex sits on the spine; radial displacement grows
  // with the squared height fraction, so it is strictly increasing up the blade.
  double prev = -1.0;
  for (int i = 0; i < 4; ++i) {
    const double d = std::hypot(v[static_cast<std::size_t>(2 * i)].x,
                                v[static_cast<std::size_t>(2 * i)].y);
    EXPECT_GT(d, prev);
    prev = d;
  }
  EXPECT_GE(std::hypot(v[8].x, v[8].y), prev);
}

TEST(VisitGrassBlades, WorkerCountInvariant) {
  const Heightmap hm = flat_heightmap(16.0);
  Texture density(16, 16, 0.4);
  density.set_world_extent(0.0, 0.0, 16.0, 16.0);
  const auto anchors = sample_anchors(density, 4, 20);
  ASSERT_FALSE(anchors.empty());
  GrassParams p;
  const RngStream root{Seed{77}};

  set_thread_count(1);
  const auto one = instantiate_grass(anchors, density, hm, p, root);
  set_thread_count(8);
  const auto eight = instantiate_grass(anchors, density, hm, p, root);
  set_thread_count(0);
  ASSERT_EQ(one.size(), eight.size());
  for (std::size_t i = 0; i < one.size(); ++i) {
    ASSERT_EQ(one[i].vertices.size(), eight[i].vertices.size());
    for (std::size_t j = 0; j < one[i].vertices.size(); ++j) {
      ASSERT_EQ(one[i].vertices[j].x, eight[i].vertices[j].x);
      ASSERT_EQ(one[i].vertices[j].y, eight[i].vertices[j].y);
      ASSERT_EQ(one[i].vertices[j].z, eight[i].vertices[j].z);
    }
  }
}

TEST(VisitGrassBlades, AnchorsSitOnTerrain) {
  TerrainParams tp;
  tp.width = 16.0;
  tp.depth = 16.0;
  tp.grid_resolution = 17;
  const Heightmap hm = generate_heightmap(tp, Seed{4});
  Texture density(16, 16, 0.3);
  density.set_world_extent(0.0, 0.0, 16.0, 16.0);
  const auto anchors = sample_anchors(density, 4, 16);
  GrassParams p;
  const auto blades = instantiate_grass(anchors, density, hm, p, RngStream{Seed{5}});
  for (const auto& b : blades) {
    ASSERT_EQ(b.anchor.z, hm.height_at(b.anchor.x, b.anchor.y));
    // Vertices sit above the anchor, within the scaled height budget plus bend.
    for (const auto& v : b.vertices) {
      ASSERT_GE(v.z, b.anchor.z);
      ASSERT_LE(v.z - b.anchor.z, p.blade_height_max * p.scale_max + 1e-9);
    }
  }
}

TEST(VisitGrassBlades, JitterBound) {
  const Heightmap hm = flat_heightmap(16.0);
  Texture density(16, 16, 0.5);
  density.set_world_extent(0.0, 0.0, 16.0, 16.0);
  const auto anchors = sample_anchors(density, 4, 20);
  GrassParams p;
  p.jitter = 0.05;
  std::vector<Blade> blades = instantiate_grass(anchors, density, hm, p, RngStream{Seed{9}});
  ASSERT_EQ(blades.size(), anchors.size());
  for (std::size_t i = 0; i < blades.size(); ++i) {
    const Vec2 grid = detail::anchor_world_xy(anchors[i], density, hm);
    ASSERT_LE(std::abs(blades[i].anchor.x - grid.x), p.jitter + 1e-12);
    ASSERT_LE(std::abs(blades[i].anchor.y - grid.y), p.jitter + 1e-12);
  }
}

TEST(GrassCloud, LabelsAndInstanceIds) {
  const Heightmap hm = flat_heightmap(8.0);
  Texture density(8, 8, 0.5);
  density.set_world_extent(0.0, 0.0, 8.0, 8.0);
  const auto anchors = sample_anchors(density, 4, 10);
  GrassParams p;
  const LabeledPointCloud cloud = grass_cloud(anchors, density, hm, p, RngStream{Seed{1}});
  EXPECT_EQ(cloud.size(), anchors.size() * static_cast<std::size_t>(p.vertices_per_blade()));
  for (const auto& r : cloud.records) {
    ASSERT_EQ(r.label, Label::kGrass);
    ASSERT_EQ(r.instance_id, kGrassInstanceId);
  }
}

TEST(GrassParams, Validation) {
  const Heightmap hm = flat_heightmap(8.0);
  Texture density(8, 8, 0.5);
  const auto anchors = sample_anchors(density, 4, 10);
  GrassParams p;
  p.segments = 0;
  EXPECT_THROW(instantiate_grass(anchors, density, hm, p, RngStream{Seed{1}}),
               std::invalid_argument);
  EXPECT_THROW(sample_anchors(density, 0, 10), std::invalid_argument);
  EXPECT_THROW(sample_anchors(density, 4, -1), std::invalid_argument);
}

}  // namespace
}  // namespace forge
