#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "forge/cloud.hpp"
#include "forge/geometry.hpp"
#include "forge/parallel.hpp"
#include "forge/rng.hpp"
#include "forge/terrain.hpp"
#include "forge/texture.hpp"

namespace forge {

struct GrassParams {
  int tile_size = 4;            // t_s, pixels
  int max_per_tile = 1024;      // P
  int segments = 4;             // S >= 1
  double blade_height_min = 0.25;  // meters
  double blade_height_max = 0.6;
  double blade_width_min = 0.01;
  double blade_width_max = 0.03;
  double jitter = 0.05;         // meters, per XY axis
  double max_bend = 0.4;        // radians
  double scale_min = 0.8;
  double scale_max = 1.25;

  int vertices_per_blade() const { return 2 * segments + 1; }

  void validate() const {
    if (tile_size < 1) throw std::invalid_argument("grass: tile_size < 1");
    if (max_per_tile < 0) throw std::invalid_argument("grass: max_per_tile < 0");
    if (segments < 1) throw std::invalid_argument("grass: segments < 1");
    if (blade_height_min <= 0.0 || blade_height_min > blade_height_max)
      throw std::invalid_argument("grass: bad blade height range");
    if (blade_width_min < 0.0 || blade_width_min > blade_width_max)
      throw std::invalid_argument("grass: bad blade width range");
    if (jitter < 0.0) throw std::invalid_argument("grass: jitter < 0");
    if (max_bend < 0.0) throw std::invalid_argument("grass: max_bend < 0");
    if (scale_min <= 0.0 || scale_min > scale_max)
      throw std::invalid_argument("grass: bad scale range");
  }
};

// Anchor in texture pixel space plus its derivation key: the per-anchor
// stream comes from (tile, index_in_tile), so results do not depend on the
// order tiles are processed in.
struct GrassAnchor {
  Vec2 tex_pos;
  std::uint32_t tile = 0;
  std::uint32_t index_in_tile = 0;
};

// Tile-based density sampling: the texture is cut into t_s x t_s tiles (edge
// tiles may be smaller); each tile gets p = floor(mean * P + 0.5) anchors
// laid out on a ceil(sqrt(p))^2 grid, first p cells in row-major order.
inline std::vector<GrassAnchor> sample_anchors(const Texture& t, int t_s, int P) {
  if (t_s < 1) throw std::invalid_argument("sample_anchors: tile size < 1");
  if (P < 0) throw std::invalid_argument("sample_anchors: P < 0");
  const int tiles_x = (t.width() + t_s - 1) / t_s;
  const int tiles_y = (t.height() + t_s - 1) / t_s;
  const std::size_t tile_count =
      static_cast<std::size_t>(tiles_x) * static_cast<std::size_t>(tiles_y);

  // Per-tile budgets first, then prefix sums so the parallel fill writes to
  // disjoint slots.
  std::vector<int> budget(tile_count, 0);
  parallel_for(0, tile_count, [&](std::size_t ti) {
    const int tx = static_cast<int>(ti) % tiles_x;
    const int ty = static_cast<int>(ti) / tiles_x;
    const int x0 = tx * t_s;
    const int y0 = ty * t_s;
    const int x1 = std::min(x0 + t_s, t.width());
    const int y1 = std::min(y0 + t_s, t.height());
    double sum = 0.0;
    for (int py = y0; py < y1; ++py) {
      for (int px = x0; px < x1; ++px) sum += t.at(px, py);
    }
    // Edge tiles normalize by their actual pixel count, not t_s^2.
    const double density = sum / static_cast<double>((x1 - x0) * (y1 - y0));
    budget[ti] = static_cast<int>(std::floor(density * static_cast<double>(P) + 0.5));
  });

  std::vector<std::size_t> offset(tile_count + 1, 0);
  for (std::size_t ti = 0; ti < tile_count; ++ti) {
    offset[ti + 1] = offset[ti] + static_cast<std::size_t>(budget[ti]);
  }

  std::vector<GrassAnchor> anchors(offset[tile_count]);
  parallel_for(0, tile_count, [&](std::size_t ti) {
    const int p = budget[ti];
    if (p == 0) return;
    const int tx = static_cast<int>(ti) % tiles_x;
    const int ty = static_cast<int>(ti) / tiles_x;
    const double x0 = static_cast<double>(tx * t_s);
    const double y0 = static_cast<double>(ty * t_s);
    const double tw = static_cast<double>(std::min((tx + 1) * t_s, t.width())) - x0;
    const double th = static_cast<double>(std::min((ty + 1) * t_s, t.height())) - y0;
    const int g = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(p))));
    for (int i = 0; i < p; ++i) {
      const int row = i / g;
      const int col = i % g;
      anchors[offset[ti] + static_cast<std::size_t>(i)] = {
          {x0 + (static_cast<double>(col) + 0.5) * tw / static_cast<double>(g),
           y0 + (static_cast<double>(row) + 0.5) * th / static_cast<double>(g)},
          static_cast<std::uint32_t>(ti), static_cast<std::uint32_t>(i)};
    }
  });
  return anchors;
}

// One blade in local frame: S vertex pairs at heights h*i/S (i = 1..S) with
// width tapering linearly to zero, plus the tip at height h. Then scale,
// tip bend (displacement weighted by squared height fraction), and rotation
// about up, in that order.
inline void blade_geometry(const GrassParams& params, RngStream& stream,
                           std::vector<Vec3>& vertices) {
  const double h = stream.uniform(params.blade_height_min, params.blade_height_max);
  const double w = stream.uniform(params.blade_width_min, params.blade_width_max);
  const double scale = stream.uniform(params.scale_min, params.scale_max);
  const double bend = stream.uniform(0.0, params.max_bend);
  constexpr double two_pi = 6.283185307179586476925286766559;
  const double spin = stream.uniform(0.0, two_pi);

  const int S = params.segments;
  vertices.clear();
  vertices.reserve(static_cast<std::size_t>(2 * S + 1));
  for (int i = 1; i <= S; ++i) {
    const double f = static_cast<double>(i) / static_cast<double>(S);
    const double half_w = w * (1.0 - f) / 2.0;
    const double z = h * f;
    vertices.push_back({-half_w, 0.0, z});
    vertices.push_back({half_w, 0.0, z});
  }
  vertices.push_back({0.0, 0.0, h});

  const double sh = scale * h;
  const double cs = std::cos(spin);
  const double sn = std::sin(spin);
  for (auto& v : vertices) {
    v = v * scale;
    const double f = sh > 0.0 ? v.z / sh : 0.0;
    v.x += sh * std::sin(bend) * f * f;  // bend towards local +x, tip-weighted
    const double rx = v.x * cs - v.y * sn;
    const double ry = v.x * sn + v.y * cs;
    v.x = rx;
    v.y = ry;
  }
}

inline std::vector<Vec3> blade_geometry(const GrassParams& params, RngStream& stream) {
  std::vector<Vec3> v;
  blade_geometry(params, stream, v);
  return v;
}

struct Blade {
  Vec3 anchor;
  std::vector<Vec3> vertices;  // world space
};

namespace detail {

inline Vec2 anchor_world_xy(const GrassAnchor& a, const Texture& density_tex,
                            const Heightmap& hm) {
  // Texture pixel space maps affinely onto the texture's world extent; a
  // texture without an explicit extent maps over the whole terrain.
  double min_x = density_tex.world_min_x();
  double min_y = density_tex.world_min_y();
  double max_x = density_tex.world_max_x();
  double max_y = density_tex.world_max_y();
  if (min_x == 0.0 && min_y == 0.0 && max_x == 1.0 && max_y == 1.0) {
    max_x = hm.width();
    max_y = hm.depth();
  }
  return {min_x + a.tex_pos.x / static_cast<double>(density_tex.width()) * (max_x - min_x),
          min_y + a.tex_pos.y / static_cast<double>(density_tex.height()) * (max_y - min_y)};
}

}  // namespace detail

// Visit every blade. fn(anchor_index, const Blade&) is called from multiple
// threads, once per anchor; per-anchor streams make the result independent
// of scheduling.
template <typename Fn>
void visit_grass_blades(const std::vector<GrassAnchor>& anchors, const Texture& density_tex,
                        const Heightmap& hm, const GrassParams& params, const RngStream& stream,
                        Fn&& fn) {
  params.validate();
  const RngStream base = stream.derive("grass");
  parallel_for(0, anchors.size(), [&](std::size_t i) {
    const GrassAnchor& a = anchors[i];
    RngStream s = base.derive(a.tile).derive(a.index_in_tile);
    const Vec2 grid_xy = detail::anchor_world_xy(a, density_tex, hm);
    const double jx = params.jitter > 0.0 ? s.uniform(-params.jitter, params.jitter) : 0.0;
    const double jy = params.jitter > 0.0 ? s.uniform(-params.jitter, params.jitter) : 0.0;
    const double x = std::clamp(grid_xy.x + jx, 0.0, hm.width());
    const double y = std::clamp(grid_xy.y + jy, 0.0, hm.depth());
    Blade blade;
    blade.anchor = {x, y, hm.height_at(x, y)};
    blade_geometry(params, s, blade.vertices);
    for (auto& v : blade.vertices) v = v + blade.anchor;
    fn(i, blade);
  });
}

inline std::vector<Blade> instantiate_grass(const std::vector<GrassAnchor>& anchors,
                                            const Texture& density_tex, const Heightmap& hm,
                                            const GrassParams& params, const RngStream& stream) {
  std::vector<Blade> blades(anchors.size());
  visit_grass_blades(anchors, density_tex, hm, params, stream,
                     [&](std::size_t i, const Blade& b) { blades[i] = b; });
  return blades;
}

// All blade vertices as grass-labeled points, in anchor order.
inline LabeledPointCloud grass_cloud(const std::vector<GrassAnchor>& anchors,
                                     const Texture& density_tex, const Heightmap& hm,
                                     const GrassParams& params, const RngStream& stream) {
  const auto vpb = static_cast<std::size_t>(params.vertices_per_blade());
  LabeledPointCloud cloud;
  cloud.records.resize(anchors.size() * vpb);
  visit_grass_blades(anchors, density_tex, hm, params, stream,
                     [&](std::size_t i, const Blade& b) {
                       for (std::size_t j = 0; j < b.vertices.size(); ++j) {
                         cloud.records[i * vpb + j] = {b.vertices[j], Label::kGrass,
                                                       kGrassInstanceId};
                       }
                     });
  return cloud;
}

}  // namespace forge
