#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "forge/geometry.hpp"
#include "forge/rng.hpp"
#include "forge/texture.hpp"

namespace forge {

// Axis-aligned sampling region in world XY.
struct SampleRegion {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 1.0;
  double max_y = 1.0;

  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }
  bool contains(const Vec2& p) const {
    return p.x >= min_x && p.x < max_x && p.y >= min_y && p.y < max_y;
  }
  Vec2 center() const { return {(min_x + max_x) / 2.0, (min_y + max_y) / 2.0}; }
};

struct DiskParams {
  double r = 1.0;       // fixed-radius mode
  double r_min = 1.0;   // modulated mode
  double r_max = 1.0;
  int k = 30;           // candidate attempts per active point
  SampleRegion region;
  std::optional<std::size_t> max_count;

  void validate_fixed() const {
    if (r <= 0.0) throw std::invalid_argument("bridson: r <= 0");
    if (k < 1) throw std::invalid_argument("bridson: k < 1");
  }
  void validate_modulated() const {
    if (r_min <= 0.0 || r_min > r_max) throw std::invalid_argument("bridson: need 0 < r_min <= r_max");
    if (k < 1) throw std::invalid_argument("bridson: k < 1");
  }
};

struct SampleSet {
  std::vector<Vec2> points;
  std::vector<int> parent;  // index of the spawning sample, -1 for the root

  std::size_t size() const { return points.size(); }
};

namespace detail {

// Shared Bridson engine. Cells are cell_size wide and hold index lists, so
// the same grid serves the fixed-radius case (where at most one sample ever
// lands per cell) and the modulated case. radius_at gives the local minimum
// separation evaluated at a point.
template <typename RadiusFn>
SampleSet bridson_engine(const SampleRegion& region, double cell_size, int k,
                         std::optional<std::size_t> max_count, RngStream& stream,
                         RadiusFn radius_at) {
  SampleSet out;
  if (region.width() <= 0.0 || region.height() <= 0.0) {
    // Degenerate region: a single sample at the center if anything fits.
    if (region.width() >= 0.0 && region.height() >= 0.0) {
      out.points.push_back(region.center());
      out.parent.push_back(-1);
    }
    return out;
  }

  const int nx = std::max(1, static_cast<int>(std::ceil(region.width() / cell_size)));
  const int ny = std::max(1, static_cast<int>(std::ceil(region.height() / cell_size)));
  std::vector<std::vector<std::uint32_t>> cells(static_cast<std::size_t>(nx) *
                                                static_cast<std::size_t>(ny));
  auto cell_of = [&](const Vec2& p) {
    int cx = static_cast<int>((p.x - region.min_x) / cell_size);
    int cy = static_cast<int>((p.y - region.min_y) / cell_size);
    cx = std::clamp(cx, 0, nx - 1);
    cy = std::clamp(cy, 0, ny - 1);
    return std::pair<int, int>{cx, cy};
  };

  auto accepts = [&](const Vec2& q) {
    const double rq = radius_at(q);
    const auto [cx, cy] = cell_of(q);
    const int reach = static_cast<int>(std::ceil(rq / cell_size));
    for (int dy = -reach; dy <= reach; ++dy) {
      const int yy = cy + dy;
      if (yy < 0 || yy >= ny) continue;
      for (int dx = -reach; dx <= reach; ++dx) {
        const int xx = cx + dx;
        if (xx < 0 || xx >= nx) continue;
        for (std::uint32_t idx : cells[static_cast<std::size_t>(yy) * static_cast<std::size_t>(nx) +
                                       static_cast<std::size_t>(xx)]) {
          if ((out.points[idx] - q).norm() < rq) return false;
        }
      }
    }
    return true;
  };

  auto insert = [&](const Vec2& p, int parent) {
    const auto [cx, cy] = cell_of(p);
    cells[static_cast<std::size_t>(cy) * static_cast<std::size_t>(nx) +
          static_cast<std::size_t>(cx)]
        .push_back(static_cast<std::uint32_t>(out.points.size()));
    out.points.push_back(p);
    out.parent.push_back(parent);
  };

  const Vec2 first{stream.uniform(region.min_x, region.max_x),
                   stream.uniform(region.min_y, region.max_y)};
  insert(first, -1);

  std::vector<std::uint32_t> active{0};
  constexpr double two_pi = 6.283185307179586476925286766559;
  while (!active.empty()) {
    if (max_count && out.points.size() >= *max_count) break;
    const std::size_t pick = stream.uniform_index(active.size());
    const std::uint32_t a = active[pick];
    const double ra = radius_at(out.points[a]);
    bool placed = false;
    for (int attempt = 0; attempt < k; ++attempt) {
      const double angle = stream.uniform(0.0, two_pi);
      const double dist = stream.uniform(ra, 2.0 * ra);
      const Vec2 q = out.points[a] + Vec2{std::cos(angle), std::sin(angle)} * dist;
      if (!region.contains(q)) continue;
      if (!accepts(q)) continue;
      insert(q, static_cast<int>(a));
      active.push_back(static_cast<std::uint32_t>(out.points.size() - 1));
      placed = true;
      break;
    }
    if (!placed) {
      active[pick] = active.back();
      active.pop_back();
    }
  }
  return out;
}

}  // namespace detail

// Bridson's Poisson-disk sampling: annulus [r, 2r], background grid of cell
// size r/sqrt(2). Pairwise distances are >= r.
inline SampleSet bridson(const DiskParams& p, RngStream& stream) {
  p.validate_fixed();
  const double cell = p.r / std::sqrt(2.0);
  return detail::bridson_engine(p.region, cell, p.k, p.max_count, stream,
                                [&](const Vec2&) { return p.r; });
}

// Local separation radius for the modulated variant.
inline double radius_at(const DiskParams& p, const Texture& modulation, const Vec2& q) {
  return p.r_min + sample_texture(modulation, q) * (p.r_max - p.r_min);
}

// Texture-modulated variant: annulus [radius_at(a), 2*radius_at(a)] around
// each active point, acceptance radius evaluated at the candidate, grid cell
// size r_min/sqrt(2) with per-cell index lists. Guarantees
// |p - q| >= min(radius_at(p), radius_at(q)) for every pair.
inline SampleSet modulated_bridson(const DiskParams& p, const Texture& modulation,
                                   RngStream& stream) {
  p.validate_modulated();
  const double cell = p.r_min / std::sqrt(2.0);
  return detail::bridson_engine(p.region, cell, p.k, p.max_count, stream,
                                [&](const Vec2& q) { return radius_at(p, modulation, q); });
}

// Keep each sample independently with probability given by the texture at
// its position. An all-zero texture therefore empties the set (clearings).
inline SampleSet spawn_filter(const SampleSet& samples, const Texture& probability,
                              RngStream& stream) {
  SampleSet out;
  std::vector<int> remap(samples.points.size(), -1);
  for (std::size_t i = 0; i < samples.points.size(); ++i) {
    const double pr = sample_texture(probability, samples.points[i]);
    if (stream.uniform01() < pr) {
      remap[i] = static_cast<int>(out.points.size());
      out.points.push_back(samples.points[i]);
      const int par = samples.parent[i];
      out.parent.push_back(par >= 0 ? remap[static_cast<std::size_t>(par)] : -1);
    }
  }
  return out;
}

inline void save_samples_csv(const SampleSet& s, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_samples_csv: cannot open " + path);
  out << "x,y,parent_index\n";
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    out << s.points[i].x << "," << s.points[i].y << "," << s.parent[i] << "\n";
  }
}

}  // namespace forge
