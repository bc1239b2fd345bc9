#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "forge/cloud.hpp"
#include "forge/geometry.hpp"
#include "forge/parallel.hpp"
#include "forge/rng.hpp"

namespace forge {

struct TerrainParams {
  double width = 100.0;          // meters, x extent
  double depth = 100.0;          // meters, y extent
  int grid_resolution = 129;     // vertices per side, >= 2
  int octaves = 5;
  double lacunarity = 2.0;       // frequency multiplier per octave
  double persistence = 0.5;      // amplitude multiplier per octave, (0,1]
  double base_frequency = 0.01;  // cycles per meter
  double amplitude = 8.0;        // meters
  std::string seed_label = "terrain";

  void validate() const {
    if (grid_resolution < 2) throw std::invalid_argument("terrain: grid_resolution < 2");
    if (width <= 0.0 || depth <= 0.0) throw std::invalid_argument("terrain: non-positive extent");
    if (octaves < 1) throw std::invalid_argument("terrain: octaves < 1");
    if (lacunarity <= 1.0) throw std::invalid_argument("terrain: lacunarity <= 1");
    if (persistence <= 0.0 || persistence > 1.0) throw std::invalid_argument("terrain: persistence outside (0,1]");
    if (base_frequency <= 0.0) throw std::invalid_argument("terrain: base_frequency <= 0");
    if (amplitude < 0.0) throw std::invalid_argument("terrain: amplitude < 0");
  }

  // Analytic bound on |fbm|: amplitude * sum of persistence^i.
  double amplitude_bound() const {
    double sum = 0.0;
    double a = 1.0;
    for (int i = 0; i < octaves; ++i) {
      sum += a;
      a *= persistence;
    }
    return amplitude * sum;
  }
};

namespace detail {

// Unit gradient at a lattice cell, derived from the seed (no fixed
// permutation table; each seed gets its own gradient field).
inline Vec2 lattice_gradient(std::uint64_t seed, std::int64_t ix, std::int64_t iy) {
  std::uint64_t h = seed;
  h ^= static_cast<std::uint64_t>(ix) * 0x9e3779b97f4a7c15ULL;
  h ^= static_cast<std::uint64_t>(iy) * 0xc2b2ae3d27d4eb4fULL;
  h = splitmix64(h);
  constexpr double two_pi = 6.283185307179586476925286766559;
  const double angle = static_cast<double>(h >> 11) * 0x1.0p-53 * two_pi;
  return {std::cos(angle), std::sin(angle)};
}

inline double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

inline double lerp(double a, double b, double t) { return a + t * (b - a); }

}  // namespace detail

// Classic 2D gradient noise. Value in [-1, 1], zero at integer lattice
// points, continuous everywhere.
inline double perlin2(double x, double y, Seed seed) {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const auto ix = static_cast<std::int64_t>(fx);
  const auto iy = static_cast<std::int64_t>(fy);
  const double tx = x - fx;
  const double ty = y - fy;

  const Vec2 g00 = detail::lattice_gradient(seed.value, ix, iy);
  const Vec2 g10 = detail::lattice_gradient(seed.value, ix + 1, iy);
  const Vec2 g01 = detail::lattice_gradient(seed.value, ix, iy + 1);
  const Vec2 g11 = detail::lattice_gradient(seed.value, ix + 1, iy + 1);

  const double d00 = g00.dot({tx, ty});
  const double d10 = g10.dot({tx - 1.0, ty});
  const double d01 = g01.dot({tx, ty - 1.0});
  const double d11 = g11.dot({tx - 1.0, ty - 1.0});

  const double u = detail::fade(tx);
  const double v = detail::fade(ty);
  return detail::lerp(detail::lerp(d00, d10, u), detail::lerp(d01, d11, u), v);
}

// Seed for octave i, derived from the base seed so octaves decorrelate.
inline Seed octave_seed(Seed seed, int octave) {
  return Seed{detail::mix(seed.value, 0xfb0cafe5ULL + static_cast<std::uint64_t>(octave))};
}

// Fractal sum: amplitude * sum_i persistence^i * perlin2(p * f * lacunarity^i).
inline double fbm(double x, double y, const TerrainParams& p, Seed seed) {
  double value = 0.0;
  double amp = 1.0;
  double freq = p.base_frequency;
  for (int i = 0; i < p.octaves; ++i) {
    value += amp * perlin2(x * freq, y * freq, octave_seed(seed, i));
    amp *= p.persistence;
    freq *= p.lacunarity;
  }
  return p.amplitude * value;
}

class Heightmap {
 public:
  Heightmap() = default;
  Heightmap(TerrainParams params, std::vector<double> heights)
      : params_(std::move(params)), heights_(std::move(heights)) {}

  const TerrainParams& params() const { return params_; }
  int resolution() const { return params_.grid_resolution; }
  double width() const { return params_.width; }
  double depth() const { return params_.depth; }

  double at(int ix, int iy) const {
    return heights_[static_cast<std::size_t>(iy) * static_cast<std::size_t>(resolution()) +
                    static_cast<std::size_t>(ix)];
  }

  const std::vector<double>& heights() const { return heights_; }

  // Bilinear interpolation of the four surrounding grid heights.
  double height_at(double x, double y) const {
    if (x < 0.0 || x > params_.width || y < 0.0 || y > params_.depth) {
      throw std::domain_error("height_at: query outside terrain extent");
    }
    const int res = resolution();
    const double gx = x / params_.width * static_cast<double>(res - 1);
    const double gy = y / params_.depth * static_cast<double>(res - 1);
    int ix = static_cast<int>(gx);
    int iy = static_cast<int>(gy);
    ix = std::min(ix, res - 2);
    iy = std::min(iy, res - 2);
    const double tx = gx - ix;
    const double ty = gy - iy;
    const double h0 = detail::lerp(at(ix, iy), at(ix + 1, iy), tx);
    const double h1 = detail::lerp(at(ix, iy + 1), at(ix + 1, iy + 1), tx);
    return detail::lerp(h0, h1, ty);
  }

  double max_height() const {
    double m = heights_.empty() ? 0.0 : heights_.front();
    for (double h : heights_) m = std::max(m, h);
    return m;
  }

  Aabb extent() const {
    return {{0.0, 0.0, 0.0}, {params_.width, params_.depth, 0.0}};
  }

 private:
  TerrainParams params_;
  std::vector<double> heights_;  // row-major, y rows
};

// Heights at every grid vertex. Row-parallel; output independent of worker
// count since each vertex is a pure function of (params, seed).
inline Heightmap generate_heightmap(const TerrainParams& p, Seed seed) {
  p.validate();
  const int res = p.grid_resolution;
  std::vector<double> heights(static_cast<std::size_t>(res) * static_cast<std::size_t>(res));
  parallel_for(0, static_cast<std::size_t>(res), [&](std::size_t iy) {
    const double y = p.depth * static_cast<double>(iy) / static_cast<double>(res - 1);
    for (int ix = 0; ix < res; ++ix) {
      const double x = p.width * static_cast<double>(ix) / static_cast<double>(res - 1);
      heights[iy * static_cast<std::size_t>(res) + static_cast<std::size_t>(ix)] =
          fbm(x, y, p, seed);
    }
  });
  return Heightmap(p, std::move(heights));
}

// Regular grid of surface samples with small in-cell jitter, labeled terrain.
inline LabeledPointCloud terrain_points(const Heightmap& hm, double spacing, Seed seed) {
  if (spacing <= 0.0) throw std::invalid_argument("terrain_points: spacing <= 0");
  const int nx = std::max(2, static_cast<int>(std::floor(hm.width() / spacing)) + 1);
  const int ny = std::max(2, static_cast<int>(std::floor(hm.depth() / spacing)) + 1);
  const double dx = hm.width() / static_cast<double>(nx - 1);
  const double dy = hm.depth() / static_cast<double>(ny - 1);

  LabeledPointCloud cloud;
  cloud.records.resize(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny));
  RngStream base = RngStream(seed).derive("terrain_points");
  parallel_for(0, static_cast<std::size_t>(ny), [&](std::size_t iy) {
    for (int ix = 0; ix < nx; ++ix) {
      const std::size_t idx = iy * static_cast<std::size_t>(nx) + static_cast<std::size_t>(ix);
      RngStream s = base.derive(idx);
      const double jx = s.uniform(-spacing / 4.0, spacing / 4.0);
      const double jy = s.uniform(-spacing / 4.0, spacing / 4.0);
      const double x = std::clamp(static_cast<double>(ix) * dx + jx, 0.0, hm.width());
      const double y = std::clamp(static_cast<double>(iy) * dy + jy, 0.0, hm.depth());
      cloud.records[idx] = {{x, y, hm.height_at(x, y)}, Label::kTerrain, kTerrainInstanceId};
    }
  });
  return cloud;
}

// Binary heightmap file: magic "SYLVHM01", u32 resolution, f64 width, f64
// depth, f32 heights row-major. Little-endian.
inline void save_heightmap(const Heightmap& hm, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_heightmap: cannot open " + path);
  out.write("SYLVHM01", 8);
  const auto res = static_cast<std::uint32_t>(hm.resolution());
  out.write(reinterpret_cast<const char*>(&res), 4);
  const double w = hm.width();
  const double d = hm.depth();
  out.write(reinterpret_cast<const char*>(&w), 8);
  out.write(reinterpret_cast<const char*>(&d), 8);
  for (double h : hm.heights()) {
    const auto f = static_cast<float>(h);
    out.write(reinterpret_cast<const char*>(&f), 4);
  }
  if (!out) throw std::runtime_error("save_heightmap: write failed for " + path);
}

inline Heightmap load_heightmap(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_heightmap: cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, "SYLVHM01", 8) != 0) {
    throw std::runtime_error("load_heightmap: bad magic in " + path);
  }
  std::uint32_t res = 0;
  double w = 0.0, d = 0.0;
  in.read(reinterpret_cast<char*>(&res), 4);
  in.read(reinterpret_cast<char*>(&w), 8);
  in.read(reinterpret_cast<char*>(&d), 8);
  if (!in || res < 2) throw std::runtime_error("load_heightmap: bad header in " + path);
  std::vector<double> heights(static_cast<std::size_t>(res) * res);
  for (auto& h : heights) {
    float f = 0.0f;
    in.read(reinterpret_cast<char*>(&f), 4);
    h = f;
  }
  if (!in) throw std::runtime_error("load_heightmap: truncated file " + path);
  TerrainParams p;
  p.width = w;
  p.depth = d;
  p.grid_resolution = static_cast<int>(res);
  return Heightmap(p, std::move(heights));
}

}  // namespace forge
