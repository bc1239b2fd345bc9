#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "forge/geometry.hpp"
#include "forge/parallel.hpp"
#include "forge/rng.hpp"
#include "forge/terrain.hpp"

namespace forge {

// Greyscale control texture: values in [0,1], plus an affine mapping from
// pixel space to terrain world XY. Stored as reals; 8-bit quantization
// happens only at PGM I/O.
class Texture {
 public:
  Texture() = default;
  Texture(int width, int height, double fill = 0.0)
      : width_(width), height_(height),
        values_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {
    if (width < 1 || height < 1) throw std::invalid_argument("texture: dimensions < 1");
    if (fill < 0.0 || fill > 1.0) throw std::invalid_argument("texture: fill outside [0,1]");
  }

  int width() const { return width_; }
  int height() const { return height_; }

  double at(int px, int py) const {
    return values_[static_cast<std::size_t>(py) * static_cast<std::size_t>(width_) +
                   static_cast<std::size_t>(px)];
  }
  void set(int px, int py, double v) {
    values_[static_cast<std::size_t>(py) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(px)] = std::clamp(v, 0.0, 1.0);
  }

  const std::vector<double>& values() const { return values_; }

  // World extent this texture maps over (defaults to unit square).
  void set_world_extent(double min_x, double min_y, double max_x, double max_y) {
    if (max_x <= min_x || max_y <= min_y) throw std::invalid_argument("texture: empty world extent");
    min_x_ = min_x;
    min_y_ = min_y;
    max_x_ = max_x;
    max_y_ = max_y;
  }
  double world_min_x() const { return min_x_; }
  double world_min_y() const { return min_y_; }
  double world_max_x() const { return max_x_; }
  double world_max_y() const { return max_y_; }

  // Bilinear sample at a world position. Out-of-extent queries clamp to the
  // edge; pipelines never fail for boundary placements.
  double sample_world(const Vec2& world) const {
    const double u = (world.x - min_x_) / (max_x_ - min_x_);
    const double v = (world.y - min_y_) / (max_y_ - min_y_);
    return sample_uv(u, v);
  }

  // Bilinear sample in [0,1]^2 UV space, pixel centers at (i+0.5)/W.
  double sample_uv(double u, double v) const {
    const double px = u * static_cast<double>(width_) - 0.5;
    const double py = v * static_cast<double>(height_) - 0.5;
    const double fx = std::clamp(px, 0.0, static_cast<double>(width_ - 1));
    const double fy = std::clamp(py, 0.0, static_cast<double>(height_ - 1));
    int ix = static_cast<int>(fx);
    int iy = static_cast<int>(fy);
    ix = std::min(ix, width_ - (width_ > 1 ? 2 : 1));
    iy = std::min(iy, height_ - (height_ > 1 ? 2 : 1));
    const int ix1 = std::min(ix + 1, width_ - 1);
    const int iy1 = std::min(iy + 1, height_ - 1);
    const double tx = std::clamp(fx - ix, 0.0, 1.0);
    const double ty = std::clamp(fy - iy, 0.0, 1.0);
    const double h0 = at(ix, iy) + tx * (at(ix1, iy) - at(ix, iy));
    const double h1 = at(ix, iy1) + tx * (at(ix1, iy1) - at(ix, iy1));
    return h0 + ty * (h1 - h0);
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> values_;
  double min_x_ = 0.0, min_y_ = 0.0, max_x_ = 1.0, max_y_ = 1.0;
};

inline double sample_texture(const Texture& t, const Vec2& world_xy) {
  return t.sample_world(world_xy);
}

// fbm per pixel, affinely normalized from [-A, A] to [0,1] where A is the
// analytic amplitude bound. amplitude == 0 maps to constant 0.5.
inline Texture texture_from_noise(int w, int h, const TerrainParams& p, Seed seed) {
  Texture t(w, h);
  t.set_world_extent(0.0, 0.0, p.width, p.depth);
  const double bound = p.amplitude_bound();
  parallel_for(0, static_cast<std::size_t>(h), [&](std::size_t py) {
    for (int px = 0; px < w; ++px) {
      // Sample at pixel centers over a unit-square UV footprint scaled by
      // the terrain extent so noise frequency is in world units.
      const double x = (static_cast<double>(px) + 0.5) / static_cast<double>(w) * p.width;
      const double y = (static_cast<double>(py) + 0.5) / static_cast<double>(h) * p.depth;
      const double v = bound > 0.0 ? fbm(x, y, p, seed) / (2.0 * bound) + 0.5 : 0.5;
      t.set(px, static_cast<int>(py), v);
    }
  });
  return t;
}

enum class VoronoiMode { kDistance, kCellular };

// mode distance: per-pixel distance to nearest site normalized to [0,1] by
// the max distance. mode cellular: each pixel takes a per-site constant.
inline Texture texture_from_voronoi(int w, int h, int sites, Seed seed, VoronoiMode mode) {
  if (sites < 1) throw std::invalid_argument("voronoi: sites < 1");
  RngStream stream = RngStream(seed).derive("voronoi");
  std::vector<Vec2> pts(static_cast<std::size_t>(sites));
  std::vector<double> cell_value(static_cast<std::size_t>(sites));
  for (int i = 0; i < sites; ++i) {
    pts[static_cast<std::size_t>(i)] = {stream.uniform(0.0, static_cast<double>(w)),
                                        stream.uniform(0.0, static_cast<double>(h))};
    cell_value[static_cast<std::size_t>(i)] = stream.uniform01();
  }

  Texture t(w, h);
  std::vector<double> dist(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
  std::vector<int> nearest(dist.size());
  parallel_for(0, static_cast<std::size_t>(h), [&](std::size_t py) {
    for (int px = 0; px < w; ++px) {
      const Vec2 p{static_cast<double>(px) + 0.5, static_cast<double>(py) + 0.5};
      double best = std::numeric_limits<double>::infinity();
      int best_i = 0;
      for (int i = 0; i < sites; ++i) {
        const double d = (pts[static_cast<std::size_t>(i)] - p).norm();
        if (d < best) {
          best = d;
          best_i = i;
        }
      }
      const std::size_t idx = py * static_cast<std::size_t>(w) + static_cast<std::size_t>(px);
      dist[idx] = best;
      nearest[idx] = best_i;
    }
  });

  if (mode == VoronoiMode::kCellular) {
    for (int py = 0; py < h; ++py) {
      for (int px = 0; px < w; ++px) {
        t.set(px, py, cell_value[static_cast<std::size_t>(
                          nearest[static_cast<std::size_t>(py) * static_cast<std::size_t>(w) +
                                  static_cast<std::size_t>(px)])]);
      }
    }
    // Single cell degenerates to a constant texture.
    return t;
  }

  double max_d = 0.0;
  for (double d : dist) max_d = std::max(max_d, d);
  for (int py = 0; py < h; ++py) {
    for (int px = 0; px < w; ++px) {
      const double d = dist[static_cast<std::size_t>(py) * static_cast<std::size_t>(w) +
                            static_cast<std::size_t>(px)];
      t.set(px, py, max_d > 0.0 ? d / max_d : 0.0);
    }
  }
  return t;
}

enum class LogicOp { kInvert, kMultiply, kMin, kMax, kThreshold, kAddClamped };

// Pixelwise logic over textures, result clamped to [0,1]. Binary ops require
// equal dimensions. threshold_t only used for kThreshold.
inline Texture texture_logic(LogicOp op, const Texture& a, const Texture* b = nullptr,
                             double threshold_t = 0.5) {
  const bool binary = op == LogicOp::kMultiply || op == LogicOp::kMin || op == LogicOp::kMax ||
                      op == LogicOp::kAddClamped;
  if (binary) {
    if (b == nullptr) throw std::invalid_argument("texture_logic: binary op needs two textures");
    if (b->width() != a.width() || b->height() != a.height()) {
      throw std::invalid_argument("texture_logic: dimension mismatch");
    }
  }
  Texture out(a.width(), a.height());
  out.set_world_extent(a.world_min_x(), a.world_min_y(), a.world_max_x(), a.world_max_y());
  for (int py = 0; py < a.height(); ++py) {
    for (int px = 0; px < a.width(); ++px) {
      const double va = a.at(px, py);
      double v = 0.0;
      switch (op) {
        case LogicOp::kInvert: v = 1.0 - va; break;
        case LogicOp::kMultiply: v = va * b->at(px, py); break;
        case LogicOp::kMin: v = std::min(va, b->at(px, py)); break;
        case LogicOp::kMax: v = std::max(va, b->at(px, py)); break;
        case LogicOp::kThreshold: v = va >= threshold_t ? 1.0 : 0.0; break;
        case LogicOp::kAddClamped: v = va + b->at(px, py); break;
      }
      out.set(px, py, v);
    }
  }
  return out;
}

// PGM (P5, maxval 255) interchange; pixel v maps to v/255.
inline void save_pgm(const Texture& t, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_pgm: cannot open " + path);
  out << "P5\n" << t.width() << " " << t.height() << "\n255\n";
  for (int py = 0; py < t.height(); ++py) {
    for (int px = 0; px < t.width(); ++px) {
      const auto byte = static_cast<unsigned char>(
          std::lround(std::clamp(t.at(px, py), 0.0, 1.0) * 255.0));
      out.put(static_cast<char>(byte));
    }
  }
  if (!out) throw std::runtime_error("save_pgm: write failed for " + path);
}

inline Texture load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_pgm: cannot open " + path);
  std::string magic;
  in >> magic;
  if (magic != "P5") throw std::runtime_error("load_pgm: not a P5 file: " + path);
  int w = 0, h = 0, maxval = 0;
  in >> w >> h >> maxval;
  if (!in || w < 1 || h < 1 || maxval != 255) {
    throw std::runtime_error("load_pgm: bad header in " + path);
  }
  in.get();  // single whitespace after maxval
  Texture t(w, h);
  for (int py = 0; py < h; ++py) {
    for (int px = 0; px < w; ++px) {
      const int c = in.get();
      if (c == EOF) throw std::runtime_error("load_pgm: truncated file " + path);
      t.set(px, py, static_cast<double>(c) / 255.0);
    }
  }
  return t;
}

}  // namespace forge
