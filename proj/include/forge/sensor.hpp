#pragma once

#include <algorithm>
#include <cmath>
#include <mutex>
#include <set>
#include <stdexcept>
#include <vector>

#include "forge/cloud.hpp"
#include "forge/geometry.hpp"
#include "forge/hull.hpp"
#include "forge/parallel.hpp"
#include "forge/rng.hpp"

namespace forge {

struct OcclusionParams {
  double gamma = 2.0;            // flip radius R = d_max * 10^gamma
  std::vector<Vec3> viewpoints;
};

struct NoiseParams {
  double sigma = 0.01;  // meters per axis, zero-mean Gaussian
};

// Hidden-point removal: spherical flip about the viewpoint, then the convex
// hull of the flipped set plus the origin; hull vertices are the visible
// points. Returns indices into the cloud, sorted.
inline std::vector<std::size_t> hpr_visible(const LabeledPointCloud& cloud, const Vec3& viewpoint,
                                            double gamma) {
  if (cloud.empty()) return {};
  const std::size_t n = cloud.size();
  std::vector<Vec3> flipped(n + 1);
  double d_max = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    d_max = std::max(d_max, (cloud.records[i].position - viewpoint).norm());
  }
  if (d_max == 0.0) throw std::invalid_argument("hpr_visible: viewpoint coincides with a point");
  const double radius = d_max * std::pow(10.0, gamma);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 p = cloud.records[i].position - viewpoint;
    const double len = p.norm();
    if (len == 0.0) throw std::invalid_argument("hpr_visible: viewpoint coincides with a point");
    flipped[i] = p + p * (2.0 * (radius - len) / len);
  }
  flipped[n] = {0.0, 0.0, 0.0};  // the viewpoint itself

  std::vector<std::size_t> visible;
  for (std::size_t idx : convex_hull_3d(flipped)) {
    if (idx < n) visible.push_back(idx);  // drop the origin
  }
  std::sort(visible.begin(), visible.end());
  return visible;
}

// Serpentine (lawnmower) viewpoint grid over the extent at a fixed altitude.
inline std::vector<Vec3> survey_viewpoints(const Aabb& extent, double altitude, double spacing_x,
                                           double spacing_y) {
  if (spacing_x <= 0.0 || spacing_y <= 0.0) {
    throw std::invalid_argument("survey_viewpoints: non-positive spacing");
  }
  const int nx = std::max(1, static_cast<int>(std::floor((extent.max.x - extent.min.x) / spacing_x)) + 1);
  const int ny = std::max(1, static_cast<int>(std::floor((extent.max.y - extent.min.y) / spacing_y)) + 1);
  std::vector<Vec3> out;
  out.reserve(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny));
  for (int iy = 0; iy < ny; ++iy) {
    for (int k = 0; k < nx; ++k) {
      const int ix = (iy % 2 == 0) ? k : nx - 1 - k;  // serpentine ordering
      out.push_back({extent.min.x + static_cast<double>(ix) * spacing_x,
                     extent.min.y + static_cast<double>(iy) * spacing_y, altitude});
    }
  }
  return out;
}

// Union of per-viewpoint HPR visibility, original order and labels kept.
inline LabeledPointCloud occlude(const LabeledPointCloud& cloud, const OcclusionParams& params) {
  if (params.viewpoints.empty()) throw std::invalid_argument("occlude: no viewpoints");
  std::vector<char> keep(cloud.size(), 0);
  std::mutex merge_mutex;
  parallel_for(0, params.viewpoints.size(), [&](std::size_t vi) {
    const auto visible = hpr_visible(cloud, params.viewpoints[vi], params.gamma);
    const std::lock_guard<std::mutex> lock(merge_mutex);
    for (std::size_t idx : visible) keep[idx] = 1;
  });
  LabeledPointCloud out;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (keep[i]) out.records.push_back(cloud.records[i]);
  }
  return out;
}

// Zero-mean isotropic Gaussian jitter per coordinate; labels unchanged.
inline LabeledPointCloud add_noise(const LabeledPointCloud& cloud, const NoiseParams& params,
                                   RngStream& stream) {
  if (params.sigma < 0.0) throw std::invalid_argument("add_noise: sigma < 0");
  LabeledPointCloud out = cloud;
  if (params.sigma == 0.0) return out;
  for (auto& r : out.records) {
    r.position.x += stream.normal(0.0, params.sigma);
    r.position.y += stream.normal(0.0, params.sigma);
    r.position.z += stream.normal(0.0, params.sigma);
  }
  return out;
}

}  // namespace forge
