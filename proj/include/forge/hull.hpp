#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <unordered_map>
#include <vector>

#include "forge/geometry.hpp"

namespace forge {
namespace detail {

inline std::uint64_t pack_edge(std::uint32_t a, std::uint32_t b) {
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

struct HullFace {
  std::uint32_t v[3];
  Vec3 normal;    // unit, outward
  double offset;  // normal . v[0]
  std::vector<std::uint32_t> outside;
  bool alive = true;

  double dist(const Vec3& p) const { return normal.dot(p) - offset; }
};

// Andrew monotone chain on points projected into a plane; used for
// degenerate (coplanar) inputs.
inline std::vector<std::size_t> hull_2d_indices(const std::vector<Vec3>& pts, const Vec3& u,
                                                const Vec3& v) {
  std::vector<std::size_t> order(pts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto key = [&](std::size_t i) {
    return std::pair<double, double>{pts[i].dot(u), pts[i].dot(v)};
  };
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
  auto cross = [&](std::size_t o, std::size_t a, std::size_t b) {
    const auto [ox, oy] = key(o);
    const auto [ax, ay] = key(a);
    const auto [bx, by] = key(b);
    return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox);
  };
  std::vector<std::size_t> hull;
  for (std::size_t i : order) {
    while (hull.size() >= 2 && cross(hull[hull.size() - 2], hull.back(), i) <= 0.0) {
      hull.pop_back();
    }
    hull.push_back(i);
  }
  const std::size_t lower = hull.size() + 1;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    while (hull.size() >= lower && cross(hull[hull.size() - 2], hull.back(), *it) <= 0.0) {
      hull.pop_back();
    }
    hull.push_back(*it);
  }
  hull.pop_back();
  return hull;
}

}  // namespace detail

// Indices of the points that are vertices of the 3D convex hull (quickhull).
// Fewer than 4 points, or collinear/coplanar inputs, fall back to returning
// the lower-dimensional hull (all points, segment endpoints, or a 2D hull in
// the degenerate plane).
inline std::vector<std::size_t> convex_hull_3d(const std::vector<Vec3>& pts) {
  const std::size_t n = pts.size();
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  if (n < 4) return all;

  Aabb box{pts[0], pts[0]};
  for (const Vec3& p : pts) box.expand(p);
  const double diag = (box.max - box.min).norm();
  const double eps = std::max(1e-12, diag * 1e-10);

  // Initial simplex: the farthest axis-extreme pair, then the point farthest
  // from that line, then the point farthest from that plane.
  std::size_t extreme[6] = {0, 0, 0, 0, 0, 0};
  for (std::size_t i = 1; i < n; ++i) {
    if (pts[i].x < pts[extreme[0]].x) extreme[0] = i;
    if (pts[i].x > pts[extreme[1]].x) extreme[1] = i;
    if (pts[i].y < pts[extreme[2]].y) extreme[2] = i;
    if (pts[i].y > pts[extreme[3]].y) extreme[3] = i;
    if (pts[i].z < pts[extreme[4]].z) extreme[4] = i;
    if (pts[i].z > pts[extreme[5]].z) extreme[5] = i;
  }
  std::size_t a = 0, b = 0;
  double best = -1.0;
  for (int i = 0; i < 6; ++i) {
    for (int j = i + 1; j < 6; ++j) {
      const double d = (pts[extreme[i]] - pts[extreme[j]]).norm();
      if (d > best) {
        best = d;
        a = extreme[i];
        b = extreme[j];
      }
    }
  }
  if (best <= eps) return {a};  // all points coincide

  const Vec3 ab = pts[b] - pts[a];
  std::size_t c = n;
  best = eps;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = ab.cross(pts[i] - pts[a]).norm() / ab.norm();
    if (d > best) {
      best = d;
      c = i;
    }
  }
  if (c == n) {
    // Collinear: hull is the extreme segment.
    return {std::min(a, b), std::max(a, b)};
  }

  Vec3 plane_n = ab.cross(pts[c] - pts[a]);
  plane_n = plane_n * (1.0 / plane_n.norm());
  std::size_t d_idx = n;
  best = eps;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = std::abs(plane_n.dot(pts[i] - pts[a]));
    if (d > best) {
      best = d;
      d_idx = i;
    }
  }
  if (d_idx == n) {
    // Coplanar: 2D hull in the degenerate plane.
    Vec3 u = ab * (1.0 / ab.norm());
    Vec3 v = plane_n.cross(u);
    return detail::hull_2d_indices(pts, u, v);
  }

  const Vec3 interior = (pts[a] + pts[b] + pts[c] + pts[d_idx]) * 0.25;

  std::vector<detail::HullFace> faces;
  std::unordered_map<std::uint64_t, std::uint32_t> edge_owner;  // directed edge -> face

  auto make_face = [&](std::uint32_t i, std::uint32_t j, std::uint32_t k) -> std::uint32_t {
    detail::HullFace f;
    f.v[0] = i;
    f.v[1] = j;
    f.v[2] = k;
    Vec3 nrm = (pts[j] - pts[i]).cross(pts[k] - pts[i]);
    const double len = nrm.norm();
    nrm = len > 0.0 ? nrm * (1.0 / len) : Vec3{0.0, 0.0, 1.0};
    // Orient outward against the fixed interior point.
    if (nrm.dot(interior - pts[i]) > 0.0) {
      std::swap(f.v[1], f.v[2]);
      nrm = nrm * -1.0;
    }
    f.normal = nrm;
    f.offset = nrm.dot(pts[f.v[0]]);
    const auto id = static_cast<std::uint32_t>(faces.size());
    for (int e = 0; e < 3; ++e) {
      edge_owner[detail::pack_edge(f.v[e], f.v[(e + 1) % 3])] = id;
    }
    faces.push_back(std::move(f));
    return id;
  };

  const auto ai = static_cast<std::uint32_t>(a);
  const auto bi = static_cast<std::uint32_t>(b);
  const auto ci = static_cast<std::uint32_t>(c);
  const auto di = static_cast<std::uint32_t>(d_idx);
  make_face(ai, bi, ci);
  make_face(ai, bi, di);
  make_face(ai, ci, di);
  make_face(bi, ci, di);

  // Distribute points to the first face they are outside of.
  std::vector<std::uint32_t> pending;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == a || i == b || i == c || i == d_idx) continue;
    pending.push_back(static_cast<std::uint32_t>(i));
  }
  auto assign = [&](const std::vector<std::uint32_t>& points,
                    const std::vector<std::uint32_t>& candidates) {
    for (std::uint32_t p : points) {
      for (std::uint32_t fid : candidates) {
        if (!faces[fid].alive) continue;
        if (faces[fid].dist(pts[p]) > eps) {
          faces[fid].outside.push_back(p);
          break;
        }
      }
    }
  };
  assign(pending, {0, 1, 2, 3});

  std::vector<std::uint32_t> work{0, 1, 2, 3};
  while (!work.empty()) {
    const std::uint32_t fid = work.back();
    work.pop_back();
    if (!faces[fid].alive || faces[fid].outside.empty()) continue;

    // Farthest outside point becomes the next apex.
    double far_d = -1.0;
    std::uint32_t apex = faces[fid].outside.front();
    for (std::uint32_t p : faces[fid].outside) {
      const double d = faces[fid].dist(pts[p]);
      if (d > far_d) {
        far_d = d;
        apex = p;
      }
    }

    // Visible set by BFS over edge adjacency.
    std::vector<std::uint32_t> visible{fid};
    std::set<std::uint32_t> visited{fid};
    std::vector<std::uint32_t> queue{fid};
    while (!queue.empty()) {
      const std::uint32_t cur = queue.back();
      queue.pop_back();
      for (int e = 0; e < 3; ++e) {
        const auto it = edge_owner.find(
            detail::pack_edge(faces[cur].v[(e + 1) % 3], faces[cur].v[e]));
        if (it == edge_owner.end()) continue;
        const std::uint32_t nb = it->second;
        if (!faces[nb].alive || visited.count(nb)) continue;
        if (faces[nb].dist(pts[apex]) > eps) {
          visited.insert(nb);
          visible.push_back(nb);
          queue.push_back(nb);
        }
      }
    }

    // Horizon: directed edges of visible faces whose opposite face is alive
    // and not visible.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> horizon;
    std::vector<std::uint32_t> orphans;
    for (std::uint32_t vf : visible) {
      for (std::uint32_t p : faces[vf].outside) {
        if (p != apex) orphans.push_back(p);
      }
      faces[vf].outside.clear();
      for (int e = 0; e < 3; ++e) {
        const std::uint32_t ea = faces[vf].v[e];
        const std::uint32_t eb = faces[vf].v[(e + 1) % 3];
        const auto it = edge_owner.find(detail::pack_edge(eb, ea));
        const bool open =
            it == edge_owner.end() || !faces[it->second].alive || !visited.count(it->second);
        if (open) horizon.emplace_back(ea, eb);
      }
    }
    for (std::uint32_t vf : visible) {
      faces[vf].alive = false;
      for (int e = 0; e < 3; ++e) {
        const auto key = detail::pack_edge(faces[vf].v[e], faces[vf].v[(e + 1) % 3]);
        const auto it = edge_owner.find(key);
        if (it != edge_owner.end() && it->second == vf) edge_owner.erase(it);
      }
    }

    std::vector<std::uint32_t> fresh;
    for (const auto& [ea, eb] : horizon) {
      fresh.push_back(make_face(ea, eb, apex));
    }
    assign(orphans, fresh);
    for (std::uint32_t nf : fresh) {
      if (!faces[nf].outside.empty()) work.push_back(nf);
    }
  }

  std::set<std::size_t> hull;
  for (const auto& f : faces) {
    if (!f.alive) continue;
    hull.insert(f.v[0]);
    hull.insert(f.v[1]);
    hull.insert(f.v[2]);
  }
  return {hull.begin(), hull.end()};
}

}  // namespace forge
