#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "forge/cloud.hpp"
#include "forge/geometry.hpp"
#include "forge/grass.hpp"
#include "forge/parallel.hpp"
#include "forge/rng.hpp"
#include "forge/terrain.hpp"

namespace forge {

// Labeled local-frame point set, up axis +z, ground contact at local z = 0.
struct Prefab {
  std::string name;
  std::vector<std::pair<Vec3, Label>> points;
};

using PrefabRegistry = std::map<std::string, Prefab>;

struct InstanceParams {
  std::string prefab_name;
  Vec3 position;          // meters; z from height_at
  double spin = 0.0;      // radians around up
  Vec2 twist_axis{1.0, 0.0};  // unit vector in the ground plane
  double twist_angle = 0.0;   // radians tilting the up direction
  double scale = 1.0;
};

struct PlacementSet {
  std::vector<InstanceParams> instances;
  std::string node_id;        // provenance
  std::string seed_lineage;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

inline double parse_double(const std::string& s, const std::string& path, std::size_t line_no) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(path + ": malformed number '" + s + "' at line " +
                             std::to_string(line_no));
  }
}

}  // namespace detail

// Prefab CSV: header then rows `x,y,z,label`.
inline Prefab load_prefab(const std::string& path, std::string name = "") {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_prefab: cannot open " + path);
  Prefab prefab;
  prefab.name = name.empty() ? path : std::move(name);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || line.empty()) continue;  // header
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != 4) {
      throw std::runtime_error(path + ": expected 4 fields at line " + std::to_string(line_no));
    }
    const Vec3 p{detail::parse_double(fields[0], path, line_no),
                 detail::parse_double(fields[1], path, line_no),
                 detail::parse_double(fields[2], path, line_no)};
    const auto label = label_from_name(fields[3]);
    if (!label) {
      throw std::runtime_error(path + ": unknown label '" + fields[3] + "' at line " +
                               std::to_string(line_no));
    }
    prefab.points.emplace_back(p, *label);
  }
  if (prefab.points.empty()) throw std::runtime_error("load_prefab: empty prefab " + path);
  return prefab;
}

inline void save_prefab(const Prefab& prefab, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_prefab: cannot open " + path);
  out << "x,y,z,label\n";
  char buf[128];
  for (const auto& [p, label] : prefab.points) {
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f,", p.x, p.y, p.z);
    out << buf << label_name(label) << "\n";
  }
}

// Self-contained parametric tree: trunk points on a cylinder surface, canopy
// points inside an ellipsoid sitting atop the trunk. Budget split 20/80.
inline Prefab procedural_tree(double trunk_height, double trunk_radius, Vec3 canopy_radii,
                              int point_budget, RngStream stream, std::string name = "tree") {
  if (trunk_height <= 0.0 || trunk_radius <= 0.0 || canopy_radii.x <= 0.0 ||
      canopy_radii.y <= 0.0 || canopy_radii.z <= 0.0) {
    throw std::invalid_argument("procedural_tree: non-positive dimension");
  }
  if (point_budget < 2) throw std::invalid_argument("procedural_tree: budget < 2");

  const int n_trunk = point_budget * 20 / 100;
  const int n_canopy = point_budget - n_trunk;
  Prefab prefab;
  prefab.name = std::move(name);
  prefab.points.reserve(static_cast<std::size_t>(point_budget));
  constexpr double two_pi = 6.283185307179586476925286766559;
  for (int i = 0; i < n_trunk; ++i) {
    const double a = stream.uniform(0.0, two_pi);
    const double z = stream.uniform(0.0, trunk_height);
    prefab.points.emplace_back(
        Vec3{trunk_radius * std::cos(a), trunk_radius * std::sin(a), z}, Label::kTrunk);
  }
  const Vec3 center{0.0, 0.0, trunk_height};
  int placed = 0;
  while (placed < n_canopy) {
    const Vec3 u{stream.uniform(-1.0, 1.0), stream.uniform(-1.0, 1.0), stream.uniform(-1.0, 1.0)};
    if (u.dot(u) > 1.0) continue;
    prefab.points.emplace_back(
        center + Vec3{u.x * canopy_radii.x, u.y * canopy_radii.y, u.z * canopy_radii.z},
        Label::kCanopy);
    ++placed;
  }
  return prefab;
}

// Bush blob: points uniform inside an ellipsoid resting on the ground,
// labeled bushes.
inline Prefab procedural_bush(Vec3 radii, int point_budget, RngStream stream,
                              std::string name = "bush") {
  if (radii.x <= 0.0 || radii.y <= 0.0 || radii.z <= 0.0) {
    throw std::invalid_argument("procedural_bush: non-positive radius");
  }
  if (point_budget < 1) throw std::invalid_argument("procedural_bush: budget < 1");
  Prefab prefab;
  prefab.name = std::move(name);
  prefab.points.reserve(static_cast<std::size_t>(point_budget));
  int placed = 0;
  while (placed < point_budget) {
    const Vec3 u{stream.uniform(-1.0, 1.0), stream.uniform(-1.0, 1.0), stream.uniform(-1.0, 1.0)};
    if (u.dot(u) > 1.0) continue;
    prefab.points.emplace_back(
        Vec3{u.x * radii.x, u.y * radii.y, radii.z + u.z * radii.z}, Label::kBushes);
    ++placed;
  }
  return prefab;
}

// Local point -> world: scale, twist (tilt of the up direction about the
// ground-contact point), spin about up, translate. Labels unchanged.
inline std::vector<std::pair<Vec3, Label>> apply_instance(const Prefab& prefab,
                                                          const InstanceParams& inst) {
  const Vec3 twist_axis{inst.twist_axis.x, inst.twist_axis.y, 0.0};
  const double cs = std::cos(inst.spin);
  const double sn = std::sin(inst.spin);
  std::vector<std::pair<Vec3, Label>> out;
  out.reserve(prefab.points.size());
  for (const auto& [p, label] : prefab.points) {
    Vec3 v = p * inst.scale;
    if (inst.twist_angle != 0.0) v = rotate_axis_angle(v, twist_axis, inst.twist_angle);
    v = {v.x * cs - v.y * sn, v.x * sn + v.y * cs, v.z};
    out.emplace_back(v + inst.position, label);
  }
  return out;
}

// Terrain samples + instanced prefabs + grass blades, concatenated in a
// fixed order (terrain, then placements by node id, then grass) so parallel
// instancing is invisible in the output. Instance ids assigned by
// (placement node id, instance index).
inline LabeledPointCloud assemble_scene(const Heightmap& hm,
                                        const std::vector<PlacementSet>& placements,
                                        const LabeledPointCloud& grass, double terrain_spacing,
                                        Seed seed, const PrefabRegistry& registry) {
  LabeledPointCloud cloud = terrain_points(hm, terrain_spacing, seed);

  std::vector<const PlacementSet*> ordered;
  ordered.reserve(placements.size());
  for (const auto& ps : placements) ordered.push_back(&ps);
  std::sort(ordered.begin(), ordered.end(),
            [](const PlacementSet* a, const PlacementSet* b) { return a->node_id < b->node_id; });

  std::uint32_t next_id = kFirstInstanceId;
  for (const PlacementSet* ps : ordered) {
    for (const InstanceParams& inst : ps->instances) {
      const auto it = registry.find(inst.prefab_name);
      if (it == registry.end()) {
        throw std::runtime_error("assemble_scene: prefab '" + inst.prefab_name +
                                 "' not in registry (placement node " + ps->node_id + ")");
      }
      const auto pts = apply_instance(it->second, inst);
      for (const auto& [p, label] : pts) cloud.records.push_back({p, label, next_id});
      ++next_id;
    }
  }

  cloud.records.insert(cloud.records.end(), grass.records.begin(), grass.records.end());
  return cloud;
}

// Canonical CSV: `x,y,z,label,instance_id`, 6 fractional digits, LF endings,
// lowercase labels, no spaces.
inline void export_csv(const LabeledPointCloud& cloud, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("export_csv: cannot open " + path);
  out << "x,y,z,label,instance_id\n";
  char buf[160];
  for (const auto& r : cloud.records) {
    const int n = std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f,%s,%u\n", r.position.x,
                                r.position.y, r.position.z,
                                std::string(label_name(r.label)).c_str(), r.instance_id);
    out.write(buf, n);
  }
  if (!out) throw std::runtime_error("export_csv: write failed for " + path);
}

inline LabeledPointCloud import_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("import_csv: cannot open " + path);
  LabeledPointCloud cloud;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != 5) {
      throw std::runtime_error(path + ": expected 5 fields at line " + std::to_string(line_no));
    }
    PointRecord r;
    r.position = {detail::parse_double(fields[0], path, line_no),
                  detail::parse_double(fields[1], path, line_no),
                  detail::parse_double(fields[2], path, line_no)};
    const auto label = label_from_name(fields[3]);
    if (!label) {
      throw std::runtime_error(path + ": unknown label '" + fields[3] + "' at line " +
                               std::to_string(line_no));
    }
    r.label = *label;
    r.instance_id = static_cast<std::uint32_t>(
        detail::parse_double(fields[4], path, line_no));
    cloud.records.push_back(r);
  }
  return cloud;
}

// Secondary export for viewer inspection: binary little-endian PLY with a
// per-vertex uchar label.
inline void export_ply(const LabeledPointCloud& cloud, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("export_ply: cannot open " + path);
  out << "ply\nformat binary_little_endian 1.0\n"
      << "element vertex " << cloud.records.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\n"
      << "property uchar label\nend_header\n";
  for (const auto& r : cloud.records) {
    const float xyz[3] = {static_cast<float>(r.position.x), static_cast<float>(r.position.y),
                          static_cast<float>(r.position.z)};
    out.write(reinterpret_cast<const char*>(xyz), 12);
    const auto label = static_cast<unsigned char>(r.label);
    out.write(reinterpret_cast<const char*>(&label), 1);
  }
  if (!out) throw std::runtime_error("export_ply: write failed for " + path);
}

}  // namespace forge
