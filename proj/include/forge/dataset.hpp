#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "forge/cloud.hpp"
#include "forge/geometry.hpp"
#include "forge/rng.hpp"
#include "forge/scene.hpp"
#include "forge/sensor.hpp"

namespace forge {

// Training categories, codes 0-3.
enum class Category : std::uint8_t {
  kTerrain = 0,
  kTrunk = 1,
  kCanopy = 2,
  kUnderstorey = 3,
};

inline constexpr int kCategoryCount = 4;

inline constexpr std::array<std::string_view, kCategoryCount> kCategoryNames = {
    "terrain", "trunk", "canopy", "understorey"};

inline std::string_view category_name(Category c) {
  return kCategoryNames[static_cast<std::size_t>(c)];
}

inline std::optional<Category> category_from_name(std::string_view name) {
  for (int i = 0; i < kCategoryCount; ++i) {
    if (kCategoryNames[static_cast<std::size_t>(i)] == name) return static_cast<Category>(i);
  }
  return std::nullopt;
}

// Total map from the 9 scene labels onto the 4 training categories.
struct CategoryMap {
  std::array<Category, kLabelCount> mapping;

  Category operator()(Label l) const { return mapping[static_cast<std::size_t>(l)]; }

  static CategoryMap defaults() {
    CategoryMap m{};
    m.mapping[static_cast<std::size_t>(Label::kTerrain)] = Category::kTerrain;
    m.mapping[static_cast<std::size_t>(Label::kTrunk)] = Category::kTrunk;
    m.mapping[static_cast<std::size_t>(Label::kCanopy)] = Category::kCanopy;
    m.mapping[static_cast<std::size_t>(Label::kBranches)] = Category::kCanopy;
    m.mapping[static_cast<std::size_t>(Label::kBushes)] = Category::kUnderstorey;
    m.mapping[static_cast<std::size_t>(Label::kUnderstorey)] = Category::kUnderstorey;
    m.mapping[static_cast<std::size_t>(Label::kGrass)] = Category::kUnderstorey;
    m.mapping[static_cast<std::size_t>(Label::kCactus)] = Category::kUnderstorey;
    m.mapping[static_cast<std::size_t>(Label::kDeadwood)] = Category::kUnderstorey;
    return m;
  }
};

struct KmeansResult {
  std::vector<int> assignments;
  std::vector<Vec2> centroids;
  std::vector<double> inertia_history;
};

// Lloyd's algorithm on (x, y) with k-means++ initialization. Empty clusters
// are re-seeded from the point farthest from its centroid. Inertia must be
// non-increasing across regular iterations.
inline KmeansResult kmeans_xy(const LabeledPointCloud& cloud, int k, int max_iter, double tol,
                              RngStream& stream) {
  const std::size_t n = cloud.size();
  if (k < 1 || static_cast<std::size_t>(k) > n) {
    throw std::invalid_argument("kmeans_xy: need 1 <= k <= N");
  }
  auto xy = [&](std::size_t i) {
    return Vec2{cloud.records[i].position.x, cloud.records[i].position.y};
  };

  // k-means++ seeding.
  std::vector<Vec2> centroids;
  centroids.reserve(static_cast<std::size_t>(k));
  centroids.push_back(xy(stream.uniform_index(n)));
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  while (centroids.size() < static_cast<std::size_t>(k)) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 diff = xy(i) - centroids.back();
      d2[i] = std::min(d2[i], diff.dot(diff));
      total += d2[i];
    }
    if (total <= 0.0) {
      centroids.push_back(xy(stream.uniform_index(n)));
      continue;
    }
    double target = stream.uniform01() * total;
    std::size_t chosen = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      target -= d2[i];
      if (target <= 0.0) {
        chosen = i;
        break;
      }
    }
    centroids.push_back(xy(chosen));
  }

  KmeansResult result;
  result.assignments.assign(n, 0);
  double prev_inertia = std::numeric_limits<double>::infinity();
  bool reseeded_last = false;
  for (int iter = 0; iter < max_iter; ++iter) {
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int best_c = 0;
      for (int c = 0; c < k; ++c) {
        const Vec2 diff = xy(i) - centroids[static_cast<std::size_t>(c)];
        const double d = diff.dot(diff);
        if (d < best) {
          best = d;
          best_c = c;
        }
      }
      result.assignments[i] = best_c;
      inertia += best;
    }
    if (!reseeded_last && inertia > prev_inertia * (1.0 + 1e-12) + 1e-12) {
      throw std::logic_error("kmeans_xy: inertia increased");
    }
    result.inertia_history.push_back(inertia);

    std::vector<Vec2> sums(static_cast<std::size_t>(k));
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(result.assignments[i]);
      sums[c] = sums[c] + xy(i);
      ++counts[c];
    }
    double max_move = 0.0;
    reseeded_last = false;
    for (int c = 0; c < k; ++c) {
      const auto cc = static_cast<std::size_t>(c);
      if (counts[cc] == 0) {
        // Re-seed from the point farthest from its assigned centroid.
        double far_d = -1.0;
        std::size_t far_i = 0;
        for (std::size_t i = 0; i < n; ++i) {
          const Vec2 diff = xy(i) - centroids[static_cast<std::size_t>(result.assignments[i])];
          const double d = diff.dot(diff);
          if (d > far_d) {
            far_d = d;
            far_i = i;
          }
        }
        centroids[cc] = xy(far_i);
        reseeded_last = true;
        max_move = std::numeric_limits<double>::infinity();
        continue;
      }
      const Vec2 updated = sums[cc] * (1.0 / static_cast<double>(counts[cc]));
      max_move = std::max(max_move, (updated - centroids[cc]).norm());
      centroids[cc] = updated;
    }
    prev_inertia = result.inertia_history.back();
    if (max_move < tol) break;
  }
  result.centroids = std::move(centroids);
  return result;
}

struct Subcloud {
  std::vector<Vec3> points;
  std::vector<Category> categories;
  std::vector<std::size_t> source_indices;  // into the source cloud
  int cluster_id = 0;
  Vec3 norm_centroid;      // normalization record
  double norm_scale = 1.0;
  bool normalized = false;
};

// xy K-means partition into roughly target-size chunks: oversized clusters
// are randomly subsampled, clusters below target/4 discarded.
inline std::vector<Subcloud> make_subclouds(const LabeledPointCloud& cloud,
                                            std::size_t target_size, RngStream& stream,
                                            const CategoryMap& map = CategoryMap::defaults()) {
  if (target_size < 1) throw std::invalid_argument("make_subclouds: target_size < 1");
  if (cloud.empty()) return {};
  const std::size_t n = cloud.size();
  const int k = static_cast<int>((n + target_size - 1) / target_size);
  RngStream km_stream = stream.derive("kmeans");
  const auto km = kmeans_xy(cloud, k, 100, 1e-6, km_stream);

  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < n; ++i) {
    members[static_cast<std::size_t>(km.assignments[i])].push_back(i);
  }

  std::vector<Subcloud> out;
  for (int c = 0; c < k; ++c) {
    auto idx = members[static_cast<std::size_t>(c)];
    if (idx.size() > target_size) {
      // Partial Fisher-Yates from the cluster's own stream.
      RngStream s = stream.derive("subsample").derive(static_cast<std::uint64_t>(c));
      for (std::size_t i = 0; i < target_size; ++i) {
        const std::size_t j = i + s.uniform_index(idx.size() - i);
        std::swap(idx[i], idx[j]);
      }
      idx.resize(target_size);
      std::sort(idx.begin(), idx.end());
    } else if (idx.size() * 4 <= target_size) {
      continue;  // too small to train on
    }
    Subcloud sc;
    sc.cluster_id = c;
    sc.points.reserve(idx.size());
    for (std::size_t i : idx) {
      sc.points.push_back(cloud.records[i].position);
      sc.categories.push_back(map(cloud.records[i].label));
    }
    sc.source_indices = std::move(idx);
    out.push_back(std::move(sc));
  }
  return out;
}

// Centroid-subtract then unit-sphere scale; both recorded for inversion.
inline Subcloud normalize_subcloud(Subcloud sc) {
  if (sc.points.empty()) throw std::invalid_argument("normalize_subcloud: empty subcloud");
  Vec3 centroid;
  for (const Vec3& p : sc.points) centroid = centroid + p;
  centroid = centroid * (1.0 / static_cast<double>(sc.points.size()));
  double max_norm = 0.0;
  for (Vec3& p : sc.points) {
    p = p - centroid;
    max_norm = std::max(max_norm, p.norm());
  }
  if (max_norm > 0.0) {
    for (Vec3& p : sc.points) p = p * (1.0 / max_norm);
  }
  sc.norm_centroid = centroid;
  sc.norm_scale = max_norm > 0.0 ? max_norm : 1.0;
  sc.normalized = true;
  return sc;
}

inline Subcloud denormalize_subcloud(Subcloud sc) {
  if (!sc.normalized) return sc;
  for (Vec3& p : sc.points) p = p * sc.norm_scale + sc.norm_centroid;
  sc.normalized = false;
  return sc;
}

inline void save_subcloud_csv(const Subcloud& sc, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_subcloud_csv: cannot open " + path);
  out << "x,y,z,category\n";
  char buf[160];
  for (std::size_t i = 0; i < sc.points.size(); ++i) {
    const int len = std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f,", sc.points[i].x,
                                  sc.points[i].y, sc.points[i].z);
    out.write(buf, len);
    out << category_name(sc.categories[i]) << "\n";
  }
  if (!out) throw std::runtime_error("save_subcloud_csv: write failed for " + path);
}

enum class DatasetMode { kLidar, kCamera };

struct DatasetConfig {
  DatasetMode mode = DatasetMode::kLidar;
  std::size_t target_size = 4096;
  double noise_sigma = 0.01;       // meters
  double occlusion_gamma = 2.0;
  double camera_altitude_margin = 30.0;  // above the cloud's max z
  double train_ratio = 0.8;
  Seed seed;
  CategoryMap category_map = CategoryMap::defaults();
};

// Builds the training directory tree from scene CSVs: LiDAR-like is
// label-map + noise + subclouds; Camera-like occludes first. Split is by
// scene, never by subcloud.
inline nlohmann::json build_dataset(const std::vector<std::string>& scene_paths,
                                    const DatasetConfig& cfg, const std::string& out_dir) {
  if (scene_paths.empty()) throw std::invalid_argument("build_dataset: no scenes");
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(out_dir) / "train");
  fs::create_directories(fs::path(out_dir) / "val");

  const std::size_t n_train = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(cfg.train_ratio *
                                               static_cast<double>(scene_paths.size()))));

  nlohmann::json manifest;
  manifest["seed"] = cfg.seed.value;
  manifest["mode"] = cfg.mode == DatasetMode::kLidar ? "lidar" : "camera";
  manifest["target_size"] = cfg.target_size;
  manifest["noise_sigma"] = cfg.noise_sigma;
  manifest["occlusion_gamma"] = cfg.occlusion_gamma;
  manifest["camera_altitude_margin"] = cfg.camera_altitude_margin;
  manifest["train_ratio"] = cfg.train_ratio;
  {
    nlohmann::json jmap;
    for (int l = 0; l < kLabelCount; ++l) {
      jmap[std::string(label_name(static_cast<Label>(l)))] =
          std::string(category_name(cfg.category_map(static_cast<Label>(l))));
    }
    manifest["category_map"] = jmap;
  }
  manifest["scenes"] = nlohmann::json::array();
  manifest["subclouds"] = nlohmann::json::array();

  const RngStream root(cfg.seed);
  for (std::size_t si = 0; si < scene_paths.size(); ++si) {
    const std::string& path = scene_paths[si];
    const std::string scene_name = fs::path(path).stem().string();
    const std::string split = si < n_train ? "train" : "val";
    RngStream scene_stream = root.derive("scene").derive(scene_name);

    LabeledPointCloud cloud = import_csv(path);
    if (cfg.mode == DatasetMode::kCamera && !cloud.empty()) {
      double max_z = cloud.records.front().position.z;
      Aabb box{cloud.records.front().position, cloud.records.front().position};
      for (const auto& r : cloud.records) {
        box.expand(r.position);
        max_z = std::max(max_z, r.position.z);
      }
      OcclusionParams op;
      op.gamma = cfg.occlusion_gamma;
      op.viewpoints = {{(box.min.x + box.max.x) / 2.0, (box.min.y + box.max.y) / 2.0,
                        max_z + cfg.camera_altitude_margin}};
      cloud = occlude(cloud, op);
    }
    RngStream noise_stream = scene_stream.derive("noise");
    cloud = add_noise(cloud, NoiseParams{cfg.noise_sigma}, noise_stream);

    RngStream part_stream = scene_stream.derive("partition");
    const auto subclouds = make_subclouds(cloud, cfg.target_size, part_stream, cfg.category_map);

    nlohmann::json jscene;
    // Record the filename only so the manifest does not depend on where the
    // output tree happens to live (reruns must be byte-identical).
    jscene["path"] = fs::path(path).filename().string();
    jscene["name"] = scene_name;
    jscene["split"] = split;
    jscene["points"] = cloud.size();
    jscene["subclouds"] = subclouds.size();
    manifest["scenes"].push_back(jscene);

    for (const auto& sc : subclouds) {
      const std::string file =
          split + "/" + scene_name + "_" + std::to_string(sc.cluster_id) + ".csv";
      save_subcloud_csv(sc, (fs::path(out_dir) / file).string());
      std::array<std::size_t, kCategoryCount> histogram{};
      for (Category c : sc.categories) ++histogram[static_cast<std::size_t>(c)];
      nlohmann::json jsc;
      jsc["file"] = file;
      jsc["scene"] = scene_name;
      jsc["cluster"] = sc.cluster_id;
      jsc["count"] = sc.points.size();
      nlohmann::json jh;
      for (int c = 0; c < kCategoryCount; ++c) {
        jh[std::string(category_name(static_cast<Category>(c)))] =
            histogram[static_cast<std::size_t>(c)];
      }
      jsc["label_histogram"] = jh;
      manifest["subclouds"].push_back(jsc);
    }
  }

  std::ofstream mf((fs::path(out_dir) / "manifest.json").string(), std::ios::binary);
  mf << manifest.dump(2) << "\n";
  if (!mf) throw std::runtime_error("build_dataset: cannot write manifest");
  return manifest;
}

}  // namespace forge
