#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "forge/dataset.hpp"
#include "forge/grass.hpp"
#include "forge/pipeline.hpp"
#include "forge/scene.hpp"
#include "forge/terrain.hpp"
#include "forge/texture.hpp"

namespace forge {

// Whole-scene configuration document. Every default is written back into the
// emitted manifest so a scene directory is self-describing.
struct SceneConfig {
  Seed seed;
  TerrainParams terrain;
  double terrain_spacing = 0.75;
  nlohmann::json pipeline_doc;   // {"nodes":[...]}
  GrassParams grass;
  nlohmann::json grass_density;  // noise-source params for the density texture
  int grass_texture_size = 64;
  nlohmann::json prefab_specs;   // array
};

namespace detail {

inline TerrainParams terrain_from_json(const nlohmann::json& j) {
  TerrainParams p;
  p.width = j.value("width", p.width);
  p.depth = j.value("depth", p.depth);
  p.grid_resolution = j.value("grid_resolution", p.grid_resolution);
  p.octaves = j.value("octaves", p.octaves);
  p.lacunarity = j.value("lacunarity", p.lacunarity);
  p.persistence = j.value("persistence", p.persistence);
  p.base_frequency = j.value("base_frequency", p.base_frequency);
  p.amplitude = j.value("amplitude", p.amplitude);
  p.validate();
  return p;
}

inline GrassParams grass_from_json(const nlohmann::json& j) {
  GrassParams g;
  g.tile_size = j.value("tile_size", g.tile_size);
  g.max_per_tile = j.value("max_per_tile", g.max_per_tile);
  g.segments = j.value("segments", g.segments);
  g.blade_height_min = j.value("blade_height_min", g.blade_height_min);
  g.blade_height_max = j.value("blade_height_max", g.blade_height_max);
  g.blade_width_min = j.value("blade_width_min", g.blade_width_min);
  g.blade_width_max = j.value("blade_width_max", g.blade_width_max);
  g.jitter = j.value("jitter", g.jitter);
  g.max_bend = j.value("max_bend", g.max_bend);
  g.scale_min = j.value("scale_min", g.scale_min);
  g.scale_max = j.value("scale_max", g.scale_max);
  g.validate();
  return g;
}

}  // namespace detail

inline SceneConfig parse_scene_config(const nlohmann::json& doc) {
  for (const auto& [key, value] : doc.items()) {
    (void)value;
    if (key != "seed" && key != "terrain" && key != "terrain_spacing" && key != "pipeline" &&
        key != "grass" && key != "grass_density" && key != "grass_texture_size" &&
        key != "prefabs") {
      throw std::runtime_error("scene config: unknown key '" + key + "'");
    }
  }
  SceneConfig cfg;
  cfg.seed.value = doc.value("seed", 0ULL);
  cfg.terrain = detail::terrain_from_json(doc.value("terrain", nlohmann::json::object()));
  cfg.terrain_spacing = doc.value("terrain_spacing", cfg.terrain_spacing);
  if (cfg.terrain_spacing <= 0.0) throw std::runtime_error("scene config: terrain_spacing <= 0");
  cfg.pipeline_doc = doc.value("pipeline", nlohmann::json{{"nodes", nlohmann::json::array()}});
  cfg.grass = detail::grass_from_json(doc.value("grass", nlohmann::json::object()));
  cfg.grass_density = doc.value("grass_density", nlohmann::json::object());
  cfg.grass_texture_size = doc.value("grass_texture_size", cfg.grass_texture_size);
  cfg.prefab_specs = doc.value("prefabs", nlohmann::json::array());
  return cfg;
}

inline PrefabRegistry build_prefabs(const nlohmann::json& specs, Seed seed) {
  PrefabRegistry registry;
  for (const auto& js : specs) {
    const std::string name = js.at("name").get<std::string>();
    const std::string type = js.value("type", "procedural_tree");
    if (type == "file") {
      registry[name] = load_prefab(js.at("path").get<std::string>(), name);
    } else if (type == "procedural_tree") {
      const auto radii = js.value("canopy_radii", std::vector<double>{2.0, 2.0, 2.5});
      RngStream stream = RngStream(seed).derive("prefab").derive(name);
      registry[name] = procedural_tree(
          js.value("trunk_height", 6.0), js.value("trunk_radius", 0.2),
          Vec3{radii.at(0), radii.at(1), radii.at(2)}, js.value("point_budget", 4096),
          stream, name);
    } else if (type == "procedural_bush") {
      const auto radii = js.value("radii", std::vector<double>{0.8, 0.8, 0.6});
      RngStream stream = RngStream(seed).derive("prefab").derive(name);
      registry[name] = procedural_bush(Vec3{radii.at(0), radii.at(1), radii.at(2)},
                                       js.value("point_budget", 256), stream, name);
    } else {
      throw std::runtime_error("scene config: unknown prefab type '" + type + "'");
    }
  }
  return registry;
}

struct SceneArtifacts {
  Heightmap heightmap;
  std::vector<PlacementSet> placements;
  LabeledPointCloud cloud;
};

// Runs the full chain terrain -> pipeline -> grass -> assembly in memory.
inline SceneArtifacts build_scene(const SceneConfig& cfg) {
  SceneArtifacts art;
  art.heightmap = generate_heightmap(cfg.terrain, cfg.seed);

  const PrefabRegistry registry = build_prefabs(cfg.prefab_specs, cfg.seed);
  PipelineGraph graph;
  if (cfg.pipeline_doc.contains("nodes") && !cfg.pipeline_doc["nodes"].empty()) {
    graph = parse_pipeline(cfg.pipeline_doc.dump());
    const auto errors = validate(graph);
    if (!errors.empty()) throw std::runtime_error("scene config: " + errors.front());
    art.placements = evaluate(graph, art.heightmap, cfg.seed, registry);
  }

  LabeledPointCloud grass;
  if (cfg.grass.max_per_tile > 0) {
    TerrainParams noise = detail::terrain_from_json(cfg.grass_density);
    noise.width = cfg.terrain.width;
    noise.depth = cfg.terrain.depth;
    const Seed density_seed{detail::mix(cfg.seed.value, detail::hash_label("grass_density"))};
    Texture density = texture_from_noise(cfg.grass_texture_size, cfg.grass_texture_size, noise,
                                         density_seed);
    const auto anchors = sample_anchors(density, cfg.grass.tile_size, cfg.grass.max_per_tile);
    grass = grass_cloud(anchors, density, art.heightmap, cfg.grass, RngStream(cfg.seed));
  }

  art.cloud = assemble_scene(art.heightmap, art.placements, grass, cfg.terrain_spacing, cfg.seed,
                             registry);
  return art;
}

inline void save_placements_csv(const std::vector<PlacementSet>& placements,
                                const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_placements_csv: cannot open " + path);
  out << "node_id,prefab,x,y,z,spin,twist_ax,twist_ay,twist_angle,scale\n";
  char buf[320];
  for (const auto& ps : placements) {
    for (const auto& inst : ps.instances) {
      const int n = std::snprintf(buf, sizeof(buf),
                                  "%s,%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                                  ps.node_id.c_str(), inst.prefab_name.c_str(), inst.position.x,
                                  inst.position.y, inst.position.z, inst.spin, inst.twist_axis.x,
                                  inst.twist_axis.y, inst.twist_angle, inst.scale);
      out.write(buf, n);
    }
  }
}

// Scene config used by `forge demo`: a small forest with two vegetation
// pipelines (trees with texture-modulated spacing and a spawn-probability
// clearing mask, bushes with fixed-radius sampling) plus grass.
inline nlohmann::json default_demo_config(std::uint64_t seed) {
  nlohmann::json cfg;
  cfg["seed"] = seed;
  cfg["terrain"] = {{"width", 60.0},      {"depth", 60.0},       {"grid_resolution", 97},
                    {"octaves", 5},       {"lacunarity", 2.0},   {"persistence", 0.5},
                    {"base_frequency", 0.01}, {"amplitude", 8.0}};
  cfg["terrain_spacing"] = 0.75;
  cfg["pipeline"] = {
      {"nodes",
       {
           {{"id", "tree_density"},
            {"kind", "source"},
            {"params",
             {{"type", "noise"}, {"width", 64}, {"height", 64}, {"octaves", 3},
              {"base_frequency", 0.03}, {"amplitude", 1.0}}}},
           {{"id", "tree_radius"},
            {"kind", "source"},
            {"params",
             {{"type", "noise"}, {"width", 64}, {"height", 64}, {"octaves", 2},
              {"base_frequency", 0.02}, {"amplitude", 1.0}}}},
           {{"id", "clearing_mask"},
            {"kind", "source"},
            {"params",
             {{"type", "voronoi"}, {"width", 64}, {"height", 64}, {"sites", 6},
              {"mode", "distance"}}}},
           {{"id", "spawn_prob"},
            {"kind", "logic"},
            {"params", {{"op", "threshold"}, {"threshold", 0.25}}},
            {"inputs", {"clearing_mask"}}},
           {{"id", "tree_samples"},
            {"kind", "sampling"},
            {"params", {{"r_min", 4.0}, {"r_max", 8.0}, {"k", 30}}},
            {"inputs", {"tree_density", "tree_radius"}}},
           {{"id", "tree_place"},
            {"kind", "placement"},
            {"params",
             {{"prefab", "tree"}, {"max_twist", 0.15},
              {"scale_range", {0.8, 1.25}}}},
            {"inputs", {"tree_samples", "spawn_prob"}}},
           {{"id", "bush_density"},
            {"kind", "source"},
            {"params",
             {{"type", "noise"}, {"width", 64}, {"height", 64}, {"octaves", 2},
              {"base_frequency", 0.05}, {"amplitude", 1.0}}}},
           {{"id", "bush_samples"},
            {"kind", "sampling"},
            {"params", {{"r", 3.0}, {"k", 30}}},
            {"inputs", {"bush_density"}}},
           {{"id", "bush_place"},
            {"kind", "placement"},
            {"params",
             {{"prefab", "bush"}, {"max_twist", 0.2}, {"scale_range", {0.6, 1.1}}}},
            {"inputs", {"bush_samples"}}},
       }}};
  cfg["grass"] = {{"tile_size", 4}, {"max_per_tile", 24}, {"segments", 4}};
  cfg["grass_density"] = {{"octaves", 3}, {"base_frequency", 0.04}, {"amplitude", 1.0}};
  cfg["grass_texture_size"] = 64;
  cfg["prefabs"] = nlohmann::json::array(
      {{{"name", "tree"},
        {"type", "procedural_tree"},
        {"trunk_height", 6.0},
        {"trunk_radius", 0.2},
        {"canopy_radii", {2.5, 2.5, 2.0}},
        {"point_budget", 1024}},
       {{"name", "bush"},
        {"type", "procedural_bush"},
        {"radii", {0.8, 0.8, 0.6}},
        {"point_budget", 256}}});
  return cfg;
}

}  // namespace forge
