// forge: deterministic synthetic forest point-cloud toolkit CLI.
//
// Subcommand per pipeline stage so every intermediate artifact (heightmap,
// textures, placements, scene cloud, dataset) is an inspectable file. All
// randomness flows from --seed; structured logs go to stderr, data to files.

#include <glob.h>

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "forge/config.hpp"
#include "forge/dataset.hpp"
#include "forge/grass.hpp"
#include "forge/metrics.hpp"
#include "forge/parallel.hpp"
#include "forge/pipeline.hpp"
#include "forge/scene.hpp"
#include "forge/sensor.hpp"
#include "forge/terrain.hpp"
#include "forge/texture.hpp"

namespace fs = std::filesystem;

namespace {

std::vector<std::string> expand_glob(const std::string& pattern) {
  glob_t g;
  std::vector<std::string> out;
  if (::glob(pattern.c_str(), 0, nullptr, &g) == 0) {
    for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
  }
  ::globfree(&g);
  return out;
}

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  in >> j;
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path);
}

// Registry from an optional prefab-spec JSON file; placement nodes that
// reference prefabs not defined there get a default procedural tree.
forge::PrefabRegistry registry_for_pipeline(const forge::PipelineGraph& graph,
                                            const std::string& prefabs_path, forge::Seed seed) {
  forge::PrefabRegistry registry;
  if (!prefabs_path.empty()) {
    registry = forge::build_prefabs(load_json(prefabs_path), seed);
  }
  for (const auto& node : graph.nodes) {
    if (node.kind != forge::NodeKind::kPlacement || !node.params.contains("prefab")) continue;
    const std::string name = node.params["prefab"].get<std::string>();
    if (registry.count(name)) continue;
    forge::RngStream stream = forge::RngStream(seed).derive("prefab").derive(name);
    registry[name] = forge::procedural_tree(6.0, 0.2, {2.5, 2.5, 2.0}, 4096, stream, name);
  }
  return registry;
}

void run_demo(std::uint64_t seed, const std::string& out_dir, const std::string& mode) {
  const nlohmann::json cfg_json = forge::default_demo_config(seed);
  const forge::SceneConfig cfg = forge::parse_scene_config(cfg_json);

  fs::create_directories(out_dir);
  write_text((fs::path(out_dir) / "config.json").string(), cfg_json.dump(2) + "\n");

  std::cerr << "[demo] building scene (seed " << seed << ")\n";
  const forge::SceneArtifacts art = forge::build_scene(cfg);
  forge::save_heightmap(art.heightmap, (fs::path(out_dir) / "heightmap.bin").string());
  forge::save_placements_csv(art.placements, (fs::path(out_dir) / "placements.csv").string());
  const std::string scene_csv = (fs::path(out_dir) / "scene.csv").string();
  forge::export_csv(art.cloud, scene_csv);
  std::cerr << "[demo] scene cloud: " << art.cloud.size() << " points\n";

  forge::DatasetConfig dcfg;
  dcfg.mode = mode == "camera" ? forge::DatasetMode::kCamera : forge::DatasetMode::kLidar;
  dcfg.seed = cfg.seed;
  const auto manifest =
      forge::build_dataset({scene_csv}, dcfg, (fs::path(out_dir) / "dataset").string());

  nlohmann::json top;
  top["command"] = "demo";
  top["seed"] = seed;
  top["mode"] = mode;
  top["scene_points"] = art.cloud.size();
  top["files"] = {"config.json", "heightmap.bin", "placements.csv", "scene.csv",
                  "dataset/manifest.json"};
  write_text((fs::path(out_dir) / "manifest.json").string(), top.dump(2) + "\n");
  std::cerr << "[demo] dataset subclouds: " << manifest["subclouds"].size() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deterministic synthetic forest point-cloud toolkit"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  int threads = 0;
  app.add_option("--threads", threads, "worker thread cap (0 = all cores)")->capture_default_str();

  std::string created_out;  // removed again if the command fails

  // terrain
  auto* cmd_terrain = app.add_subcommand("terrain", "generate a heightmap");
  std::string terrain_config, terrain_out;
  cmd_terrain->add_option("--config", terrain_config, "terrain params JSON");
  cmd_terrain->add_option("--seed", seed, "scene seed")->required();
  cmd_terrain->add_option("--out", terrain_out, "output heightmap path")->required();

  // texture noise|voronoi|apply
  auto* cmd_texture = app.add_subcommand("texture", "generate or combine control textures");
  auto* tex_noise = cmd_texture->add_subcommand("noise", "fbm noise texture");
  int tex_w = 256, tex_h = 256;
  std::string tex_out, tex_config;
  tex_noise->add_option("--width", tex_w);
  tex_noise->add_option("--height", tex_h);
  tex_noise->add_option("--config", tex_config, "noise params JSON");
  tex_noise->add_option("--seed", seed)->required();
  tex_noise->add_option("--out", tex_out)->required();
  auto* tex_voronoi = cmd_texture->add_subcommand("voronoi", "voronoi texture");
  int voronoi_sites = 16;
  std::string voronoi_mode = "distance";
  tex_voronoi->add_option("--width", tex_w);
  tex_voronoi->add_option("--height", tex_h);
  tex_voronoi->add_option("--sites", voronoi_sites);
  tex_voronoi->add_option("--mode", voronoi_mode)->check(CLI::IsMember({"distance", "cellular"}));
  tex_voronoi->add_option("--seed", seed)->required();
  tex_voronoi->add_option("--out", tex_out)->required();
  auto* tex_apply = cmd_texture->add_subcommand("apply", "pixelwise logic op");
  std::string apply_op = "invert", apply_a, apply_b;
  double apply_threshold = 0.5;
  tex_apply->add_option("--op", apply_op)
      ->check(CLI::IsMember({"invert", "multiply", "min", "max", "threshold", "add"}));
  tex_apply->add_option("--a", apply_a)->required();
  tex_apply->add_option("--b", apply_b);
  tex_apply->add_option("--threshold", apply_threshold);
  tex_apply->add_option("--out", tex_out)->required();

  // pipeline run|validate
  auto* cmd_pipeline = app.add_subcommand("pipeline", "vegetation pipeline DAG");
  auto* pipe_run = cmd_pipeline->add_subcommand("run", "evaluate a pipeline over a terrain");
  std::string pipe_terrain, pipe_file, pipe_out, pipe_prefabs;
  pipe_run->add_option("--terrain", pipe_terrain)->required();
  pipe_run->add_option("--pipeline", pipe_file)->required();
  pipe_run->add_option("--prefabs", pipe_prefabs, "prefab specs JSON");
  pipe_run->add_option("--seed", seed)->required();
  pipe_run->add_option("--out", pipe_out, "placements CSV")->required();
  auto* pipe_validate = cmd_pipeline->add_subcommand("validate", "validate a pipeline document");
  pipe_validate->add_option("--pipeline", pipe_file)->required();

  // grass
  auto* cmd_grass = app.add_subcommand("grass", "mass grass synthesis");
  std::string grass_terrain, grass_density, grass_out;
  int grass_tile = 4, grass_max = 1024, grass_segments = 4;
  cmd_grass->add_option("--terrain", grass_terrain)->required();
  cmd_grass->add_option("--density", grass_density, "density PGM")->required();
  cmd_grass->add_option("--tile", grass_tile);
  cmd_grass->add_option("--max-per-tile", grass_max);
  cmd_grass->add_option("--segments", grass_segments);
  cmd_grass->add_option("--seed", seed)->required();
  cmd_grass->add_option("--out", grass_out)->required();

  // scene build
  auto* cmd_scene = app.add_subcommand("scene", "scene assembly");
  auto* scene_build = cmd_scene->add_subcommand("build", "build a full labeled scene");
  std::string scene_config, scene_out;
  bool scene_ply = false;
  scene_build->add_option("--config", scene_config)->required();
  scene_build->add_option("--seed", seed, "overrides the config seed");
  scene_build->add_option("--out", scene_out, "output directory")->required();
  scene_build->add_flag("--ply", scene_ply, "also write scene.ply");

  // occlude
  auto* cmd_occlude = app.add_subcommand("occlude", "hidden-point-removal occlusion");
  std::string occ_in, occ_out, occ_altitude = "auto", occ_grid = "single";
  double occ_gamma = 2.0;
  cmd_occlude->add_option("--in", occ_in)->required();
  cmd_occlude->add_option("--gamma", occ_gamma);
  cmd_occlude->add_option("--altitude", occ_altitude, "'auto' or meters");
  cmd_occlude->add_option("--grid", occ_grid, "'single' or sx,sy viewpoint spacing");
  cmd_occlude->add_option("--seed", seed);
  cmd_occlude->add_option("--out", occ_out)->required();

  // dataset build
  auto* cmd_dataset = app.add_subcommand("dataset", "training dataset assembly");
  auto* dataset_build = cmd_dataset->add_subcommand("build", "build train/val subclouds");
  std::string ds_scenes, ds_mode = "lidar", ds_out;
  std::size_t ds_target = 4096;
  double ds_sigma = 0.01, ds_ratio = 0.8;
  dataset_build->add_option("--scenes", ds_scenes, "scene CSV glob")->required();
  dataset_build->add_option("--mode", ds_mode)->check(CLI::IsMember({"lidar", "camera"}));
  dataset_build->add_option("--target-size", ds_target);
  dataset_build->add_option("--noise-sigma", ds_sigma);
  dataset_build->add_option("--train-ratio", ds_ratio);
  dataset_build->add_option("--seed", seed)->required();
  dataset_build->add_option("--out", ds_out)->required();

  // eval
  auto* cmd_eval = app.add_subcommand("eval", "segmentation metrics");
  std::string eval_truth, eval_pred, eval_collapse, eval_json;
  int eval_classes = 4;
  cmd_eval->add_option("--truth", eval_truth, "dataset CSV with ground-truth categories")
      ->required();
  cmd_eval->add_option("--pred", eval_pred, "one predicted category per line")->required();
  cmd_eval->add_option("--classes", eval_classes);
  cmd_eval->add_option("--collapse", eval_collapse)->check(CLI::IsMember({"tree"}));
  cmd_eval->add_option("--json", eval_json, "also write a JSON report");

  // demo
  auto* cmd_demo = app.add_subcommand("demo", "build the shipped example scene end-to-end");
  std::string demo_out, demo_mode = "lidar";
  cmd_demo->add_option("--seed", seed)->required();
  cmd_demo->add_option("--out", demo_out)->required();
  cmd_demo->add_option("--mode", demo_mode)->check(CLI::IsMember({"lidar", "camera"}));

  CLI11_PARSE(app, argc, argv);
  forge::set_thread_count(threads);

  auto guard_out = [&](const std::string& path) {
    if (!path.empty() && !fs::exists(path)) created_out = path;
  };

  try {
    if (*cmd_terrain) {
      guard_out(terrain_out);
      forge::TerrainParams p;
      if (!terrain_config.empty()) {
        p = forge::detail::terrain_from_json(load_json(terrain_config));
      }
      const forge::Heightmap hm = forge::generate_heightmap(p, forge::Seed{seed});
      forge::save_heightmap(hm, terrain_out);
    } else if (*tex_noise) {
      guard_out(tex_out);
      forge::TerrainParams p;
      p.base_frequency = 0.05;
      p.amplitude = 1.0;
      if (!tex_config.empty()) p = forge::detail::terrain_from_json(load_json(tex_config));
      forge::save_pgm(forge::texture_from_noise(tex_w, tex_h, p, forge::Seed{seed}), tex_out);
    } else if (*tex_voronoi) {
      guard_out(tex_out);
      forge::save_pgm(
          forge::texture_from_voronoi(tex_w, tex_h, voronoi_sites, forge::Seed{seed},
                                      voronoi_mode == "cellular" ? forge::VoronoiMode::kCellular
                                                                 : forge::VoronoiMode::kDistance),
          tex_out);
    } else if (*tex_apply) {
      guard_out(tex_out);
      const forge::Texture a = forge::load_pgm(apply_a);
      std::optional<forge::Texture> b;
      if (!apply_b.empty()) b = forge::load_pgm(apply_b);
      forge::LogicOp op = forge::LogicOp::kInvert;
      if (apply_op == "multiply") op = forge::LogicOp::kMultiply;
      else if (apply_op == "min") op = forge::LogicOp::kMin;
      else if (apply_op == "max") op = forge::LogicOp::kMax;
      else if (apply_op == "threshold") op = forge::LogicOp::kThreshold;
      else if (apply_op == "add") op = forge::LogicOp::kAddClamped;
      forge::save_pgm(forge::texture_logic(op, a, b ? &*b : nullptr, apply_threshold), tex_out);
    } else if (*pipe_validate) {
      const forge::PipelineGraph graph =
          forge::parse_pipeline(load_json(pipe_file).dump());
      const auto errors = forge::validate(graph);
      for (const auto& e : errors) std::cerr << "error: " << e << "\n";
      if (!errors.empty()) return 1;
      std::cerr << "ok: " << graph.nodes.size() << " nodes\n";
    } else if (*pipe_run) {
      guard_out(pipe_out);
      const forge::Heightmap hm = forge::load_heightmap(pipe_terrain);
      const forge::PipelineGraph graph = forge::parse_pipeline(load_json(pipe_file).dump());
      const auto errors = forge::validate(graph);
      if (!errors.empty()) throw std::invalid_argument("pipeline: " + errors.front());
      const auto registry = registry_for_pipeline(graph, pipe_prefabs, forge::Seed{seed});
      const auto placements = forge::evaluate(graph, hm, forge::Seed{seed}, registry);
      forge::save_placements_csv(placements, pipe_out);
      std::size_t total = 0;
      for (const auto& ps : placements) total += ps.instances.size();
      std::cerr << "placements: " << total << " instances from " << placements.size()
                << " placement nodes\n";
    } else if (*cmd_grass) {
      guard_out(grass_out);
      const forge::Heightmap hm = forge::load_heightmap(grass_terrain);
      forge::Texture density = forge::load_pgm(grass_density);
      density.set_world_extent(0.0, 0.0, hm.width(), hm.depth());
      forge::GrassParams gp;
      gp.tile_size = grass_tile;
      gp.max_per_tile = grass_max;
      gp.segments = grass_segments;
      const auto anchors = forge::sample_anchors(density, gp.tile_size, gp.max_per_tile);
      const auto cloud =
          forge::grass_cloud(anchors, density, hm, gp, forge::RngStream(forge::Seed{seed}));
      forge::export_csv(cloud, grass_out);
      std::cerr << "grass: " << anchors.size() << " blades, " << cloud.size() << " points\n";
    } else if (*scene_build) {
      guard_out(scene_out);
      nlohmann::json cfg_json = load_json(scene_config);
      if (scene_build->count("--seed")) cfg_json["seed"] = seed;
      const forge::SceneConfig cfg = forge::parse_scene_config(cfg_json);
      const forge::SceneArtifacts art = forge::build_scene(cfg);
      fs::create_directories(scene_out);
      write_text((fs::path(scene_out) / "config.json").string(), cfg_json.dump(2) + "\n");
      forge::save_heightmap(art.heightmap, (fs::path(scene_out) / "heightmap.bin").string());
      forge::save_placements_csv(art.placements,
                                 (fs::path(scene_out) / "placements.csv").string());
      forge::export_csv(art.cloud, (fs::path(scene_out) / "scene.csv").string());
      if (scene_ply) forge::export_ply(art.cloud, (fs::path(scene_out) / "scene.ply").string());
      std::cerr << "scene: " << art.cloud.size() << " points\n";
    } else if (*cmd_occlude) {
      guard_out(occ_out);
      const forge::LabeledPointCloud cloud = forge::import_csv(occ_in);
      if (cloud.empty()) throw std::invalid_argument("occlude: empty input cloud");
      forge::Aabb box{cloud.records.front().position, cloud.records.front().position};
      for (const auto& r : cloud.records) box.expand(r.position);
      double altitude = 0.0;
      if (occ_altitude == "auto") {
        altitude = box.max.z + 30.0;
      } else {
        altitude = std::stod(occ_altitude);
      }
      forge::OcclusionParams params;
      params.gamma = occ_gamma;
      if (occ_grid == "single") {
        params.viewpoints = {{(box.min.x + box.max.x) / 2.0, (box.min.y + box.max.y) / 2.0,
                              altitude}};
      } else {
        const auto comma = occ_grid.find(',');
        if (comma == std::string::npos) {
          throw std::invalid_argument("occlude: --grid must be 'single' or sx,sy");
        }
        params.viewpoints =
            forge::survey_viewpoints(box, altitude, std::stod(occ_grid.substr(0, comma)),
                                     std::stod(occ_grid.substr(comma + 1)));
      }
      const forge::LabeledPointCloud visible = forge::occlude(cloud, params);
      forge::export_csv(visible, occ_out);
      std::cerr << "occlude: " << visible.size() << " of " << cloud.size()
                << " points visible from " << params.viewpoints.size() << " viewpoints\n";
    } else if (*dataset_build) {
      guard_out(ds_out);
      const auto scenes = expand_glob(ds_scenes);
      if (scenes.empty()) throw std::invalid_argument("dataset: no scenes match " + ds_scenes);
      forge::DatasetConfig cfg;
      cfg.mode = ds_mode == "camera" ? forge::DatasetMode::kCamera : forge::DatasetMode::kLidar;
      cfg.target_size = ds_target;
      cfg.noise_sigma = ds_sigma;
      cfg.train_ratio = ds_ratio;
      cfg.seed = forge::Seed{seed};
      const auto manifest = forge::build_dataset(scenes, cfg, ds_out);
      std::cerr << "dataset: " << manifest["subclouds"].size() << " subclouds from "
                << scenes.size() << " scenes\n";
    } else if (*cmd_eval) {
      std::vector<int> truth;
      {
        std::ifstream in(eval_truth);
        if (!in) throw std::runtime_error("cannot open " + eval_truth);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
          ++line_no;
          if (line_no == 1 || line.empty()) continue;
          const auto pos = line.rfind(',');
          if (pos == std::string::npos) {
            throw std::invalid_argument(eval_truth + ": malformed row at line " +
                                        std::to_string(line_no));
          }
          std::string name = line.substr(pos + 1);
          if (!name.empty() && name.back() == '\r') name.pop_back();
          const auto cat = forge::category_from_name(name);
          if (!cat) {
            throw std::invalid_argument(eval_truth + ": unknown category '" + name +
                                        "' at line " + std::to_string(line_no));
          }
          truth.push_back(static_cast<int>(*cat));
        }
      }
      std::vector<int> pred;
      {
        std::ifstream in(eval_pred);
        if (!in) throw std::runtime_error("cannot open " + eval_pred);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
          ++line_no;
          if (!line.empty() && line.back() == '\r') line.pop_back();
          if (line.empty()) continue;
          const auto cat = forge::category_from_name(line);
          if (cat) {
            pred.push_back(static_cast<int>(*cat));
          } else {
            try {
              pred.push_back(std::stoi(line));
            } catch (const std::exception&) {
              throw std::invalid_argument(eval_pred + ": unknown category '" + line +
                                          "' at line " + std::to_string(line_no));
            }
          }
        }
      }
      std::vector<std::string> names;
      for (int c = 0; c < eval_classes; ++c) {
        names.push_back(c < forge::kCategoryCount
                            ? std::string(forge::category_name(static_cast<forge::Category>(c)))
                            : "class" + std::to_string(c));
      }
      forge::ConfusionMatrix m = forge::confusion(truth, pred, eval_classes, names);
      if (eval_collapse == "tree") {
        // terrain,understorey -> non_tree; trunk,canopy -> tree
        m = forge::collapse(m, {0, 1, 1, 0}, {"non_tree", "tree"});
      }
      const nlohmann::json report = forge::metrics_report(m);
      std::cout << "samples:            " << report["total"] << "\n";
      std::cout << "overall accuracy:   " << report["overall_accuracy"] << "\n";
      std::cout << "class avg accuracy: " << report["class_avg_accuracy"] << "\n";
      std::cout << "mean IoU:           " << report["mean_iou"] << "\n";
      if (!eval_json.empty()) write_text(eval_json, report.dump(2) + "\n");
    } else if (*cmd_demo) {
      guard_out(demo_out);
      run_demo(seed, demo_out, demo_mode);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (!created_out.empty()) fs::remove_all(created_out);
    return 1;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (!created_out.empty()) fs::remove_all(created_out);
    return 1;
  } catch (const std::logic_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (!created_out.empty()) fs::remove_all(created_out);
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (!created_out.empty()) fs::remove_all(created_out);
    const std::string msg = e.what();
    const bool validation = msg.find("pipeline") == 0 || msg.find("scene config") == 0 ||
                            msg.find("malformed") != std::string::npos ||
                            msg.find("unknown") != std::string::npos;
    return validation ? 1 : 2;
  }
  return 0;
}
