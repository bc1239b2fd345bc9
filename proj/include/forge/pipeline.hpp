#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "forge/rng.hpp"
#include "forge/sampling.hpp"
#include "forge/scene.hpp"
#include "forge/terrain.hpp"
#include "forge/texture.hpp"

namespace forge {

enum class NodeKind { kSource, kLogic, kSampling, kPlacement };

inline std::optional<NodeKind> node_kind_from_name(const std::string& s) {
  if (s == "source") return NodeKind::kSource;
  if (s == "logic") return NodeKind::kLogic;
  if (s == "sampling") return NodeKind::kSampling;
  if (s == "placement") return NodeKind::kPlacement;
  return std::nullopt;
}

struct NodeSpec {
  std::string id;
  NodeKind kind = NodeKind::kSource;
  nlohmann::json params;          // validated key set per kind
  std::vector<std::string> inputs;
};

struct PipelineGraph {
  std::vector<NodeSpec> nodes;

  const NodeSpec* find(const std::string& id) const {
    for (const auto& n : nodes) {
      if (n.id == id) return &n;
    }
    return nullptr;
  }
};

namespace detail {

inline const std::set<std::string>& allowed_param_keys(NodeKind kind) {
  static const std::set<std::string> source{"type",       "path",       "width",
                                            "height",     "sites",      "mode",
                                            "octaves",    "lacunarity", "persistence",
                                            "base_frequency", "amplitude", "seed_label"};
  static const std::set<std::string> logic{"op", "threshold"};
  static const std::set<std::string> sampling{"r", "r_min", "r_max", "k", "max_count", "mode"};
  static const std::set<std::string> placement{"prefab", "max_twist", "scale_range"};
  switch (kind) {
    case NodeKind::kSource: return source;
    case NodeKind::kLogic: return logic;
    case NodeKind::kSampling: return sampling;
    case NodeKind::kPlacement: return placement;
  }
  return source;
}

}  // namespace detail

// Parses the JSON pipeline document: {"nodes":[{"id","kind","params",
// "inputs"}]}. Unknown keys, unknown kinds, and duplicate ids are rejected.
inline PipelineGraph parse_pipeline(const std::string& document) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(document);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(std::string("pipeline: syntax error: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("nodes") || !doc["nodes"].is_array()) {
    throw std::runtime_error("pipeline: document must be {\"nodes\": [...]}");
  }
  for (const auto& [key, value] : doc.items()) {
    (void)value;
    if (key != "nodes") throw std::runtime_error("pipeline: unknown top-level key '" + key + "'");
  }

  PipelineGraph graph;
  std::set<std::string> seen;
  for (const auto& jn : doc["nodes"]) {
    if (!jn.is_object()) throw std::runtime_error("pipeline: node entry must be an object");
    for (const auto& [key, value] : jn.items()) {
      (void)value;
      if (key != "id" && key != "kind" && key != "params" && key != "inputs") {
        throw std::runtime_error("pipeline: unknown node key '" + key + "'");
      }
    }
    NodeSpec node;
    if (!jn.contains("id") || !jn["id"].is_string()) {
      throw std::runtime_error("pipeline: node missing string 'id'");
    }
    node.id = jn["id"].get<std::string>();
    if (!seen.insert(node.id).second) {
      throw std::runtime_error("pipeline: duplicate node id '" + node.id + "'");
    }
    if (!jn.contains("kind") || !jn["kind"].is_string()) {
      throw std::runtime_error("pipeline: node '" + node.id + "' missing string 'kind'");
    }
    const auto kind = node_kind_from_name(jn["kind"].get<std::string>());
    if (!kind) {
      throw std::runtime_error("pipeline: unknown node kind '" +
                               jn["kind"].get<std::string>() + "' in node '" + node.id + "'");
    }
    node.kind = *kind;
    node.params = jn.value("params", nlohmann::json::object());
    const auto& allowed = detail::allowed_param_keys(node.kind);
    for (const auto& [key, value] : node.params.items()) {
      (void)value;
      if (!allowed.count(key)) {
        throw std::runtime_error("pipeline: unknown param key '" + key + "' in node '" +
                                 node.id + "'");
      }
    }
    if (jn.contains("inputs")) {
      for (const auto& ji : jn["inputs"]) {
        if (!ji.is_string()) throw std::runtime_error("pipeline: inputs must be node ids");
        node.inputs.push_back(ji.get<std::string>());
      }
    }
    graph.nodes.push_back(std::move(node));
  }
  return graph;
}

// Structural payload type carried on an edge.
enum class Payload { kTexture, kSamples, kPlacements };

inline Payload node_payload(NodeKind kind) {
  switch (kind) {
    case NodeKind::kSource:
    case NodeKind::kLogic: return Payload::kTexture;
    case NodeKind::kSampling: return Payload::kSamples;
    case NodeKind::kPlacement: return Payload::kPlacements;
  }
  return Payload::kTexture;
}

// Static validation: dangling inputs, arity, payload types, acyclicity.
// Errors are returned, not thrown; an empty list means ok.
inline std::vector<std::string> validate(const PipelineGraph& g) {
  std::vector<std::string> errors;

  for (const auto& n : g.nodes) {
    for (const auto& in : n.inputs) {
      if (g.find(in) == nullptr) {
        errors.push_back("node '" + n.id + "': dangling input '" + in + "'");
      }
    }
    const std::size_t arity = n.inputs.size();
    switch (n.kind) {
      case NodeKind::kSource:
        if (arity != 0) errors.push_back("node '" + n.id + "': source takes no inputs");
        break;
      case NodeKind::kLogic:
        if (arity < 1 || arity > 2)
          errors.push_back("node '" + n.id + "': logic takes 1-2 inputs, got " +
                           std::to_string(arity));
        break;
      case NodeKind::kSampling:
        if (arity < 1 || arity > 2)
          errors.push_back("node '" + n.id + "': sampling takes 1-2 inputs, got " +
                           std::to_string(arity));
        break;
      case NodeKind::kPlacement:
        if (arity < 1 || arity > 2)
          errors.push_back("node '" + n.id + "': placement takes 1-2 inputs, got " +
                           std::to_string(arity));
        break;
    }
    // Payload typing is structural: logic and sampling consume textures,
    // placement consumes one sample set plus an optional texture.
    for (std::size_t i = 0; i < n.inputs.size(); ++i) {
      const NodeSpec* src = g.find(n.inputs[i]);
      if (src == nullptr) continue;
      const Payload p = node_payload(src->kind);
      const bool ok = [&] {
        switch (n.kind) {
          case NodeKind::kSource: return false;
          case NodeKind::kLogic:
          case NodeKind::kSampling: return p == Payload::kTexture;
          case NodeKind::kPlacement:
            return i == 0 ? p == Payload::kSamples : p == Payload::kTexture;
        }
        return false;
      }();
      if (!ok) {
        errors.push_back("node '" + n.id + "': input '" + n.inputs[i] +
                         "' carries the wrong payload type");
      }
    }
  }

  // Cycle detection by coloring DFS; one offending cycle is reported.
  std::map<std::string, int> color;  // 0 white, 1 grey, 2 black
  std::vector<std::string> stack;
  std::vector<std::string> cycle;
  std::function<bool(const NodeSpec&)> dfs = [&](const NodeSpec& n) -> bool {
    color[n.id] = 1;
    stack.push_back(n.id);
    for (const auto& in : n.inputs) {
      const NodeSpec* src = g.find(in);
      if (src == nullptr) continue;
      if (color[src->id] == 1) {
        const auto it = std::find(stack.begin(), stack.end(), src->id);
        cycle.assign(it, stack.end());
        return true;
      }
      if (color[src->id] == 0 && dfs(*src)) return true;
    }
    stack.pop_back();
    color[n.id] = 2;
    return false;
  };
  for (const auto& n : g.nodes) {
    if (color[n.id] == 0 && dfs(n)) {
      std::string msg = "cycle detected: [";
      for (std::size_t i = 0; i < cycle.size(); ++i) {
        msg += (i ? ", " : "") + cycle[i];
      }
      errors.push_back(msg + "]");
      break;
    }
  }
  return errors;
}

namespace detail {

struct NodeValue {
  std::optional<Texture> texture;
  std::optional<SampleSet> samples;
};

inline Texture eval_source(const NodeSpec& n, const Heightmap& terrain, Seed scene_seed) {
  const auto& p = n.params;
  const std::string type = p.value("type", "noise");
  const int w = p.value("width", 256);
  const int h = p.value("height", 256);
  Texture tex;
  if (type == "noise") {
    TerrainParams np;
    np.width = terrain.width();
    np.depth = terrain.depth();
    np.octaves = p.value("octaves", 4);
    np.lacunarity = p.value("lacunarity", 2.0);
    np.persistence = p.value("persistence", 0.5);
    np.base_frequency = p.value("base_frequency", 0.05);
    np.amplitude = p.value("amplitude", 1.0);
    const Seed node_seed{mix(scene_seed.value, hash_label(n.id))};
    tex = texture_from_noise(w, h, np, node_seed);
  } else if (type == "voronoi") {
    const int sites = p.value("sites", 16);
    const std::string mode = p.value("mode", "distance");
    const Seed node_seed{mix(scene_seed.value, hash_label(n.id))};
    tex = texture_from_voronoi(w, h, sites, node_seed,
                               mode == "cellular" ? VoronoiMode::kCellular
                                                  : VoronoiMode::kDistance);
  } else if (type == "file") {
    tex = load_pgm(p.at("path").get<std::string>());
  } else {
    throw std::runtime_error("pipeline: unknown source type '" + type + "' in node '" + n.id +
                             "'");
  }
  tex.set_world_extent(0.0, 0.0, terrain.width(), terrain.depth());
  return tex;
}

inline Texture eval_logic(const NodeSpec& n, const std::vector<const Texture*>& inputs) {
  const std::string op = n.params.value("op", "invert");
  const double threshold = n.params.value("threshold", 0.5);
  auto need2 = [&] {
    if (inputs.size() != 2)
      throw std::runtime_error("pipeline: logic op '" + op + "' needs two inputs in node '" +
                               n.id + "'");
  };
  if (op == "invert") return texture_logic(LogicOp::kInvert, *inputs[0]);
  if (op == "threshold") return texture_logic(LogicOp::kThreshold, *inputs[0], nullptr, threshold);
  if (op == "multiply") { need2(); return texture_logic(LogicOp::kMultiply, *inputs[0], inputs[1]); }
  if (op == "min") { need2(); return texture_logic(LogicOp::kMin, *inputs[0], inputs[1]); }
  if (op == "max") { need2(); return texture_logic(LogicOp::kMax, *inputs[0], inputs[1]); }
  if (op == "add") { need2(); return texture_logic(LogicOp::kAddClamped, *inputs[0], inputs[1]); }
  throw std::runtime_error("pipeline: unknown logic op '" + op + "' in node '" + n.id + "'");
}

}  // namespace detail

// Evaluates a validated graph over the terrain. Each node's stream is
// derived from the scene stream by node id, so declaration order and
// unrelated graph edits do not perturb existing nodes' randomness.
inline std::vector<PlacementSet> evaluate(const PipelineGraph& g, const Heightmap& terrain,
                                          Seed seed, const PrefabRegistry& registry) {
  {
    const auto errors = validate(g);
    if (!errors.empty()) {
      throw std::runtime_error("pipeline: validation failed: " + errors.front());
    }
  }
  const RngStream scene_stream(seed);

  // Topological order via DFS; evaluation memoized per node id.
  std::map<std::string, detail::NodeValue> values;
  std::vector<PlacementSet> placements;

  std::function<const detail::NodeValue&(const NodeSpec&)> eval_node =
      [&](const NodeSpec& n) -> const detail::NodeValue& {
    const auto it = values.find(n.id);
    if (it != values.end()) return it->second;

    std::vector<const detail::NodeValue*> ins;
    for (const auto& in : n.inputs) ins.push_back(&eval_node(*g.find(in)));

    detail::NodeValue value;
    RngStream stream = scene_stream.derive(n.id);
    switch (n.kind) {
      case NodeKind::kSource:
        value.texture = detail::eval_source(n, terrain, seed);
        break;
      case NodeKind::kLogic: {
        std::vector<const Texture*> texs;
        for (const auto* v : ins) texs.push_back(&*v->texture);
        value.texture = detail::eval_logic(n, texs);
        break;
      }
      case NodeKind::kSampling: {
        DiskParams dp;
        dp.region = {0.0, 0.0, terrain.width(), terrain.depth()};
        dp.k = n.params.value("k", 30);
        if (n.params.contains("max_count")) {
          dp.max_count = n.params["max_count"].get<std::size_t>();
        }
        // Input 0 is the density texture (an inline keep-probability
        // filter); optional input 1 modulates the disk radius and selects
        // the variable-radius variant.
        SampleSet raw;
        if (ins.size() >= 2) {
          dp.r_min = n.params.value("r_min", 1.0);
          dp.r_max = n.params.value("r_max", dp.r_min);
          raw = modulated_bridson(dp, *ins[1]->texture, stream);
        } else {
          dp.r = n.params.value("r", 1.0);
          raw = bridson(dp, stream);
        }
        value.samples = spawn_filter(raw, *ins[0]->texture, stream);
        break;
      }
      case NodeKind::kPlacement: {
        const SampleSet* samples = &*ins[0]->samples;
        SampleSet filtered;
        if (ins.size() >= 2) {
          // Optional spawn-probability texture: clearings of arbitrary
          // shape, down to zero instances.
          filtered = spawn_filter(*samples, *ins[1]->texture, stream);
          samples = &filtered;
        }
        if (!n.params.contains("prefab")) {
          throw std::runtime_error("pipeline: placement node '" + n.id + "' missing 'prefab'");
        }
        const std::string prefab = n.params["prefab"].get<std::string>();
        if (!registry.count(prefab)) {
          throw std::runtime_error("pipeline: placement node '" + n.id +
                                   "' references missing prefab '" + prefab + "'");
        }
        const double max_twist = n.params.value("max_twist", 0.15);
        double s_min = 0.8, s_max = 1.25;
        if (n.params.contains("scale_range")) {
          s_min = n.params["scale_range"].at(0).get<double>();
          s_max = n.params["scale_range"].at(1).get<double>();
        }
        PlacementSet ps;
        ps.node_id = n.id;
        ps.seed_lineage = "scene/" + n.id;
        constexpr double two_pi = 6.283185307179586476925286766559;
        for (const Vec2& pt : samples->points) {
          InstanceParams inst;
          inst.prefab_name = prefab;
          inst.spin = stream.uniform(0.0, two_pi);
          const double twist_dir = stream.uniform(0.0, two_pi);
          inst.twist_axis = {std::cos(twist_dir), std::sin(twist_dir)};
          inst.twist_angle = stream.uniform(0.0, max_twist);
          inst.scale = stream.uniform(s_min, s_max);
          inst.position = {pt.x, pt.y, terrain.height_at(pt.x, pt.y)};
          ps.instances.push_back(std::move(inst));
        }
        placements.push_back(std::move(ps));
        break;
      }
    }
    return values.emplace(n.id, std::move(value)).first->second;
  };

  for (const auto& n : g.nodes) eval_node(n);

  std::sort(placements.begin(), placements.end(),
            [](const PlacementSet& a, const PlacementSet& b) { return a.node_id < b.node_id; });
  return placements;
}

}  // namespace forge
