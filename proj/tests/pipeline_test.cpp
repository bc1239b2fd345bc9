#include <gtest/gtest.h>

#include <string>

#include "forge/pipeline.hpp"

namespace forge {
namespace {

PrefabRegistry tree_registry() {
  PrefabRegistry reg;
  reg["tree"] = procedural_tree(4.0, 0.2, {1.5, 1.5, 2.0}, 64, RngStream{Seed{1}});
  return reg;
}

Heightmap flat_terrain() {
  TerrainParams p;
  p.width = 30.0;
  p.depth = 30.0;
  p.grid_resolution = 2;
  return Heightmap(p, {0.0, 0.0, 0.0, 0.0});
}

const char* kValidDoc = R"({
  "nodes": [
    {"id": "density", "kind": "source",
     "params": {"type": "noise", "width": 32, "height": 32}},
    {"id": "radius", "kind": "source",
     "params": {"type": "noise", "width": 32, "height": 32}},
    {"id": "inv", "kind": "logic", "params": {"op": "invert"}, "inputs": ["density"]},
    {"id": "samples", "kind": "sampling",
     "params": {"r_min": 2.0, "r_max": 5.0}, "inputs": ["inv", "radius"]},
    {"id": "place", "kind": "placement",
     "params": {"prefab": "tree"}, "inputs": ["samples"]}
  ]
})";

TEST(ParsePipeline, ValidDocument) {
  const PipelineGraph g = parse_pipeline(kValidDoc);
  ASSERT_EQ(g.nodes.size(), 5u);
  EXPECT_EQ(g.nodes[0].id, "density");
  EXPECT_EQ(g.nodes[3].kind, NodeKind::kSampling);
  EXPECT_EQ(g.nodes[3].inputs.size(), 2u);
  EXPECT_TRUE(validate(g).empty());
}

TEST(ParsePipeline, SyntaxErrorRejected) {
  EXPECT_THROW(parse_pipeline("{\"nodes\": ["), std::runtime_error);
}

TEST(ParsePipeline, UnknownTopLevelKeyRejected) {
  EXPECT_THROW(parse_pipeline(R"({"nodes": [], "extra": 1})"), std::runtime_error);
}

TEST(ParsePipeline, UnknownNodeKeyRejected) {
  EXPECT_THROW(
      parse_pipeline(R"({"nodes": [{"id": "a", "kind": "source", "bogus": 1}]})"),
      std::runtime_error);
}

TEST(ParsePipeline, UnknownKindRejected) {
  EXPECT_THROW(parse_pipeline(R"({"nodes": [{"id": "a", "kind": "mixer"}]})"),
               std::runtime_error);
}

TEST(ParsePipeline, UnknownParamKeyRejected) {
  EXPECT_THROW(parse_pipeline(
                   R"({"nodes": [{"id": "a", "kind": "source", "params": {"frobnicate": 1}}]})"),
               std::runtime_error);
}

TEST(ParsePipeline, DuplicateIdRejected) {
  EXPECT_THROW(parse_pipeline(
                   R"({"nodes": [{"id": "a", "kind": "source"}, {"id": "a", "kind": "source"}]})"),
               std::runtime_error);
}

TEST(Validate, DanglingInputReported) {
  const PipelineGraph g = parse_pipeline(
      R"({"nodes": [{"id": "a", "kind": "logic", "params": {"op": "invert"},
                     "inputs": ["missing"]}]})");
  const auto errors = validate(g);
  ASSERT_EQ(errors.size(), 1u);
  EXPECT_NE(errors[0].find("dangling"), std::string::npos);
}

TEST(Validate, ArityErrors) {
  const PipelineGraph g = parse_pipeline(
      R"({"nodes": [
        {"id": "t", "kind": "source"},
        {"id": "s", "kind": "source", "inputs": ["t"]},
        {"id": "l", "kind": "logic", "params": {"op": "invert"}}
      ]})");
  const auto errors = validate(g);
  // The source-with-input node yields both an arity error and a payload
  // error (sources accept no payload at all); the bare logic node yields an
  // arity error.
  auto has = [&](const char* needle) {
    for (const auto& e : errors) {
      if (e.find(needle) != std::string::npos) return true;
    }
    return false;
  };
  EXPECT_EQ(errors.size(), 3u);
  EXPECT_TRUE(has("source takes no inputs"));
  EXPECT_TRUE(has("logic takes 1-2 inputs"));
}

TEST(Validate, PayloadTypeErrors) {
  // Logic node fed by a sampling node: texture expected, samples provided.
  const PipelineGraph g = parse_pipeline(
      R"({"nodes": [
        {"id": "d", "kind": "source"},
        {"id": "s", "kind": "sampling", "params": {"r": 2.0}, "inputs": ["d"]},
        {"id": "l", "kind": "logic", "params": {"op": "invert"}, "inputs": ["s"]}
      ]})");
  const auto errors = validate(g);
  ASSERT_EQ(errors.size(), 1u);
  EXPECT_NE(errors[0].find("wrong payload type"), std::string::npos);
}

TEST(Validate, PlacementFirstInputMustBeSamples) {
  const PipelineGraph g = parse_pipeline(
      R"({"nodes": [
        {"id": "d", "kind": "source"},
        {"id": "p", "kind": "placement", "params": {"prefab": "tree"}, "inputs": ["d"]}
      ]})");
  const auto errors = validate(g);
  ASSERT_EQ(errors.size(), 1u);
  EXPECT_NE(errors[0].find("wrong payload type"), std::string::npos);
}

TEST(Validate, CycleReported) {
  const PipelineGraph g = parse_pipeline(
      R"({"nodes": [
        {"id": "a", "kind": "logic", "params": {"op": "invert"}, "inputs": ["b"]},
        {"id": "b", "kind": "logic", "params": {"op": "invert"}, "inputs": ["a"]}
      ]})");
  const auto errors = validate(g);
  ASSERT_EQ(errors.size(), 1u);
  EXPECT_NE(errors[0].find("cycle detected"), std::string::npos);
  // Both participants are named.
  EXPECT_NE(errors[0].find("a"), std::string::npos);
  EXPECT_NE(errors[0].find("b"), std::string::npos);
}

TEST(Evaluate, ProducesPlacements) {
  const PipelineGraph g = parse_pipeline(kValidDoc);
  const Heightmap hm = flat_terrain();
  const auto placements = evaluate(g, hm, Seed{11}, tree_registry());
  ASSERT_EQ(placements.size(), 1u);
  EXPECT_EQ(placements[0].node_id, "place");
  EXPECT_GT(placements[0].instances.size(), 0u);
  for (const auto& inst : placements[0].instances) {
    EXPECT_EQ(inst.prefab_name, "tree");
    EXPECT_GE(inst.position.x, 0.0);
    EXPECT_LE(inst.position.x, 30.0);
    EXPECT_EQ(inst.position.z, hm.height_at(inst.position.x, inst.position.y));
  }
}

TEST(Evaluate, Deterministic) {
  const PipelineGraph g = parse_pipeline(kValidDoc);
  const Heightmap hm = flat_terrain();
  const PrefabRegistry reg = tree_registry();
  const auto a = evaluate(g, hm, Seed{11}, reg);
  const auto b = evaluate(g, hm, Seed{11}, reg);
  ASSERT_EQ(a[0].instances.size(), b[0].instances.size());
  for (std::size_t i = 0; i < a[0].instances.size(); ++i) {
    ASSERT_EQ(a[0].instances[i].position.x, b[0].instances[i].position.x);
    ASSERT_EQ(a[0].instances[i].spin, b[0].instances[i].spin);
    ASSERT_EQ(a[0].instances[i].scale, b[0].instances[i].scale);
  }
}

TEST(Evaluate, NodeStreamsKeyedById) {
  // Adding an unrelated node must not perturb an existing node's output.
  const Heightmap hm = flat_terrain();
  const PrefabRegistry reg = tree_registry();
  const PipelineGraph small = parse_pipeline(
      R"({"nodes": [
        {"id": "d", "kind": "source", "params": {"width": 16, "height": 16}},
        {"id": "s", "kind": "sampling", "params": {"r": 3.0}, "inputs": ["d"]},
        {"id": "p", "kind": "placement", "params": {"prefab": "tree"}, "inputs": ["s"]}
      ]})");
  const PipelineGraph big = parse_pipeline(
      R"({"nodes": [
        {"id": "zzz_extra", "kind": "source", "params": {"width": 8, "height": 8}},
        {"id": "d", "kind": "source", "params": {"width": 16, "height": 16}},
        {"id": "s", "kind": "sampling", "params": {"r": 3.0}, "inputs": ["d"]},
        {"id": "p", "kind": "placement", "params": {"prefab": "tree"}, "inputs": ["s"]}
      ]})");
  const auto a = evaluate(small, hm, Seed{9}, reg);
  const auto b = evaluate(big, hm, Seed{9}, reg);
  ASSERT_EQ(a.size(), 1u);
  ASSERT_EQ(b.size(), 1u);
  ASSERT_EQ(a[0].instances.size(), b[0].instances.size());
  for (std::size_t i = 0; i < a[0].instances.size(); ++i) {
    ASSERT_EQ(a[0].instances[i].position.x, b[0].instances[i].position.x);
    ASSERT_EQ(a[0].instances[i].position.y, b[0].instances[i].position.y);
    ASSERT_EQ(a[0].instances[i].spin, b[0].instances[i].spin);
  }
}

TEST(Evaluate, ZeroSpawnProbabilityYieldsZeroInstances) {
  // Density texture thresholded to zero everywhere -> spawn filter drops all.
  const PipelineGraph g = parse_pipeline(
      R"({"nodes": [
        {"id": "d", "kind": "source", "params": {"type": "noise", "amplitude": 0.0,
                                                 "width": 16, "height": 16}},
        {"id": "zero", "kind": "logic", "params": {"op": "threshold", "threshold": 2.0},
         "inputs": ["d"]},
        {"id": "s", "kind": "sampling", "params": {"r": 3.0}, "inputs": ["zero"]},
        {"id": "p", "kind": "placement", "params": {"prefab": "tree"}, "inputs": ["s"]}
      ]})");
  const auto placements = evaluate(g, flat_terrain(), Seed{3}, tree_registry());
  ASSERT_EQ(placements.size(), 1u);
  EXPECT_EQ(placements[0].instances.size(), 0u);
}

TEST(Evaluate, MissingPrefabThrows) {
  const PipelineGraph g = parse_pipeline(
      R"({"nodes": [
        {"id": "d", "kind": "source", "params": {"width": 16, "height": 16}},
        {"id": "s", "kind": "sampling", "params": {"r": 3.0}, "inputs": ["d"]},
        {"id": "p", "kind": "placement", "params": {"prefab": "nonesuch"}, "inputs": ["s"]}
      ]})");
  EXPECT_THROW(evaluate(g, flat_terrain(), Seed{3}, tree_registry()), std::runtime_error);
}

TEST(Evaluate, InvalidGraphThrows) {
  const PipelineGraph g = parse_pipeline(
      R"({"nodes": [{"id": "a", "kind": "logic", "params": {"op": "invert"},
                     "inputs": ["a"]}]})");
  EXPECT_THROW(evaluate(g, flat_terrain(), Seed{3}, tree_registry()), std::runtime_error);
}

TEST(Evaluate, ModulatedSamplingRespectsMinRadius) {
  const PipelineGraph g = parse_pipeline(
      R"({"nodes": [
        {"id": "one", "kind": "source", "params": {"type": "noise", "amplitude": 0.0,
                                                   "width": 16, "height": 16}},
        {"id": "keep", "kind": "logic", "params": {"op": "threshold", "threshold": 0.4},
         "inputs": ["one"]},
        {"id": "radius", "kind": "source", "params": {"width": 16, "height": 16}},
        {"id": "s", "kind": "sampling", "params": {"r_min": 2.0, "r_max": 6.0},
         "inputs": ["keep", "radius"]},
        {"id": "p", "kind": "placement", "params": {"prefab": "tree"}, "inputs": ["s"]}
      ]})");
  const auto placements = evaluate(g, flat_terrain(), Seed{21}, tree_registry());
  const auto& inst = placements[0].instances;
  ASSERT_GT(inst.size(), 1u);
  for (std::size_t i = 0; i < inst.size(); ++i) {
    for (std::size_t j = i + 1; j < inst.size(); ++j) {
      const double dx = inst[i].position.x - inst[j].position.x;
      const double dy = inst[i].position.y - inst[j].position.y;
      ASSERT_GE(std::sqrt(dx * dx + dy * dy), 2.0 - 1e-9);
    }
  }
}

}  // namespace
}  // namespace forge
