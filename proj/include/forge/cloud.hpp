#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "forge/geometry.hpp"

namespace forge {

// Closed label set, stable codes 0-8. Serialized as lowercase names in CSV.
enum class Label : std::uint8_t {
  kTerrain = 0,
  kTrunk = 1,
  kCanopy = 2,
  kBranches = 3,
  kBushes = 4,
  kUnderstorey = 5,
  kGrass = 6,
  kCactus = 7,
  kDeadwood = 8,
};

inline constexpr int kLabelCount = 9;

inline constexpr std::array<std::string_view, kLabelCount> kLabelNames = {
    "terrain", "trunk",       "canopy", "branches", "bushes",
    "understorey", "grass", "cactus", "deadwood"};

inline std::string_view label_name(Label l) {
  return kLabelNames[static_cast<std::size_t>(l)];
}

inline std::optional<Label> label_from_name(std::string_view name) {
  for (int i = 0; i < kLabelCount; ++i) {
    if (kLabelNames[static_cast<std::size_t>(i)] == name) {
      return static_cast<Label>(i);
    }
  }
  return std::nullopt;
}

struct PointRecord {
  Vec3 position;
  Label label = Label::kTerrain;
  std::uint32_t instance_id = 0;
};

// Instance ids 0 and 1 are reserved for terrain and grass respectively;
// prefab instances start at kFirstInstanceId.
inline constexpr std::uint32_t kTerrainInstanceId = 0;
inline constexpr std::uint32_t kGrassInstanceId = 1;
inline constexpr std::uint32_t kFirstInstanceId = 2;

struct LabeledPointCloud {
  std::vector<PointRecord> records;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
};

}  // namespace forge
