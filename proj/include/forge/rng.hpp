#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>
#include <cmath>

namespace forge {

// Scene seed. Equal seeds with equal configs give byte-identical outputs.
struct Seed {
  std::uint64_t value = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// FNV-1a over a label, mixed through splitmix64 so single-character labels
// still land far apart.
inline std::uint64_t hash_label(std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::uint64_t s = h;
  return splitmix64(s);
}

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  return splitmix64(s);
}

}  // namespace detail

// Deterministic stream with hash-based derivation: a child stream is a pure
// function of (parent lineage, label), so consuming draws from one stream
// never perturbs any other stream. Generator is splitmix64 (pinned; see
// README for the bit-stability contract).
class RngStream {
 public:
  RngStream() = default;

  explicit RngStream(Seed seed) : key_(detail::mix(0x5eed5eed5eed5eedULL, seed.value)), state_(key_) {}

  RngStream derive(std::string_view label) const {
    if (label.empty()) throw std::invalid_argument("derive: empty label");
    RngStream child;
    child.key_ = detail::mix(key_, detail::hash_label(label));
    child.state_ = child.key_;
    child.lineage_ = lineage_;
    child.lineage_.emplace_back(label);
    return child;
  }

  RngStream derive(std::uint64_t index) const {
    RngStream child;
    child.key_ = detail::mix(key_, detail::splitmix64(index));
    child.state_ = child.key_;
    child.lineage_ = lineage_;
    child.lineage_.push_back("#" + std::to_string(index));
    return child;
  }

  std::uint64_t next_u64() { return detail::splitmix64(state_); }

  // Uniform in [lo, hi); advances the stream exactly one step.
  double uniform(double lo, double hi) {
    if (lo > hi) throw std::invalid_argument("uniform: lo > hi");
    const double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    return lo + u * (hi - lo);
  }

  double uniform01() { return uniform(0.0, 1.0); }

  // Integer in [0, n). n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: n == 0");
    return next_u64() % n;
  }

  // Gaussian draw via Box-Muller. sigma == 0 returns mean exactly.
  double normal(double mean, double sigma) {
    if (sigma < 0.0) throw std::invalid_argument("normal: sigma < 0");
    if (sigma == 0.0) return mean;
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    constexpr double two_pi = 6.283185307179586476925286766559;
    return mean + sigma * (r * std::cos(two_pi * u2));
  }

  std::uint64_t key() const { return key_; }
  const std::vector<std::string>& lineage() const { return lineage_; }

 private:
  std::uint64_t key_ = 0x5eed5eed5eed5eedULL;
  std::uint64_t state_ = 0x5eed5eed5eed5eedULL;
  std::vector<std::string> lineage_;
};

inline RngStream derive_stream(const RngStream& parent, std::string_view label) {
  return parent.derive(label);
}

}  // namespace forge
