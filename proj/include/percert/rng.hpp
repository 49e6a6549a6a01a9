#pragma once

#include <cstdint>

namespace percert {

// Finalizer-style 64-bit mixer (splitmix64 output stage). Bijective, so
// derived seeds never collide for distinct inputs.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based replica seed: reproducible per (master, index) pair and
// independent of execution order. index -> master + (index+1)*odd is
// injective, and mix64 is a bijection, so distinct indices give distinct
// seeds.
constexpr std::uint64_t replica_seed(std::uint64_t master_seed, std::uint64_t replica_index) noexcept {
  return mix64(master_seed + (replica_index + 1) * 0x9e3779b97f4a7c15ULL);
}

// Uniform in [0,1) keyed by (stream seed, 64-bit key). Each edge carries its
// own key, so the draw for an edge is a pure function of (replica, edge):
// exploration order, thread partitioning, and region representation cannot
// change it. For a fixed stream, distinct keys map to distinct outputs.
constexpr std::uint64_t keyed_bits(std::uint64_t stream, std::uint64_t key) noexcept {
  return mix64(stream ^ mix64(key));
}

constexpr double to_unit(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

constexpr double keyed_uniform(std::uint64_t stream, std::uint64_t key) noexcept {
  return to_unit(keyed_bits(stream, key));
}

// FNV-1a over raw bytes; used for stable content hashes (spec hash, edge keys).
constexpr std::uint64_t fnv1a(const char* data, std::size_t n,
                              std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) noexcept {
  return mix64(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

}  // namespace percert
