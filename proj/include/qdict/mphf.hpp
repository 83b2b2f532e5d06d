#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "qdict/bit_vector.hpp"

namespace qdict {

struct MphfOptions {
  double gamma = 2.0;
  std::uint64_t seed = 1337;
  int max_levels = 32;
  // Streaming sources are re-read until this fraction of keys is left
  // unresolved; the survivors are then held in memory.
  double materialize_fraction = 0.125;
};

/// 64-bit avalanche mix of (key, level seed); splitmix64 finalizer applied to
/// key ^ seed. Part of the serialized format: changing it breaks indexes.
constexpr std::uint64_t mix_key(std::uint64_t key, std::uint64_t seed) noexcept {
  std::uint64_t x = (key ^ seed) + 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Maps a hash onto [0, n) without division.
constexpr std::uint64_t reduce(std::uint64_t h, std::uint64_t n) noexcept {
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(h) * n) >> 64);
}

/// Deterministic per-level seed stream derived from the master seed.
constexpr std::uint64_t level_seed(std::uint64_t master, int level) noexcept {
  std::uint64_t s = master;
  std::uint64_t out = 0;
  for (int i = 0; i <= level; ++i) {
    s += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    out = z ^ (z >> 31);
  }
  return out;
}

/// Minimal perfect hash over a static set of 64-bit keys.
///
/// Keys are cascaded through bit levels: level l has ceil(gamma * remaining)
/// bits, a bit is kept when exactly one remaining key hashes to it, and keys
/// that collided move on to level l + 1. The index of a key is the rank of
/// its bit plus the number of keys resolved by earlier levels. Keys still
/// unresolved after max_levels go to a small sorted fallback table.
///
/// The first level also keeps its collision bitmap. A key whose first-level
/// slot is neither a singleton nor a collision cannot belong to the set, which
/// lets most alien keys be rejected with a single probe.
class Mphf {
 public:
  static constexpr std::uint64_t kNotFound = std::numeric_limits<std::uint64_t>::max();

  Mphf() = default;

  /// source(visit) must call visit(key) once per key, in the same order on
  /// every invocation; it may be invoked several times.
  template <typename KeySource>
  static Mphf build_from(KeySource&& source, const MphfOptions& opts = {});

  static Mphf build(std::span<const std::uint64_t> keys, const MphfOptions& opts = {}) {
    return build_from([keys](auto&& visit) {
      for (std::uint64_t k : keys) visit(k);
    }, opts);
  }

  /// Index in [0, N) for construction keys; kNotFound or an arbitrary index
  /// for alien keys.
  std::uint64_t lookup(std::uint64_t key) const noexcept {
    for (std::size_t l = 0; l < levels_.size(); ++l) {
      const Level& lv = levels_[l];
      const std::uint64_t pos = reduce(mix_key(key, lv.seed), lv.bits.size());
      if (lv.bits.test(pos)) return lv.offset + lv.bits.rank(pos);
      if (l == 0 && !first_collisions_.test(pos)) return kNotFound;
    }
    return fallback_lookup(key);
  }

  /// Batched lookup: out[i] = lookup(keys[i]). First-level words are
  /// prefetched for a group of keys before any of them is resolved.
  void lookup_many(std::span<const std::uint64_t> keys, std::span<std::uint64_t> out) const noexcept {
    constexpr std::size_t kGroup = 16;
    if (levels_.empty()) {
      std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(keys.size()), kNotFound);
      return;
    }
    const Level& first = levels_.front();
    const std::uint64_t* single = first.bits.bits().words().data();
    const std::uint64_t* coll = first_collisions_.words().data();
    const std::uint64_t* blocks = first.bits.blocks().data();
    std::uint64_t pos[kGroup];
    for (std::size_t base = 0; base < keys.size(); base += kGroup) {
      const std::size_t n = std::min(kGroup, keys.size() - base);
      for (std::size_t i = 0; i < n; ++i) {
        pos[i] = reduce(mix_key(keys[base + i], first.seed), first.bits.size());
        __builtin_prefetch(single + (pos[i] >> 6));
        __builtin_prefetch(coll + (pos[i] >> 6));
        __builtin_prefetch(blocks + pos[i] / RankedBitVector::kBlockBits);
      }
      for (std::size_t i = 0; i < n; ++i) {
        if (first.bits.test(pos[i])) {
          out[base + i] = first.offset + first.bits.rank(pos[i]);
        } else if (!first_collisions_.test(pos[i])) {
          out[base + i] = kNotFound;
        } else {
          out[base + i] = lookup_from_level(keys[base + i], 1);
        }
      }
    }
  }

  std::uint64_t size() const noexcept { return n_keys_; }
  double gamma() const noexcept { return gamma_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t level_count() const noexcept { return levels_.size(); }
  std::size_t fallback_size() const noexcept { return fallback_.size(); }

  /// Bits held by level arrays, rank blocks, the collision bitmap and the
  /// fallback table.
  std::uint64_t size_in_bits() const noexcept;

  void serialize(std::ostream& os) const;
  static Mphf deserialize(std::istream& is);

 private:
  struct Level {
    std::uint64_t seed = 0;
    std::uint64_t offset = 0;
    RankedBitVector bits;
  };

  std::uint64_t lookup_from_level(std::uint64_t key, std::size_t level) const noexcept {
    for (std::size_t l = level; l < levels_.size(); ++l) {
      const Level& lv = levels_[l];
      const std::uint64_t pos = reduce(mix_key(key, lv.seed), lv.bits.size());
      if (lv.bits.test(pos)) return lv.offset + lv.bits.rank(pos);
    }
    return fallback_lookup(key);
  }

  bool resolved_before(std::uint64_t key, std::size_t n_levels) const noexcept {
    for (std::size_t l = 0; l < n_levels; ++l) {
      const Level& lv = levels_[l];
      if (lv.bits.test(reduce(mix_key(key, lv.seed), lv.bits.size()))) return true;
    }
    return false;
  }

  std::uint64_t fallback_lookup(std::uint64_t key) const noexcept;
  void set_fallback(std::vector<std::uint64_t> keys, std::uint64_t offset);

  std::vector<Level> levels_;
  BitVector first_collisions_;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> fallback_;  // sorted by key
  std::uint64_t n_keys_ = 0;
  double gamma_ = 2.0;
  std::uint64_t seed_ = 1337;
};

template <typename KeySource>
Mphf Mphf::build_from(KeySource&& source, const MphfOptions& opts) {
  if (!(opts.gamma > 1.0)) throw std::invalid_argument("gamma must be > 1");
  if (opts.max_levels < 1 || opts.max_levels > 64) throw std::invalid_argument("max_levels must be in [1, 64]");

  Mphf m;
  m.gamma_ = opts.gamma;
  m.seed_ = opts.seed;

  std::uint64_t n = 0;
  source([&n](std::uint64_t) { ++n; });
  m.n_keys_ = n;

  std::vector<std::uint64_t> held;
  bool materialized = false;
  const auto materialize = [&](std::size_t n_levels) {
    source([&](std::uint64_t key) {
      if (!m.resolved_before(key, n_levels)) held.push_back(key);
    });
    materialized = true;
  };
  const auto small_enough = [&](std::uint64_t remaining) {
    return remaining <= std::max<std::uint64_t>(1u << 16,
                                                static_cast<std::uint64_t>(opts.materialize_fraction * static_cast<double>(n)));
  };
  if (small_enough(n)) materialize(0);

  std::uint64_t remaining = n;
  std::uint64_t offset = 0;
  for (int level = 0; level < opts.max_levels && remaining > 0; ++level) {
    const std::uint64_t size = std::max<std::uint64_t>(
        1, static_cast<std::uint64_t>(std::ceil(opts.gamma * static_cast<double>(remaining))));
    const std::uint64_t seed = level_seed(opts.seed, level);
    BitVector seen(size);
    BitVector collided(size);
    const auto mark = [&](std::uint64_t key) {
      const std::uint64_t pos = reduce(mix_key(key, seed), size);
      if (seen.test(pos)) {
        collided.set(pos);
      } else {
        seen.set(pos);
      }
    };
    if (materialized) {
      for (std::uint64_t key : held) mark(key);
    } else {
      const auto lvl = static_cast<std::size_t>(level);
      source([&](std::uint64_t key) {
        if (!m.resolved_before(key, lvl)) mark(key);
      });
    }

    auto single = seen.words();
    const auto coll = collided.words();
    for (std::size_t i = 0; i < single.size(); ++i) single[i] &= ~coll[i];

    Level lv{seed, offset, RankedBitVector(std::move(seen))};
    const std::uint64_t resolved = lv.bits.ones();
    offset += resolved;
    remaining -= resolved;
    m.levels_.push_back(std::move(lv));
    if (level == 0) m.first_collisions_ = std::move(collided);

    if (materialized) {
      const Level& last = m.levels_.back();
      std::erase_if(held, [&](std::uint64_t key) {
        return last.bits.test(reduce(mix_key(key, last.seed), last.bits.size()));
      });
    } else if (small_enough(remaining)) {
      materialize(m.levels_.size());
    }
  }

  if (remaining > 0) {
    if (!materialized) materialize(m.levels_.size());
    m.set_fallback(std::move(held), offset);
  }
  return m;
}

}  // namespace qdict
