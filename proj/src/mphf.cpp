#include "qdict/mphf.hpp"

#include <istream>
#include <ostream>

#include "qdict/errors.hpp"
#include "qdict/serialize.hpp"

namespace qdict {

namespace {
constexpr std::string_view kMagic = "QDMPHF01";
constexpr std::uint64_t kMaxWords = std::uint64_t{1} << 40;
}  // namespace

void Mphf::set_fallback(std::vector<std::uint64_t> keys, std::uint64_t offset) {
  std::sort(keys.begin(), keys.end());
  if (std::adjacent_find(keys.begin(), keys.end()) != keys.end()) {
    throw std::invalid_argument("duplicate key in MPHF construction set");
  }
  fallback_.clear();
  fallback_.reserve(keys.size());
  for (std::uint64_t key : keys) fallback_.emplace_back(key, offset++);
}

std::uint64_t Mphf::fallback_lookup(std::uint64_t key) const noexcept {
  const auto it = std::lower_bound(fallback_.begin(), fallback_.end(), key,
                                   [](const auto& e, std::uint64_t k) { return e.first < k; });
  if (it != fallback_.end() && it->first == key) return it->second;
  return kNotFound;
}

std::uint64_t Mphf::size_in_bits() const noexcept {
  std::uint64_t bits = first_collisions_.size_in_bits() + fallback_.size() * 128;
  for (const Level& lv : levels_) bits += lv.bits.size_in_bits() + 128;
  return bits;
}

void Mphf::serialize(std::ostream& os) const {
  io::write_magic(os, kMagic);
  io::write_u64(os, n_keys_);
  io::write_f64(os, gamma_);
  io::write_u64(os, seed_);
  io::write_u32(os, static_cast<std::uint32_t>(levels_.size()));
  for (const Level& lv : levels_) {
    io::write_u64(os, lv.bits.size());
    io::write_u64(os, lv.seed);
    io::write_words(os, lv.bits.bits().words());
    io::write_words(os, lv.bits.blocks());
  }
  io::write_u64(os, first_collisions_.size());
  io::write_words(os, first_collisions_.words());
  io::write_u64(os, fallback_.size());
  for (const auto& [key, index] : fallback_) {
    io::write_u64(os, key);
    io::write_u64(os, index);
  }
  if (!os) throw IoError("MPHF write failed");
}

Mphf Mphf::deserialize(std::istream& is) {
  io::expect_magic(is, kMagic);
  Mphf m;
  m.n_keys_ = io::read_u64(is);
  m.gamma_ = io::read_f64(is);
  m.seed_ = io::read_u64(is);
  const std::uint32_t n_levels = io::read_u32(is);
  if (n_levels > 64) throw FormatError("MPHF: too many levels");

  std::uint64_t offset = 0;
  for (std::uint32_t l = 0; l < n_levels; ++l) {
    const std::uint64_t size = io::read_u64(is);
    const std::uint64_t seed = io::read_u64(is);
    auto words = io::read_words(is, kMaxWords);
    if (words.size() != (size + 63) / 64) throw FormatError("MPHF: level size mismatch");
    auto blocks = io::read_words(is, kMaxWords);
    Level lv{seed, offset, {}};
    if (!RankedBitVector::from_parts(BitVector(size, std::move(words)), std::move(blocks), lv.bits)) {
      throw FormatError("MPHF: rank blocks inconsistent with level bits");
    }
    offset += lv.bits.ones();
    m.levels_.push_back(std::move(lv));
  }

  const std::uint64_t coll_size = io::read_u64(is);
  auto coll_words = io::read_words(is, kMaxWords);
  if (coll_words.size() != (coll_size + 63) / 64) throw FormatError("MPHF: collision bitmap size mismatch");
  if (!m.levels_.empty() && coll_size != m.levels_.front().bits.size()) {
    throw FormatError("MPHF: collision bitmap does not match first level");
  }
  m.first_collisions_ = BitVector(coll_size, std::move(coll_words));

  const std::uint64_t n_fallback = io::read_u64(is);
  if (n_fallback > m.n_keys_) throw FormatError("MPHF: corrupt fallback size");
  m.fallback_.reserve(n_fallback);
  for (std::uint64_t i = 0; i < n_fallback; ++i) {
    const std::uint64_t key = io::read_u64(is);
    const std::uint64_t index = io::read_u64(is);
    if (!m.fallback_.empty() && m.fallback_.back().first >= key) throw FormatError("MPHF: fallback not sorted");
    m.fallback_.emplace_back(key, index);
  }
  if (offset + n_fallback != m.n_keys_) throw FormatError("MPHF: key count mismatch");
  return m;
}

}  // namespace qdict
