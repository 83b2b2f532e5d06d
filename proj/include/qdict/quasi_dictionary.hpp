#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qdict/kmer.hpp"
#include "qdict/mphf.hpp"
#include "qdict/packed_array.hpp"

namespace qdict {

/// xorshift64 (13, 7, 17) of the code, truncated to the low f bits.
/// fingerprint(0, f) is 0.
constexpr std::uint64_t fingerprint(std::uint64_t code, unsigned f) noexcept {
  std::uint64_t x = code;
  x ^= x << 13;
  x ^= x >> 7;
  x ^= x << 17;
  return f >= 64 ? x : x & ((std::uint64_t{1} << f) - 1);
}

struct QueryResult {
  static constexpr std::int64_t kNotIndexed = -1;
  std::int64_t index = kNotIndexed;

  bool found() const noexcept { return index >= 0; }
  explicit operator bool() const noexcept { return found(); }
  friend bool operator==(const QueryResult&, const QueryResult&) = default;
};

/// Static probabilistic dictionary over canonical k-mer codes: an MPHF plus
/// one f-bit fingerprint per key. Indexed k-mers always get their index back;
/// an alien k-mer gets -1 unless the MPHF hands it a slot and the fingerprint
/// in that slot matches (probability about 2^-f once the slot is handed out).
///
/// With f == 2k the stored "fingerprint" is the code itself, so the
/// structure answers exactly.
class QuasiDictionary {
 public:
  static constexpr std::int64_t kNotIndexed = QueryResult::kNotIndexed;

  QuasiDictionary() = default;

  static QuasiDictionary build(std::span<const std::uint64_t> codes, int k, unsigned f,
                               const MphfOptions& opts = {}) {
    return build_from([codes](auto&& visit) {
      for (std::uint64_t c : codes) visit(c);
    }, k, f, opts);
  }

  /// source(visit) replays the key set; see Mphf::build_from.
  template <typename KeySource>
  static QuasiDictionary build_from(KeySource&& source, int k, unsigned f, const MphfOptions& opts = {}) {
    validate(k, f);
    QuasiDictionary qd;
    qd.k_ = k;
    qd.f_ = f;
    qd.mphf_ = Mphf::build_from(source, opts);
    qd.fingerprints_ = PackedArray(qd.mphf_.size(), f);
    source([&qd](std::uint64_t code) { qd.fingerprints_.set(qd.mphf_.lookup(code), qd.stored_fingerprint(code)); });
    return qd;
  }

  static void validate(int k, unsigned f);

  std::int64_t lookup(std::uint64_t code) const noexcept {
    const std::uint64_t idx = mphf_.lookup(code);
    if (idx == Mphf::kNotFound) return kNotIndexed;
    if (fingerprints_.get(idx) != stored_fingerprint(code)) return kNotIndexed;
    return static_cast<std::int64_t>(idx);
  }

  /// Batched lookup; same answers as lookup() on each code. Scratch must
  /// hold at least codes.size() entries.
  void lookup_many(std::span<const std::uint64_t> codes, std::span<std::int64_t> out,
                   std::span<std::uint64_t> scratch) const noexcept {
    mphf_.lookup_many(codes, scratch);
    const std::uint64_t* fp_words = fingerprints_.words().data();
    for (std::size_t i = 0; i < codes.size(); ++i) {
      if (scratch[i] != Mphf::kNotFound) __builtin_prefetch(fp_words + scratch[i] * f_ / 64);
    }
    for (std::size_t i = 0; i < codes.size(); ++i) {
      const std::uint64_t idx = scratch[i];
      out[i] = (idx != Mphf::kNotFound && fingerprints_.get(idx) == stored_fingerprint(codes[i]))
                   ? static_cast<std::int64_t>(idx)
                   : kNotIndexed;
    }
  }

  QueryResult query(const CanonicalKmer& w) const noexcept { return {lookup(w.code())}; }

  /// Fingerprint as stored: identity in exact mode, xorshift otherwise.
  std::uint64_t stored_fingerprint(std::uint64_t code) const noexcept {
    return exact() ? code : fingerprint(code, f_);
  }

  int k() const noexcept { return k_; }
  unsigned f() const noexcept { return f_; }
  bool exact() const noexcept { return static_cast<int>(f_) == 2 * k_; }
  std::uint64_t size() const noexcept { return mphf_.size(); }
  const Mphf& mphf() const noexcept { return mphf_; }
  const PackedArray& fingerprints() const noexcept { return fingerprints_; }

  std::uint64_t payload_bits() const noexcept { return fingerprints_.payload_bits(); }
  std::uint64_t size_in_bits() const noexcept { return mphf_.size_in_bits() + fingerprints_.words().size() * 64; }

  /// Writes header, MPHF and fingerprints (no trailing sections).
  void serialize(std::ostream& os) const;
  static QuasiDictionary deserialize(std::istream& is);

 private:
  Mphf mphf_;
  PackedArray fingerprints_;
  int k_ = 31;
  unsigned f_ = 12;
};

/// Calls fn(position, index) for every window of seq whose canonical k-mer
/// the dictionary reports as indexed, in position order.
template <typename Fn>
void for_each_indexed_kmer(const QuasiDictionary& qd, std::string_view seq, Fn&& fn) {
  thread_local std::vector<std::uint64_t> codes;
  thread_local std::vector<std::size_t> positions;
  thread_local std::vector<std::int64_t> found;
  thread_local std::vector<std::uint64_t> scratch;
  codes.clear();
  positions.clear();
  for_each_canonical_kmer(seq, qd.k(), [](std::size_t pos, std::uint64_t code) {
    positions.push_back(pos);
    codes.push_back(code);
  });
  found.resize(codes.size());
  scratch.resize(codes.size());
  qd.lookup_many(codes, found, scratch);
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (found[i] >= 0) fn(positions[i], static_cast<std::uint64_t>(found[i]));
  }
}

/// Index file contents: the dictionary plus optional per-index payloads.
struct StoredIndex {
  QuasiDictionary qd;
  int solidity = 0;                   // 0 when unknown
  std::vector<std::uint8_t> counts;   // empty when the file has no count table
  bool has_counts = false;
};

/// Index file: magic "QDIX0001", u32 k, u32 f, u32 t, u64 N, f64 gamma,
/// u64 seed, MPHF blob, fingerprint words, then tagged sections
/// (u32 count, each: 4-byte tag, u64 length, bytes). All little-endian.
void save_index(const std::string& path, const QuasiDictionary& qd, int solidity = 0,
                const std::vector<std::uint8_t>* counts = nullptr);
StoredIndex load_index(const std::string& path);

}  // namespace qdict
