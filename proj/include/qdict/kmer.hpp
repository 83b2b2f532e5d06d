#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qdict {

// Longest supported k-mer: 2k bits must fit in 62 so that the code and an
// exact-mode fingerprint share one 64-bit word.
inline constexpr int kMaxK = 31;

// A=0, C=1, G=2, T=3; anything else maps to 4.
inline constexpr std::uint8_t kInvalidBase = 4;

constexpr std::uint8_t encode_base(char c) noexcept {
  switch (c) {
    case 'A': case 'a': return 0;
    case 'C': case 'c': return 1;
    case 'G': case 'g': return 2;
    case 'T': case 't': return 3;
    default: return kInvalidBase;
  }
}

constexpr char decode_base(std::uint64_t b) noexcept { return "ACGT"[b & 3]; }

constexpr std::uint64_t kmer_mask(int k) noexcept {
  return k >= 32 ? ~std::uint64_t{0} : (std::uint64_t{1} << (2 * k)) - 1;
}

inline void check_k(int k) {
  if (k < 1 || k > kMaxK) throw std::invalid_argument("k must be in [1, 31]");
}

/// Packs a k-base window, first base in the most significant bit pair.
/// Returns nullopt when the window holds a non-ACGT character.
std::optional<std::uint64_t> encode_kmer(std::string_view window);

std::string decode_kmer(std::uint64_t code, int k);

/// Reverse complement of a packed k-mer.
constexpr std::uint64_t reverse_complement(std::uint64_t code, int k) noexcept {
  // Complement is 3 - b for every 2-bit base, i.e. bitwise not.
  std::uint64_t x = ~code;
  // Reverse the order of the 32 two-bit groups.
  x = ((x >> 2) & 0x3333333333333333ULL) | ((x & 0x3333333333333333ULL) << 2);
  x = ((x >> 4) & 0x0F0F0F0F0F0F0F0FULL) | ((x & 0x0F0F0F0F0F0F0F0FULL) << 4);
  x = ((x >> 8) & 0x00FF00FF00FF00FFULL) | ((x & 0x00FF00FF00FF00FFULL) << 8);
  x = ((x >> 16) & 0x0000FFFF0000FFFFULL) | ((x & 0x0000FFFF0000FFFFULL) << 16);
  x = (x >> 32) | (x << 32);
  return x >> (64 - 2 * k);
}

/// Strand-independent k-mer: the smaller of a code and its reverse complement.
class CanonicalKmer {
 public:
  CanonicalKmer() = default;

  static CanonicalKmer from_code(std::uint64_t code, int k) {
    const std::uint64_t rc = reverse_complement(code, k);
    return CanonicalKmer(code < rc ? code : rc, k);
  }

  std::uint64_t code() const noexcept { return code_; }
  int k() const noexcept { return k_; }
  std::string str() const { return decode_kmer(code_, k_); }

  friend bool operator==(const CanonicalKmer&, const CanonicalKmer&) = default;
  friend auto operator<=>(const CanonicalKmer&, const CanonicalKmer&) = default;

 private:
  CanonicalKmer(std::uint64_t code, int k) : code_(code), k_(k) {}

  std::uint64_t code_ = 0;
  int k_ = 0;
};

inline CanonicalKmer canonicalize(std::uint64_t code, int k) {
  return CanonicalKmer::from_code(code, k);
}

struct ReadRecord {
  std::uint64_t id = 0;  // 0-based ordinal in file order
  std::string sequence;
  std::string name;
};

struct PositionedKmer {
  std::size_t position;
  CanonicalKmer kmer;

  friend bool operator==(const PositionedKmer&, const PositionedKmer&) = default;
};

/// Calls fn(position, canonical_code) for every ACGT-only window of seq, in
/// increasing position. Windows touching other characters are skipped
/// without renumbering the remaining positions.
template <typename Fn>
void for_each_canonical_kmer(std::string_view seq, int k, Fn&& fn) {
  const std::uint64_t mask = kmer_mask(k);
  const int rc_shift = 2 * (k - 1);
  std::uint64_t fwd = 0;
  std::uint64_t rev = 0;
  int valid = 0;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const std::uint8_t b = encode_base(seq[i]);
    if (b == kInvalidBase) {
      valid = 0;
      fwd = rev = 0;
      continue;
    }
    fwd = ((fwd << 2) | b) & mask;
    rev = (rev >> 2) | (std::uint64_t{3u - b} << rc_shift);
    if (++valid >= k) fn(i + 1 - static_cast<std::size_t>(k), fwd < rev ? fwd : rev);
  }
}

std::vector<PositionedKmer> enumerate_kmers(const ReadRecord& read, int k);

/// Number of ACGT-only windows of length k in seq.
std::size_t count_valid_windows(std::string_view seq, int k);

}  // namespace qdict
