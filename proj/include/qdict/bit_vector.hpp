#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <span>
#include <vector>

namespace qdict {

/// Plain bit array over 64-bit words.
class BitVector {
 public:
  BitVector() = default;
  explicit BitVector(std::uint64_t n_bits) : n_bits_(n_bits), words_((n_bits + 63) / 64, 0) {}
  BitVector(std::uint64_t n_bits, std::vector<std::uint64_t> words)
      : n_bits_(n_bits), words_(std::move(words)) {}

  std::uint64_t size() const noexcept { return n_bits_; }

  bool test(std::uint64_t i) const noexcept { return (words_[i >> 6] >> (i & 63)) & 1; }
  void set(std::uint64_t i) noexcept { words_[i >> 6] |= std::uint64_t{1} << (i & 63); }

  std::uint64_t popcount() const noexcept {
    std::uint64_t n = 0;
    for (std::uint64_t w : words_) n += static_cast<std::uint64_t>(std::popcount(w));
    return n;
  }

  std::span<const std::uint64_t> words() const noexcept { return words_; }
  std::span<std::uint64_t> words() noexcept { return words_; }

  std::uint64_t size_in_bits() const noexcept { return words_.size() * 64; }

 private:
  std::uint64_t n_bits_ = 0;
  std::vector<std::uint64_t> words_;
};

/// Bit vector with constant-time rank: one cumulative count per 512-bit block.
class RankedBitVector {
 public:
  static constexpr std::uint64_t kBlockBits = 512;
  static constexpr std::uint64_t kBlockWords = kBlockBits / 64;

  RankedBitVector() = default;
  explicit RankedBitVector(BitVector bits) : bits_(std::move(bits)) { build_rank(); }

  /// Rebuilds from serialized parts; returns false if blocks disagree with bits.
  static bool from_parts(BitVector bits, std::vector<std::uint64_t> blocks, RankedBitVector& out) {
    out.bits_ = std::move(bits);
    out.build_rank();
    return out.blocks_ == blocks;
  }

  bool test(std::uint64_t i) const noexcept { return bits_.test(i); }

  /// Number of set bits strictly before position i.
  std::uint64_t rank(std::uint64_t i) const noexcept {
    const auto w = bits_.words();
    const std::uint64_t word = i >> 6;
    std::uint64_t r = blocks_[i / kBlockBits];
    for (std::uint64_t j = (i / kBlockBits) * kBlockWords; j < word; ++j) {
      r += static_cast<std::uint64_t>(std::popcount(w[j]));
    }
    const std::uint64_t rem = i & 63;
    if (rem != 0) r += static_cast<std::uint64_t>(std::popcount(w[word] & ((std::uint64_t{1} << rem) - 1)));
    return r;
  }

  std::uint64_t size() const noexcept { return bits_.size(); }
  std::uint64_t ones() const noexcept { return ones_; }
  const BitVector& bits() const noexcept { return bits_; }
  std::span<const std::uint64_t> blocks() const noexcept { return blocks_; }

  std::uint64_t size_in_bits() const noexcept { return bits_.size_in_bits() + blocks_.size() * 64; }

 private:
  void build_rank() {
    const auto w = bits_.words();
    blocks_.assign((w.size() + kBlockWords - 1) / kBlockWords + 1, 0);
    std::uint64_t acc = 0;
    for (std::size_t b = 0; b + 1 < blocks_.size(); ++b) {
      blocks_[b] = acc;
      const std::size_t end = std::min(w.size(), (b + 1) * kBlockWords);
      for (std::size_t j = b * kBlockWords; j < end; ++j) acc += static_cast<std::uint64_t>(std::popcount(w[j]));
    }
    blocks_.back() = acc;
    ones_ = acc;
  }

  BitVector bits_;
  std::vector<std::uint64_t> blocks_;
  std::uint64_t ones_ = 0;
};

}  // namespace qdict
