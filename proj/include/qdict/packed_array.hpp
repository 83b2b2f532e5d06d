#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace qdict {

/// Fixed-width integer array, width in [1, 64] bits, packed back to back.
class PackedArray {
 public:
  PackedArray() = default;
  PackedArray(std::uint64_t n, unsigned width) : n_(n), width_(width), words_(word_count(n, width), 0) {
    if (width < 1 || width > 64) throw std::invalid_argument("packed width must be in [1, 64]");
  }
  PackedArray(std::uint64_t n, unsigned width, std::vector<std::uint64_t> words)
      : n_(n), width_(width), words_(std::move(words)) {
    if (width < 1 || width > 64) throw std::invalid_argument("packed width must be in [1, 64]");
    if (words_.size() != word_count(n, width)) throw std::invalid_argument("packed array word count mismatch");
  }

  static std::uint64_t word_count(std::uint64_t n, unsigned width) noexcept { return (n * width + 63) / 64; }

  std::uint64_t get(std::uint64_t i) const noexcept {
    const std::uint64_t bit = i * width_;
    const std::uint64_t w = bit >> 6;
    const unsigned off = bit & 63;
    std::uint64_t v = words_[w] >> off;
    if (off + width_ > 64) v |= words_[w + 1] << (64 - off);
    return v & mask();
  }

  void set(std::uint64_t i, std::uint64_t value) noexcept {
    value &= mask();
    const std::uint64_t bit = i * width_;
    const std::uint64_t w = bit >> 6;
    const unsigned off = bit & 63;
    words_[w] = (words_[w] & ~(mask() << off)) | (value << off);
    if (off + width_ > 64) {
      const unsigned spill = off + width_ - 64;
      const std::uint64_t hi_mask = (std::uint64_t{1} << spill) - 1;
      words_[w + 1] = (words_[w + 1] & ~hi_mask) | (value >> (64 - off));
    }
  }

  std::uint64_t size() const noexcept { return n_; }
  unsigned width() const noexcept { return width_; }
  /// Exactly n * width.
  std::uint64_t payload_bits() const noexcept { return n_ * width_; }
  std::span<const std::uint64_t> words() const noexcept { return words_; }

 private:
  std::uint64_t mask() const noexcept {
    return width_ == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << width_) - 1;
  }

  std::uint64_t n_ = 0;
  unsigned width_ = 1;
  std::vector<std::uint64_t> words_;
};

}  // namespace qdict
