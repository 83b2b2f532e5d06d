#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qdict/kmer.hpp"

namespace qdict {

/// Canonical k-mers occurring at least t times in a read set, ascending by
/// code, with their exact occurrence counts.
class SolidKmerSet {
 public:
  SolidKmerSet() = default;
  SolidKmerSet(int k, std::uint64_t t) : k_(k), t_(t) {}

  int k() const noexcept { return k_; }
  std::uint64_t solidity() const noexcept { return t_; }
  std::size_t size() const noexcept { return codes_.size(); }
  bool empty() const noexcept { return codes_.empty(); }

  std::span<const std::uint64_t> codes() const noexcept { return codes_; }
  std::span<const std::uint64_t> counts() const noexcept { return counts_; }
  CanonicalKmer kmer(std::size_t i) const { return CanonicalKmer::from_code(codes_[i], k_); }

  /// Distinct canonical k-mers seen, solid or not.
  std::uint64_t n_distinct_total() const noexcept { return n_distinct_; }
  /// Valid k-mer windows read from the input.
  std::uint64_t n_windows() const noexcept { return n_windows_; }

  void clear_storage() {
    codes_ = {};
    counts_ = {};
  }

 private:
  friend class SolidKmerCounter;
  int k_ = 31;
  std::uint64_t t_ = 1;
  std::vector<std::uint64_t> codes_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t n_distinct_ = 0;
  std::uint64_t n_windows_ = 0;
};

struct CountOptions {
  // Above this estimate (8 bytes per window) k-mers are spilled to
  // minimizer partitions on disk and counted one partition at a time.
  std::uint64_t memory_budget = std::uint64_t{4} << 30;
  std::string tmp_dir;  // empty: system temp directory
  int minimizer_length = 10;
};

/// Exact counting of canonical k-mers.
///
/// Small inputs are counted by an in-memory sort. Larger inputs are split by
/// the minimizer of each k-mer (minimum hash over its canonical m-mers, which
/// is strand independent); runs of consecutive k-mers that fall in the same
/// partition are written once as a super-k-mer, and each partition file is
/// then counted independently.
class SolidKmerCounter {
 public:
  SolidKmerCounter(int k, std::uint64_t t, CountOptions opts = {});

  SolidKmerSet count_file(const std::string& path) const;
  SolidKmerSet count_reads(std::span<const ReadRecord> reads) const;

  /// Number of partitions the spill path would use for the given window count.
  std::size_t partitions_for(std::uint64_t n_windows) const noexcept;

 private:
  template <typename ForEachRead>
  SolidKmerSet run(ForEachRead&& for_each_read) const;

  int k_;
  std::uint64_t t_;
  CountOptions opts_;
};

inline SolidKmerSet count_solid_kmers(const std::string& path, int k, std::uint64_t t, CountOptions opts = {}) {
  return SolidKmerCounter(k, t, std::move(opts)).count_file(path);
}

}  // namespace qdict
