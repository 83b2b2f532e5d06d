#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "qdict/index_params.hpp"
#include "qdict/kmer_counter.hpp"
#include "qdict/quasi_dictionary.hpp"

namespace qdict {

inline constexpr std::uint8_t kCountSaturation = 255;

/// Quasi-dictionary over the solid bank k-mers plus one saturating 8-bit
/// occurrence counter per index.
struct CountIndex {
  QuasiDictionary qd;
  std::vector<std::uint8_t> counts;
  std::uint64_t solidity = 0;
};

struct AbundanceRecord {
  std::uint64_t read_id = 0;
  std::uint64_t n_kmers = 0;  // query k-mers with an index
  double mean = 0.0;
  std::uint32_t median = 0;   // upper median
  std::uint32_t min = 0;
  std::uint32_t max = 0;

  bool no_hit() const noexcept { return n_kmers == 0; }
  friend bool operator==(const AbundanceRecord&, const AbundanceRecord&) = default;
};

CountIndex build_count_index(const SolidKmerSet& solid, unsigned f, const MphfOptions& opts = {});
CountIndex build_count_index(const std::string& bank_path, const IndexParams& params);

AbundanceRecord estimate_read_abundance(const QuasiDictionary& qd, std::span<const std::uint8_t> counts,
                                        const ReadRecord& q);

/// Builds the record from already-collected counts (in any order).
AbundanceRecord summarize_counts(std::uint64_t read_id, std::vector<std::uint32_t> counts);

/// One TSV line, newline-terminated. No-hit reads print '*' in the four
/// statistic columns.
std::string format_abundance(const AbundanceRecord& rec);

void write_counter_header(std::ostream& os, const CountIndex& index);

struct CounterRun {
  std::string query_path;
  std::string out_path;  // "-" for stdout
  int threads = 1;
};

/// Streams the query file and writes one record per read, in input order.
void run_src_counter(const CountIndex& index, const CounterRun& run);

}  // namespace qdict
