#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace qdict::bench {

/// Bijection on [0, 2^62): distinct inputs give distinct 31-mer codes.
constexpr std::uint64_t scramble62(std::uint64_t x) noexcept {
  constexpr std::uint64_t mask = (std::uint64_t{1} << 62) - 1;
  x &= mask;
  x = (x * 0x9E3779B97F4A7C15ULL) & mask;
  x ^= x >> 31;
  x = (x * 0xBF58476D1CE4E5B9ULL) & mask;
  x ^= x >> 29;
  x = (x * 0x94D049BB133111EBULL) & mask;
  x ^= x >> 32;
  return x;
}

/// i-th indexed key for a benchmark of n keys; aliens use i >= n.
constexpr std::uint64_t bench_key(std::uint64_t i, std::uint64_t seed) noexcept {
  return scramble62(i + (seed << 40));
}

enum class Structure { quasi_dictionary, hash_map };

struct WorkerConfig {
  Structure structure = Structure::quasi_dictionary;
  std::uint64_t n_keys = 1'000'000;
  unsigned f = 12;
  int k = 31;
  double gamma = 2.0;
  std::uint64_t seed = 1337;
  std::uint64_t query_reads = 100'000;
  int read_length = 100;
  std::uint64_t alien_probes = 1'000'000;
};

struct BenchRow {
  std::uint64_t n_keys = 0;
  unsigned f = 0;
  std::string structure;
  double build_s = 0;
  double query_s = 0;
  std::uint64_t peak_mem_bytes = 0;
  double fp_rate = 0;
  double build_cpu_s = 0;
  double query_cpu_s = 0;
  double bits_per_key = 0;        // whole structure, payload counters excluded
  double payload_bits_per_key = 0;  // fingerprints only (0 for the hash map)
};

/// Builds one structure over n generated keys in the current process, runs
/// the read query load and the alien probe set, and measures itself.
BenchRow run_worker(const WorkerConfig& cfg);

struct BenchConfig {
  std::vector<std::uint64_t> sizes = {10'000, 100'000, 1'000'000, 10'000'000};
  std::vector<Structure> structures = {Structure::quasi_dictionary, Structure::hash_map};
  unsigned f = 12;
  double gamma = 2.0;
  std::uint64_t seed = 1337;
  std::uint64_t query_reads = 100'000;
  int read_length = 100;
  std::uint64_t alien_probes = 1'000'000;
  std::string executable;  // binary that understands `bench-worker`
};

/// Runs every (size, structure) pair in its own child process so that peak
/// memory is measured per structure.
std::vector<BenchRow> run_bench(const BenchConfig& cfg);

std::vector<std::string> worker_args(const BenchConfig& cfg, std::uint64_t n, Structure s);

std::string csv_header();
std::string to_csv(const BenchRow& row);
BenchRow parse_csv(const std::string& line);

const char* structure_name(Structure s) noexcept;
Structure parse_structure(const std::string& name);

/// Deterministic uniform random reads used as the query load.
std::string random_bases(std::uint64_t n, std::uint64_t seed);

}  // namespace qdict::bench
