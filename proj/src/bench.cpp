#include "qdict/bench.hpp"

#include <chrono>
#include <cstdio>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string_view>
#include <unordered_map>

#include "qdict/kmer.hpp"
#include "qdict/process.hpp"
#include "qdict/quasi_dictionary.hpp"

namespace qdict::bench {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

volatile std::uint64_t query_sink = 0;

// Count payload attached to every key, mirroring the counter's 8-bit table.
std::uint8_t payload_of(std::uint64_t i) noexcept { return static_cast<std::uint8_t>(1 + i % 250); }

}  // namespace

std::string random_bases(std::uint64_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::string s(n, 'A');
  for (std::uint64_t i = 0; i < n; i += 32) {
    std::uint64_t r = rng();
    for (std::uint64_t j = i; j < std::min(n, i + 32); ++j, r >>= 2) s[j] = decode_base(r);
  }
  return s;
}

BenchRow run_worker(const WorkerConfig& cfg) {
  BenchRow row;
  row.n_keys = cfg.n_keys;
  row.f = cfg.f;
  row.structure = structure_name(cfg.structure);

  const std::uint64_t n = cfg.n_keys;
  const auto for_each_key = [&](auto&& visit) {
    for (std::uint64_t i = 0; i < n; ++i) visit(bench_key(i, cfg.seed));
  };
  const std::string reads = random_bases(cfg.query_reads * static_cast<std::uint64_t>(cfg.read_length), cfg.seed ^ 0xABCDEF);
  const std::size_t rl = static_cast<std::size_t>(cfg.read_length);

  std::uint64_t checksum = 0;
  std::uint64_t false_hits = 0;

  const auto run = [&](auto&& build, auto&& lookup, auto&& query_read) {
    auto t0 = Clock::now();
    double c0 = cpu_seconds();
    build();
    row.build_s = since(t0);
    row.build_cpu_s = cpu_seconds() - c0;

    t0 = Clock::now();
    c0 = cpu_seconds();
    for (std::uint64_t r = 0; r < cfg.query_reads; ++r) {
      checksum += query_read(std::string_view(reads).substr(r * rl, rl));
    }
    row.query_s = since(t0);
    row.query_cpu_s = cpu_seconds() - c0;

    for (std::uint64_t i = 0; i < cfg.alien_probes; ++i) {
      if (lookup(bench_key(n + i, cfg.seed)) != 0) ++false_hits;
    }
    row.fp_rate = cfg.alien_probes == 0 ? 0.0 : static_cast<double>(false_hits) / static_cast<double>(cfg.alien_probes);
  };

  if (cfg.structure == Structure::quasi_dictionary) {
    QuasiDictionary qd;
    std::vector<std::uint8_t> counts;
    MphfOptions opts;
    opts.gamma = cfg.gamma;
    opts.seed = cfg.seed;
    run(
        [&] {
          qd = QuasiDictionary::build_from(for_each_key, cfg.k, cfg.f, opts);
          counts.assign(n, 0);
          std::uint64_t i = 0;
          for_each_key([&](std::uint64_t key) { counts[static_cast<std::size_t>(qd.lookup(key))] = payload_of(i++); });
        },
        [&](std::uint64_t code) -> std::uint64_t {
          const std::int64_t idx = qd.lookup(code);
          return idx < 0 ? 0 : counts[static_cast<std::size_t>(idx)];
        },
        [&, codes = std::vector<std::uint64_t>(), idx = std::vector<std::int64_t>(),
         scratch = std::vector<std::uint64_t>()](std::string_view read) mutable -> std::uint64_t {
          codes.clear();
          for_each_canonical_kmer(read, cfg.k, [&](std::size_t, std::uint64_t code) { codes.push_back(code); });
          idx.resize(codes.size());
          scratch.resize(codes.size());
          qd.lookup_many(codes, idx, scratch);
          std::uint64_t sum = 0;
          for (std::int64_t i : idx) sum += i < 0 ? 0 : counts[static_cast<std::size_t>(i)];
          return sum;
        });
    row.bits_per_key = n == 0 ? 0.0 : static_cast<double>(qd.size_in_bits()) / static_cast<double>(n);
    row.payload_bits_per_key = n == 0 ? 0.0 : static_cast<double>(qd.payload_bits()) / static_cast<double>(n);
  } else {
    std::unordered_map<std::uint64_t, std::uint8_t> map;
    run(
        [&] {
          map.reserve(n);
          std::uint64_t i = 0;
          for_each_key([&](std::uint64_t key) { map.emplace(key, payload_of(i++)); });
        },
        [&](std::uint64_t code) -> std::uint64_t {
          const auto it = map.find(code);
          return it == map.end() ? 0 : it->second;
        },
        [&](std::string_view read) -> std::uint64_t {
          std::uint64_t sum = 0;
          for_each_canonical_kmer(read, cfg.k, [&](std::size_t, std::uint64_t code) {
            const auto it = map.find(code);
            sum += it == map.end() ? 0 : it->second;
          });
          return sum;
        });
  }
  row.peak_mem_bytes = peak_rss_bytes();
  query_sink = checksum;
  return row;
}

const char* structure_name(Structure s) noexcept {
  return s == Structure::quasi_dictionary ? "qd" : "hash";
}

Structure parse_structure(const std::string& name) {
  if (name == "qd") return Structure::quasi_dictionary;
  if (name == "hash") return Structure::hash_map;
  throw std::invalid_argument("unknown structure '" + name + "' (expected qd or hash)");
}

std::vector<std::string> worker_args(const BenchConfig& cfg, std::uint64_t n, Structure s) {
  return {cfg.executable,
          "bench-worker",
          "--structure", structure_name(s),
          "--n-keys", std::to_string(n),
          "-f", std::to_string(cfg.f),
          "--gamma", std::to_string(cfg.gamma),
          "--seed", std::to_string(cfg.seed),
          "--query-reads", std::to_string(cfg.query_reads),
          "--read-length", std::to_string(cfg.read_length),
          "--alien-probes", std::to_string(cfg.alien_probes)};
}

std::vector<BenchRow> run_bench(const BenchConfig& cfg) {
  std::vector<BenchRow> rows;
  for (std::uint64_t n : cfg.sizes) {
    for (Structure s : cfg.structures) {
      const ProcessResult res = run_process(worker_args(cfg, n, s));
      if (res.exit_code != 0) {
        throw std::runtime_error("bench worker failed for n=" + std::to_string(n) + " structure=" + structure_name(s));
      }
      std::istringstream lines(res.out);
      std::string line;
      std::string last;
      while (std::getline(lines, line)) {
        if (!line.empty() && line[0] != '#' && line.rfind("n_keys", 0) != 0) last = line;
      }
      rows.push_back(parse_csv(last));
    }
  }
  return rows;
}

std::string csv_header() {
  return "n_keys,f,structure,build_s,query_s,peak_mem_bytes,fp_rate,build_cpu_s,query_cpu_s,bits_per_key,"
         "payload_bits_per_key";
}

std::string to_csv(const BenchRow& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%llu,%u,%s,%.6f,%.6f,%llu,%.8f,%.6f,%.6f,%.4f,%.4f",
                static_cast<unsigned long long>(r.n_keys), r.f, r.structure.c_str(), r.build_s, r.query_s,
                static_cast<unsigned long long>(r.peak_mem_bytes), r.fp_rate, r.build_cpu_s, r.query_cpu_s,
                r.bits_per_key, r.payload_bits_per_key);
  return buf;
}

BenchRow parse_csv(const std::string& line) {
  std::vector<std::string> cols;
  std::stringstream ss(line);
  std::string col;
  while (std::getline(ss, col, ',')) cols.push_back(col);
  if (cols.size() != 11) throw std::runtime_error("malformed bench row: " + line);
  BenchRow r;
  r.n_keys = std::stoull(cols[0]);
  r.f = static_cast<unsigned>(std::stoul(cols[1]));
  r.structure = cols[2];
  r.build_s = std::stod(cols[3]);
  r.query_s = std::stod(cols[4]);
  r.peak_mem_bytes = std::stoull(cols[5]);
  r.fp_rate = std::stod(cols[6]);
  r.build_cpu_s = std::stod(cols[7]);
  r.query_cpu_s = std::stod(cols[8]);
  r.bits_per_key = std::stod(cols[9]);
  r.payload_bits_per_key = std::stod(cols[10]);
  return r;
}

}  // namespace qdict::bench
