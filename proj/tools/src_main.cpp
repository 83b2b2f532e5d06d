// src: quasi-dictionary read connector.
//
//   src index  build and save a reusable bank index
//   src count  per-read abundance of query reads in a bank
//   src link   bank reads sharing non-overlapping k-mers with each query read
//   src bench  quasi-dictionary vs hash map benchmark (CSV)

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "qdict/bench.hpp"
#include "qdict/errors.hpp"
#include "qdict/parallel.hpp"
#include "qdict/process.hpp"
#include "qdict/seq_io.hpp"
#include "qdict/src_counter.hpp"
#include "qdict/src_linker.hpp"

namespace {

using qdict::IndexParams;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CommonOptions {
  std::string bank;
  std::string query;
  std::string index;
  std::string out = "-";
  int k = 31;
  std::uint64_t solidity = 2;
  unsigned f = 12;
  bool exact = false;
  double gamma = 2.0;
  std::uint64_t seed = 1337;
  int threads = qdict::default_threads();
  std::uint64_t memory_budget_mib = 4096;
  std::string tmp_dir;
  std::string stats;
  bool quiet = false;

  CLI::Option* k_opt = nullptr;
  CLI::Option* t_opt = nullptr;
  CLI::Option* f_opt = nullptr;
};

void add_index_options(CLI::App* app, CommonOptions& o) {
  o.k_opt = app->add_option("-k,--kmer-size", o.k, "k-mer length (<= 31)")->capture_default_str();
  o.t_opt = app->add_option("-t,-c,--solidity", o.solidity, "minimum occurrences for a bank k-mer to be indexed")
                ->capture_default_str();
  o.f_opt = app->add_option("-f,--fingerprint", o.f, "fingerprint size in bits (<= 2k)")->capture_default_str();
  app->add_flag("--exact", o.exact, "use f = 2k: no false positives");
  app->add_option("--gamma", o.gamma, "MPHF load factor (> 1)")->capture_default_str();
  app->add_option("--seed", o.seed, "MPHF master seed")->capture_default_str();
  app->add_option("--memory-budget", o.memory_budget_mib, "k-mer counting memory budget in MiB before spilling to disk")
      ->capture_default_str();
  app->add_option("--tmp-dir", o.tmp_dir, "directory for temporary files");
  app->add_option("--threads", o.threads, "worker threads")->capture_default_str();
  app->add_flag("--quiet", o.quiet, "no progress on stderr");
  app->add_option("--stats", o.stats, "write peak RSS, wallclock and CPU time of this run as JSON");
}

void log(const CommonOptions& o, const std::string& msg) {
  if (!o.quiet) std::cerr << "[src] " << msg << '\n';
}

IndexParams validated_params(const CommonOptions& o) {
  if (o.k < 1 || o.k > qdict::kMaxK) throw UsageError("k must be ≤ 31");
  if (o.solidity < 1) throw UsageError("t must be ≥ 1");
  if (o.exact && o.f_opt->count() > 0 && static_cast<int>(o.f) != 2 * o.k) {
    throw UsageError("--exact conflicts with -f (exact mode uses f = 2k)");
  }
  IndexParams p;
  p.k = o.k;
  p.solidity = o.solidity;
  p.f = o.exact ? static_cast<unsigned>(2 * o.k) : o.f;
  if (p.f < 1 || static_cast<int>(p.f) > 2 * p.k) throw UsageError("f must be in [1, 2k]");
  if (!(o.gamma > 1.0)) throw UsageError("gamma must be > 1");
  if (o.threads < 1) throw UsageError("threads must be ≥ 1");
  p.mphf.gamma = o.gamma;
  p.mphf.seed = o.seed;
  p.counting.memory_budget = o.memory_budget_mib << 20;
  p.counting.tmp_dir = o.tmp_dir;
  return p;
}

// Parameters given explicitly on the command line must agree with the index.
void check_against_index(const CommonOptions& o, const IndexParams& p, const qdict::StoredIndex& idx) {
  if (o.k_opt->count() > 0 && p.k != idx.qd.k()) {
    throw UsageError("k=" + std::to_string(p.k) + " does not match index k=" + std::to_string(idx.qd.k()));
  }
  if ((o.f_opt->count() > 0 || o.exact) && p.f != idx.qd.f()) {
    throw UsageError("f=" + std::to_string(p.f) + " does not match index f=" + std::to_string(idx.qd.f()));
  }
  if (o.t_opt->count() > 0 && idx.solidity != 0 && p.solidity != static_cast<std::uint64_t>(idx.solidity)) {
    throw UsageError("t=" + std::to_string(p.solidity) + " does not match index t=" + std::to_string(idx.solidity));
  }
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

void write_stats(const CommonOptions& o, const std::string& command, std::chrono::steady_clock::time_point t0) {
  if (o.stats.empty()) return;
  const nlohmann::json j = {{"command", command},
                            {"peak_rss_bytes", qdict::peak_rss_bytes()},
                            {"wall_seconds", seconds_since(t0)},
                            {"cpu_seconds", qdict::cpu_seconds()}};
  std::ofstream out(o.stats, std::ios::trunc);
  if (!(out << j.dump(2) << '\n')) throw qdict::IoError("cannot write " + o.stats);
}

std::string fmt_seconds(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2fs", s);
  return buf;
}

int cmd_index(CommonOptions& o) {
  const IndexParams p = validated_params(o);
  const auto t0 = std::chrono::steady_clock::now();
  const qdict::CountIndex idx = qdict::build_count_index(o.bank, p);
  qdict::save_index(o.out, idx.qd, static_cast<int>(p.solidity), &idx.counts);
  log(o, "indexed " + std::to_string(idx.qd.size()) + " solid k-mers in " + fmt_seconds(seconds_since(t0)) + ", " +
             std::to_string(idx.qd.size_in_bits() / 8) + " bytes");
  write_stats(o, "index", t0);
  return kExitOk;
}

int cmd_count(CommonOptions& o) {
  IndexParams p = validated_params(o);
  const auto t0 = std::chrono::steady_clock::now();
  qdict::CountIndex idx;
  if (!o.index.empty()) {
    qdict::StoredIndex stored = qdict::load_index(o.index);
    check_against_index(o, p, stored);
    if (!stored.has_counts) throw UsageError("index " + o.index + " has no count table");
    idx.qd = std::move(stored.qd);
    idx.counts = std::move(stored.counts);
    idx.solidity = static_cast<std::uint64_t>(stored.solidity);
  } else {
    if (o.bank.empty()) throw UsageError("count needs --bank or --index");
    idx = qdict::build_count_index(o.bank, p);
  }
  log(o, "index ready: " + std::to_string(idx.qd.size()) + " k-mers (" + fmt_seconds(seconds_since(t0)) + ")");
  const auto t1 = std::chrono::steady_clock::now();
  qdict::run_src_counter(idx, {o.query, o.out, o.threads});
  log(o, "queries done in " + fmt_seconds(seconds_since(t1)) + ", peak RSS " +
             std::to_string(qdict::peak_rss_bytes() >> 20) + " MiB");
  write_stats(o, "count", t0);
  return kExitOk;
}

int cmd_link(CommonOptions& o, const std::string& mode, std::uint32_t min_shared, bool no_self,
             const std::string& id_map) {
  IndexParams p = validated_params(o);
  if (o.bank.empty()) throw UsageError("link needs --bank (read ids come from the bank file)");
  if (min_shared < 1) throw UsageError("min-shared must be ≥ 1");
  const auto t0 = std::chrono::steady_clock::now();
  qdict::QuasiDictionary qd;
  std::uint64_t solidity = p.solidity;
  if (!o.index.empty()) {
    qdict::StoredIndex stored = qdict::load_index(o.index);
    check_against_index(o, p, stored);
    qd = std::move(stored.qd);
    if (stored.solidity != 0) solidity = static_cast<std::uint64_t>(stored.solidity);
  } else {
    qd = qdict::build_link_dictionary(o.bank, p);
  }
  log(o, "dictionary ready: " + std::to_string(qd.size()) + " k-mers (" + fmt_seconds(seconds_since(t0)) + ")");
  if (!id_map.empty()) qdict::write_id_map(o.bank, id_map);

  qdict::LinkerRun run;
  run.query_path = o.query;
  run.out_path = o.out;
  run.threads = o.threads;
  run.link.min_shared = min_shared;
  run.link.include_self = !no_self;
  run.solidity = solidity;

  const auto t1 = std::chrono::steady_clock::now();
  if (mode == "ram") {
    const qdict::ReadIdTable ids = qdict::build_read_id_table(qd, o.bank, o.threads);
    log(o, "id table built (" + fmt_seconds(seconds_since(t1)) + "), mean ids per entry " +
               std::to_string(ids.avg_ids_per_entry()));
    qdict::run_src_linker(qd, ids, run);
  } else {
    const qdict::DiskIdTable ids = qdict::build_disk_id_table(qd, o.bank, o.tmp_dir, o.threads);
    log(o, "disk id table built (" + fmt_seconds(seconds_since(t1)) + "), " + std::to_string(ids.file_bytes()) +
               " bytes on disk");
    qdict::run_src_linker(qd, ids, run);
  }
  log(o, "done in " + fmt_seconds(seconds_since(t0)) + ", peak RSS " + std::to_string(qdict::peak_rss_bytes() >> 20) +
             " MiB");
  write_stats(o, "link", t0);
  return kExitOk;
}

void write_text(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw qdict::IoError("cannot write " + path);
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quasi-dictionary k-mer index: read abundance and read similarity"};
  app.require_subcommand(1);

  CommonOptions count_opts;
  count_opts.f = 8;
  auto* count = app.add_subcommand("count", "estimate the abundance of each query read in the bank");
  count->add_option("-b,--bank", count_opts.bank, "bank reads (FASTA/FASTQ, optionally gzipped)");
  count->add_option("-q,--query", count_opts.query, "query reads")->required();
  count->add_option("-o,--out", count_opts.out, "output TSV ('-' for stdout)")->capture_default_str();
  count->add_option("--index", count_opts.index, "prebuilt index from `src index`");
  add_index_options(count, count_opts);

  CommonOptions link_opts;
  std::string mode = "ram";
  std::uint32_t min_shared = 2;
  bool no_self = false;
  std::string id_map;
  auto* link = app.add_subcommand("link", "report bank reads sharing non-overlapping k-mers with each query read");
  link->add_option("-b,--bank", link_opts.bank, "bank reads")->required();
  link->add_option("-q,--query", link_opts.query, "query reads")->required();
  link->add_option("-o,--out", link_opts.out, "output file ('-' for stdout)")->capture_default_str();
  link->add_option("--index", link_opts.index, "prebuilt index from `src index`");
  link->add_option("--min-shared", min_shared, "minimum non-overlapping shared k-mers to report")->capture_default_str();
  link->add_option("--mode", mode, "read id storage")->check(CLI::IsMember({"ram", "disk"}))->capture_default_str();
  link->add_flag("--no-self", no_self, "do not report a read as matching itself");
  link->add_option("--id-map", id_map, "write '<id>\\t<header>' for every bank read to this file");
  add_index_options(link, link_opts);

  CommonOptions index_opts;
  auto* index = app.add_subcommand("index", "build a bank index and save it");
  index->add_option("-b,--bank", index_opts.bank, "bank reads")->required();
  index->add_option("-o,--out", index_opts.out, "index file")->required();
  add_index_options(index, index_opts);

  qdict::bench::BenchConfig bench_cfg;
  std::string bench_out = "-";
  std::vector<std::string> structures = {"qd", "hash"};
  auto* bench = app.add_subcommand("bench", "quasi-dictionary vs hash map: build/query time, peak memory, FP rate");
  bench->add_option("--sizes", bench_cfg.sizes, "numbers of indexed keys")->delimiter(',')->capture_default_str();
  bench->add_option("--structures", structures, "qd and/or hash")->delimiter(',')->capture_default_str();
  bench->add_option("-f,--fingerprint", bench_cfg.f, "fingerprint size")->capture_default_str();
  bench->add_option("--gamma", bench_cfg.gamma, "MPHF load factor")->capture_default_str();
  bench->add_option("--seed", bench_cfg.seed, "key generation and MPHF seed")->capture_default_str();
  bench->add_option("--query-reads", bench_cfg.query_reads, "reads in the query load")->capture_default_str();
  bench->add_option("--read-length", bench_cfg.read_length, "length of query reads")->capture_default_str();
  bench->add_option("--alien-probes", bench_cfg.alien_probes, "alien keys probed for the FP rate")->capture_default_str();
  bench->add_option("-o,--out", bench_out, "CSV report ('-' for stdout)")->capture_default_str();

  qdict::bench::WorkerConfig worker_cfg;
  std::string worker_structure = "qd";
  auto* worker = app.add_subcommand("bench-worker", "");  // spawned by `src bench`
  worker->group("");
  worker->add_option("--structure", worker_structure);
  worker->add_option("--n-keys", worker_cfg.n_keys);
  worker->add_option("-f", worker_cfg.f);
  worker->add_option("--gamma", worker_cfg.gamma);
  worker->add_option("--seed", worker_cfg.seed);
  worker->add_option("--query-reads", worker_cfg.query_reads);
  worker->add_option("--read-length", worker_cfg.read_length);
  worker->add_option("--alien-probes", worker_cfg.alien_probes);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "src: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*count) return cmd_count(count_opts);
    if (*link) return cmd_link(link_opts, mode, min_shared, no_self, id_map);
    if (*index) return cmd_index(index_opts);
    if (*bench) {
      bench_cfg.structures.clear();
      for (const auto& s : structures) bench_cfg.structures.push_back(qdict::bench::parse_structure(s));
      bench_cfg.executable = qdict::self_executable();
      std::string text = qdict::bench::csv_header() + "\n";
      for (const auto& row : qdict::bench::run_bench(bench_cfg)) text += qdict::bench::to_csv(row) + "\n";
      write_text(bench_out, text);
      return kExitOk;
    }
    if (*worker) {
      worker_cfg.structure = qdict::bench::parse_structure(worker_structure);
      qdict::QuasiDictionary::validate(worker_cfg.k, worker_cfg.f);
      const auto row = qdict::bench::run_worker(worker_cfg);
      std::cout << qdict::bench::csv_header() << '\n' << qdict::bench::to_csv(row) << '\n';
      return kExitOk;
    }
  } catch (const UsageError& e) {
    std::cerr << "src: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "src: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "src: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
