#include "qdict/src_counter.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>

#include "qdict/errors.hpp"
#include "qdict/parallel.hpp"
#include "qdict/seq_io.hpp"

namespace qdict {

CountIndex build_count_index(const SolidKmerSet& solid, unsigned f, const MphfOptions& opts) {
  CountIndex out;
  out.solidity = solid.solidity();
  out.qd = QuasiDictionary::build(solid.codes(), solid.k(), f, opts);
  out.counts.assign(solid.size(), 0);
  const auto codes = solid.codes();
  const auto occ = solid.counts();
  for (std::size_t i = 0; i < codes.size(); ++i) {
    const std::int64_t idx = out.qd.lookup(codes[i]);
    out.counts[static_cast<std::size_t>(idx)] =
        static_cast<std::uint8_t>(std::min<std::uint64_t>(occ[i], kCountSaturation));
  }
  return out;
}

CountIndex build_count_index(const std::string& bank_path, const IndexParams& params) {
  QuasiDictionary::validate(params.k, params.f);
  const SolidKmerSet solid = count_solid_kmers(bank_path, params.k, params.solidity, params.counting);
  return build_count_index(solid, params.f, params.mphf);
}

AbundanceRecord summarize_counts(std::uint64_t read_id, std::vector<std::uint32_t> counts) {
  AbundanceRecord rec;
  rec.read_id = read_id;
  rec.n_kmers = counts.size();
  if (counts.empty()) return rec;
  const auto mid = counts.begin() + static_cast<std::ptrdiff_t>(counts.size() / 2);
  std::nth_element(counts.begin(), mid, counts.end());
  rec.median = *mid;
  const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
  rec.min = *lo;
  rec.max = *hi;
  const double sum = std::accumulate(counts.begin(), counts.end(), 0.0);
  rec.mean = sum / static_cast<double>(counts.size());
  return rec;
}

AbundanceRecord estimate_read_abundance(const QuasiDictionary& qd, std::span<const std::uint8_t> counts,
                                        const ReadRecord& q) {
  std::vector<std::uint32_t> collected;
  if (q.sequence.size() >= static_cast<std::size_t>(qd.k())) {
    for_each_indexed_kmer(qd, q.sequence, [&](std::size_t, std::uint64_t idx) {
      collected.push_back(counts[static_cast<std::size_t>(idx)]);
    });
  }
  return summarize_counts(q.id, std::move(collected));
}

std::string format_abundance(const AbundanceRecord& rec) {
  char buf[160];
  int n;
  if (rec.no_hit()) {
    n = std::snprintf(buf, sizeof buf, "%llu\t0\t*\t*\t*\t*\n", static_cast<unsigned long long>(rec.read_id));
  } else {
    n = std::snprintf(buf, sizeof buf, "%llu\t%llu\t%.2f\t%u\t%u\t%u\n",
                      static_cast<unsigned long long>(rec.read_id), static_cast<unsigned long long>(rec.n_kmers),
                      rec.mean, rec.median, rec.min, rec.max);
  }
  return std::string(buf, static_cast<std::size_t>(n));
}

void write_counter_header(std::ostream& os, const CountIndex& index) {
  os << "# src count\n"
     << "# k=" << index.qd.k() << " t=" << index.solidity << " f=" << index.qd.f()
     << " gamma=" << index.qd.mphf().gamma() << " seed=" << index.qd.mphf().seed()
     << " exact=" << (index.qd.exact() ? 1 : 0) << " indexed_kmers=" << index.qd.size() << '\n'
     << "# counts are 8-bit and saturate at " << static_cast<int>(kCountSaturation) << '\n'
     << "# no-hit reads report '*' statistics\n"
     << "#read_id\tn_kmers\tmean\tmedian\tmin\tmax\n";
}

void run_src_counter(const CountIndex& index, const CounterRun& run) {
  std::ofstream file;
  std::ostream* out = &std::cout;
  if (run.out_path != "-") {
    file.open(run.out_path, std::ios::binary | std::ios::trunc);
    if (!file) throw IoError("cannot write " + run.out_path);
    out = &file;
  }
  write_counter_header(*out, index);
  ReadStream stream(run.query_path);
  map_reads_ordered(
      stream, run.threads, 4096,
      [&](std::span<const ReadRecord> chunk) {
        std::string text;
        for (const ReadRecord& q : chunk) text += format_abundance(estimate_read_abundance(index.qd, index.counts, q));
        return text;
      },
      [&](std::string&& text) { out->write(text.data(), static_cast<std::streamsize>(text.size())); });
  out->flush();
  if (!*out) throw IoError("write failed: " + run.out_path);
}

}  // namespace qdict
