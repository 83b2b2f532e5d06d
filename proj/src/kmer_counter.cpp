#include "qdict/kmer_counter.hpp"

#include <algorithm>
#include <cstdio>
#include <deque>
#include <memory>
#include <string_view>

#include "qdict/errors.hpp"
#include "qdict/mphf.hpp"
#include "qdict/seq_io.hpp"
#include "qdict/temp_dir.hpp"

namespace qdict {

namespace {

constexpr std::uint64_t kMinimizerSeed = 0x5EEDF00DULL;
constexpr std::uint64_t kPartitionSeed = 0xC0FFEE11ULL;
constexpr std::size_t kMaxSuperKmer = 255;

struct FileCloser {
  void operator()(std::FILE* f) const noexcept { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// Sorted codes -> (code, count) runs with count >= t.
void collect_runs(std::vector<std::uint64_t>& codes, std::uint64_t t,
                  std::vector<std::pair<std::uint64_t, std::uint64_t>>& out, std::uint64_t& n_distinct) {
  std::sort(codes.begin(), codes.end());
  for (std::size_t i = 0; i < codes.size();) {
    std::size_t j = i + 1;
    while (j < codes.size() && codes[j] == codes[i]) ++j;
    ++n_distinct;
    const std::uint64_t c = j - i;
    if (c >= t) out.emplace_back(codes[i], c);
    i = j;
  }
}

// Splits an ACGT-only run into super-k-mers keyed by partition.
class SuperKmerSplitter {
 public:
  SuperKmerSplitter(int k, int m, std::size_t n_partitions) : k_(k), m_(m), parts_(n_partitions) {}

  template <typename Emit>
  void split(std::string_view run, Emit&& emit) {
    const std::size_t k = static_cast<std::size_t>(k_);
    const std::size_t m = static_cast<std::size_t>(m_);
    if (run.size() < k) return;
    hashes_.clear();
    std::uint64_t fwd = 0;
    std::uint64_t rev = 0;
    const std::uint64_t mask = kmer_mask(m_);
    for (std::size_t i = 0; i < run.size(); ++i) {
      const std::uint64_t b = encode_base(run[i]);
      fwd = ((fwd << 2) | b) & mask;
      rev = (rev >> 2) | ((3 - b) << (2 * (m - 1)));
      if (i + 1 >= m) hashes_.push_back(mix_key(std::min(fwd, rev), kMinimizerSeed));
    }

    // Sliding minimum over the k - m + 1 m-mers of each k-mer.
    const std::size_t window = k - m + 1;
    window_.clear();
    std::size_t start = 0;
    std::size_t current = 0;
    for (std::size_t j = 0; j < hashes_.size(); ++j) {
      while (!window_.empty() && hashes_[window_.back()] >= hashes_[j]) window_.pop_back();
      window_.push_back(j);
      if (j + 1 < window) continue;
      const std::size_t kmer_pos = j + 1 - window;
      while (window_.front() < kmer_pos) window_.pop_front();
      const std::size_t part = reduce(mix_key(hashes_[window_.front()], kPartitionSeed), parts_);
      if (kmer_pos == 0) {
        current = part;
        start = 0;
      } else if (part != current || kmer_pos + k - start > kMaxSuperKmer) {
        emit(current, run.substr(start, kmer_pos - 1 + k - start));
        current = part;
        start = kmer_pos;
      }
    }
    const std::size_t last_kmer = run.size() - k;
    emit(current, run.substr(start, last_kmer + k - start));
  }

 private:
  int k_;
  int m_;
  std::size_t parts_;
  std::vector<std::uint64_t> hashes_;
  std::deque<std::size_t> window_;
};

template <typename Fn>
void for_each_acgt_run(std::string_view seq, Fn&& fn) {
  std::size_t i = 0;
  while (i < seq.size()) {
    while (i < seq.size() && encode_base(seq[i]) == kInvalidBase) ++i;
    std::size_t j = i;
    while (j < seq.size() && encode_base(seq[j]) != kInvalidBase) ++j;
    if (j > i) fn(seq.substr(i, j - i));
    i = j;
  }
}

void write_super_kmer(std::FILE* f, std::string_view bases) {
  unsigned char buf[1 + (kMaxSuperKmer + 3) / 4] = {};
  buf[0] = static_cast<unsigned char>(bases.size());
  for (std::size_t j = 0; j < bases.size(); ++j) {
    buf[1 + j / 4] |= static_cast<unsigned char>(encode_base(bases[j]) << (2 * (j % 4)));
  }
  const std::size_t n = 1 + (bases.size() + 3) / 4;
  if (std::fwrite(buf, 1, n, f) != n) throw IoError("partition write failed");
}

}  // namespace

SolidKmerCounter::SolidKmerCounter(int k, std::uint64_t t, CountOptions opts)
    : k_(k), t_(t), opts_(std::move(opts)) {
  check_k(k);
  if (t < 1) throw std::invalid_argument("solidity threshold t must be >= 1");
  if (opts_.minimizer_length < 1) throw std::invalid_argument("minimizer length must be >= 1");
}

std::size_t SolidKmerCounter::partitions_for(std::uint64_t n_windows) const noexcept {
  const std::uint64_t bytes = n_windows * sizeof(std::uint64_t);
  if (bytes <= opts_.memory_budget) return 1;
  // Each partition targets half the budget to absorb minimizer skew.
  const std::uint64_t per_part = std::max<std::uint64_t>(opts_.memory_budget / 2, 1);
  return static_cast<std::size_t>(std::clamp<std::uint64_t>((bytes + per_part - 1) / per_part, 2, 1024));
}

template <typename ForEachRead>
SolidKmerSet SolidKmerCounter::run(ForEachRead&& for_each_read) const {
  SolidKmerSet out(k_, t_);
  std::uint64_t n_windows = 0;
  for_each_read([&](std::string_view seq) { n_windows += count_valid_windows(seq, k_); });
  out.n_windows_ = n_windows;

  std::vector<std::pair<std::uint64_t, std::uint64_t>> solid;
  const std::size_t n_parts = partitions_for(n_windows);

  if (n_parts == 1) {
    std::vector<std::uint64_t> codes;
    codes.reserve(n_windows);
    for_each_read([&](std::string_view seq) {
      for_each_canonical_kmer(seq, k_, [&](std::size_t, std::uint64_t c) { codes.push_back(c); });
    });
    collect_runs(codes, t_, solid, out.n_distinct_);
  } else {
    TempDir dir(opts_.tmp_dir, "qdict-count");
    std::vector<FilePtr> files;
    std::vector<std::vector<char>> buffers(n_parts);
    for (std::size_t p = 0; p < n_parts; ++p) {
      const auto name = dir.file("part" + std::to_string(p)).string();
      files.emplace_back(std::fopen(name.c_str(), "w+b"));
      if (!files.back()) throw IoError("cannot create partition file " + name);
      buffers[p].resize(1 << 16);
      std::setvbuf(files.back().get(), buffers[p].data(), _IOFBF, buffers[p].size());
    }
    SuperKmerSplitter splitter(k_, std::min(opts_.minimizer_length, k_), n_parts);
    for_each_read([&](std::string_view seq) {
      for_each_acgt_run(seq, [&](std::string_view run) {
        splitter.split(run, [&](std::size_t part, std::string_view bases) {
          write_super_kmer(files[part].get(), bases);
        });
      });
    });

    std::vector<std::uint64_t> codes;
    std::string bases;
    for (std::size_t p = 0; p < n_parts; ++p) {
      std::FILE* f = files[p].get();
      if (std::fflush(f) != 0 || std::fseek(f, 0, SEEK_SET) != 0) throw IoError("partition rewind failed");
      codes.clear();
      int len;
      while ((len = std::fgetc(f)) != EOF) {
        unsigned char packed[(kMaxSuperKmer + 3) / 4];
        const std::size_t nbytes = (static_cast<std::size_t>(len) + 3) / 4;
        if (std::fread(packed, 1, nbytes, f) != nbytes) throw IoError("truncated partition file");
        bases.resize(static_cast<std::size_t>(len));
        for (std::size_t j = 0; j < bases.size(); ++j) bases[j] = decode_base(packed[j / 4] >> (2 * (j % 4)));
        for_each_canonical_kmer(bases, k_, [&](std::size_t, std::uint64_t c) { codes.push_back(c); });
      }
      collect_runs(codes, t_, solid, out.n_distinct_);
      files[p].reset();
    }
    std::sort(solid.begin(), solid.end());
  }

  out.codes_.reserve(solid.size());
  out.counts_.reserve(solid.size());
  for (const auto& [code, count] : solid) {
    out.codes_.push_back(code);
    out.counts_.push_back(count);
  }
  return out;
}

SolidKmerSet SolidKmerCounter::count_file(const std::string& path) const {
  return run([&](auto&& fn) {
    ReadStream stream(path);
    while (auto r = stream.next()) fn(std::string_view(r->sequence));
  });
}

SolidKmerSet SolidKmerCounter::count_reads(std::span<const ReadRecord> reads) const {
  return run([&](auto&& fn) {
    for (const ReadRecord& r : reads) fn(std::string_view(r.sequence));
  });
}

}  // namespace qdict
