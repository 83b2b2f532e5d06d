#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "qdict/index_params.hpp"
#include "qdict/quasi_dictionary.hpp"
#include "qdict/temp_dir.hpp"

namespace qdict {

/// Bank read ids per dictionary index, kept in RAM. Each list is strictly
/// increasing: a read that hits the same index several times is listed once.
class ReadIdTable {
 public:
  ReadIdTable() = default;
  explicit ReadIdTable(std::uint64_t n) : ids_(n) {}

  void add(std::uint64_t index, std::uint32_t read_id) {
    auto& v = ids_[index];
    // Reads arrive in increasing id order, so per-read duplicates are adjacent.
    if (v.empty() || v.back() != read_id) v.push_back(read_id);
  }

  std::span<const std::uint32_t> ids(std::uint64_t index) const noexcept { return ids_[index]; }
  std::uint64_t size() const noexcept { return ids_.size(); }

  /// Mean number of distinct bank reads per index.
  double avg_ids_per_entry() const noexcept;

 private:
  std::vector<std::vector<std::uint32_t>> ids_;
};

/// Bank read ids per dictionary index, stored in a temporary file.
///
/// One block per index: (occurrences + 1) little-endian u32 slots holding
/// read_id + 1, terminated by a 0 slot. Occurrences include bank k-mers that
/// land on the index through a fingerprint collision, and a read is written
/// once per occurrence, so blocks may repeat ids.
class DiskIdTable {
 public:
  DiskIdTable() = default;
  ~DiskIdTable();
  DiskIdTable(DiskIdTable&&) noexcept;
  DiskIdTable& operator=(DiskIdTable&&) noexcept;

  /// Distinct decoded read ids of a block, ascending; scans to the terminator.
  void read_ids(std::uint64_t index, std::vector<std::uint32_t>& out) const;

  /// Raw slot values of a block including the terminating 0.
  std::vector<std::uint32_t> raw_block(std::uint64_t index) const;

  std::uint64_t size() const noexcept { return offsets_.size(); }
  std::uint64_t offset(std::uint64_t index) const noexcept { return offsets_[index]; }
  std::uint64_t file_bytes() const noexcept { return file_bytes_; }
  const std::string& path() const noexcept { return path_; }

 private:
  friend DiskIdTable build_disk_id_table(const QuasiDictionary&, const std::string&, const std::string&, int);

  std::vector<std::uint64_t> offsets_;  // byte offsets into the temp file
  std::unique_ptr<TempDir> dir_;
  std::string path_;
  int fd_ = -1;
  std::uint64_t file_bytes_ = 0;
};

struct Match {
  std::uint32_t target = 0;
  std::uint32_t shared = 0;  // non-overlapping shared k-mers on the query
  friend bool operator==(const Match&, const Match&) = default;
};

struct MatchRecord {
  std::uint64_t query_id = 0;
  std::vector<Match> matches;  // ascending target id
  friend bool operator==(const MatchRecord&, const MatchRecord&) = default;
};

struct LinkOptions {
  std::uint32_t min_shared = 2;
  bool include_self = true;
};

/// Per-query accumulator: target read -> (next free position, count).
/// Open addressing, cleared between reads.
class TargetAccumulator {
 public:
  TargetAccumulator();

  /// Counts a shared k-mer at query position pos, unless it overlaps the
  /// previous counted k-mer for that target.
  void hit(std::uint32_t target, std::uint64_t pos, int k);

  /// Targets with count >= min_shared, ascending; resets the accumulator.
  void drain(std::uint32_t min_shared, std::vector<Match>& out);

 private:
  struct Slot {
    std::uint32_t key;  // target + 1, 0 = empty
    std::uint32_t count;
    std::uint64_t next_free;
  };
  void grow();

  std::vector<Slot> slots_;
  std::vector<std::uint32_t> used_;
  std::uint64_t mask_;
};

/// Greedy left-to-right scan of q: for every indexed k-mer at position i,
/// each bank read listed for that index scores one if i is at or past its
/// next free position, which then moves to i + k.
template <typename VisitIds>
MatchRecord link_read(const QuasiDictionary& qd, const ReadRecord& q, const LinkOptions& opts,
                      TargetAccumulator& acc, VisitIds&& visit_ids) {
  MatchRecord rec;
  rec.query_id = q.id;
  const int k = qd.k();
  for_each_indexed_kmer(qd, q.sequence, [&](std::size_t pos, std::uint64_t idx) {
    visit_ids(idx, [&](std::uint32_t target) {
      if (!opts.include_self && target == q.id) return;
      acc.hit(target, pos, k);
    });
  });
  acc.drain(opts.min_shared, rec.matches);
  return rec;
}

MatchRecord query_read_similarity(const QuasiDictionary& qd, const ReadIdTable& ids, const ReadRecord& q,
                                  const LinkOptions& opts = {});
MatchRecord query_disk(const QuasiDictionary& qd, const DiskIdTable& ids, const ReadRecord& q,
                       const LinkOptions& opts = {});

QuasiDictionary build_link_dictionary(const std::string& bank_path, const IndexParams& params);

/// One pass over the bank appending each read id to the lists of its indexed k-mers.
ReadIdTable build_read_id_table(const QuasiDictionary& qd, const std::string& bank_path, int threads = 1);

/// Three passes: count occurrences per index, lay out zero-filled blocks,
/// then write each id into the first free slot of its block.
DiskIdTable build_disk_id_table(const QuasiDictionary& qd, const std::string& bank_path,
                                const std::string& tmp_parent = {}, int threads = 1);

/// "<query_id>:<target>-<count> ..." or "<query_id>:*", newline-terminated.
std::string format_matches(const MatchRecord& rec);

void write_linker_header(std::ostream& os, const QuasiDictionary& qd, std::uint64_t solidity,
                         const LinkOptions& opts);

struct LinkerRun {
  std::string query_path;
  std::string out_path;  // "-" for stdout
  int threads = 1;
  LinkOptions link;
  std::uint64_t solidity = 0;
};

void run_src_linker(const QuasiDictionary& qd, const ReadIdTable& ids, const LinkerRun& run);
void run_src_linker(const QuasiDictionary& qd, const DiskIdTable& ids, const LinkerRun& run);

}  // namespace qdict
