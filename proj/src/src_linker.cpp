#include "qdict/src_linker.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <iostream>
#include <limits>
#include <type_traits>
#include <utility>

#include "qdict/errors.hpp"
#include "qdict/kmer_counter.hpp"
#include "qdict/parallel.hpp"
#include "qdict/seq_io.hpp"

namespace qdict {

namespace {

constexpr std::size_t kChunkReads = 4096;
constexpr std::uint64_t kSlotBytes = 4;
constexpr std::uint64_t kMaxBankReads = std::numeric_limits<std::uint32_t>::max() - 1;

struct Hit {
  std::uint64_t index;
  std::uint32_t read_id;
};

std::uint32_t checked_read_id(std::uint64_t id) {
  if (id >= kMaxBankReads) throw std::length_error("bank exceeds 2^32 - 2 reads");
  return static_cast<std::uint32_t>(id);
}

// Every (index, read) pair for indexed k-mer occurrences of a chunk, in order.
std::vector<Hit> collect_hits(const QuasiDictionary& qd, std::span<const ReadRecord> chunk) {
  std::vector<Hit> hits;
  for (const ReadRecord& b : chunk) {
    const std::uint32_t id = checked_read_id(b.id);
    for_each_indexed_kmer(qd, b.sequence, [&](std::size_t, std::uint64_t idx) { hits.push_back({idx, id}); });
  }
  return hits;
}

void pwrite_all(int fd, const void* data, std::size_t n, std::uint64_t off) {
  const char* p = static_cast<const char*>(data);
  while (n > 0) {
    const ssize_t w = ::pwrite(fd, p, n, static_cast<off_t>(off));
    if (w < 0) {
      if (errno == EINTR) continue;
      throw IoError(std::string("id file write failed: ") + std::strerror(errno));
    }
    p += w;
    n -= static_cast<std::size_t>(w);
    off += static_cast<std::uint64_t>(w);
  }
}

std::size_t pread_some(int fd, void* data, std::size_t n, std::uint64_t off) {
  char* p = static_cast<char*>(data);
  std::size_t got = 0;
  while (got < n) {
    const ssize_t r = ::pread(fd, p + got, n - got, static_cast<off_t>(off + got));
    if (r < 0) {
      if (errno == EINTR) continue;
      throw IoError(std::string("id file read failed: ") + std::strerror(errno));
    }
    if (r == 0) break;
    got += static_cast<std::size_t>(r);
  }
  return got;
}

std::uint32_t load_le32(const unsigned char* p) noexcept {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) | (std::uint32_t{p[3]} << 24);
}

void store_le32(unsigned char* p, std::uint32_t v) noexcept {
  p[0] = static_cast<unsigned char>(v);
  p[1] = static_cast<unsigned char>(v >> 8);
  p[2] = static_cast<unsigned char>(v >> 16);
  p[3] = static_cast<unsigned char>(v >> 24);
}

// Buffered slot writes, applied in file order one window at a time.
class SlotWriter {
 public:
  SlotWriter(int fd, std::uint64_t file_bytes) : fd_(fd), file_bytes_(file_bytes) { pending_.reserve(kCapacity); }

  void put(std::uint64_t byte_offset, std::uint32_t value) {
    pending_.push_back({byte_offset, value});
    if (pending_.size() == kCapacity) flush();
  }

  void flush() {
    std::sort(pending_.begin(), pending_.end(), [](const auto& a, const auto& b) { return a.offset < b.offset; });
    std::size_t i = 0;
    while (i < pending_.size()) {
      const std::uint64_t start = pending_[i].offset;
      const std::uint64_t end = std::min(file_bytes_, start + kWindow);
      window_.resize(end - start);
      if (pread_some(fd_, window_.data(), window_.size(), start) != window_.size()) {
        throw IoError("id file shorter than its layout");
      }
      while (i < pending_.size() && pending_[i].offset + kSlotBytes <= end) {
        store_le32(window_.data() + (pending_[i].offset - start), pending_[i].value);
        ++i;
      }
      pwrite_all(fd_, window_.data(), window_.size(), start);
    }
    pending_.clear();
  }

 private:
  static constexpr std::size_t kCapacity = std::size_t{1} << 22;
  static constexpr std::uint64_t kWindow = std::uint64_t{1} << 20;

  struct Pending {
    std::uint64_t offset;
    std::uint32_t value;
  };

  int fd_;
  std::uint64_t file_bytes_;
  std::vector<Pending> pending_;
  std::vector<unsigned char> window_;
};

template <typename Ids>
void run_linker_impl(const QuasiDictionary& qd, const Ids& ids, const LinkerRun& run) {
  std::ofstream file;
  std::ostream* out = &std::cout;
  if (run.out_path != "-") {
    file.open(run.out_path, std::ios::binary | std::ios::trunc);
    if (!file) throw IoError("cannot write " + run.out_path);
    out = &file;
  }
  write_linker_header(*out, qd, run.solidity, run.link);
  ReadStream stream(run.query_path);
  map_reads_ordered(
      stream, run.threads, kChunkReads,
      [&](std::span<const ReadRecord> chunk) {
        std::string text;
        TargetAccumulator acc;
        std::vector<std::uint32_t> block;
        for (const ReadRecord& q : chunk) {
          MatchRecord rec;
          if constexpr (std::is_same_v<Ids, ReadIdTable>) {
            rec = link_read(qd, q, run.link, acc, [&](std::uint64_t idx, auto&& fn) {
              for (std::uint32_t t : ids.ids(idx)) fn(t);
            });
          } else {
            rec = link_read(qd, q, run.link, acc, [&](std::uint64_t idx, auto&& fn) {
              ids.read_ids(idx, block);
              for (std::uint32_t t : block) fn(t);
            });
          }
          text += format_matches(rec);
        }
        return text;
      },
      [&](std::string&& text) { out->write(text.data(), static_cast<std::streamsize>(text.size())); });
  out->flush();
  if (!*out) throw IoError("write failed: " + run.out_path);
}

}  // namespace

double ReadIdTable::avg_ids_per_entry() const noexcept {
  if (ids_.empty()) return 0.0;
  std::uint64_t total = 0;
  for (const auto& v : ids_) total += v.size();
  return static_cast<double>(total) / static_cast<double>(ids_.size());
}

DiskIdTable::~DiskIdTable() {
  if (fd_ >= 0) ::close(fd_);
}

DiskIdTable::DiskIdTable(DiskIdTable&& o) noexcept
    : offsets_(std::move(o.offsets_)), dir_(std::move(o.dir_)), path_(std::move(o.path_)),
      fd_(std::exchange(o.fd_, -1)), file_bytes_(o.file_bytes_) {}

DiskIdTable& DiskIdTable::operator=(DiskIdTable&& o) noexcept {
  if (this != &o) {
    if (fd_ >= 0) ::close(fd_);
    offsets_ = std::move(o.offsets_);
    dir_ = std::move(o.dir_);
    path_ = std::move(o.path_);
    fd_ = std::exchange(o.fd_, -1);
    file_bytes_ = o.file_bytes_;
  }
  return *this;
}

std::vector<std::uint32_t> DiskIdTable::raw_block(std::uint64_t index) const {
  std::vector<std::uint32_t> out;
  unsigned char buf[256];
  std::uint64_t off = offsets_[index];
  for (;;) {
    const std::size_t got = pread_some(fd_, buf, sizeof buf, off);
    if (got < kSlotBytes) throw FormatError("id file corrupt: block " + std::to_string(index) + " has no terminator");
    for (std::size_t i = 0; i + kSlotBytes <= got; i += kSlotBytes) {
      const std::uint32_t v = load_le32(buf + i);
      out.push_back(v);
      if (v == 0) return out;
    }
    off += got - got % kSlotBytes;
  }
}

void DiskIdTable::read_ids(std::uint64_t index, std::vector<std::uint32_t>& out) const {
  out.clear();
  unsigned char buf[256];
  std::uint64_t off = offsets_[index];
  for (;;) {
    const std::size_t got = pread_some(fd_, buf, sizeof buf, off);
    if (got < kSlotBytes) throw FormatError("id file corrupt: block " + std::to_string(index) + " has no terminator");
    for (std::size_t i = 0; i + kSlotBytes <= got; i += kSlotBytes) {
      const std::uint32_t v = load_le32(buf + i);
      if (v == 0) {
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return;
      }
      out.push_back(v - 1);
    }
    off += got - got % kSlotBytes;
  }
}

TargetAccumulator::TargetAccumulator() : slots_(64, Slot{0, 0, 0}), mask_(63) {}

void TargetAccumulator::hit(std::uint32_t target, std::uint64_t pos, int k) {
  const std::uint32_t key = target + 1;
  std::uint64_t h = (std::uint64_t{key} * 0x9E3779B97F4A7C15ULL) >> 20;
  for (;; ++h) {
    Slot& s = slots_[h & mask_];
    if (s.key == key) {
      if (pos >= s.next_free) {
        ++s.count;
        s.next_free = pos + static_cast<std::uint64_t>(k);
      }
      return;
    }
    if (s.key == 0) {
      s = Slot{key, 1, pos + static_cast<std::uint64_t>(k)};
      used_.push_back(static_cast<std::uint32_t>(h & mask_));
      if (used_.size() * 2 > slots_.size()) grow();
      return;
    }
  }
}

void TargetAccumulator::grow() {
  std::vector<Slot> old;
  old.swap(slots_);
  slots_.assign(old.size() * 2, Slot{0, 0, 0});
  mask_ = slots_.size() - 1;
  used_.clear();
  for (const Slot& s : old) {
    if (s.key == 0) continue;
    std::uint64_t h = (std::uint64_t{s.key} * 0x9E3779B97F4A7C15ULL) >> 20;
    while (slots_[h & mask_].key != 0) ++h;
    slots_[h & mask_] = s;
    used_.push_back(static_cast<std::uint32_t>(h & mask_));
  }
}

void TargetAccumulator::drain(std::uint32_t min_shared, std::vector<Match>& out) {
  out.clear();
  for (std::uint32_t i : used_) {
    Slot& s = slots_[i];
    if (s.count >= min_shared) out.push_back({s.key - 1, s.count});
    s = Slot{0, 0, 0};
  }
  used_.clear();
  std::sort(out.begin(), out.end(), [](const Match& a, const Match& b) { return a.target < b.target; });
}

MatchRecord query_read_similarity(const QuasiDictionary& qd, const ReadIdTable& ids, const ReadRecord& q,
                                  const LinkOptions& opts) {
  TargetAccumulator acc;
  return link_read(qd, q, opts, acc, [&](std::uint64_t idx, auto&& fn) {
    for (std::uint32_t t : ids.ids(idx)) fn(t);
  });
}

MatchRecord query_disk(const QuasiDictionary& qd, const DiskIdTable& ids, const ReadRecord& q,
                       const LinkOptions& opts) {
  TargetAccumulator acc;
  std::vector<std::uint32_t> block;
  return link_read(qd, q, opts, acc, [&](std::uint64_t idx, auto&& fn) {
    ids.read_ids(idx, block);
    for (std::uint32_t t : block) fn(t);
  });
}

QuasiDictionary build_link_dictionary(const std::string& bank_path, const IndexParams& params) {
  QuasiDictionary::validate(params.k, params.f);
  const SolidKmerSet solid = count_solid_kmers(bank_path, params.k, params.solidity, params.counting);
  return QuasiDictionary::build(solid.codes(), params.k, params.f, params.mphf);
}

ReadIdTable build_read_id_table(const QuasiDictionary& qd, const std::string& bank_path, int threads) {
  ReadIdTable table(qd.size());
  ReadStream stream(bank_path);
  map_reads_ordered(
      stream, threads, kChunkReads, [&](std::span<const ReadRecord> chunk) { return collect_hits(qd, chunk); },
      [&](std::vector<Hit>&& hits) {
        for (const Hit& h : hits) table.add(h.index, h.read_id);
      });
  return table;
}

DiskIdTable build_disk_id_table(const QuasiDictionary& qd, const std::string& bank_path,
                                const std::string& tmp_parent, int threads) {
  const std::uint64_t n = qd.size();
  DiskIdTable table;
  table.dir_ = std::make_unique<TempDir>(tmp_parent, "qdict-ids");
  table.path_ = table.dir_->file("ids.bin").string();
  table.fd_ = ::open(table.path_.c_str(), O_RDWR | O_CREAT | O_TRUNC, 0600);
  if (table.fd_ < 0) throw IoError("cannot create " + table.path_ + ": " + std::strerror(errno));

  // Pass 1: occurrences per index, bank-side collisions included.
  std::vector<std::uint64_t>& slots = table.offsets_;
  slots.assign(n, 0);
  {
    ReadStream stream(bank_path);
    map_reads_ordered(
        stream, threads, kChunkReads, [&](std::span<const ReadRecord> chunk) { return collect_hits(qd, chunk); },
        [&](std::vector<Hit>&& hits) {
          for (const Hit& h : hits) ++slots[h.index];
        });
  }

  // Pass 2: count + 1 zero slots per index; the count array becomes offsets.
  std::vector<std::uint32_t> fill(n, 0);
  std::uint64_t pos = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::uint64_t count = slots[i];
    if (count >= std::numeric_limits<std::uint32_t>::max()) throw std::length_error("id block too large");
    slots[i] = pos;
    pos += (count + 1) * kSlotBytes;
  }
  table.file_bytes_ = pos;
  {
    const std::vector<unsigned char> zeros(std::size_t{1} << 20, 0);
    for (std::uint64_t off = 0; off < pos; off += zeros.size()) {
      pwrite_all(table.fd_, zeros.data(), static_cast<std::size_t>(std::min<std::uint64_t>(zeros.size(), pos - off)), off);
    }
  }

  // Pass 3: each id goes to the first zero slot of its block. Slots fill in
  // order, so the first zero is tracked by a per-index cursor.
  SlotWriter writer(table.fd_, pos);
  {
    ReadStream stream(bank_path);
    map_reads_ordered(
        stream, threads, kChunkReads, [&](std::span<const ReadRecord> chunk) { return collect_hits(qd, chunk); },
        [&](std::vector<Hit>&& hits) {
          for (const Hit& h : hits) {
            const std::uint64_t slot_off = slots[h.index] + std::uint64_t{fill[h.index]++} * kSlotBytes;
            writer.put(slot_off, h.read_id + 1);
          }
        });
  }
  writer.flush();
  return table;
}

std::string format_matches(const MatchRecord& rec) {
  std::string s = std::to_string(rec.query_id);
  s += ':';
  if (rec.matches.empty()) {
    s += "*\n";
    return s;
  }
  for (std::size_t i = 0; i < rec.matches.size(); ++i) {
    if (i != 0) s += ' ';
    s += std::to_string(rec.matches[i].target);
    s += '-';
    s += std::to_string(rec.matches[i].shared);
  }
  s += '\n';
  return s;
}

void write_linker_header(std::ostream& os, const QuasiDictionary& qd, std::uint64_t solidity,
                         const LinkOptions& opts) {
  os << "# src link\n"
     << "# k=" << qd.k() << " t=" << solidity << " f=" << qd.f() << " gamma=" << qd.mphf().gamma()
     << " seed=" << qd.mphf().seed() << " exact=" << (qd.exact() ? 1 : 0) << " min_shared=" << opts.min_shared
     << " self=" << (opts.include_self ? 1 : 0) << " indexed_kmers=" << qd.size() << '\n'
     << "#query_id:target_id-shared_kmers ...\n";
}

void run_src_linker(const QuasiDictionary& qd, const ReadIdTable& ids, const LinkerRun& run) {
  run_linker_impl(qd, ids, run);
}

void run_src_linker(const QuasiDictionary& qd, const DiskIdTable& ids, const LinkerRun& run) {
  run_linker_impl(qd, ids, run);
}

}  // namespace qdict
