#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qdict/kmer.hpp"

namespace qdict {

enum class SeqFormat { unknown, fasta, fastq };
enum class Compression { none, gzip };

/// Single-consumer streaming reader for FASTA (multi-line) and FASTQ, plain
/// or gzip. Format is sniffed from the first decompressed byte, compression
/// from the file magic. Ids are issued consecutively from 0.
class ReadStream {
 public:
  explicit ReadStream(const std::string& path);
  ~ReadStream();
  ReadStream(ReadStream&&) noexcept;
  ReadStream& operator=(ReadStream&&) noexcept;
  ReadStream(const ReadStream&) = delete;
  ReadStream& operator=(const ReadStream&) = delete;

  /// nullopt at end of input.
  std::optional<ReadRecord> next();

  /// Fills out with up to max_reads records; returns false once exhausted.
  bool next_batch(std::vector<ReadRecord>& out, std::size_t max_reads);

  SeqFormat format() const noexcept { return format_; }
  Compression compression() const noexcept { return compression_; }
  const std::string& path() const noexcept { return path_; }
  std::uint64_t next_id() const noexcept { return next_id_; }

 private:
  bool read_line(std::string& line);
  bool peek_line();

  struct Source;
  std::unique_ptr<Source> src_;
  std::string path_;
  SeqFormat format_ = SeqFormat::unknown;
  Compression compression_ = Compression::none;
  std::uint64_t next_id_ = 0;
  std::size_t line_no_ = 0;
  std::string pending_;
  bool has_pending_ = false;
};

inline ReadStream open_reads(const std::string& path) { return ReadStream(path); }

/// Loads a whole read file; convenient for tests and small banks.
std::vector<ReadRecord> read_all(const std::string& path);

/// Writes "<id>\t<header>" per read, the optional id-to-name sidecar.
void write_id_map(const std::string& reads_path, const std::string& out_path);

}  // namespace qdict
