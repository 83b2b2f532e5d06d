#include "qdict/seq_io.hpp"

#include <zlib.h>

#include <cstdio>
#include <cstring>
#include <fstream>

#include "qdict/errors.hpp"

namespace qdict {

struct ReadStream::Source {
  gzFile file = nullptr;
  std::vector<char> buf = std::vector<char>(1 << 20);
  std::size_t pos = 0;
  std::size_t len = 0;
  bool eof = false;

  ~Source() {
    if (file != nullptr) gzclose(file);
  }

  bool fill() {
    if (eof) return false;
    const int n = gzread(file, buf.data(), static_cast<unsigned>(buf.size()));
    if (n < 0) {
      int err = 0;
      throw IoError(std::string("decompression error: ") + gzerror(file, &err));
    }
    pos = 0;
    len = static_cast<std::size_t>(n);
    if (n == 0) eof = true;
    return n > 0;
  }
};

ReadStream::ReadStream(const std::string& path) : src_(std::make_unique<Source>()), path_(path) {
  {
    std::FILE* raw = std::fopen(path.c_str(), "rb");
    if (raw == nullptr) throw IoError("cannot open " + path + ": " + std::strerror(errno));
    unsigned char magic[2] = {0, 0};
    const std::size_t got = std::fread(magic, 1, 2, raw);
    std::fclose(raw);
    if (got == 2 && magic[0] == 0x1f && magic[1] == 0x8b) compression_ = Compression::gzip;
  }
  src_->file = gzopen(path.c_str(), "rb");
  if (src_->file == nullptr) throw IoError("cannot open " + path);
  gzbuffer(src_->file, 1 << 18);

  if (!peek_line()) return;  // empty input
  if (pending_[0] == '>') {
    format_ = SeqFormat::fasta;
  } else if (pending_[0] == '@') {
    format_ = SeqFormat::fastq;
  } else {
    throw FormatError(path + ": unrecognized format (expected '>' or '@' at start)");
  }
}

ReadStream::~ReadStream() = default;
ReadStream::ReadStream(ReadStream&&) noexcept = default;
ReadStream& ReadStream::operator=(ReadStream&&) noexcept = default;

bool ReadStream::read_line(std::string& line) {
  if (has_pending_) {
    line.swap(pending_);
    has_pending_ = false;
    return true;
  }
  line.clear();
  bool any = false;
  for (;;) {
    if (src_->pos == src_->len && !src_->fill()) break;
    const char* begin = src_->buf.data() + src_->pos;
    const std::size_t avail = src_->len - src_->pos;
    const void* nl = std::memchr(begin, '\n', avail);
    any = true;
    if (nl != nullptr) {
      const std::size_t n = static_cast<std::size_t>(static_cast<const char*>(nl) - begin);
      line.append(begin, n);
      src_->pos += n + 1;
      break;
    }
    line.append(begin, avail);
    src_->pos = src_->len;
  }
  if (!any) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  ++line_no_;
  return true;
}

// Loads the next non-empty line into pending_.
bool ReadStream::peek_line() {
  if (has_pending_) return true;
  std::string line;
  while (read_line(line)) {
    if (!line.empty()) {
      pending_.swap(line);
      has_pending_ = true;
      return true;
    }
  }
  return false;
}

std::optional<ReadRecord> ReadStream::next() {
  if (!peek_line()) return std::nullopt;
  ReadRecord rec;
  std::string line;
  read_line(line);
  const std::size_t header_line = line_no_;

  if (format_ == SeqFormat::fasta) {
    if (line[0] != '>') throw ParseError("expected FASTA header", header_line);
    rec.name = line.substr(1);
    while (peek_line() && pending_[0] != '>') {
      read_line(line);
      rec.sequence += line;
    }
  } else {
    if (line[0] != '@') throw ParseError("expected FASTQ header", header_line);
    rec.name = line.substr(1);
    bool plus = false;
    while (read_line(line)) {
      if (!line.empty() && line[0] == '+') {
        plus = true;
        break;
      }
      rec.sequence += line;
    }
    if (!plus) throw ParseError("truncated FASTQ record: missing '+' line", line_no_);
    // Quality lines may start with '@'; consume by length, not by content.
    std::size_t qual_len = 0;
    while (qual_len < rec.sequence.size()) {
      if (!read_line(line)) {
        throw ParseError("truncated FASTQ record: quality shorter than sequence", line_no_);
      }
      qual_len += line.size();
    }
    if (qual_len != rec.sequence.size()) {
      throw ParseError("FASTQ sequence/quality length mismatch", line_no_);
    }
  }
  rec.id = next_id_++;
  return rec;
}

bool ReadStream::next_batch(std::vector<ReadRecord>& out, std::size_t max_reads) {
  out.clear();
  while (out.size() < max_reads) {
    auto r = next();
    if (!r) break;
    out.push_back(std::move(*r));
  }
  return !out.empty();
}

std::vector<ReadRecord> read_all(const std::string& path) {
  ReadStream s(path);
  std::vector<ReadRecord> out;
  while (auto r = s.next()) out.push_back(std::move(*r));
  return out;
}

void write_id_map(const std::string& reads_path, const std::string& out_path) {
  ReadStream s(reads_path);
  std::ofstream out(out_path);
  if (!out) throw IoError("cannot write " + out_path);
  while (auto r = s.next()) out << r->id << '\t' << r->name << '\n';
  if (!out) throw IoError("write failed: " + out_path);
}

}  // namespace qdict
