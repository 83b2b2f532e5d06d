#include <zlib.h>

#include <string>
#include <vector>

#include "doctest.h"
#include "qdict/errors.hpp"
#include "qdict/seq_io.hpp"
#include "qdict/temp_dir.hpp"
#include "support/synthetic.hpp"

using namespace qdict;
using testing_support::write_text;

namespace {

void write_gzip(const std::string& path, const std::string& text) {
  gzFile gz = gzopen(path.c_str(), "wb");
  REQUIRE(gz != nullptr);
  REQUIRE(gzwrite(gz, text.data(), static_cast<unsigned>(text.size())) == static_cast<int>(text.size()));
  gzclose(gz);
}

std::vector<std::pair<std::string, std::string>> flatten(const std::vector<ReadRecord>& reads) {
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 0; i < reads.size(); ++i) {
    CHECK(reads[i].id == i);
    out.emplace_back(reads[i].name, reads[i].sequence);
  }
  return out;
}

const char* kFastq =
    "@r1 first\nACGTACGT\n+\nIIII@III\n"
    "@r2\nGGGG\n+r2\n@@@@\n"
    "@r3\nacgtn\n+\n!!!!!\n";

}  // namespace

TEST_SUITE("seq_io") {

TEST_CASE("multi-line fasta") {
  TempDir dir;
  const std::string p = dir.file("a.fa");
  write_text(p, ">one\nACGT\nTTGA\n\n>two desc\nGG\nCC\nA\n");
  ReadStream s(p);
  CHECK(s.format() == SeqFormat::fasta);
  CHECK(s.compression() == Compression::none);
  const auto reads = read_all(p);
  REQUIRE(reads.size() == 2);
  CHECK(reads[0].sequence == "ACGTTTGA");
  CHECK(reads[1].sequence == "GGCCA");
  CHECK(reads[1].id == 1);
}

TEST_CASE("fastq with '@' in quality") {
  TempDir dir;
  const std::string p = dir.file("a.fq");
  write_text(p, kFastq);
  const auto reads = read_all(p);
  REQUIRE(reads.size() == 3);
  CHECK(reads[0].sequence == "ACGTACGT");
  CHECK(reads[1].sequence == "GGGG");
  CHECK(reads[2].sequence == "acgtn");
}

TEST_CASE("gzip equals plain") {
  TempDir dir;
  write_text(dir.file("a.fq"), kFastq);
  write_gzip(dir.file("a.fq.gz"), kFastq);
  ReadStream gz(dir.file("a.fq.gz"));
  CHECK(gz.compression() == Compression::gzip);
  CHECK(gz.format() == SeqFormat::fastq);
  CHECK(flatten(read_all(dir.file("a.fq"))) == flatten(read_all(dir.file("a.fq.gz"))));

  const std::string fa = ">x\nAC\nGT\n>y\nTT\n";
  write_text(dir.file("b.fa"), fa);
  write_gzip(dir.file("b.fa.gz"), fa);
  CHECK(flatten(read_all(dir.file("b.fa"))) == flatten(read_all(dir.file("b.fa.gz"))));
}

TEST_CASE("crlf line endings") {
  TempDir dir;
  std::string crlf;
  for (const char* c = kFastq; *c; ++c) {
    if (*c == '\n') crlf += '\r';
    crlf += *c;
  }
  write_text(dir.file("lf.fq"), kFastq);
  write_text(dir.file("crlf.fq"), crlf);
  CHECK(flatten(read_all(dir.file("lf.fq"))) == flatten(read_all(dir.file("crlf.fq"))));
}

TEST_CASE("empty file yields no reads") {
  TempDir dir;
  write_text(dir.file("e.fa"), "");
  ReadStream s(dir.file("e.fa"));
  CHECK_FALSE(s.next().has_value());
}

TEST_CASE("unrecognized format") {
  TempDir dir;
  write_text(dir.file("x.txt"), "hello\nworld\n");
  CHECK_THROWS_AS(ReadStream(dir.file("x.txt")), FormatError);
}

TEST_CASE("missing file") {
  CHECK_THROWS_AS(ReadStream("/nonexistent/reads.fa"), IoError);
}

TEST_CASE("truncated fastq reports the line") {
  TempDir dir;
  write_text(dir.file("t.fq"), "@r1\nACGT\n+\nIIII\n@r2\nACGTACGT\n+\nIII\n");
  ReadStream s(dir.file("t.fq"));
  CHECK(s.next().has_value());
  try {
    s.next();
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() >= 5);
  }
}

TEST_CASE("ids are stable across passes") {
  TempDir dir;
  write_text(dir.file("a.fq"), kFastq);
  CHECK(flatten(read_all(dir.file("a.fq"))) == flatten(read_all(dir.file("a.fq"))));
}

TEST_CASE("id map sidecar") {
  TempDir dir;
  write_text(dir.file("a.fq"), kFastq);
  write_id_map(dir.file("a.fq"), dir.file("map.tsv"));
  CHECK(testing_support::read_text(dir.file("map.tsv")) == "0\tr1 first\n1\tr2\n2\tr3\n");
}

}  // TEST_SUITE
