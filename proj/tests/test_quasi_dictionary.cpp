#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <unordered_set>
#include <vector>

#include "doctest.h"
#include "qdict/errors.hpp"
#include "qdict/kmer.hpp"
#include "qdict/quasi_dictionary.hpp"
#include "qdict/temp_dir.hpp"
#include "support/synthetic.hpp"

using namespace qdict;

namespace {

struct KeySets {
  std::vector<std::uint64_t> indexed;
  std::vector<std::uint64_t> aliens;
};

// Distinct canonical 31-mer codes, split into indexed and alien sets.
KeySets random_kmers(std::size_t n_indexed, std::size_t n_aliens, std::uint64_t seed, int k = 31) {
  std::mt19937_64 rng(seed);
  std::unordered_set<std::uint64_t> seen;
  KeySets out;
  while (out.indexed.size() + out.aliens.size() < n_indexed + n_aliens) {
    const std::uint64_t c = canonicalize(rng() & kmer_mask(k), k).code();
    if (!seen.insert(c).second) continue;
    (out.indexed.size() < n_indexed ? out.indexed : out.aliens).push_back(c);
  }
  return out;
}

double fp_rate(const QuasiDictionary& qd, const std::vector<std::uint64_t>& aliens) {
  std::size_t fp = 0;
  for (auto a : aliens) fp += qd.lookup(a) >= 0;
  return static_cast<double>(fp) / static_cast<double>(aliens.size());
}

}  // namespace

TEST_SUITE("quasi_dictionary") {

TEST_CASE("fingerprint function") {
  CHECK(fingerprint(0, 12) == 0);
  // x = 1: x ^= x << 13 -> 0x2001; x ^= x >> 7 -> 0x2041; x ^= x << 17 -> 0x40822041.
  CHECK(fingerprint(1, 62) == 0x40822041ULL);
  std::mt19937_64 rng(2);
  for (int i = 0; i < 1000; ++i) {
    const std::uint64_t c = rng() & kmer_mask(31);
    CHECK(fingerprint(c, 8) == (fingerprint(c, 12) & 0xFF));
  }
}

TEST_CASE("three-key example") {
  std::vector<std::uint64_t> codes;
  for (const char* s : {"AAAA", "AAAC", "AACA"}) codes.push_back(*encode_kmer(s));
  const auto qd = QuasiDictionary::build(codes, 4, 8);
  CHECK(qd.size() == 3);
  std::vector<std::int64_t> idx;
  for (auto c : codes) {
    const auto r = qd.query(CanonicalKmer::from_code(c, 4));
    CHECK(r.found());
    idx.push_back(r.index);
  }
  std::sort(idx.begin(), idx.end());
  CHECK(idx == std::vector<std::int64_t>{0, 1, 2});
}

TEST_CASE("empty dictionary") {
  const auto qd = QuasiDictionary::build({}, 31, 12);
  CHECK(qd.size() == 0);
  std::mt19937_64 rng(4);
  for (int i = 0; i < 1000; ++i) CHECK(qd.lookup(rng() & kmer_mask(31)) == -1);
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(QuasiDictionary::validate(31, 63), std::invalid_argument);
  CHECK_THROWS_AS(QuasiDictionary::validate(31, 0), std::invalid_argument);
  CHECK_THROWS_AS(QuasiDictionary::validate(32, 12), std::invalid_argument);
  CHECK_NOTHROW(QuasiDictionary::validate(31, 62));
}

TEST_CASE("no false negatives, unique indices") {
  const auto keys = random_kmers(100000, 0, 6);
  const auto qd = QuasiDictionary::build(keys.indexed, 31, 8);
  std::vector<std::int64_t> idx;
  for (auto c : keys.indexed) idx.push_back(qd.lookup(c));
  std::sort(idx.begin(), idx.end());
  for (std::size_t i = 0; i < idx.size(); ++i) REQUIRE(idx[i] == static_cast<std::int64_t>(i));
  CHECK(qd.payload_bits() == keys.indexed.size() * 8);
}

TEST_CASE("exact mode is exhaustive-exact for small k") {
  for (int k : {4, 6, 8}) {
    CAPTURE(k);
    std::vector<std::uint64_t> all;
    for (std::uint64_t c = 0; c <= kmer_mask(k); ++c) {
      if (canonicalize(c, k).code() == c) all.push_back(c);
    }
    std::mt19937_64 rng(static_cast<std::uint64_t>(k));
    std::shuffle(all.begin(), all.end(), rng);
    const std::vector<std::uint64_t> indexed(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(all.size() / 3));
    const auto qd = QuasiDictionary::build(indexed, k, static_cast<unsigned>(2 * k));
    CHECK(qd.exact());
    const std::unordered_set<std::uint64_t> in(indexed.begin(), indexed.end());
    for (auto c : all) REQUIRE((qd.lookup(c) >= 0) == (in.count(c) > 0));
  }
}

TEST_CASE("false-positive rate falls with f") {
  const auto keys = random_kmers(200000, 400000, 8);
  double prev = 1.0;
  for (unsigned f : {4u, 8u, 12u, 20u}) {
    const auto qd = QuasiDictionary::build(keys.indexed, 31, f);
    const double rate = fp_rate(qd, keys.aliens);
    CAPTURE(f);
    CAPTURE(rate);
    CHECK(rate <= std::ldexp(1.0, -static_cast<int>(f)) * 1.2 + 1e-5);
    if (f < 20) CHECK(rate < prev);
    prev = rate;
  }
  CHECK(fp_rate(QuasiDictionary::build(keys.indexed, 31, 62), keys.aliens) == 0.0);
}

TEST_CASE("batched lookup agrees with single lookups") {
  const auto keys = random_kmers(20000, 20000, 10);
  const auto qd = QuasiDictionary::build(keys.indexed, 31, 6);
  std::vector<std::uint64_t> probes = keys.aliens;
  probes.insert(probes.end(), keys.indexed.begin(), keys.indexed.end());
  std::vector<std::int64_t> out(probes.size());
  std::vector<std::uint64_t> scratch(probes.size());
  qd.lookup_many(probes, out, scratch);
  for (std::size_t i = 0; i < probes.size(); ++i) REQUIRE(out[i] == qd.lookup(probes[i]));

  std::mt19937_64 rng(3);
  const std::string read = testing_support::random_dna(500, rng);
  std::vector<std::pair<std::size_t, std::int64_t>> a, b;
  for_each_canonical_kmer(read, 31, [&](std::size_t pos, std::uint64_t c) {
    if (qd.lookup(c) >= 0) a.emplace_back(pos, qd.lookup(c));
  });
  for_each_indexed_kmer(qd, read, [&](std::size_t pos, std::uint64_t idx) { b.emplace_back(pos, static_cast<std::int64_t>(idx)); });
  CHECK(a == b);
}

TEST_CASE("index file round trip") {
  TempDir dir;
  const auto keys = random_kmers(10000, 10000, 12);
  const auto qd = QuasiDictionary::build(keys.indexed, 31, 12);
  std::vector<std::uint8_t> counts(qd.size());
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] = static_cast<std::uint8_t>(i * 7);
  const std::string path = dir.file("x.qdx");
  save_index(path, qd, 2, &counts);
  const StoredIndex loaded = load_index(path);
  CHECK(loaded.qd.k() == 31);
  CHECK(loaded.qd.f() == 12);
  CHECK(loaded.solidity == 2);
  CHECK(loaded.has_counts);
  CHECK(loaded.counts == counts);
  for (auto c : keys.indexed) REQUIRE(loaded.qd.lookup(c) == qd.lookup(c));
  for (auto c : keys.aliens) REQUIRE(loaded.qd.lookup(c) == qd.lookup(c));

  save_index(dir.file("plain.qdx"), qd);
  CHECK_FALSE(load_index(dir.file("plain.qdx")).has_counts);

  save_index(dir.file("e.qdx"), QuasiDictionary::build({}, 31, 12));
  CHECK(load_index(dir.file("e.qdx")).qd.size() == 0);

  testing_support::write_text(dir.file("bad.qdx"), "NOTANINDEXFILE..........");
  CHECK_THROWS_AS(load_index(dir.file("bad.qdx")), FormatError);
}

}  // TEST_SUITE
