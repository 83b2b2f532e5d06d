#include "qdict/quasi_dictionary.hpp"

#include <fstream>
#include <stdexcept>

#include "qdict/errors.hpp"
#include "qdict/serialize.hpp"

namespace qdict {

namespace {

constexpr std::string_view kMagic = "QDIX0001";
constexpr char kCountTag[4] = {'C', 'N', 'T', '8'};

void write_index(std::ostream& os, const QuasiDictionary& qd, int solidity,
                 const std::vector<std::uint8_t>* counts) {
  io::write_magic(os, kMagic);
  io::write_u32(os, static_cast<std::uint32_t>(qd.k()));
  io::write_u32(os, qd.f());
  io::write_u32(os, static_cast<std::uint32_t>(solidity));
  io::write_u64(os, qd.size());
  io::write_f64(os, qd.mphf().gamma());
  io::write_u64(os, qd.mphf().seed());
  qd.mphf().serialize(os);
  io::write_words(os, qd.fingerprints().words());
  io::write_u32(os, counts != nullptr ? 1u : 0u);
  if (counts != nullptr) {
    os.write(kCountTag, 4);
    io::write_u64(os, counts->size());
    os.write(reinterpret_cast<const char*>(counts->data()), static_cast<std::streamsize>(counts->size()));
  }
  if (!os) throw IoError("index write failed");
}

}  // namespace

void QuasiDictionary::validate(int k, unsigned f) {
  check_k(k);
  if (f < 1 || static_cast<int>(f) > 2 * k) {
    throw std::invalid_argument("fingerprint size f must be in [1, 2k]");
  }
}

void QuasiDictionary::serialize(std::ostream& os) const { write_index(os, *this, 0, nullptr); }

QuasiDictionary QuasiDictionary::deserialize(std::istream& is) {
  io::expect_magic(is, kMagic);
  QuasiDictionary qd;
  const std::uint32_t k = io::read_u32(is);
  const std::uint32_t f = io::read_u32(is);
  io::read_u32(is);  // solidity, handled by load_index
  const std::uint64_t n = io::read_u64(is);
  const double gamma = io::read_f64(is);
  const std::uint64_t seed = io::read_u64(is);
  if (k < 1 || k > static_cast<std::uint32_t>(kMaxK) || f < 1 || f > 2 * k) {
    throw FormatError("index header: invalid k/f");
  }
  qd.k_ = static_cast<int>(k);
  qd.f_ = f;
  qd.mphf_ = Mphf::deserialize(is);
  if (qd.mphf_.size() != n || qd.mphf_.gamma() != gamma || qd.mphf_.seed() != seed) {
    throw FormatError("index header disagrees with embedded MPHF");
  }
  auto words = io::read_words(is, PackedArray::word_count(n, f));
  if (words.size() != PackedArray::word_count(n, f)) throw FormatError("fingerprint array size mismatch");
  qd.fingerprints_ = PackedArray(n, f, std::move(words));
  return qd;
}

void save_index(const std::string& path, const QuasiDictionary& qd, int solidity,
                const std::vector<std::uint8_t>* counts) {
  if (counts != nullptr && counts->size() != qd.size()) {
    throw std::invalid_argument("count table size differs from dictionary size");
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write " + path);
  write_index(os, qd, solidity, counts);
}

StoredIndex load_index(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  // Solidity sits in the header; peek it before the dictionary parse.
  char head[20];
  io::read_exact(is, head, sizeof head);
  std::uint32_t solidity = 0;
  for (int i = 3; i >= 0; --i) solidity = (solidity << 8) | static_cast<unsigned char>(head[16 + i]);
  is.seekg(0);

  StoredIndex out;
  out.qd = QuasiDictionary::deserialize(is);
  out.solidity = static_cast<int>(solidity);
  const std::uint32_t n_sections = io::read_u32(is);
  for (std::uint32_t s = 0; s < n_sections; ++s) {
    char tag[4];
    io::read_exact(is, tag, 4);
    const std::uint64_t len = io::read_u64(is);
    if (std::equal(tag, tag + 4, kCountTag)) {
      if (len != out.qd.size()) throw FormatError("count table size mismatch");
      out.counts.resize(len);
      io::read_exact(is, reinterpret_cast<char*>(out.counts.data()), len);
      out.has_counts = true;
    } else {
      is.seekg(static_cast<std::streamoff>(len), std::ios::cur);
      if (!is) throw FormatError("truncated index section");
    }
  }
  return out;
}

}  // namespace qdict
