#include "qdict/kmer.hpp"

namespace qdict {

std::optional<std::uint64_t> encode_kmer(std::string_view window) {
  std::uint64_t code = 0;
  for (char c : window) {
    const std::uint8_t b = encode_base(c);
    if (b == kInvalidBase) return std::nullopt;
    code = (code << 2) | b;
  }
  return code;
}

std::string decode_kmer(std::uint64_t code, int k) {
  std::string out(static_cast<std::size_t>(k), 'A');
  for (int i = k - 1; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = decode_base(code);
    code >>= 2;
  }
  return out;
}

std::vector<PositionedKmer> enumerate_kmers(const ReadRecord& read, int k) {
  check_k(k);
  std::vector<PositionedKmer> out;
  for_each_canonical_kmer(read.sequence, k, [&](std::size_t pos, std::uint64_t code) {
    out.push_back({pos, CanonicalKmer::from_code(code, k)});
  });
  return out;
}

std::size_t count_valid_windows(std::string_view seq, int k) {
  std::size_t n = 0;
  int run = 0;
  for (char c : seq) {
    if (encode_base(c) == kInvalidBase) {
      run = 0;
    } else if (++run >= k) {
      ++n;
    }
  }
  return n;
}

}  // namespace qdict
