#pragma once

#include <cstdint>

#include "qdict/kmer_counter.hpp"
#include "qdict/mphf.hpp"

namespace qdict {

/// Parameters shared by every bank index build.
struct IndexParams {
  int k = 31;
  std::uint64_t solidity = 2;
  unsigned f = 12;
  MphfOptions mphf;
  CountOptions counting;
};

}  // namespace qdict
