#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <optional>
#include <span>
#include <thread>
#include <vector>

#include "qdict/seq_io.hpp"

namespace qdict {

inline int default_threads() noexcept {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

/// Streams reads in batches, applies map to fixed-size chunks on up to
/// `threads` workers and hands the results to reduce in input order, so the
/// outcome does not depend on the thread count.
template <typename Map, typename Reduce>
void map_reads_ordered(ReadStream& stream, int threads, std::size_t chunk_reads, Map&& map, Reduce&& reduce) {
  using Result = decltype(map(std::span<const ReadRecord>{}));
  threads = std::max(threads, 1);
  chunk_reads = std::max<std::size_t>(chunk_reads, 1);
  std::vector<ReadRecord> batch;
  std::vector<std::optional<Result>> results(static_cast<std::size_t>(threads));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));

  while (stream.next_batch(batch, chunk_reads * static_cast<std::size_t>(threads))) {
    const std::span<const ReadRecord> all(batch);
    const std::size_t n_chunks = (all.size() + chunk_reads - 1) / chunk_reads;
    const auto run_chunk = [&](std::size_t c) {
      try {
        const std::size_t begin = c * chunk_reads;
        results[c].emplace(map(all.subspan(begin, std::min(chunk_reads, all.size() - begin))));
      } catch (...) {
        errors[c] = std::current_exception();
      }
    };
    {
      std::vector<std::jthread> workers;
      for (std::size_t c = 1; c < n_chunks; ++c) workers.emplace_back(run_chunk, c);
      run_chunk(0);
    }
    for (std::size_t c = 0; c < n_chunks; ++c) {
      if (errors[c]) std::rethrow_exception(errors[c]);
      reduce(std::move(*results[c]));
      results[c].reset();
    }
  }
}

}  // namespace qdict
