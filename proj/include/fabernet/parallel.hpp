#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace fabernet {

/// Worker count: FABER_RELU_THREADS if set and positive, else hardware concurrency.
unsigned thread_count();

/// Runs body(chunk, begin, end) over [0, n) split into fixed-size chunks.
/// Chunk boundaries depend only on n and chunk_size, never on the thread count,
/// so per-chunk results are reproducible.
void parallel_chunks(std::size_t n, std::size_t chunk_size,
                     const std::function<void(std::size_t chunk, std::size_t begin, std::size_t end)>& body);

/// Pairwise (tree) summation in a fixed order.
double pairwise_sum(const std::vector<double>& values);

} // namespace fabernet
