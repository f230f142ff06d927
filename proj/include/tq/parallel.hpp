#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace tq {

// Worker count: TQ_THREADS if set and nonzero, otherwise hardware
// concurrency. TQ_THREADS=0 also means auto.
unsigned thread_budget();

// Runs fn(lo, hi) over fixed-size chunks of [0, n). Chunk boundaries depend
// only on (n, chunk), never on the worker count, so any fn that writes
// disjoint per-index outputs produces bit-identical results under any
// schedule.
void parallel_chunks(std::size_t n, std::size_t chunk,
                     const std::function<void(std::size_t, std::size_t)>& fn);

} // namespace tq
