#pragma once

#include <cstddef>
#include <functional>

namespace synloc {

// Runs fn(begin, end) over [0, count) split into spans of at most
// chunk_size items. Chunk boundaries depend only on (count, chunk_size);
// the worker count affects scheduling but never the partition, so any
// per-chunk results merged in chunk order are identical for every worker
// count.
void parallel_chunks(std::size_t count, std::size_t chunk_size, int workers,
                     const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace synloc
