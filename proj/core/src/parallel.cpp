#include "synloc/parallel.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace synloc {

void parallel_chunks(std::size_t count, std::size_t chunk_size, int workers,
                     const std::function<void(std::size_t, std::size_t)>& fn) {
  if (count == 0) return;
  if (chunk_size == 0) chunk_size = 1;
  std::size_t n_chunks = (count + chunk_size - 1) / chunk_size;

  if (workers <= 1 || n_chunks == 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) {
      std::size_t begin = c * chunk_size;
      std::size_t end = begin + chunk_size < count ? begin + chunk_size : count;
      fn(begin, end);
    }
    return;
  }

  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;

  auto body = [&] {
    for (;;) {
      std::size_t c = next.fetch_add(1);
      if (c >= n_chunks) return;
      std::size_t begin = c * chunk_size;
      std::size_t end = begin + chunk_size < count ? begin + chunk_size : count;
      try {
        fn(begin, end);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  std::size_t n_threads = static_cast<std::size_t>(workers);
  if (n_threads > n_chunks) n_threads = n_chunks;
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace synloc
