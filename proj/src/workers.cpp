#include "gpmax/workers.hpp"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace gpmax {

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("GP_EXTREMES_WORKERS")) {
    try {
      const int parsed = std::stoi(env);
      if (parsed > 0) return parsed;
    } catch (const std::exception&) {
      // fall through to hardware default
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

void parallel_chunks(std::size_t total, int workers,
                     const std::function<void(std::size_t, std::size_t)>& fn) {
  if (total == 0) return;
  const std::size_t lanes =
      std::min<std::size_t>(std::max(workers, 1), total);
  if (lanes == 1) {
    fn(0, total);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(lanes);
  std::vector<std::exception_ptr> errors(lanes);
  const std::size_t base = total / lanes;
  const std::size_t extra = total % lanes;
  std::size_t begin = 0;
  for (std::size_t lane = 0; lane < lanes; ++lane) {
    const std::size_t len = base + (lane < extra ? 1 : 0);
    const std::size_t end = begin + len;
    pool.emplace_back([&fn, &errors, lane, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        errors[lane] = std::current_exception();
      }
    });
    begin = end;
  }
  for (auto& t : pool) t.join();
  for (auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
}

}  // namespace gpmax
