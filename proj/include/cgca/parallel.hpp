#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace cgca {

struct TaskFailure {
  std::size_t index = 0;
  std::string message;
};

// Runs fn(i) for i in [0, count) on up to `threads` workers. Tasks are
// claimed from a shared counter; an exception fails only its own task.
// Returns the failures sorted by index.
template <typename Fn>
std::vector<TaskFailure> parallel_for(std::size_t count, int threads, Fn&& fn) {
  std::vector<TaskFailure> failures;
  std::mutex mu;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (const std::exception& e) {
        std::lock_guard lock(mu);
        failures.push_back({i, e.what()});
      } catch (...) {
        std::lock_guard lock(mu);
        failures.push_back({i, "unknown error"});
      }
    }
  };
  const auto workers = static_cast<std::size_t>(threads < 1 ? 1 : threads);
  if (workers == 1 || count <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    const std::size_t spawn = std::min(workers, count);
    pool.reserve(spawn);
    for (std::size_t t = 0; t < spawn; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  std::sort(failures.begin(), failures.end(),
            [](const TaskFailure& a, const TaskFailure& b) { return a.index < b.index; });
  return failures;
}

}  // namespace cgca
