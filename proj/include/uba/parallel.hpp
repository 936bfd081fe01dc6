// SPDX-License-Identifier: Apache-2.0

#ifndef UBA_PARALLEL_HPP
#define UBA_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace uba
{

// Worker count used by parallel_for. 0 restores the default (all hardware threads).
void set_thread_count(unsigned count);
unsigned thread_count();

// Runs body(i) for i in [0, count). Work items are independent; callers write results
// into per-index slots so the outcome does not depend on scheduling.
template <typename Body>
void parallel_for(std::size_t count, Body &&body)
{
  const std::size_t workers = std::min<std::size_t>(thread_count(), count);
  if (workers <= 1)
  {
    for (std::size_t i = 0; i < count; ++i)
    {
      body(i);
    }
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&] {
    for (std::size_t i = next++; i < count; i = next++)
    {
      try
      {
        body(i);
      }
      catch (...)
      {
        std::lock_guard lock(error_mutex);
        if (!error)
        {
          error = std::current_exception();
        }
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w)
  {
    pool.emplace_back(run);
  }
  run();
  for (auto &t : pool)
  {
    t.join();
  }
  if (error)
  {
    std::rethrow_exception(error);
  }
}

}  // namespace uba

#endif  // UBA_PARALLEL_HPP
