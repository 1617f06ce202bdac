// Copyright 2026 The leofuse Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LEO_PARALLEL_HPP_
#define LEO_PARALLEL_HPP_

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace leo {

// Worker cap: LEO_THREADS env var, else hardware concurrency.
inline unsigned worker_count() {
  if (const char * env = std::getenv("LEO_THREADS")) {
    long n = std::strtol(env, nullptr, 10);
    if (n >= 1) return static_cast<unsigned>(n);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// Static index partition; each index is processed exactly once and results
// must be written to preallocated slots, so output is identical for any
// worker count.
inline void parallel_for(size_t n, const std::function<void(size_t)> & fn) {
  unsigned workers = std::min<size_t>(worker_count(), n);
  if (workers <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      for (size_t i = w; i < n; i += workers) fn(i);
    });
  }
  for (auto & t : pool) t.join();
}

}  // namespace leo

#endif  // LEO_PARALLEL_HPP_
