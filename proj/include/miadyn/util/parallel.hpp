// Copyright 2026 The miadyn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MIADYN_UTIL_PARALLEL_HPP_
#define MIADYN_UTIL_PARALLEL_HPP_

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace miadyn {

inline constexpr const char* kThreadsEnvVar = "MIADYN_THREADS";

namespace internal {
inline std::atomic<int>& ThreadCapStorage() {
  static std::atomic<int> cap{0};
  return cap;
}
}  // namespace internal

// Process-wide cap on worker threads. Zero means "unset": fall back to the
// MIADYN_THREADS environment variable, then to the hardware concurrency.
inline void SetThreadCap(int threads) {
  internal::ThreadCapStorage().store(std::max(0, threads));
}

inline int ThreadCap() {
  int cap = internal::ThreadCapStorage().load();
  if (cap > 0) return cap;
  if (const char* env = std::getenv(kThreadsEnvVar); env != nullptr) {
    try {
      int parsed = std::stoi(env);
      if (parsed > 0) return parsed;
    } catch (...) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs fn(i) for i in [0, n). Indices are split into contiguous chunks, one
// per worker; fn must only write to state owned by index i.
template <typename Fn>
void ParallelFor(std::size_t n, Fn&& fn) {
  const std::size_t workers =
      std::min<std::size_t>(n, static_cast<std::size_t>(ThreadCap()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([begin, end, &fn] {
      for (std::size_t i = begin; i < end; ++i) fn(i);
    });
  }
}

}  // namespace miadyn

#endif  // MIADYN_UTIL_PARALLEL_HPP_
