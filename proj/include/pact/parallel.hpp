/*
 * SPDX-FileCopyrightText: Copyright (c) 2026 pactrec authors. All rights reserved.
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef PACT_PARALLEL_HPP
#define PACT_PARALLEL_HPP

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace pact {

inline int resolve_workers(int workers) {
  if (workers > 0) return workers;
  unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

/// Run fn(i) for i in [0, n). Work items must write to disjoint state; results
/// are then independent of scheduling. workers <= 1 runs inline.
template <typename Fn>
void parallel_for(int n, int workers, Fn&& fn) {
  workers = resolve_workers(workers);
  if (n <= 0) return;
  if (workers <= 1 || n == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  workers = std::min(workers, n);
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&] {
    for (;;) {
      int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace pact

#endif  // PACT_PARALLEL_HPP
