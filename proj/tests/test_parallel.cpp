// Copyright 2026 The editrep Authors. All Rights Reserved.
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

#include <gtest/gtest.h>

#include <cstdlib>
#include <stdexcept>
#include <vector>

#include "editrep/parallel.hpp"

namespace editrep {
namespace {

TEST(ParallelFor, EachIndexRunsOnce) {
  for (std::size_t threads : {1u, 2u, 7u}) {
    std::vector<int> hits(101, 0);
    parallel_for(hits.size(), threads, [&](std::size_t i) { ++hits[i]; });
    for (int h : hits) EXPECT_EQ(h, 1);
  }
  parallel_for(0, 4, [](std::size_t) { FAIL(); });
}

TEST(ParallelFor, RethrowsWorkerException) {
  EXPECT_THROW(parallel_for(20, 3,
                            [](std::size_t i) {
                              if (i == 11) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
}

TEST(Threads, EnvironmentCapsRequests) {
  ::setenv("ERC_THREADS", "3", 1);
  EXPECT_EQ(default_threads(), 3u);
  EXPECT_EQ(resolve_threads(0), 3u);
  EXPECT_EQ(resolve_threads(8), 3u);
  EXPECT_EQ(resolve_threads(2), 2u);
  ::setenv("ERC_THREADS", "junk", 1);
  EXPECT_EQ(resolve_threads(8), 8u);
  ::unsetenv("ERC_THREADS");
  EXPECT_EQ(resolve_threads(5), 5u);
  EXPECT_GE(default_threads(), 1u);
}

}  // namespace
}  // namespace editrep
