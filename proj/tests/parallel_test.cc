#include "termset/parallel.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <stdexcept>
#include <vector>

TEST(ParallelFor, VisitsEveryIndexOnce) {
  std::vector<std::atomic<int>> hits(1000);
  termset::parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i]++; });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  EXPECT_GE(termset::resolve_threads(0), 1u);
  EXPECT_EQ(termset::resolve_threads(3), 3u);
}

TEST(ParallelFor, RethrowsSmallestFailingIndex) {
  for (std::size_t threads : {1, 4}) {
    try {
      termset::parallel_for(100, threads, [](std::size_t i) {
        if (i % 30 == 17) throw std::runtime_error(std::to_string(i));
      });
      FAIL();
    } catch (const std::runtime_error& e) {
      EXPECT_STREQ(e.what(), "17");
    }
  }
}
