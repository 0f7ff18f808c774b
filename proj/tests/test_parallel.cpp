#include <atomic>
#include <vector>

#include <doctest.h>

#include "anasod/parallel.hpp"

using namespace anasod;

TEST_CASE("parallel_for touches every index exactly once") {
  for (ExecPolicy policy : {ExecPolicy::Serial, ExecPolicy::OpenMP}) {
    std::vector<int> hits(997, 0);
    parallel_for(997, policy, [&](int i) { hits[i] += 1; });
    for (int h : hits) CHECK(h == 1);
  }
}

TEST_CASE("parallel_for with disjoint writes matches serial output") {
  std::vector<double> serial(512), openmp(512);
  auto body = [](int i) { return (i * 2654435761.0) / 4096.0; };
  parallel_for(512, ExecPolicy::Serial, [&](int i) { serial[i] = body(i); });
  parallel_for(512, ExecPolicy::OpenMP, [&](int i) { openmp[i] = body(i); });
  CHECK(serial == openmp);
}

TEST_CASE("parallel_for handles zero work") {
  int calls = 0;
  parallel_for(0, ExecPolicy::OpenMP, [&](int) { ++calls; });
  CHECK(calls == 0);
}

TEST_CASE("thread counts are sane") {
  CHECK(max_threads(ExecPolicy::Serial) == 1);
  CHECK(max_threads(ExecPolicy::OpenMP) >= 1);
}
