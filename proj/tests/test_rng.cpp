#include <cmath>
#include <cstdint>
#include <vector>

#include "alphacl/rng.hpp"
#include "doctest.h"

using alphacl::Rng;

TEST_SUITE("rng") {

TEST_CASE("same seed and stream reproduce the sequence exactly") {
  Rng a(42, 7), b(42, 7);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("streams and seeds decorrelate") {
  Rng a(42, 0), b(42, 1), c(43, 0);
  int collisions = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::uint64_t x = a.next_u64();
    collisions += x == b.next_u64() ? 1 : 0;
    collisions += x == c.next_u64() ? 1 : 0;
  }
  CHECK(collisions == 0);
}

TEST_CASE("child streams do not depend on parent draw position") {
  Rng a(9, 1), b(9, 1);
  for (int i = 0; i < 17; ++i) (void)b.next_u64();
  Rng ca = a.child(3), cb = b.child(3);
  for (int i = 0; i < 100; ++i) CHECK(ca.next_u64() == cb.next_u64());

  // Distinct substreams diverge.
  Rng c0 = a.child(0), c1 = a.child(1);
  CHECK(c0.next_u64() != c1.next_u64());
}

TEST_CASE("uniform stays in [0, 1) and respects bounds") {
  Rng rng(1, 2);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double v = rng.uniform(-3.0, 5.0);
    CHECK(v >= -3.0);
    CHECK(v < 5.0);
  }
}

TEST_CASE("normal has roughly standard moments") {
  Rng rng(3, 4);
  const int n = 40000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sumsq += x * x;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean) < 0.03);
  CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("below stays in range and hits every residue") {
  Rng rng(5, 6);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const std::uint64_t k = rng.below(7);
    REQUIRE(k < 7);
    ++hits[static_cast<int>(k)];
  }
  for (int h : hits) CHECK(h > 0);
}

}  // TEST_SUITE
