#include <doctest.h>

#include <cmath>
#include <vector>

#include "bye/rng.hpp"

using namespace bye;

TEST_CASE("same seed yields identical streams") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("uniform stays in [0,1) and fills the range") {
  Rng rng(7);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 20000; ++i) {
    double v = rng.uniform();
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(lo < 0.01);
  CHECK(hi > 0.99);
}

TEST_CASE("bounded uniform respects its interval") {
  Rng rng(9);
  for (int i = 0; i < 5000; ++i) {
    double v = rng.uniform(-2.5, 4.0);
    CHECK(v >= -2.5);
    CHECK(v < 4.0);
  }
}

TEST_CASE("uniform_int covers all buckets") {
  Rng rng(11);
  std::vector<int> hits(10, 0);
  for (int i = 0; i < 10000; ++i) {
    int v = rng.uniform_int(10);
    REQUIRE(v >= 0);
    REQUIRE(v < 10);
    hits[size_t(v)]++;
  }
  for (int h : hits) CHECK(h > 700);
}

TEST_CASE("normal has roughly standard moments") {
  Rng rng(13);
  const int n = 50000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    double v = rng.normal();
    sum += v;
    sumsq += v * v;
  }
  double mean = sum / n;
  double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("derived streams are reproducible and distinct") {
  Rng a = Rng::derive(5, 1), b = Rng::derive(5, 1), c = Rng::derive(5, 2), d = Rng::derive(6, 1);
  bool same_ac = true, same_ad = true;
  for (int i = 0; i < 64; ++i) {
    uint64_t va = a.next_u64();
    CHECK(va == b.next_u64());
    same_ac = same_ac && (va == c.next_u64());
    same_ad = same_ad && (va == d.next_u64());
  }
  CHECK_FALSE(same_ac);
  CHECK_FALSE(same_ad);
}
