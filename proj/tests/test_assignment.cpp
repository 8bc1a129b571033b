#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "bye/assignment.hpp"
#include "bye/rng.hpp"

using namespace bye;

namespace {

ScoreMatrix make_matrix(std::vector<int> rows, std::vector<int> cols,
                        std::vector<double> values) {
  ScoreMatrix m(std::move(rows), std::move(cols));
  m.values = std::move(values);
  return m;
}

// Exhaustive oracle: best total over all permutations; among ties the
// lexicographically smallest row->column vector.
std::pair<std::vector<int>, double> brute_force(const std::vector<double>& values, int n) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_total = -1e300;
  do {
    double total = 0.0;
    for (int j = 0; j < n; ++j) total += values[j * n + perm[j]];
    if (total > best_total + 1e-12 ||
        (std::abs(total - best_total) <= 1e-12 && perm < best)) {
      best_total = total;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return {best, best_total};
}

}  // namespace

TEST_CASE("identity matrix maps each row to its own column") {
  const int n = 5;
  ScoreMatrix m({10, 11, 12, 13, 14}, {20, 21, 22, 23, 24});
  for (int j = 0; j < n; ++j) m.at(j, j) = 1.0;
  Assignment a = hungarian_assign(m);
  CHECK(a.total_score == doctest::Approx(5.0));
  for (int j = 0; j < n; ++j) CHECK(a.mapping.at(10 + j) == 20 + j);
}

TEST_CASE("anti-diagonal matrix") {
  ScoreMatrix m({0, 1, 2}, {0, 1, 2});
  m.at(0, 2) = 3.0;
  m.at(1, 1) = 3.0;
  m.at(2, 0) = 3.0;
  Assignment a = hungarian_assign(m);
  CHECK(a.total_score == doctest::Approx(9.0));
  CHECK(a.mapping.at(0) == 2);
  CHECK(a.mapping.at(1) == 1);
  CHECK(a.mapping.at(2) == 0);
}

TEST_CASE("constant matrix returns the lexicographically smallest assignment") {
  ScoreMatrix m({0, 1, 2, 3}, {0, 1, 2, 3});
  std::fill(m.values.begin(), m.values.end(), 0.25);
  Assignment a = hungarian_assign(m);
  for (int j = 0; j < 4; ++j) CHECK(a.mapping.at(j) == j);
  CHECK(a.total_score == doctest::Approx(1.0));
}

TEST_CASE("random discrete matrices match the brute-force oracle") {
  Rng rng(401);
  for (int trial = 0; trial < 500; ++trial) {
    int n = 2 + rng.uniform_int(5);  // 2..6
    std::vector<double> values(size_t(n) * n);
    for (auto& v : values) v = 0.5 * rng.uniform_int(3);  // {0, 0.5, 1}
    auto [oracle_perm, oracle_total] = brute_force(values, n);

    // solve_lap_max guarantees the optimal total only.
    std::vector<int> row_to_col;
    double total = solve_lap_max(values, n, &row_to_col);
    CHECK(total == doctest::Approx(oracle_total));

    // hungarian_assign additionally pins the lexicographically smallest
    // optimal permutation, so the mapping must match the oracle exactly.
    std::vector<int> ids(n);
    std::iota(ids.begin(), ids.end(), 0);
    ScoreMatrix m(ids, ids);
    m.values = values;
    Assignment a = hungarian_assign(m);
    CHECK(a.total_score == doctest::Approx(oracle_total));
    for (int j = 0; j < n; ++j) CHECK(a.mapping.at(j) == oracle_perm[j]);
  }
}

TEST_CASE("random continuous matrices match the oracle total") {
  Rng rng(403);
  for (int trial = 0; trial < 200; ++trial) {
    int n = 2 + rng.uniform_int(5);
    std::vector<double> values(size_t(n) * n);
    for (auto& v : values) v = rng.uniform(-1.0, 1.0);
    auto [oracle_perm, oracle_total] = brute_force(values, n);
    std::vector<int> row_to_col;
    double total = solve_lap_max(values, n, &row_to_col);
    CHECK(total == doctest::Approx(oracle_total));
  }
}

TEST_CASE("hungarian_assign handles 1x1 matrices") {
  ScoreMatrix m({42}, {7});
  m.at(0, 0) = -3.0;
  Assignment a = hungarian_assign(m);
  CHECK(a.mapping.at(42) == 7);
  CHECK(a.total_score == doctest::Approx(-3.0));
}

TEST_CASE("hungarian_assign rejects non-square matrices") {
  ScoreMatrix m({0, 1}, {0, 1, 2});
  CHECK_THROWS_AS(hungarian_assign(m), std::invalid_argument);
}

TEST_CASE("ensemble with a zero operand reproduces the other") {
  ScoreMatrix a({1, 2}, {5, 6});
  a.values = {0.9, 0.1, 0.2, 0.8};
  ScoreMatrix zero({1, 2}, {5, 6});
  ScoreMatrix sum = ensemble(a, zero);
  CHECK(sum.new_ids == a.new_ids);
  CHECK(sum.ref_ids == a.ref_ids);
  for (size_t i = 0; i < a.values.size(); ++i)
    CHECK(sum.values[i] == doctest::Approx(a.values[i]));
}

TEST_CASE("ensemble of matching one-hot matrices doubles the entries") {
  ScoreMatrix a({1, 2}, {5, 6});
  a.at(0, 0) = 1.0;
  a.at(1, 1) = 1.0;
  ScoreMatrix sum = ensemble(a, a);
  CHECK(sum.at(0, 0) == doctest::Approx(2.0));
  CHECK(sum.at(0, 1) == doctest::Approx(0.0));
  CHECK(sum.at(1, 1) == doctest::Approx(2.0));
}

TEST_CASE("ensemble reorders the second operand to the first's id layout") {
  ScoreMatrix a({1, 2}, {5, 6});
  a.values = {0.1, 0.2, 0.3, 0.4};
  ScoreMatrix b({2, 1}, {6, 5});  // same ids, permuted layout
  // b in its own layout; entry for (new=2, ref=6) is b.at(0, 0), etc.
  b.values = {0.04, 0.03, 0.02, 0.01};
  ScoreMatrix sum = ensemble(a, b);
  CHECK(sum.new_ids == a.new_ids);
  CHECK(sum.ref_ids == a.ref_ids);
  CHECK(sum.at(0, 0) == doctest::Approx(0.1 + 0.01));  // (1, 5)
  CHECK(sum.at(0, 1) == doctest::Approx(0.2 + 0.02));  // (1, 6)
  CHECK(sum.at(1, 0) == doctest::Approx(0.3 + 0.03));  // (2, 5)
  CHECK(sum.at(1, 1) == doctest::Approx(0.4 + 0.04));  // (2, 6)
}

TEST_CASE("elementwise-sum oracle on random matrices") {
  Rng rng(405);
  for (int trial = 0; trial < 50; ++trial) {
    int n = 1 + rng.uniform_int(6);
    std::vector<int> rows(n), cols(n);
    std::iota(rows.begin(), rows.end(), 100);
    std::iota(cols.begin(), cols.end(), 200);
    ScoreMatrix a(rows, cols), b(rows, cols);
    for (auto& v : a.values) v = rng.uniform();
    for (auto& v : b.values) v = rng.uniform();
    ScoreMatrix sum = ensemble(a, b);
    for (size_t i = 0; i < a.values.size(); ++i)
      CHECK(sum.values[i] == doctest::Approx(a.values[i] + b.values[i]));
  }
}

TEST_CASE("ensemble rejects mismatched id sets") {
  ScoreMatrix a({1, 2}, {5, 6});
  ScoreMatrix b({1, 3}, {5, 6});
  CHECK_THROWS_AS(ensemble(a, b), std::invalid_argument);
  ScoreMatrix c({1, 2}, {5, 7});
  CHECK_THROWS_AS(ensemble(a, c), std::invalid_argument);
}
