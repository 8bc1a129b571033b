#include "bye/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace bye {

ScoreMatrix::ScoreMatrix(std::vector<int> rows, std::vector<int> cols)
    : new_ids(std::move(rows)), ref_ids(std::move(cols)) {
  auto check = [](const std::vector<int>& ids, const char* what) {
    std::vector<int> sorted = ids;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw std::invalid_argument(std::string("score matrix: duplicate ") + what + " ids");
  };
  check(new_ids, "new");
  check(ref_ids, "reference");
  values.assign(new_ids.size() * ref_ids.size(), 0.0);
}

namespace {

std::string id_set_diff(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> sa = a, sb = b, only_a, only_b;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  std::set_difference(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(only_a));
  std::set_difference(sb.begin(), sb.end(), sa.begin(), sa.end(), std::back_inserter(only_b));
  std::ostringstream os;
  if (!only_a.empty()) {
    os << " only-in-first:";
    for (int v : only_a) os << " " << v;
  }
  if (!only_b.empty()) {
    os << " only-in-second:";
    for (int v : only_b) os << " " << v;
  }
  return os.str();
}

size_t index_of(const std::vector<int>& ids, int id) {
  return size_t(std::find(ids.begin(), ids.end(), id) - ids.begin());
}

}  // namespace

ScoreMatrix ensemble(const ScoreMatrix& a, const ScoreMatrix& b) {
  auto same_set = [](const std::vector<int>& x, const std::vector<int>& y) {
    std::vector<int> sx = x, sy = y;
    std::sort(sx.begin(), sx.end());
    std::sort(sy.begin(), sy.end());
    return sx == sy;
  };
  if (!same_set(a.new_ids, b.new_ids))
    throw std::invalid_argument("ensemble: new-id sets differ:" +
                                id_set_diff(a.new_ids, b.new_ids));
  if (!same_set(a.ref_ids, b.ref_ids))
    throw std::invalid_argument("ensemble: reference-id sets differ:" +
                                id_set_diff(a.ref_ids, b.ref_ids));
  ScoreMatrix out(a.new_ids, a.ref_ids);
  for (size_t j = 0; j < a.rows(); ++j) {
    size_t bj = index_of(b.new_ids, a.new_ids[j]);
    for (size_t i = 0; i < a.cols(); ++i)
      out.at(j, i) = a.at(j, i) + b.at(bj, index_of(b.ref_ids, a.ref_ids[i]));
  }
  return out;
}

// Jonker-style shortest augmenting path solver for the min-cost assignment;
// O(n^3), exact.
static double solve_lap_min(const std::vector<double>& cost, int n, std::vector<int>* row_to_col) {
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, std::numeric_limits<double>::infinity());
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      int i0 = p[j0], j1 = 0;
      double delta = std::numeric_limits<double>::infinity();
      for (int j = 1; j <= n; ++j)
        if (!used[j]) {
          double cur = cost[size_t(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
          if (cur < minv[j]) {
            minv[j] = cur;
            way[j] = j0;
          }
          if (minv[j] < delta) {
            delta = minv[j];
            j1 = j;
          }
        }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> sol(n, -1);
  double total = 0.0;
  for (int j = 1; j <= n; ++j)
    if (p[j]) {
      sol[p[j] - 1] = j - 1;
      total += cost[size_t(p[j] - 1) * n + (j - 1)];
    }
  if (row_to_col) *row_to_col = std::move(sol);
  return total;
}

double solve_lap_max(const std::vector<double>& values, int n, std::vector<int>* row_to_col) {
  if (n == 0) {
    if (row_to_col) row_to_col->clear();
    return 0.0;
  }
  double maxv = *std::max_element(values.begin(), values.end());
  std::vector<double> cost(values.size());
  for (size_t i = 0; i < values.size(); ++i) cost[i] = maxv - values[i];
  std::vector<int> sol;
  solve_lap_min(cost, n, &sol);
  double total = 0.0;
  for (int r = 0; r < n; ++r) total += values[size_t(r) * n + sol[r]];
  if (row_to_col) *row_to_col = std::move(sol);
  return total;
}

Assignment hungarian_assign(const ScoreMatrix& scores) {
  const int n = int(scores.rows());
  if (scores.cols() != scores.rows())
    throw std::invalid_argument("hungarian_assign: matrix must be square (got " +
                                std::to_string(scores.rows()) + "x" +
                                std::to_string(scores.cols()) + ")");
  if (n == 0) throw std::invalid_argument("hungarian_assign: empty matrix");
  for (double v : scores.values)
    if (!std::isfinite(v)) throw std::invalid_argument("hungarian_assign: non-finite score");

  double opt = solve_lap_max(scores.values, n, nullptr);
  double tol = 1e-9 * std::max(1.0, std::abs(opt));

  // Fix rows in order, always taking the smallest column that still allows an
  // optimal completion; yields the lexicographically smallest optimal vector.
  std::vector<int> free_cols(n);
  for (int i = 0; i < n; ++i) free_cols[i] = i;
  std::vector<int> chosen(n, -1);
  double prefix = 0.0;
  for (int r = 0; r < n; ++r) {
    int m = n - r - 1;  // remaining rows after fixing r
    bool fixed = false;
    for (size_t ci = 0; ci < free_cols.size() && !fixed; ++ci) {
      int c = free_cols[ci];
      double rest = 0.0;
      if (m > 0) {
        std::vector<double> sub(size_t(m) * m);
        int sr = 0;
        for (int rr = r + 1; rr < n; ++rr, ++sr) {
          int sc = 0;
          for (int cc : free_cols) {
            if (cc == c) continue;
            sub[size_t(sr) * m + sc++] = scores.at(size_t(rr), size_t(cc));
          }
        }
        rest = solve_lap_max(sub, m, nullptr);
      }
      if (prefix + scores.at(size_t(r), size_t(c)) + rest >= opt - tol) {
        chosen[r] = c;
        prefix += scores.at(size_t(r), size_t(c));
        free_cols.erase(free_cols.begin() + std::ptrdiff_t(ci));
        fixed = true;
      }
    }
    if (!fixed) throw std::logic_error("hungarian_assign: no optimal completion found");
  }
  Assignment result;
  result.total_score = prefix;
  for (int r = 0; r < n; ++r) result.mapping[scores.new_ids[r]] = scores.ref_ids[chosen[r]];
  return result;
}

}  // namespace bye
