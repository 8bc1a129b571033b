#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <vector>

#include "bye/memory_bank.hpp"
#include "bye/rng.hpp"

using namespace bye;

namespace {

PointCloud random_cloud(Rng& rng, int n) {
  PointCloud c;
  for (int i = 0; i < n; ++i) {
    Point6 p;
    p.position = {rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1)};
    c.points.push_back(p);
  }
  return c;
}

std::vector<ObservationSample> toy_dataset(Rng& rng, const std::map<int, int>& label_counts) {
  std::vector<ObservationSample> out;
  for (const auto& [label, count] : label_counts)
    for (int i = 0; i < count; ++i) {
      ObservationSample s;
      s.cloud = random_cloud(rng, 30);
      s.label = label;
      s.frame_index = i;
      out.push_back(s);
    }
  return out;
}

MemoryBank manual_bank(const std::vector<std::vector<float>>& rows,
                       const std::vector<int>& labels) {
  MemoryBank bank;
  bank.embed_dim = int(rows[0].size());
  bank.labels = labels;
  for (const auto& r : rows) {
    double norm = 0.0;
    for (float v : r) norm += double(v) * v;
    norm = std::sqrt(std::max(norm, 1e-30));
    for (float v : r) bank.embeddings.push_back(float(v / norm));
  }
  std::vector<int> distinct = labels;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  bank.ref_ids = distinct;
  return bank;
}

}  // namespace

TEST_CASE("bank holds one row per dataset sample with matching labels") {
  Rng rng(501);
  auto ds = toy_dataset(rng, {{3, 4}, {7, 2}});
  EncoderConfig cfg;
  Rng irng(1);
  EncoderModel model = init_encoder(cfg, irng);
  MemoryBank bank = build_bank(ds, model);
  CHECK(bank.size() == int(ds.size()));
  CHECK(bank.embed_dim == cfg.embed_dim);
  std::map<int, int> counts;
  for (int l : bank.labels) counts[l]++;
  CHECK(counts[3] == 4);
  CHECK(counts[7] == 2);
  CHECK(bank.ref_ids == std::vector<int>{3, 7});
  // Rows are unit length.
  for (int i = 0; i < bank.size(); ++i) {
    double norm = 0.0;
    for (int d = 0; d < bank.embed_dim; ++d) norm += double(bank.row(i)[d]) * bank.row(i)[d];
    CHECK(std::abs(norm - 1.0) < 1e-4);
  }
}

TEST_CASE("rebuilding from the same model and dataset is bit-identical") {
  Rng rng(503);
  auto ds = toy_dataset(rng, {{1, 3}, {2, 3}});
  EncoderConfig cfg;
  Rng irng(2);
  EncoderModel model = init_encoder(cfg, irng);
  MemoryBank a = build_bank(ds, model);
  MemoryBank b = build_bank(ds, model);
  REQUIRE(a.embeddings.size() == b.embeddings.size());
  for (size_t i = 0; i < a.embeddings.size(); ++i) CHECK(a.embeddings[i] == b.embeddings[i]);
  CHECK(a.labels == b.labels);
}

TEST_CASE("a bank row retrieves itself with similarity 1") {
  Rng rng(505);
  std::vector<std::vector<float>> rows;
  for (int i = 0; i < 10; ++i) {
    std::vector<float> r(16);
    for (auto& v : r) v = float(rng.normal());
    rows.push_back(r);
  }
  std::vector<int> labels(10);
  std::iota(labels.begin(), labels.end(), 0);
  MemoryBank bank = manual_bank(rows, labels);
  for (int i = 0; i < 10; ++i) {
    std::vector<float> q(bank.row(i), bank.row(i) + bank.embed_dim);
    auto nn = knn_query(bank, q, 1);
    REQUIRE(nn.size() == 1);
    CHECK(nn[0].row == i);
    CHECK(nn[0].similarity == doctest::Approx(1.0));
  }
}

TEST_CASE("orthogonal two-row bank ranks by cosine") {
  MemoryBank bank = manual_bank({{1, 0}, {0, 1}}, {10, 20});
  auto nn = knn_query(bank, {0.8f, 0.6f}, 2);
  REQUIRE(nn.size() == 2);
  CHECK(nn[0].label == 10);
  CHECK(nn[0].similarity == doctest::Approx(0.8));
  CHECK(nn[1].label == 20);
  CHECK(nn[1].similarity == doctest::Approx(0.6));
}

TEST_CASE("exact ties resolve toward the lowest row index") {
  MemoryBank bank = manual_bank({{0, 1}, {1, 0}, {0, 1}}, {5, 6, 7});
  auto nn = knn_query(bank, {0.0f, 1.0f}, 2);
  REQUIRE(nn.size() == 2);
  CHECK(nn[0].row == 0);
  CHECK(nn[1].row == 2);
}

TEST_CASE("kNN on a 500-row bank matches a full-sort oracle") {
  Rng rng(507);
  const int L = 500, E = 32, k = 10;
  std::vector<std::vector<float>> rows;
  std::vector<int> labels;
  for (int i = 0; i < L; ++i) {
    std::vector<float> r(E);
    for (auto& v : r) v = float(rng.normal());
    rows.push_back(r);
    labels.push_back(i % 17);
  }
  MemoryBank bank = manual_bank(rows, labels);
  for (int q = 0; q < 25; ++q) {
    std::vector<float> query(E);
    for (auto& v : query) v = float(rng.normal());
    double qn = 0.0;
    for (float v : query) qn += double(v) * v;
    qn = std::sqrt(qn);

    std::vector<std::pair<double, int>> sims;
    for (int i = 0; i < L; ++i) {
      double dot = 0.0;
      for (int d = 0; d < E; ++d) dot += double(bank.row(i)[d]) * query[d];
      sims.push_back({dot / qn, i});
    }
    std::stable_sort(sims.begin(), sims.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });

    auto nn = knn_query(bank, query, k);
    REQUIRE(nn.size() == size_t(k));
    for (int i = 0; i < k; ++i) {
      CHECK(nn[i].row == sims[i].second);
      CHECK(nn[i].similarity == doctest::Approx(sims[i].first).epsilon(1e-5));
      CHECK(nn[i].label == labels[sims[i].second]);
    }
  }
}

TEST_CASE("oversized k returns the whole bank and reports truncation") {
  MemoryBank bank = manual_bank({{1, 0}, {0, 1}}, {1, 2});
  bool truncated = false;
  auto nn = knn_query(bank, {1.0f, 0.0f}, 10, &truncated);
  CHECK(nn.size() == 2);
  CHECK(truncated);
  truncated = true;
  nn = knn_query(bank, {1.0f, 0.0f}, 2, &truncated);
  CHECK(nn.size() == 2);
  CHECK_FALSE(truncated);
}

TEST_CASE("tracker accumulates counts and normalized score rows") {
  AssociationTracker t;
  t.update(100, {1, 1, 1, 2});
  t.update(100, {1, 2, 2, 2});
  CHECK(t.counts[100][1] == 4);
  CHECK(t.counts[100][2] == 4);
  CHECK(t.observations[100] == 2);

  ScoreMatrix m = score_matrix(t, {100, 101}, {1, 2});
  CHECK(m.at(0, 0) == doctest::Approx(0.5));
  CHECK(m.at(0, 1) == doctest::Approx(0.5));
  // 101 never updated: zero row.
  CHECK(m.at(1, 0) == 0.0);
  CHECK(m.at(1, 1) == 0.0);
}

TEST_CASE("one-hot evidence yields a one-hot score row") {
  AssociationTracker t;
  t.update(5, {9, 9, 9});
  ScoreMatrix m = score_matrix(t, {5}, {8, 9});
  CHECK(m.at(0, 0) == 0.0);
  CHECK(m.at(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("incremental updates equal one bulk update") {
  AssociationTracker inc, bulk;
  inc.update(1, {3, 4});
  inc.update(1, {4, 4});
  bulk.update(1, {3, 4, 4, 4});
  CHECK(inc.counts[1] == bulk.counts[1]);
  ScoreMatrix a = score_matrix(inc, {1}, {3, 4});
  ScoreMatrix b = score_matrix(bulk, {1}, {3, 4});
  for (size_t i = 0; i < a.values.size(); ++i)
    CHECK(a.values[i] == doctest::Approx(b.values[i]));
}

TEST_CASE("majority vote picks the most frequent label, ties to the lowest id") {
  AssociationTracker t;
  t.update(50, {7, 7, 7, 3, 3, 7, 7, 7, 7, 3});  // 7:7, 3:3
  t.update(51, {2, 9, 2, 9});                    // tie -> 2
  auto mapping = associate_majority(t);
  CHECK(mapping.at(50) == 7);
  CHECK(mapping.at(51) == 2);
}

TEST_CASE("bank save/load round trip is exact") {
  Rng rng(509);
  std::vector<std::vector<float>> rows;
  std::vector<int> labels;
  for (int i = 0; i < 12; ++i) {
    std::vector<float> r(8);
    for (auto& v : r) v = float(rng.normal());
    rows.push_back(r);
    labels.push_back(i / 3);
  }
  MemoryBank bank = manual_bank(rows, labels);
  const char* path = "test_bank_roundtrip.byeb";
  save_bank(bank, path);
  MemoryBank loaded = load_bank(path);
  std::remove(path);
  CHECK(loaded.embed_dim == bank.embed_dim);
  CHECK(loaded.labels == bank.labels);
  CHECK(loaded.ref_ids == bank.ref_ids);
  REQUIRE(loaded.embeddings.size() == bank.embeddings.size());
  for (size_t i = 0; i < bank.embeddings.size(); ++i)
    CHECK(loaded.embeddings[i] == bank.embeddings[i]);
}
