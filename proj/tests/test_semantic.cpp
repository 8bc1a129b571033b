#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "bye/rng.hpp"
#include "bye/semantic_features.hpp"

using namespace bye;

namespace {

std::vector<float> unit(std::vector<float> v) {
  double n = 0.0;
  for (float x : v) n += double(x) * x;
  n = std::sqrt(std::max(n, 1e-30));
  for (float& x : v) x = float(x / n);
  return v;
}

// Single-frame trial: an 8x1 depth strip at depth 1 m with identity pose.
// All pixels carry mask id 1, so each pixel back-projects to a distinct
// world point along x.
Trial strip_trial(int n_pixels) {
  Trial t;
  t.trial_id = "strip";
  t.intrinsics = {100.0, 100.0, 0.0, 0.0, n_pixels, 1, 1.0};
  ObservationFrame f;
  f.index = 0;
  f.depth = DepthImage(n_pixels, 1);
  f.mask = MaskImage(n_pixels, 1);
  f.color = ColorImage(n_pixels, 1, 3);
  for (int x = 0; x < n_pixels; ++x) {
    f.depth.at(x, 0) = 1.0f;
    f.mask.at(x, 0) = 1;
  }
  t.frames.push_back(f);
  return t;
}

}  // namespace

TEST_CASE("fusing identical features leaves the voxel mean unchanged") {
  Trial t = strip_trial(8);
  std::vector<float> f = unit({0.4f, 0.3f, 0.6f});
  SemanticFeatureSet set;
  set.dim = 3;
  set.features[{0, 1}] = f;
  // Coarse voxels: the whole 8-pixel strip spans x in [0, 0.07], one voxel at
  // resolution 1.0.
  FeatureVoxelMap vmap = fuse_voxel_features(t, set, 1.0);
  REQUIRE(vmap.voxels.size() == 1);
  const FeatureVoxel& v = vmap.voxels.begin()->second;
  CHECK(v.count == 8);
  for (int d = 0; d < 3; ++d) CHECK(v.mean[d] == doctest::Approx(f[d]).epsilon(1e-5));
}

TEST_CASE("two frames with different features average per voxel") {
  Trial t = strip_trial(4);
  // Duplicate the frame so the same world points are hit twice.
  ObservationFrame f2 = t.frames[0];
  f2.index = 1;
  t.frames.push_back(f2);
  std::vector<float> f1 = unit({1.0f, 0.0f});
  std::vector<float> f2v = unit({0.0f, 1.0f});
  SemanticFeatureSet set;
  set.dim = 2;
  set.features[{0, 1}] = f1;
  set.features[{1, 1}] = f2v;
  FeatureVoxelMap vmap = fuse_voxel_features(t, set, 1.0);
  REQUIRE(vmap.voxels.size() == 1);
  const FeatureVoxel& v = vmap.voxels.begin()->second;
  CHECK(v.count == 8);
  CHECK(v.mean[0] == doctest::Approx(0.5 * (f1[0] + f2v[0])).epsilon(1e-5));
  CHECK(v.mean[1] == doctest::Approx(0.5 * (f1[1] + f2v[1])).epsilon(1e-5));
}

TEST_CASE("running-average fusion matches the batch mean on a random stream") {
  // Drive the running average directly through repeated single-frame fusions
  // of the same voxel and compare against an arithmetic mean.
  Rng rng(601);
  Trial t = strip_trial(1);
  const int reps = 40;
  std::vector<std::vector<float>> stream;
  for (int i = 0; i < reps; ++i) {
    std::vector<float> f(5);
    for (auto& x : f) x = float(rng.normal());
    stream.push_back(unit(f));
  }
  // One trial with `reps` duplicated frames, one feature each.
  t.frames.clear();
  SemanticFeatureSet set;
  set.dim = 5;
  for (int i = 0; i < reps; ++i) {
    ObservationFrame f;
    f.index = i;
    f.depth = DepthImage(1, 1);
    f.mask = MaskImage(1, 1);
    f.color = ColorImage(1, 1, 3);
    f.depth.at(0, 0) = 1.0f;
    f.mask.at(0, 0) = 1;
    t.frames.push_back(f);
    set.features[{i, 1}] = stream[i];
  }
  FeatureVoxelMap vmap = fuse_voxel_features(t, set, 1.0);
  REQUIRE(vmap.voxels.size() == 1);
  const FeatureVoxel& v = vmap.voxels.begin()->second;
  CHECK(v.count == reps);
  for (int d = 0; d < 5; ++d) {
    double mean = 0.0;
    for (const auto& s : stream) mean += s[d];
    mean /= reps;
    CHECK(std::abs(v.mean[d] - mean) < 1e-5);
  }
}

TEST_CASE("dbscan groups tight cosine clusters and flags isolated points") {
  std::vector<std::vector<float>> pts;
  Rng rng(603);
  // Cluster A around e0, cluster B around e1, one far outlier.
  for (int i = 0; i < 10; ++i)
    pts.push_back(unit({1.0f, float(rng.uniform(-0.05, 0.05)), float(rng.uniform(-0.05, 0.05))}));
  for (int i = 0; i < 10; ++i)
    pts.push_back(unit({float(rng.uniform(-0.05, 0.05)), 1.0f, float(rng.uniform(-0.05, 0.05))}));
  pts.push_back(unit({-1.0f, -1.0f, -1.0f}));
  DbscanConfig cfg;
  cfg.eps = 0.05;
  cfg.min_pts = 4;
  auto labels = dbscan_cosine(pts, cfg);
  REQUIRE(labels.size() == pts.size());
  std::set<int> a(labels.begin(), labels.begin() + 10);
  std::set<int> b(labels.begin() + 10, labels.begin() + 20);
  CHECK(a.size() == 1);
  CHECK(b.size() == 1);
  CHECK(*a.begin() != *b.begin());
  CHECK(*a.begin() >= 0);
  CHECK(*b.begin() >= 0);
  CHECK(labels.back() == -1);
}

TEST_CASE("dbscan matches a brute-force reference implementation") {
  Rng rng(605);
  for (int trial = 0; trial < 5; ++trial) {
    int n = 60 + rng.uniform_int(80);
    std::vector<std::vector<float>> pts;
    for (int i = 0; i < n; ++i) {
      // Mixture of 3 loose prototypes plus noise.
      std::vector<float> base(4, 0.0f);
      base[rng.uniform_int(3)] = 1.0f;
      for (auto& x : base) x += float(rng.uniform(-0.12, 0.12));
      pts.push_back(unit(base));
    }
    DbscanConfig cfg;
    cfg.eps = 0.02;
    cfg.min_pts = 5;
    auto got = dbscan_cosine(pts, cfg);

    // Reference: classic DBSCAN with an explicit queue.
    auto dist = [&](int i, int j) {
      double dot = 0.0;
      for (int d = 0; d < 4; ++d) dot += double(pts[i][d]) * pts[j][d];
      return 1.0 - dot;
    };
    std::vector<std::vector<int>> nbrs(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (dist(i, j) <= cfg.eps) nbrs[i].push_back(j);
    std::vector<int> ref(n, -2);  // -2 unvisited, -1 noise
    int cluster = 0;
    for (int i = 0; i < n; ++i) {
      if (ref[i] != -2) continue;
      if (int(nbrs[i].size()) < cfg.min_pts) {
        ref[i] = -1;
        continue;
      }
      ref[i] = cluster;
      std::vector<int> queue = nbrs[i];
      for (size_t qi = 0; qi < queue.size(); ++qi) {
        int j = queue[qi];
        if (ref[j] == -1) ref[j] = cluster;
        if (ref[j] != -2) continue;
        ref[j] = cluster;
        if (int(nbrs[j].size()) >= cfg.min_pts)
          queue.insert(queue.end(), nbrs[j].begin(), nbrs[j].end());
      }
      ++cluster;
    }
    // Border points can legally attach to either adjacent cluster, so compare
    // the core/noise structure: identical noise sets and a consistent
    // cluster-relabeling on core points.
    std::map<int, int> relabel;
    for (int i = 0; i < n; ++i) {
      bool core = int(nbrs[i].size()) >= cfg.min_pts;
      if (ref[i] == -1) {
        CHECK(got[i] == -1);
      } else if (core) {
        REQUIRE(got[i] >= 0);
        auto it = relabel.find(ref[i]);
        if (it == relabel.end())
          relabel[ref[i]] = got[i];
        else
          CHECK(it->second == got[i]);
      } else {
        CHECK(got[i] >= 0);  // border point: some cluster
      }
    }
  }
}

TEST_CASE("object_feature returns the shared feature for a uniform object") {
  Trial t = strip_trial(8);
  std::vector<float> f = unit({0.2f, 0.9f, 0.1f});
  SemanticFeatureSet set;
  set.dim = 3;
  set.features[{0, 1}] = f;
  FeatureVoxelMap vmap = fuse_voxel_features(t, set, 0.005);  // one voxel per pixel
  PointCloud cloud;
  for (int x = 0; x < 8; ++x) {
    Point6 p;
    p.position = {double(x) / 100.0, 0.0, 1.0};
    cloud.points.push_back(p);
  }
  DbscanConfig cfg;
  cfg.eps = 0.05;
  cfg.min_pts = 3;
  bool fallback = true;
  auto got = object_feature(cloud, vmap, cfg, &fallback);
  REQUIRE(got.size() == 3);
  CHECK_FALSE(fallback);
  for (int d = 0; d < 3; ++d) CHECK(got[d] == doctest::Approx(f[d]).epsilon(1e-4));
}

TEST_CASE("object_feature ignores a minority of outlier voxels") {
  // 20 voxels carrying f1 and 2 voxels carrying an orthogonal f2: the main
  // cluster wins and the result is (near) f1.
  std::vector<float> f1 = unit({1.0f, 0.0f, 0.0f});
  std::vector<float> f2 = unit({0.0f, 0.0f, 1.0f});
  FeatureVoxelMap vmap;
  vmap.resolution = 0.01;
  vmap.dim = 3;
  PointCloud cloud;
  for (int i = 0; i < 22; ++i) {
    FeatureVoxel v;
    v.mean = i < 20 ? f1 : f2;
    v.count = 1;
    vmap.voxels[{i, 0, 0}] = v;
    Point6 p;
    p.position = {(i + 0.5) * 0.01, 0.005, 0.005};
    cloud.points.push_back(p);
  }
  DbscanConfig cfg;
  cfg.eps = 0.05;
  cfg.min_pts = 3;
  bool fallback = true;
  auto got = object_feature(cloud, vmap, cfg, &fallback);
  CHECK_FALSE(fallback);
  double cos_f1 = 0.0;
  for (int d = 0; d < 3; ++d) cos_f1 += double(got[d]) * f1[d];
  CHECK(cos_f1 > 0.999);
}

TEST_CASE("object_feature falls back to the mean when no cluster forms") {
  FeatureVoxelMap vmap;
  vmap.resolution = 0.01;
  vmap.dim = 2;
  // Two voxels with orthogonal features; min_pts 3 prevents any cluster.
  FeatureVoxel a{{1.0f, 0.0f}, 1}, b{{0.0f, 1.0f}, 1};
  vmap.voxels[{0, 0, 0}] = a;
  vmap.voxels[{1, 0, 0}] = b;
  PointCloud cloud;
  for (int i = 0; i < 2; ++i) {
    Point6 p;
    p.position = {(i + 0.5) * 0.01, 0.005, 0.005};
    cloud.points.push_back(p);
  }
  DbscanConfig cfg;
  cfg.eps = 0.01;
  cfg.min_pts = 3;
  bool fallback = false;
  auto got = object_feature(cloud, vmap, cfg, &fallback);
  CHECK(fallback);
  REQUIRE(got.size() == 2);
}

TEST_CASE("vlm score matrix is the pairwise cosine table") {
  std::map<int, std::vector<float>> ref, fresh;
  ref[1] = unit({1.0f, 0.0f});
  ref[2] = unit({0.0f, 1.0f});
  fresh[10] = unit({1.0f, 0.0f});
  fresh[11] = unit({1.0f, 1.0f});
  ScoreMatrix m = vlm_score_matrix(ref, fresh);
  CHECK(m.new_ids == std::vector<int>{10, 11});
  CHECK(m.ref_ids == std::vector<int>{1, 2});
  CHECK(m.at(0, 0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(m.at(0, 1) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(m.at(1, 0) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-6));
  CHECK(m.at(1, 1) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-6));
}

TEST_CASE("vlm score matrix matches a dot-product oracle on random features") {
  Rng rng(607);
  std::map<int, std::vector<float>> ref, fresh;
  const int dim = 16;
  for (int i = 0; i < 6; ++i) {
    std::vector<float> f(dim);
    for (auto& x : f) x = float(rng.normal());
    ref[i * 3] = unit(f);
  }
  for (int j = 0; j < 6; ++j) {
    std::vector<float> f(dim);
    for (auto& x : f) x = float(rng.normal());
    fresh[j * 5 + 1] = unit(f);
  }
  ScoreMatrix m = vlm_score_matrix(ref, fresh);
  REQUIRE(m.rows() == 6);
  REQUIRE(m.cols() == 6);
  for (size_t j = 0; j < m.rows(); ++j)
    for (size_t i = 0; i < m.cols(); ++i) {
      const auto& a = fresh.at(m.new_ids[j]);
      const auto& b = ref.at(m.ref_ids[i]);
      double dot = 0.0;
      for (int d = 0; d < dim; ++d) dot += double(a[d]) * b[d];
      CHECK(m.at(j, i) == doctest::Approx(dot).epsilon(1e-6));
    }
}
