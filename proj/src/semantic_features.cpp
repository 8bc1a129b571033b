#include "bye/semantic_features.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <deque>
#include <fstream>
#include <iostream>
#include <limits>
#include <stdexcept>

namespace bye {

namespace {

double cosine(const std::vector<float>& a, const std::vector<float>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += double(a[i]) * b[i];
    na += double(a[i]) * a[i];
    nb += double(b[i]) * b[i];
  }
  if (na <= 0.0 || nb <= 0.0) throw std::runtime_error("cosine: zero vector");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::tuple<int64_t, int64_t, int64_t> voxel_key(const Vec3& p, double res) {
  return {int64_t(std::floor(p.x / res)), int64_t(std::floor(p.y / res)),
          int64_t(std::floor(p.z / res))};
}

}  // namespace

FeatureVoxelMap fuse_voxel_features(const Trial& trial, const SemanticFeatureSet& features,
                                    double resolution) {
  if (resolution <= 0.0) throw std::invalid_argument("fuse_voxel_features: resolution must be > 0");
  FeatureVoxelMap vmap;
  vmap.resolution = resolution;
  vmap.dim = features.dim;
  for (const auto& frame : trial.frames) {
    for (uint16_t id : mask_ids(frame.mask)) {
      auto fit = features.features.find({frame.index, int(id)});
      if (fit == features.features.end()) {
        std::cerr << "warning: no semantic feature for frame " << frame.index << " mask " << id
                  << ", skipped\n";
        continue;
      }
      const std::vector<float>& f = fit->second;
      PointCloud cam = back_project_mask(frame.depth, frame.mask, id, frame.color,
                                         trial.intrinsics);
      PointCloud world = transform_cloud(cam, frame.pose);
      for (const auto& p : world.points) {
        auto& vox = vmap.voxels[voxel_key(p.position, resolution)];
        if (vox.mean.empty()) vox.mean.assign(size_t(vmap.dim), 0.0f);
        vox.count += 1;
        for (int j = 0; j < vmap.dim; ++j)
          vox.mean[j] += (f[j] - vox.mean[j]) / float(vox.count);
      }
    }
  }
  return vmap;
}

std::vector<int> dbscan_cosine(const std::vector<std::vector<float>>& points,
                               const DbscanConfig& cfg) {
  if (cfg.eps <= 0.0 || cfg.min_pts < 1) throw std::invalid_argument("dbscan: bad parameters");
  const int n = int(points.size());
  auto neighbors = [&](int i) {
    std::vector<int> out;
    for (int j = 0; j < n; ++j)
      if (1.0 - cosine(points[i], points[j]) <= cfg.eps) out.push_back(j);
    return out;
  };
  std::vector<int> labels(n, -2);  // -2 unvisited, -1 noise
  int cluster = 0;
  for (int i = 0; i < n; ++i) {
    if (labels[i] != -2) continue;
    std::vector<int> nbrs = neighbors(i);
    if (int(nbrs.size()) < cfg.min_pts) {
      labels[i] = -1;
      continue;
    }
    labels[i] = cluster;
    std::deque<int> queue(nbrs.begin(), nbrs.end());
    while (!queue.empty()) {
      int q = queue.front();
      queue.pop_front();
      if (labels[q] == -1) labels[q] = cluster;
      if (labels[q] != -2) continue;
      labels[q] = cluster;
      std::vector<int> qn = neighbors(q);
      if (int(qn.size()) >= cfg.min_pts) queue.insert(queue.end(), qn.begin(), qn.end());
    }
    ++cluster;
  }
  return labels;
}

std::vector<float> object_feature(const PointCloud& instance_cloud, const FeatureVoxelMap& vmap,
                                  const DbscanConfig& cfg, bool* used_fallback) {
  if (instance_cloud.empty()) throw std::invalid_argument("object_feature: empty instance cloud");
  if (used_fallback) *used_fallback = false;
  const double res = vmap.resolution;
  const double max_dist = 2.0 * res;
  std::vector<std::vector<float>> collected;
  for (const auto& p : instance_cloud.points) {
    // Search voxel centers in the 5x5x5 cell neighborhood.
    auto [cx, cy, cz] = voxel_key(p.position, res);
    double best = std::numeric_limits<double>::infinity();
    const FeatureVoxel* best_vox = nullptr;
    for (int64_t dx = -2; dx <= 2; ++dx)
      for (int64_t dy = -2; dy <= 2; ++dy)
        for (int64_t dz = -2; dz <= 2; ++dz) {
          auto it = vmap.voxels.find({cx + dx, cy + dy, cz + dz});
          if (it == vmap.voxels.end()) continue;
          Vec3 center{(double(cx + dx) + 0.5) * res, (double(cy + dy) + 0.5) * res,
                      (double(cz + dz) + 0.5) * res};
          double d = (center - p.position).norm();
          if (d < best) {
            best = d;
            best_vox = &it->second;
          }
        }
    if (best_vox && best <= max_dist) collected.push_back(best_vox->mean);
  }
  if (collected.empty()) throw std::runtime_error("object unobserved in feature map");

  std::vector<int> labels = dbscan_cosine(collected, cfg);
  int best_cluster = -1, best_size = 0;
  for (int l : labels)
    if (l >= 0) {
      int size = int(std::count(labels.begin(), labels.end(), l));
      if (size > best_size) {
        best_size = size;
        best_cluster = l;
      }
    }
  std::vector<double> mean(collected[0].size(), 0.0);
  if (best_cluster < 0) {
    if (used_fallback) *used_fallback = true;
    for (const auto& f : collected)
      for (size_t j = 0; j < mean.size(); ++j) mean[j] += f[j];
    for (auto& v : mean) v /= double(collected.size());
    std::vector<float> out(mean.begin(), mean.end());
    return out;
  }
  for (size_t i = 0; i < collected.size(); ++i)
    if (labels[i] == best_cluster)
      for (size_t j = 0; j < mean.size(); ++j) mean[j] += collected[i][j];
  for (auto& v : mean) v /= double(best_size);
  std::vector<float> mean_f(mean.begin(), mean.end());
  double best_cos = -2.0;
  size_t best_idx = 0;
  for (size_t i = 0; i < collected.size(); ++i) {
    if (labels[i] != best_cluster) continue;
    double c = cosine(collected[i], mean_f);
    if (c > best_cos) {
      best_cos = c;
      best_idx = i;
    }
  }
  return collected[best_idx];
}

ScoreMatrix vlm_score_matrix(const std::map<int, std::vector<float>>& ref_features,
                             const std::map<int, std::vector<float>>& new_features) {
  std::vector<int> ref_ids, new_ids;
  for (const auto& [id, f] : ref_features) ref_ids.push_back(id);
  for (const auto& [id, f] : new_features) new_ids.push_back(id);
  ScoreMatrix m(new_ids, ref_ids);
  for (size_t j = 0; j < new_ids.size(); ++j)
    for (size_t i = 0; i < ref_ids.size(); ++i)
      m.at(j, i) = cosine(new_features.at(new_ids[j]), ref_features.at(ref_ids[i]));
  return m;
}

// --- feature file (magic "BYEF") ----------------------------------------------

namespace {

constexpr char kFeatMagic[4] = {'B', 'Y', 'E', 'F'};
constexpr uint32_t kFeatVersion = 1;

void write_u32(std::ostream& os, uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }

uint32_t read_u32(std::istream& is) {
  uint32_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), 4))
    throw std::runtime_error("semantic features: truncated file");
  return v;
}

}  // namespace

void save_semantic_features(const SemanticFeatureSet& set, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("semantic features: cannot open '" + path + "' for writing");
  os.write(kFeatMagic, 4);
  write_u32(os, kFeatVersion);
  write_u32(os, uint32_t(set.dim));
  write_u32(os, uint32_t(set.features.size()));
  for (const auto& [key, f] : set.features) {
    write_u32(os, uint32_t(key.first));
    write_u32(os, uint32_t(key.second));
    os.write(reinterpret_cast<const char*>(f.data()), std::streamsize(f.size() * 4));
  }
  if (!os) throw std::runtime_error("semantic features: write failed for '" + path + "'");
}

SemanticFeatureSet load_semantic_features(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("semantic features: cannot open '" + path + "'");
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kFeatMagic, 4) != 0)
    throw std::runtime_error("semantic features: bad magic in '" + path + "'");
  uint32_t version = read_u32(is);
  if (version != kFeatVersion)
    throw std::runtime_error("semantic features: unsupported version " + std::to_string(version));
  SemanticFeatureSet set;
  set.dim = int(read_u32(is));
  uint32_t count = read_u32(is);
  for (uint32_t i = 0; i < count; ++i) {
    int frame = int(read_u32(is));
    int mask = int(read_u32(is));
    std::vector<float> f(size_t(set.dim));
    if (!is.read(reinterpret_cast<char*>(f.data()), std::streamsize(f.size() * 4)))
      throw std::runtime_error("semantic features: truncated file");
    // Normalize at load time so downstream cosine math sees unit vectors.
    double n = 0.0;
    for (float v : f) n += double(v) * v;
    n = std::sqrt(n);
    if (n < 1e-12) throw std::runtime_error("semantic features: zero vector record");
    for (auto& v : f) v = float(v / n);
    set.features[{frame, mask}] = std::move(f);
  }
  return set;
}

}  // namespace bye
