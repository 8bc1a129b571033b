#include "bye/pointcloud_ops.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <tuple>

namespace bye {

std::pair<PointCloud, Vec3> zero_center(const PointCloud& cloud) {
  if (cloud.empty()) throw std::runtime_error("empty observation");
  Vec3 mean;
  for (const auto& p : cloud.points) mean += p.position;
  mean = mean / double(cloud.size());
  PointCloud out = cloud;
  for (auto& p : out.points) p.position = p.position - mean;
  return {std::move(out), mean};
}

PointCloud voxel_downsample(const PointCloud& cloud, double resolution) {
  if (resolution <= 0.0) throw std::invalid_argument("voxel_downsample: resolution must be > 0");
  struct Accum {
    Vec3 pos;
    double r = 0, g = 0, b = 0;
    int n = 0;
  };
  std::map<std::tuple<int64_t, int64_t, int64_t>, Accum> cells;
  for (const auto& p : cloud.points) {
    auto key = std::make_tuple(int64_t(std::floor(p.position.x / resolution)),
                               int64_t(std::floor(p.position.y / resolution)),
                               int64_t(std::floor(p.position.z / resolution)));
    auto& c = cells[key];
    c.pos += p.position;
    c.r += p.r;
    c.g += p.g;
    c.b += p.b;
    c.n += 1;
  }
  PointCloud out;
  out.frame = cloud.frame;
  out.points.reserve(cells.size());
  for (const auto& [key, c] : cells) {
    Point6 p;
    p.position = c.pos / double(c.n);
    p.r = float(c.r / c.n);
    p.g = float(c.g / c.n);
    p.b = float(c.b / c.n);
    out.points.push_back(p);
  }
  return out;
}

PointCloud farthest_point_sample(const PointCloud& cloud, int k) {
  if (k < 1) throw std::invalid_argument("farthest_point_sample: k must be >= 1");
  const int n = int(cloud.size());
  if (n <= k) return cloud;
  std::vector<int> selected;
  selected.reserve(k);
  std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
  int current = 0;
  selected.push_back(current);
  for (int round = 1; round < k; ++round) {
    const Vec3& c = cloud.points[current].position;
    int best = -1;
    double best_dist = -1.0;
    for (int i = 0; i < n; ++i) {
      Vec3 d = cloud.points[i].position - c;
      double dist = d.dot(d);
      if (dist < min_dist[i]) min_dist[i] = dist;
      if (min_dist[i] > best_dist) {  // ties keep the lowest index
        best_dist = min_dist[i];
        best = i;
      }
    }
    current = best;
    selected.push_back(current);
  }
  PointCloud out;
  out.frame = cloud.frame;
  out.points.reserve(k);
  for (int idx : selected) out.points.push_back(cloud.points[idx]);
  return out;
}

PointCloud preprocess(const PointCloud& cloud, const PreprocessConfig& cfg) {
  if (int(cloud.size()) < cfg.min_points) throw std::runtime_error("observation too small");
  if (int(cloud.size()) <= cfg.max_points) return cloud;
  PointCloud down = voxel_downsample(cloud, cfg.voxel_resolution);
  if (int(down.size()) <= cfg.max_points) return down;
  return farthest_point_sample(down, cfg.max_points);
}

PointCloud augment(const PointCloud& cloud, const AugmentConfig& cfg, Rng& rng) {
  PointCloud out = cloud;
  for (auto& p : out.points) {
    Vec3 dir{rng.normal(), rng.normal(), rng.normal()};
    double n = dir.norm();
    while (n <= 1e-12) {
      dir = {rng.normal(), rng.normal(), rng.normal()};
      n = dir.norm();
    }
    double mag = rng.uniform(0.0, cfg.jitter_max);
    p.position += dir * (mag / n);
  }
  double max_rad = cfg.rot_max_deg * M_PI / 180.0;
  Mat3 rx = Mat3::rot_x(rng.uniform(0.0, max_rad));
  Mat3 ry = Mat3::rot_y(rng.uniform(0.0, max_rad));
  Mat3 rz = Mat3::rot_z(rng.uniform(0.0, max_rad));
  Mat3 rot = rz * ry * rx;
  for (auto& p : out.points) p.position = rot * p.position;
  return out;
}

}  // namespace bye
