#pragma once

#include <utility>

#include "bye/geometry.hpp"
#include "bye/rng.hpp"

namespace bye {

struct PreprocessConfig {
  double voxel_resolution = 0.01;  // meters
  int max_points = 1024;
  int min_points = 50;
};

struct AugmentConfig {
  double jitter_max = 0.03;   // meters
  double rot_max_deg = 30.0;  // per axis
  uint64_t rng_seed = 0;
};

// Subtracts the positional mean; returns the centered cloud and the mean.
std::pair<PointCloud, Vec3> zero_center(const PointCloud& cloud);

// Merges points sharing a voxel cell (floor(x/res) per axis) into their
// position/color centroid. Output is ordered by lexicographic voxel index.
PointCloud voxel_downsample(const PointCloud& cloud, double resolution);

// Greedy farthest point sampling seeded at index 0; identity when |cloud| <= k.
PointCloud farthest_point_sample(const PointCloud& cloud, int k);

// Mixed sampling: clouds above max_points are voxel-downsampled, then FPS-capped.
PointCloud preprocess(const PointCloud& cloud, const PreprocessConfig& cfg);

// Per-point spherical jitter followed by rotations about X, Y, Z in order.
PointCloud augment(const PointCloud& cloud, const AugmentConfig& cfg, Rng& rng);

}  // namespace bye
