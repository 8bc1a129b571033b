#pragma once

#include <map>
#include <string>
#include <vector>

#include "bye/geometry.hpp"
#include "bye/pointcloud_ops.hpp"

namespace bye {

struct ObservationFrame {
  DepthImage depth;
  MaskImage mask;
  ColorImage color;
  Pose pose;  // camera to world
  int index = 0;
};

struct Trial {
  std::vector<ObservationFrame> frames;
  CameraIntrinsics intrinsics;
  std::string trial_id;
};

struct InstanceMap {
  std::map<int, PointCloud> instances;       // world-frame fused clouds
  std::map<int, int> observation_counts;     // R_i per instance
};

struct ObservationSample {
  PointCloud cloud;  // zero-centered, preprocessed, camera frame
  int label = 0;
  int frame_index = 0;
  Vec3 centroid;  // of the raw observation, in world coordinates
};

// Sorted instance ids present in a mask (background excluded).
std::vector<uint16_t> mask_ids(const MaskImage& mask);

// Fuses all masked observations into per-instance world clouds; each fused
// cloud is voxel-downsampled once at the end.
InstanceMap build_instance_map(const Trial& trial, const PreprocessConfig& cfg = {});

// Emits one labeled, zero-centered, preprocessed camera-frame sample per
// (frame, mask) pair that passes the min_points filter.
std::vector<ObservationSample> generate_dataset(const Trial& trial,
                                                const PreprocessConfig& cfg = {});

}  // namespace bye
