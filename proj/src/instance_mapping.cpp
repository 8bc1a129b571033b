#include "bye/instance_mapping.hpp"

#include <set>
#include <stdexcept>

namespace bye {

std::vector<uint16_t> mask_ids(const MaskImage& mask) {
  std::set<uint16_t> ids;
  for (uint16_t v : mask.data)
    if (v != 0) ids.insert(v);
  return {ids.begin(), ids.end()};
}

InstanceMap build_instance_map(const Trial& trial, const PreprocessConfig& cfg) {
  if (trial.frames.empty()) throw std::invalid_argument("build_instance_map: empty trial");
  InstanceMap map;
  for (const auto& frame : trial.frames) {
    for (uint16_t id : mask_ids(frame.mask)) {
      PointCloud cam = back_project_mask(frame.depth, frame.mask, id, frame.color,
                                         trial.intrinsics);
      if (int(cam.size()) < cfg.min_points) continue;
      PointCloud world = transform_cloud(cam, frame.pose);
      auto& inst = map.instances[id];
      inst.frame = Frame::kWorld;
      inst.points.insert(inst.points.end(), world.points.begin(), world.points.end());
      map.observation_counts[id] += 1;
    }
  }
  for (auto& [id, cloud] : map.instances) cloud = voxel_downsample(cloud, cfg.voxel_resolution);
  return map;
}

std::vector<ObservationSample> generate_dataset(const Trial& trial, const PreprocessConfig& cfg) {
  if (trial.frames.empty()) throw std::invalid_argument("generate_dataset: empty trial");
  std::vector<ObservationSample> samples;
  for (const auto& frame : trial.frames) {
    for (uint16_t id : mask_ids(frame.mask)) {
      PointCloud cam = back_project_mask(frame.depth, frame.mask, id, frame.color,
                                         trial.intrinsics);
      if (int(cam.size()) < cfg.min_points) continue;
      auto [centered, mean] = zero_center(cam);
      // Downsampling can shift the mean off zero; re-center and fold the
      // residual into the stored centroid.
      auto [recentered, residual] = zero_center(preprocess(centered, cfg));
      ObservationSample s;
      s.cloud = std::move(recentered);
      s.label = id;
      s.frame_index = frame.index;
      s.centroid = frame.pose.apply(mean + residual);
      samples.push_back(std::move(s));
    }
  }
  if (samples.empty()) throw std::runtime_error("no valid observations");
  return samples;
}

}  // namespace bye
