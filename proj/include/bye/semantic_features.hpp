#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "bye/assignment.hpp"
#include "bye/instance_mapping.hpp"

namespace bye {

// One unit-normalized feature vector per (frame index, mask id).
struct SemanticFeatureSet {
  int dim = 0;
  std::map<std::pair<int, int>, std::vector<float>> features;
};

struct FeatureVoxel {
  std::vector<float> mean;
  int count = 0;
};

struct FeatureVoxelMap {
  double resolution = 0.05;
  int dim = 0;
  std::map<std::tuple<int64_t, int64_t, int64_t>, FeatureVoxel> voxels;
};

struct DbscanConfig {
  double eps = 0.05;  // cosine distance
  int min_pts = 5;
};

// Back-projects every valid masked pixel of the trial into world space and
// folds its mask feature into the containing voxel by running-average fusion.
FeatureVoxelMap fuse_voxel_features(const Trial& trial, const SemanticFeatureSet& features,
                                    double resolution = 0.05);

// DBSCAN over unit vectors with distance 1 - cosine; returns a cluster label
// per point (-1 = noise).
std::vector<int> dbscan_cosine(const std::vector<std::vector<float>>& points,
                               const DbscanConfig& cfg);

// Collects the nearest voxel feature (within 2x resolution) for each instance
// point, picks DBSCAN's largest cluster, and returns the collected vector
// closest to that cluster's mean. Falls back to the plain mean when no
// cluster forms (*used_fallback set).
std::vector<float> object_feature(const PointCloud& instance_cloud, const FeatureVoxelMap& vmap,
                                  const DbscanConfig& cfg, bool* used_fallback = nullptr);

// Entry (j, i) = cosine(new feature j, reference feature i).
ScoreMatrix vlm_score_matrix(const std::map<int, std::vector<float>>& ref_features,
                             const std::map<int, std::vector<float>>& new_features);

// Per-trial feature file, magic "BYEF".
void save_semantic_features(const SemanticFeatureSet& set, const std::string& path);
SemanticFeatureSet load_semantic_features(const std::string& path);

}  // namespace bye
