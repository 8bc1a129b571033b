#include "bye/pipeline.hpp"

#include <stdexcept>

namespace bye {

AssociationTracker run_retrieval(const Trial& new_trial, EncoderModel& model,
                                 const MemoryBank& bank, const RetrievalConfig& cfg) {
  if (cfg.k < 1) throw std::invalid_argument("run_retrieval: k must be >= 1");
  AssociationTracker tracker;
  const int e = model.config.embed_dim;
  for (const auto& frame : new_trial.frames) {
    std::vector<PointCloud> clouds;
    std::vector<int> ids;
    for (uint16_t id : mask_ids(frame.mask)) {
      PointCloud cam = back_project_mask(frame.depth, frame.mask, id, frame.color,
                                         new_trial.intrinsics);
      if (int(cam.size()) < cfg.preprocess.min_points) continue;
      auto [centered, mean] = zero_center(cam);
      auto [recentered, residual] = zero_center(preprocess(centered, cfg.preprocess));
      clouds.push_back(std::move(recentered));
      ids.push_back(int(id));
    }
    if (clouds.empty()) continue;
    Tensor h = forward_h(model, clouds, /*train=*/false);
    for (size_t i = 0; i < ids.size(); ++i) {
      std::vector<float> q(h.value().begin() + int64_t(i) * e,
                           h.value().begin() + int64_t(i + 1) * e);
      std::vector<Neighbor> nbrs = knn_query(bank, q, cfg.k);
      std::vector<int> labels;
      labels.reserve(nbrs.size());
      for (const auto& nb : nbrs) labels.push_back(nb.label);
      tracker.update(ids[i], labels);
    }
  }
  return tracker;
}

std::map<int, std::vector<float>> trial_object_features(const Trial& trial,
                                                        const SemanticFeatureSet& features,
                                                        double voxel_resolution,
                                                        const DbscanConfig& dbscan,
                                                        const PreprocessConfig& map_cfg) {
  InstanceMap imap = build_instance_map(trial, map_cfg);
  FeatureVoxelMap vmap = fuse_voxel_features(trial, features, voxel_resolution);
  std::map<int, std::vector<float>> out;
  for (const auto& [id, cloud] : imap.instances) out[id] = object_feature(cloud, vmap, dbscan);
  return out;
}

EnsembleResult associate_ensemble(const AssociationTracker& tracker,
                                  const std::map<int, std::vector<float>>& ref_features,
                                  const std::map<int, std::vector<float>>& new_features) {
  EnsembleResult result;
  result.vlm = vlm_score_matrix(ref_features, new_features);
  result.bye = score_matrix(tracker, result.vlm.new_ids, result.vlm.ref_ids);
  result.combined = ensemble(result.bye, result.vlm);
  result.assignment = hungarian_assign(result.combined);
  return result;
}

}  // namespace bye
