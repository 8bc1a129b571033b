#pragma once

#include <map>
#include <vector>

#include "bye/assignment.hpp"
#include "bye/instance_mapping.hpp"
#include "bye/memory_bank.hpp"
#include "bye/semantic_features.hpp"

namespace bye {

struct RetrievalConfig {
  int k = 10;
  PreprocessConfig preprocess;
};

// Embeds every masked observation of the new trial and votes its k nearest
// reference labels into the tracker.
AssociationTracker run_retrieval(const Trial& new_trial, EncoderModel& model,
                                 const MemoryBank& bank, const RetrievalConfig& cfg);

// One aggregated semantic feature per instance of the trial: voxel fusion,
// per-point collection, DBSCAN major cluster.
std::map<int, std::vector<float>> trial_object_features(const Trial& trial,
                                                        const SemanticFeatureSet& features,
                                                        double voxel_resolution,
                                                        const DbscanConfig& dbscan,
                                                        const PreprocessConfig& map_cfg = {});

struct EnsembleResult {
  Assignment assignment;
  ScoreMatrix bye;
  ScoreMatrix vlm;
  ScoreMatrix combined;
};

// A = A_bye + A_vlm followed by the Hungarian assignment.
EnsembleResult associate_ensemble(const AssociationTracker& tracker,
                                  const std::map<int, std::vector<float>>& ref_features,
                                  const std::map<int, std::vector<float>>& new_features);

}  // namespace bye
