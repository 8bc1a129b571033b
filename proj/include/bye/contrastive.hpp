#pragma once

#include <string>
#include <vector>

#include "bye/encoder.hpp"
#include "bye/instance_mapping.hpp"
#include "bye/pointcloud_ops.hpp"

namespace bye {

struct TrainConfig {
  int batch_anchors = 64;
  int epochs = 300;
  double lr = 0.003;
  double val_fraction = 0.1;
  int val_every = 300;  // iterations (batches)
  double temperature = 0.07;
  uint64_t seed = 0;
  AugmentConfig augment;
  bool mask_same_label_negatives = false;  // literal reading keeps them as negatives
  bool augment_batches = true;

  void validate() const;
};

// Samples interleaved as (anchor_0, positive_0, anchor_1, positive_1, ...).
struct ContrastiveBatch {
  std::vector<PointCloud> clouds;
  std::vector<int> labels;
  std::vector<int> pair_index;  // position of each sample's positive
};

// Draws `anchors` anchors from the index range [begin, end) of `order` (an
// epoch shuffle) and one positive per anchor from same-label samples.
ContrastiveBatch sample_batch(const std::vector<ObservationSample>& dataset,
                              const std::vector<int>& anchor_indices, Rng& rng);

// Labels that can anchor a positive pair (>= 2 samples).
std::vector<int> pairable_labels(const std::vector<ObservationSample>& dataset);

Tensor nt_xent_loss(const Tensor& projections, const std::vector<int>& pair_index, double tau,
                    bool mask_same_label = false, const std::vector<int>* labels = nullptr);

struct TrainLogEntry {
  int iteration = 0;
  std::string split;  // "train" or "val"
  double loss = 0.0;
};

struct TrainResult {
  EncoderModel best_model;
  std::vector<TrainLogEntry> log;
  double best_val_loss = 0.0;
  int best_iteration = 0;
};

TrainResult train(const std::vector<ObservationSample>& dataset, const EncoderConfig& encoder_cfg,
                  const TrainConfig& cfg);

// Validation NT-Xent in eval mode over deterministic same-label pairs.
double validation_loss(EncoderModel& model, const std::vector<ObservationSample>& val_set,
                       double tau, bool mask_same_label = false);

}  // namespace bye
