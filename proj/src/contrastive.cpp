#include "bye/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace bye {

void TrainConfig::validate() const {
  if (batch_anchors < 2) throw std::invalid_argument("train: batch_anchors must be >= 2");
  if (val_fraction <= 0.0 || val_fraction >= 1.0)
    throw std::invalid_argument("train: val_fraction must be in (0, 1)");
  if (temperature <= 0.0) throw std::invalid_argument("train: temperature must be > 0");
  if (epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
  if (val_every < 1) throw std::invalid_argument("train: val_every must be >= 1");
}

std::vector<int> pairable_labels(const std::vector<ObservationSample>& dataset) {
  std::map<int, int> counts;
  for (const auto& s : dataset) counts[s.label] += 1;
  std::vector<int> labels;
  for (auto [label, n] : counts)
    if (n >= 2) labels.push_back(label);
  return labels;
}

ContrastiveBatch sample_batch(const std::vector<ObservationSample>& dataset,
                              const std::vector<int>& anchor_indices, Rng& rng) {
  std::map<int, std::vector<int>> by_label;
  for (size_t i = 0; i < dataset.size(); ++i) by_label[dataset[i].label].push_back(int(i));
  ContrastiveBatch batch;
  for (int a : anchor_indices) {
    const auto& group = by_label[dataset[a].label];
    if (group.size() < 2)
      throw std::runtime_error("sample_batch: anchor label has no positive counterpart");
    int pos = a;
    while (pos == a) pos = group[rng.uniform_int(int(group.size()))];
    int base = int(batch.clouds.size());
    batch.clouds.push_back(dataset[a].cloud);
    batch.labels.push_back(dataset[a].label);
    batch.clouds.push_back(dataset[pos].cloud);
    batch.labels.push_back(dataset[pos].label);
    batch.pair_index.push_back(base + 1);
    batch.pair_index.push_back(base);
  }
  if (batch.clouds.empty()) throw std::runtime_error("no positive pairs available");
  return batch;
}

Tensor nt_xent_loss(const Tensor& projections, const std::vector<int>& pair_index, double tau,
                    bool mask_same_label, const std::vector<int>* labels) {
  if (tau <= 0.0) throw std::invalid_argument("nt_xent_loss: tau must be > 0");
  int n = projections.dim(0);
  if (int(pair_index.size()) != n)
    throw std::invalid_argument("nt_xent_loss: pair_index size mismatch");
  for (int i = 0; i < n; ++i)
    if (pair_index[i] < 0 || pair_index[i] >= n || pair_index[i] == i)
      throw std::invalid_argument("nt_xent_loss: invalid pair index");
  Tensor z = l2_normalize_rows(projections);
  Tensor sims = scale(matmul_nt(z, z), float(1.0 / tau));
  if (mask_same_label) {
    if (!labels || int(labels->size()) != n)
      throw std::invalid_argument("nt_xent_loss: labels required to mask same-label negatives");
    // Push same-label non-pair similarities to -inf so they drop out of the
    // denominator.
    std::vector<float> mask(size_t(n) * n, 0.0f);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k)
        if (k != i && k != pair_index[i] && (*labels)[k] == (*labels)[i])
          mask[size_t(i) * n + k] = -1e4f;
    sims = add(sims, Tensor({n, n}, std::move(mask)));
  }
  Tensor pos = select_cols(sims, pair_index);
  Tensor lse = logsumexp_rows_nodiag(sims);
  return mean_all(sub(lse, pos));
}

double validation_loss(EncoderModel& model, const std::vector<ObservationSample>& val_set,
                       double tau, bool mask_same_label) {
  std::map<int, std::vector<int>> by_label;
  for (size_t i = 0; i < val_set.size(); ++i) by_label[val_set[i].label].push_back(int(i));
  std::vector<PointCloud> clouds;
  std::vector<int> labels, pair_index;
  for (const auto& [label, group] : by_label) {
    if (group.size() < 2) continue;
    int base = int(clouds.size());
    for (size_t j = 0; j < group.size(); ++j) {
      clouds.push_back(val_set[group[j]].cloud);
      labels.push_back(label);
      pair_index.push_back(base + int((j + 1) % group.size()));
    }
  }
  if (clouds.size() < 2) throw std::runtime_error("validation set has no positive pairs");
  Tensor h = forward_h(model, clouds, /*train=*/false);
  Tensor g = forward_g(model, h);
  return nt_xent_loss(g, pair_index, tau, mask_same_label, &labels).item();
}

namespace {

// Stratified 90/10 split; every label with >= 2 samples lands in both splits.
void split_dataset(const std::vector<ObservationSample>& dataset, double val_fraction,
                   uint64_t seed, std::vector<ObservationSample>& train_set,
                   std::vector<ObservationSample>& val_set) {
  std::map<int, std::vector<int>> by_label;
  for (size_t i = 0; i < dataset.size(); ++i) by_label[dataset[i].label].push_back(int(i));
  Rng rng = Rng::derive(seed, 0x5717u);
  std::vector<char> is_val(dataset.size(), 0);
  for (auto& [label, group] : by_label) {
    for (size_t j = group.size(); j > 1; --j)
      std::swap(group[j - 1], group[rng.uniform_int(int(j))]);
    int n = int(group.size());
    int n_val = int(std::lround(n * val_fraction));
    if (n >= 2) n_val = std::clamp(n_val, 1, n - 1);
    for (int j = 0; j < n_val; ++j) is_val[group[j]] = 1;
  }
  for (size_t i = 0; i < dataset.size(); ++i)
    (is_val[i] ? val_set : train_set).push_back(dataset[i]);
}

}  // namespace

TrainResult train(const std::vector<ObservationSample>& dataset, const EncoderConfig& encoder_cfg,
                  const TrainConfig& cfg) {
  cfg.validate();
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
  std::vector<ObservationSample> train_set, val_set;
  split_dataset(dataset, cfg.val_fraction, cfg.seed, train_set, val_set);

  std::vector<int> anchorable;
  {
    std::map<int, int> counts;
    for (const auto& s : train_set) counts[s.label] += 1;
    for (size_t i = 0; i < train_set.size(); ++i)
      if (counts[train_set[i].label] >= 2) anchorable.push_back(int(i));
  }
  if (anchorable.empty()) throw std::runtime_error("no positive pairs available");

  Rng init_rng = Rng::derive(cfg.seed, 0x1217u);
  EncoderModel model = init_encoder(encoder_cfg, init_rng);
  std::vector<Tensor> params = model.parameters();
  AdamState adam;
  adam.lr = cfg.lr;

  TrainResult result;
  result.best_val_loss = validation_loss(model, val_set, cfg.temperature,
                                         cfg.mask_same_label_negatives);
  result.best_model = model.clone();
  result.best_iteration = 0;
  result.log.push_back({0, "val", result.best_val_loss});

  const int anchors_per_batch = std::min<int>(cfg.batch_anchors, int(anchorable.size()));
  int iteration = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<int> order = anchorable;
    Rng shuffle_rng = Rng::derive(cfg.seed, 0xE000000ull + uint64_t(epoch));
    for (size_t j = order.size(); j > 1; --j)
      std::swap(order[j - 1], order[shuffle_rng.uniform_int(int(j))]);
    for (size_t start = 0; start + anchors_per_batch <= order.size();
         start += anchors_per_batch) {
      ++iteration;
      Rng batch_rng = Rng::derive(cfg.seed, 0xB000000ull + uint64_t(iteration));
      std::vector<int> anchors(order.begin() + start, order.begin() + start + anchors_per_batch);
      ContrastiveBatch batch = sample_batch(train_set, anchors, batch_rng);
      if (cfg.augment_batches)
        for (auto& cloud : batch.clouds) cloud = augment(cloud, cfg.augment, batch_rng);
      Tensor h = forward_h(model, batch.clouds, /*train=*/true);
      Tensor g = forward_g(model, h);
      Tensor loss = nt_xent_loss(g, batch.pair_index, cfg.temperature,
                                 cfg.mask_same_label_negatives, &batch.labels);
      zero_grad(params);
      backward(loss);
      adam_step(params, adam);
      result.log.push_back({iteration, "train", double(loss.item())});
      if (iteration % cfg.val_every == 0) {
        double vl = validation_loss(model, val_set, cfg.temperature,
                                    cfg.mask_same_label_negatives);
        result.log.push_back({iteration, "val", vl});
        if (vl < result.best_val_loss) {
          result.best_val_loss = vl;
          result.best_model = model.clone();
          result.best_iteration = iteration;
        }
      }
    }
  }
  if (iteration % cfg.val_every != 0 && iteration > 0) {
    double vl = validation_loss(model, val_set, cfg.temperature, cfg.mask_same_label_negatives);
    result.log.push_back({iteration, "val", vl});
    if (vl < result.best_val_loss) {
      result.best_val_loss = vl;
      result.best_model = model.clone();
      result.best_iteration = iteration;
    }
  }
  return result;
}

}  // namespace bye
