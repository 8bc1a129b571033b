#pragma once

#include <string>
#include <vector>

#include "bye/geometry.hpp"
#include "bye/rng.hpp"
#include "bye/tensor.hpp"

namespace bye {

enum class Arch : uint32_t { kPointNet = 0, kDgcnn = 1 };

std::string arch_name(Arch arch);
Arch arch_from_name(const std::string& name);

struct EncoderConfig {
  Arch arch = Arch::kPointNet;
  int input_dim = 6;
  int embed_dim = 256;  // E, output of h
  int proj_dim = 64;    // P, output of g
  int knn_k = 10;       // dgcnn only
  std::vector<int> pointnet_widths = {64, 64, 128, 256};
  std::vector<int> dgcnn_widths = {64, 64, 128};
  int dgcnn_fuse_dim = 256;
  bool two_layer_head = false;  // optional hidden layer in the projection head

  void validate() const;
};

struct LinearLayer {
  Tensor weight;  // [in, out]
  Tensor bias;    // [out]
};

struct BatchNormLayer {
  Tensor gamma, beta;
  std::vector<float> running_mean, running_var;
};

struct EncoderModel {
  EncoderConfig config;
  std::vector<LinearLayer> backbone;  // per-point / per-edge MLP stack
  std::vector<BatchNormLayer> norms;  // one per backbone layer
  LinearLayer embed;                  // pooled features -> E
  LinearLayer proj_hidden;            // only when two_layer_head
  LinearLayer proj;                   // E -> P, no normalization or activation

  std::vector<Tensor> parameters();
  EncoderModel clone() const;  // deep copy of parameters and running stats
};

EncoderModel init_encoder(const EncoderConfig& cfg, Rng& rng);

// Embeds a batch of preprocessed (zero-centered, capped) clouds; returns [B, E].
Tensor forward_h(EncoderModel& model, const std::vector<PointCloud>& batch, bool train);

// Projection head g applied to h; used only during contrastive training.
Tensor forward_g(EncoderModel& model, const Tensor& h);

// Brute-force k nearest neighbors (excluding self) per row of a [n, c] feature
// block; ties broken by lowest index. Exposed for the dgcnn graph tests.
std::vector<int> knn_indices(const std::vector<float>& feats, int n, int c, int k);

void save_checkpoint(const EncoderModel& model, const std::string& path);
EncoderModel load_checkpoint(const std::string& path);
// Loads and verifies the stored architecture against the requested one.
EncoderModel load_checkpoint(const std::string& path, Arch expected);

}  // namespace bye
