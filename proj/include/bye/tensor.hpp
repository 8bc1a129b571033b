#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "bye/rng.hpp"

namespace bye {

using Shape = std::vector<int>;

int64_t numel_of(const Shape& shape);
std::string shape_str(const Shape& shape);

struct TensorNode {
  Shape shape;
  std::vector<float> value;
  std::vector<float> grad;  // allocated lazily during backward
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backward_fn;  // scatters node.grad to parents
};

// Shared handle to a node of the compute graph. Forward ops build new nodes;
// backward() walks the recorded parents in reverse topological order.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<float> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor scalar(float v);

  bool valid() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int dim(int i) const { return node_->shape[i]; }
  int64_t numel() const { return int64_t(node_->value.size()); }
  std::vector<float>& value() { return node_->value; }
  const std::vector<float>& value() const { return node_->value; }
  std::vector<float>& grad() { return node_->grad; }
  const std::vector<float>& grad() const { return node_->grad; }
  bool requires_grad() const { return node_->requires_grad; }
  float item() const;

  std::shared_ptr<TensorNode> node() const { return node_; }
  static Tensor wrap(std::shared_ptr<TensorNode> n) {
    Tensor t;
    t.node_ = std::move(n);
    return t;
  }

 private:
  std::shared_ptr<TensorNode> node_;
};

// --- primitives -----------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);          // [m,k] x [k,n]
Tensor matmul_nt(const Tensor& a, const Tensor& b);       // [m,k] x [n,k]^T
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);  // x W + b
Tensor relu(const Tensor& x);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, float s);
Tensor sum_all(const Tensor& x);
Tensor mean_all(const Tensor& x);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor gather_rows(const Tensor& x, std::vector<int> indices);
// Max over each row range [offsets[i], offsets[i+1]); argmax rows feed backward.
Tensor segment_max(const Tensor& x, std::vector<int> offsets);
Tensor l2_normalize_rows(const Tensor& x);
// One entry per row: x[i, cols[i]].
Tensor select_cols(const Tensor& x, std::vector<int> cols);
// Per row i of a square matrix: log sum_{k != i} exp(x[i,k]).
Tensor logsumexp_rows_nodiag(const Tensor& x);

// Batch norm over rows of x [n, c]. Train mode normalizes with batch
// statistics and folds them into the running buffers with the given momentum;
// eval mode normalizes with the running buffers.
Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  std::vector<float>& running_mean, std::vector<float>& running_var, bool train,
                  float momentum = 0.9f, float eps = 1e-5f);

// Accumulates d(loss)/d(leaf) into every reachable requires_grad leaf.
void backward(const Tensor& loss);
void zero_grad(std::vector<Tensor>& params);

// --- optimizer -------------------------------------------------------------

struct AdamState {
  double lr = 0.003;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int64_t step = 0;
  std::vector<std::vector<float>> m, v;
};

void adam_step(std::vector<Tensor>& params, AdamState& state);

}  // namespace bye
