#include "bye/tensor.hpp"

#include <cblas.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace bye {

int64_t numel_of(const Shape& shape) {
  int64_t n = 1;
  for (int d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ")";
  return os.str();
}

Tensor::Tensor(Shape shape, std::vector<float> data, bool requires_grad) {
  if (int64_t(data.size()) != numel_of(shape))
    throw std::invalid_argument("tensor: data size does not match shape " + shape_str(shape));
  node_ = std::make_shared<TensorNode>();
  node_->shape = std::move(shape);
  node_->value = std::move(data);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  std::vector<float> v(numel_of(shape), 0.0f);
  return Tensor(std::move(shape), std::move(v), requires_grad);
}

Tensor Tensor::scalar(float v) { return Tensor({1}, {v}); }

float Tensor::item() const {
  if (numel() != 1) throw std::runtime_error("item(): tensor is not scalar");
  return node_->value[0];
}

namespace {

Tensor make_node(Shape shape, std::vector<float> value,
                 std::vector<std::shared_ptr<TensorNode>> parents,
                 std::function<void(TensorNode&)> fn) {
  auto n = std::make_shared<TensorNode>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  bool needs = false;
  for (const auto& p : parents)
    if (p->requires_grad) needs = true;
  n->requires_grad = needs;
  if (needs) {
    n->parents = std::move(parents);
    n->backward_fn = std::move(fn);
  }
  return Tensor::wrap(std::move(n));
}

void check_matrix(const Tensor& t, const char* op) {
  if (t.shape().size() != 2)
    throw std::invalid_argument(std::string(op) + ": expected 2-d tensor, got " +
                                shape_str(t.shape()));
}

void ensure_grad(TensorNode& n) {
  if (n.grad.size() != n.value.size()) n.grad.assign(n.value.size(), 0.0f);
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_matrix(a, "matmul");
  check_matrix(b, "matmul");
  int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k)
    throw std::invalid_argument("matmul: inner dims disagree " + shape_str(a.shape()) + " x " +
                                shape_str(b.shape()));
  std::vector<float> out(size_t(m) * n, 0.0f);
  if (m && k && n)
    cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, m, n, k, 1.0f, a.value().data(), k,
                b.value().data(), n, 0.0f, out.data(), n);
  auto an = a.node(), bn = b.node();
  return make_node({m, n}, std::move(out), {an, bn}, [an, bn, m, k, n](TensorNode& node) {
    if (!m || !k || !n) return;
    if (an->requires_grad) {
      ensure_grad(*an);
      cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasTrans, m, k, n, 1.0f, node.grad.data(), n,
                  bn->value.data(), n, 1.0f, an->grad.data(), k);
    }
    if (bn->requires_grad) {
      ensure_grad(*bn);
      cblas_sgemm(CblasRowMajor, CblasTrans, CblasNoTrans, k, n, m, 1.0f, an->value.data(), k,
                  node.grad.data(), n, 1.0f, bn->grad.data(), n);
    }
  });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  check_matrix(a, "matmul_nt");
  check_matrix(b, "matmul_nt");
  int m = a.dim(0), k = a.dim(1), n = b.dim(0);
  if (b.dim(1) != k)
    throw std::invalid_argument("matmul_nt: inner dims disagree " + shape_str(a.shape()) + " x " +
                                shape_str(b.shape()) + "^T");
  std::vector<float> out(size_t(m) * n, 0.0f);
  if (m && k && n)
    cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasTrans, m, n, k, 1.0f, a.value().data(), k,
                b.value().data(), k, 0.0f, out.data(), n);
  auto an = a.node(), bn = b.node();
  return make_node({m, n}, std::move(out), {an, bn}, [an, bn, m, k, n](TensorNode& node) {
    if (!m || !k || !n) return;
    if (an->requires_grad) {
      ensure_grad(*an);
      cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, m, k, n, 1.0f, node.grad.data(), n,
                  bn->value.data(), k, 1.0f, an->grad.data(), k);
    }
    if (bn->requires_grad) {
      ensure_grad(*bn);
      cblas_sgemm(CblasRowMajor, CblasTrans, CblasNoTrans, n, k, m, 1.0f, node.grad.data(), n,
                  an->value.data(), k, 1.0f, bn->grad.data(), k);
    }
  });
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  check_matrix(x, "linear");
  check_matrix(w, "linear");
  if (b.shape().size() != 1 || b.dim(0) != w.dim(1))
    throw std::invalid_argument("linear: bias shape " + shape_str(b.shape()) +
                                " does not match weight " + shape_str(w.shape()));
  int m = x.dim(0), k = x.dim(1), n = w.dim(1);
  if (w.dim(0) != k)
    throw std::invalid_argument("linear: inner dims disagree " + shape_str(x.shape()) + " x " +
                                shape_str(w.shape()));
  // Seed the output with broadcast bias rows and accumulate the product on
  // top (sgemm beta=1): one pass over the activation instead of three.
  std::vector<float> out(size_t(m) * n);
  for (int i = 0; i < m; ++i)
    std::copy(b.value().begin(), b.value().end(), out.begin() + size_t(i) * n);
  if (m && k && n)
    cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, m, n, k, 1.0f, x.value().data(), k,
                w.value().data(), n, 1.0f, out.data(), n);
  auto xn = x.node(), wn = w.node(), bn = b.node();
  return make_node({m, n}, std::move(out), {xn, wn, bn}, [xn, wn, bn, m, k, n](TensorNode& node) {
    if (xn->requires_grad && m && k && n) {
      ensure_grad(*xn);
      cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasTrans, m, k, n, 1.0f, node.grad.data(), n,
                  wn->value.data(), n, 1.0f, xn->grad.data(), k);
    }
    if (wn->requires_grad && m && k && n) {
      ensure_grad(*wn);
      cblas_sgemm(CblasRowMajor, CblasTrans, CblasNoTrans, k, n, m, 1.0f, xn->value.data(), k,
                  node.grad.data(), n, 1.0f, wn->grad.data(), n);
    }
    if (bn->requires_grad) {
      ensure_grad(*bn);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) bn->grad[j] += node.grad[size_t(i) * n + j];
    }
  });
}

Tensor relu(const Tensor& x) {
  std::vector<float> out(x.value().size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = x.value()[i] > 0.0f ? x.value()[i] : 0.0f;
  auto xn = x.node();
  return make_node(x.shape(), std::move(out), {xn}, [xn](TensorNode& node) {
    ensure_grad(*xn);
    for (size_t i = 0; i < node.grad.size(); ++i)
      if (xn->value[i] > 0.0f) xn->grad[i] += node.grad[i];
  });
}

namespace {

Tensor elementwise(const Tensor& a, const Tensor& b, const char* op,
                   float (*fwd)(float, float),
                   void (*bwd)(float g, float av, float bv, float& da, float& db)) {
  if (a.shape() != b.shape())
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                " vs " + shape_str(b.shape()));
  std::vector<float> out(a.value().size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = fwd(a.value()[i], b.value()[i]);
  auto an = a.node(), bn = b.node();
  auto bwd_fn = bwd;
  return make_node(a.shape(), std::move(out), {an, bn}, [an, bn, bwd_fn](TensorNode& node) {
    if (an->requires_grad) ensure_grad(*an);
    if (bn->requires_grad) ensure_grad(*bn);
    float dummy = 0.0f;
    for (size_t i = 0; i < node.grad.size(); ++i) {
      float& da = an->requires_grad ? an->grad[i] : dummy;
      float& db = bn->requires_grad ? bn->grad[i] : dummy;
      bwd_fn(node.grad[i], an->value[i], bn->value[i], da, db);
    }
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return elementwise(
      a, b, "add", [](float x, float y) { return x + y; },
      [](float g, float, float, float& da, float& db) {
        da += g;
        db += g;
      });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return elementwise(
      a, b, "sub", [](float x, float y) { return x - y; },
      [](float g, float, float, float& da, float& db) {
        da += g;
        db -= g;
      });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return elementwise(
      a, b, "mul", [](float x, float y) { return x * y; },
      [](float g, float av, float bv, float& da, float& db) {
        da += g * bv;
        db += g * av;
      });
}

Tensor scale(const Tensor& x, float s) {
  std::vector<float> out(x.value().size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = x.value()[i] * s;
  auto xn = x.node();
  return make_node(x.shape(), std::move(out), {xn}, [xn, s](TensorNode& node) {
    ensure_grad(*xn);
    for (size_t i = 0; i < node.grad.size(); ++i) xn->grad[i] += node.grad[i] * s;
  });
}

Tensor sum_all(const Tensor& x) {
  double s = 0.0;
  for (float v : x.value()) s += v;
  auto xn = x.node();
  return make_node({1}, {float(s)}, {xn}, [xn](TensorNode& node) {
    ensure_grad(*xn);
    for (size_t i = 0; i < xn->grad.size(); ++i) xn->grad[i] += node.grad[0];
  });
}

Tensor mean_all(const Tensor& x) {
  if (x.numel() == 0) throw std::invalid_argument("mean_all: empty tensor");
  return scale(sum_all(x), 1.0f / float(x.numel()));
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  int rows = parts[0].dim(0);
  int total = 0;
  for (const auto& p : parts) {
    check_matrix(p, "concat_cols");
    if (p.dim(0) != rows) throw std::invalid_argument("concat_cols: row counts disagree");
    total += p.dim(1);
  }
  std::vector<float> out(size_t(rows) * total);
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::vector<int> widths;
  for (const auto& p : parts) {
    parents.push_back(p.node());
    widths.push_back(p.dim(1));
  }
  int off = 0;
  for (size_t pi = 0; pi < parts.size(); ++pi) {
    int w = widths[pi];
    const auto& v = parts[pi].value();
    for (int i = 0; i < rows; ++i)
      std::copy(v.begin() + size_t(i) * w, v.begin() + size_t(i + 1) * w,
                out.begin() + size_t(i) * total + off);
    off += w;
  }
  return make_node({rows, total}, std::move(out), parents,
                   [parents, widths, rows, total](TensorNode& node) {
                     int off = 0;
                     for (size_t pi = 0; pi < parents.size(); ++pi) {
                       int w = widths[pi];
                       auto& p = *parents[pi];
                       if (p.requires_grad) {
                         ensure_grad(p);
                         for (int i = 0; i < rows; ++i)
                           for (int j = 0; j < w; ++j)
                             p.grad[size_t(i) * w + j] += node.grad[size_t(i) * total + off + j];
                       }
                       off += w;
                     }
                   });
}

Tensor gather_rows(const Tensor& x, std::vector<int> indices) {
  check_matrix(x, "gather_rows");
  int c = x.dim(1), n = x.dim(0);
  for (int idx : indices)
    if (idx < 0 || idx >= n) throw std::out_of_range("gather_rows: index out of range");
  std::vector<float> out(indices.size() * size_t(c));
  for (size_t i = 0; i < indices.size(); ++i)
    std::copy(x.value().begin() + size_t(indices[i]) * c,
              x.value().begin() + size_t(indices[i] + 1) * c, out.begin() + i * c);
  auto xn = x.node();
  auto idx = std::make_shared<std::vector<int>>(std::move(indices));
  return make_node({int(idx->size()), c}, std::move(out), {xn}, [xn, idx, c](TensorNode& node) {
    ensure_grad(*xn);
    for (size_t i = 0; i < idx->size(); ++i)
      for (int j = 0; j < c; ++j)
        xn->grad[size_t((*idx)[i]) * c + j] += node.grad[i * c + j];
  });
}

Tensor segment_max(const Tensor& x, std::vector<int> offsets) {
  check_matrix(x, "segment_max");
  int c = x.dim(1), n = x.dim(0);
  if (offsets.size() < 2 || offsets.front() != 0 || offsets.back() != n)
    throw std::invalid_argument("segment_max: bad offsets");
  int s = int(offsets.size()) - 1;
  std::vector<float> out(size_t(s) * c);
  auto argmax = std::make_shared<std::vector<int>>(size_t(s) * c);
  for (int seg = 0; seg < s; ++seg) {
    int lo = offsets[seg], hi = offsets[seg + 1];
    if (hi <= lo) throw std::invalid_argument("segment_max: empty segment");
    for (int j = 0; j < c; ++j) {
      float best = x.value()[size_t(lo) * c + j];
      int best_i = lo;
      for (int i = lo + 1; i < hi; ++i) {
        float v = x.value()[size_t(i) * c + j];
        if (v > best) {
          best = v;
          best_i = i;
        }
      }
      out[size_t(seg) * c + j] = best;
      (*argmax)[size_t(seg) * c + j] = best_i;
    }
  }
  auto xn = x.node();
  return make_node({s, c}, std::move(out), {xn}, [xn, argmax, c](TensorNode& node) {
    ensure_grad(*xn);
    for (size_t i = 0; i < node.grad.size(); ++i) {
      int src = (*argmax)[i];
      xn->grad[size_t(src) * c + (i % c)] += node.grad[i];
    }
  });
}

Tensor l2_normalize_rows(const Tensor& x) {
  check_matrix(x, "l2_normalize_rows");
  int n = x.dim(0), c = x.dim(1);
  std::vector<float> out(x.value().size());
  auto norms = std::make_shared<std::vector<float>>(n);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < c; ++j) {
      float v = x.value()[size_t(i) * c + j];
      s += double(v) * v;
    }
    float nrm = float(std::sqrt(s));
    if (nrm < 1e-12f) throw std::runtime_error("l2_normalize_rows: zero-norm row");
    (*norms)[i] = nrm;
    for (int j = 0; j < c; ++j) out[size_t(i) * c + j] = x.value()[size_t(i) * c + j] / nrm;
  }
  auto xn = x.node();
  return make_node({n, c}, std::move(out), {xn}, [xn, norms, n, c](TensorNode& node) {
    ensure_grad(*xn);
    for (int i = 0; i < n; ++i) {
      double dot = 0.0;
      for (int j = 0; j < c; ++j)
        dot += double(node.grad[size_t(i) * c + j]) * node.value[size_t(i) * c + j];
      for (int j = 0; j < c; ++j) {
        float y = node.value[size_t(i) * c + j];
        xn->grad[size_t(i) * c + j] +=
            (node.grad[size_t(i) * c + j] - float(dot) * y) / (*norms)[i];
      }
    }
  });
}

Tensor select_cols(const Tensor& x, std::vector<int> cols) {
  check_matrix(x, "select_cols");
  int n = x.dim(0), c = x.dim(1);
  if (int(cols.size()) != n) throw std::invalid_argument("select_cols: need one column per row");
  std::vector<float> out(n);
  for (int i = 0; i < n; ++i) {
    if (cols[i] < 0 || cols[i] >= c) throw std::out_of_range("select_cols: column out of range");
    out[i] = x.value()[size_t(i) * c + cols[i]];
  }
  auto xn = x.node();
  auto idx = std::make_shared<std::vector<int>>(std::move(cols));
  return make_node({n, 1}, std::move(out), {xn}, [xn, idx, c](TensorNode& node) {
    ensure_grad(*xn);
    for (size_t i = 0; i < idx->size(); ++i) xn->grad[i * c + (*idx)[i]] += node.grad[i];
  });
}

Tensor logsumexp_rows_nodiag(const Tensor& x) {
  check_matrix(x, "logsumexp_rows_nodiag");
  int n = x.dim(0);
  if (x.dim(1) != n) throw std::invalid_argument("logsumexp_rows_nodiag: matrix must be square");
  if (n < 2) throw std::invalid_argument("logsumexp_rows_nodiag: need at least 2 rows");
  std::vector<float> out(n);
  for (int i = 0; i < n; ++i) {
    float m = -std::numeric_limits<float>::infinity();
    for (int k = 0; k < n; ++k)
      if (k != i) m = std::max(m, x.value()[size_t(i) * n + k]);
    double s = 0.0;
    for (int k = 0; k < n; ++k)
      if (k != i) s += std::exp(double(x.value()[size_t(i) * n + k]) - m);
    out[i] = m + float(std::log(s));
  }
  auto xn = x.node();
  return make_node({n, 1}, std::move(out), {xn}, [xn, n](TensorNode& node) {
    ensure_grad(*xn);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k)
        if (k != i)
          xn->grad[size_t(i) * n + k] +=
              node.grad[i] * std::exp(xn->value[size_t(i) * n + k] - node.value[i]);
  });
}

Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  std::vector<float>& running_mean, std::vector<float>& running_var, bool train,
                  float momentum, float eps) {
  check_matrix(x, "batch_norm");
  int n = x.dim(0), c = x.dim(1);
  if (gamma.numel() != c || beta.numel() != c || int(running_mean.size()) != c ||
      int(running_var.size()) != c)
    throw std::invalid_argument("batch_norm: channel dims disagree with " + shape_str(x.shape()));
  auto inv_std = std::make_shared<std::vector<float>>(c);
  auto mean = std::make_shared<std::vector<float>>(c, 0.0f);
  std::vector<float> out(size_t(n) * c);
  if (train) {
    if (n < 1) throw std::invalid_argument("batch_norm: empty batch in train mode");
    // Row-major accumulation of per-channel batch statistics (biased
    // variance), keeping passes over the activation cache-friendly.
    std::vector<double> sum(c, 0.0), sumsq(c, 0.0);
    for (int i = 0; i < n; ++i) {
      const float* row = x.value().data() + size_t(i) * c;
      for (int j = 0; j < c; ++j) {
        sum[j] += row[j];
        sumsq[j] += double(row[j]) * row[j];
      }
    }
    for (int j = 0; j < c; ++j) {
      double m = sum[j] / n;
      double var = std::max(0.0, sumsq[j] / n - m * m);
      (*mean)[j] = float(m);
      (*inv_std)[j] = 1.0f / std::sqrt(float(var) + eps);
      running_mean[j] = momentum * running_mean[j] + (1.0f - momentum) * float(m);
      running_var[j] = momentum * running_var[j] + (1.0f - momentum) * float(var);
    }
  } else {
    for (int j = 0; j < c; ++j) {
      (*mean)[j] = running_mean[j];
      (*inv_std)[j] = 1.0f / std::sqrt(running_var[j] + eps);
    }
  }
  for (int i = 0; i < n; ++i) {
    const float* row = x.value().data() + size_t(i) * c;
    float* o = out.data() + size_t(i) * c;
    for (int j = 0; j < c; ++j)
      o[j] = gamma.value()[j] * (row[j] - (*mean)[j]) * (*inv_std)[j] + beta.value()[j];
  }
  auto xn = x.node();
  auto gn = gamma.node();
  auto bn = beta.node();
  return make_node({n, c}, std::move(out), {xn, gn, bn},
                   [xn, gn, bn, mean, inv_std, n, c, train](TensorNode& node) {
                     // The normalized activation is recomputed from the saved
                     // statistics rather than stored at forward time.
                     if (gn->requires_grad) ensure_grad(*gn);
                     if (bn->requires_grad) ensure_grad(*bn);
                     if (xn->requires_grad) ensure_grad(*xn);
                     std::vector<double> sum_g(c, 0.0), sum_gx(c, 0.0);
                     for (int i = 0; i < n; ++i) {
                       const float* g = node.grad.data() + size_t(i) * c;
                       const float* xv = xn->value.data() + size_t(i) * c;
                       for (int j = 0; j < c; ++j) {
                         sum_g[j] += g[j];
                         sum_gx[j] += double(g[j]) * (xv[j] - (*mean)[j]) * (*inv_std)[j];
                       }
                     }
                     for (int j = 0; j < c; ++j) {
                       if (gn->requires_grad) gn->grad[j] += float(sum_gx[j]);
                       if (bn->requires_grad) bn->grad[j] += float(sum_g[j]);
                     }
                     if (!xn->requires_grad) return;
                     for (int i = 0; i < n; ++i) {
                       const float* g = node.grad.data() + size_t(i) * c;
                       const float* xv = xn->value.data() + size_t(i) * c;
                       float* xg = xn->grad.data() + size_t(i) * c;
                       for (int j = 0; j < c; ++j) {
                         float gam = gn->value[j], istd = (*inv_std)[j];
                         if (train) {
                           float xh = (xv[j] - (*mean)[j]) * istd;
                           xg[j] += gam * istd *
                                    (g[j] - float(sum_g[j] / n) - xh * float(sum_gx[j] / n));
                         } else {
                           xg[j] += g[j] * gam * istd;
                         }
                       }
                     }
                   });
}

void backward(const Tensor& loss) {
  if (loss.numel() != 1) throw std::invalid_argument("backward: loss must be scalar");
  // Reverse topological order over the recorded graph.
  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> visited;
  std::vector<std::pair<TensorNode*, size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, child] = stack.back();
    if (child < node->parents.size()) {
      TensorNode* p = node->parents[child++].get();
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  // Interior grads are rebuilt per call; leaf grads accumulate across calls.
  for (TensorNode* n : order) {
    if (!n->parents.empty() || n == loss.node().get()) n->grad.assign(n->value.size(), 0.0f);
    if (n->grad.size() != n->value.size()) n->grad.assign(n->value.size(), 0.0f);
  }
  loss.node()->grad[0] = 1.0f;
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->backward_fn) (*it)->backward_fn(**it);
}

void zero_grad(std::vector<Tensor>& params) {
  for (auto& p : params) p.grad().assign(p.numel(), 0.0f);
}

void adam_step(std::vector<Tensor>& params, AdamState& state) {
  if (state.m.empty()) {
    state.m.resize(params.size());
    state.v.resize(params.size());
    for (size_t i = 0; i < params.size(); ++i) {
      state.m[i].assign(params[i].numel(), 0.0f);
      state.v[i].assign(params[i].numel(), 0.0f);
    }
  }
  if (state.m.size() != params.size())
    throw std::invalid_argument("adam_step: parameter count changed");
  state.step += 1;
  double bc1 = 1.0 - std::pow(state.beta1, double(state.step));
  double bc2 = 1.0 - std::pow(state.beta2, double(state.step));
  for (size_t pi = 0; pi < params.size(); ++pi) {
    auto& p = params[pi];
    if (p.grad().size() != p.value().size())
      throw std::invalid_argument("adam_step: missing gradient for parameter");
    auto& m = state.m[pi];
    auto& v = state.v[pi];
    for (size_t i = 0; i < m.size(); ++i) {
      double g = p.grad()[i];
      m[i] = float(state.beta1 * m[i] + (1.0 - state.beta1) * g);
      v[i] = float(state.beta2 * v[i] + (1.0 - state.beta2) * g * g);
      double mhat = m[i] / bc1;
      double vhat = v[i] / bc2;
      p.value()[i] -= float(state.lr * mhat / (std::sqrt(vhat) + state.eps));
    }
  }
}

}  // namespace bye
