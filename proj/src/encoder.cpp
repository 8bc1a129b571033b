#include "bye/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

namespace bye {

std::string arch_name(Arch arch) { return arch == Arch::kPointNet ? "pointnet" : "dgcnn"; }

Arch arch_from_name(const std::string& name) {
  if (name == "pointnet") return Arch::kPointNet;
  if (name == "dgcnn") return Arch::kDgcnn;
  throw std::invalid_argument("unknown architecture '" + name + "' (expected pointnet|dgcnn)");
}

void EncoderConfig::validate() const {
  if (input_dim != 6) throw std::invalid_argument("encoder: input_dim must be 6 (xyz + rgb)");
  if (embed_dim < proj_dim || proj_dim < 2)
    throw std::invalid_argument("encoder: require embed_dim >= proj_dim >= 2");
  if (knn_k < 1) throw std::invalid_argument("encoder: knn_k must be >= 1");
  if (pointnet_widths.empty() || dgcnn_widths.empty())
    throw std::invalid_argument("encoder: backbone widths must be nonempty");
}

namespace {

LinearLayer make_linear(int in, int out, Rng& rng) {
  std::vector<float> w(size_t(in) * out);
  float s = std::sqrt(2.0f / float(in));
  for (auto& v : w) v = float(rng.normal()) * s;
  LinearLayer l;
  l.weight = Tensor({in, out}, std::move(w), true);
  l.bias = Tensor::zeros({out}, true);
  return l;
}

BatchNormLayer make_norm(int c) {
  BatchNormLayer n;
  n.gamma = Tensor({c}, std::vector<float>(c, 1.0f), true);
  n.beta = Tensor::zeros({c}, true);
  n.running_mean.assign(c, 0.0f);
  n.running_var.assign(c, 1.0f);
  return n;
}

// (input_dim, output_dim) of each backbone linear for the given config.
std::vector<std::pair<int, int>> backbone_dims(const EncoderConfig& cfg) {
  std::vector<std::pair<int, int>> dims;
  if (cfg.arch == Arch::kPointNet) {
    int in = cfg.input_dim;
    for (int w : cfg.pointnet_widths) {
      dims.emplace_back(in, w);
      in = w;
    }
  } else {
    int in = cfg.input_dim;
    int concat = 0;
    for (int w : cfg.dgcnn_widths) {
      dims.emplace_back(2 * in, w);  // edge features are concat(f_i, f_j - f_i)
      concat += w;
      in = w;
    }
    dims.emplace_back(concat, cfg.dgcnn_fuse_dim);
  }
  return dims;
}

int pooled_dim(const EncoderConfig& cfg) {
  return cfg.arch == Arch::kPointNet ? cfg.pointnet_widths.back() : cfg.dgcnn_fuse_dim;
}

}  // namespace

std::vector<Tensor> EncoderModel::parameters() {
  std::vector<Tensor> ps;
  for (auto& l : backbone) {
    ps.push_back(l.weight);
    ps.push_back(l.bias);
  }
  for (auto& n : norms) {
    ps.push_back(n.gamma);
    ps.push_back(n.beta);
  }
  ps.push_back(embed.weight);
  ps.push_back(embed.bias);
  if (config.two_layer_head) {
    ps.push_back(proj_hidden.weight);
    ps.push_back(proj_hidden.bias);
  }
  ps.push_back(proj.weight);
  ps.push_back(proj.bias);
  return ps;
}

namespace {

LinearLayer clone_linear(const LinearLayer& l) {
  LinearLayer c;
  c.weight = Tensor(l.weight.shape(), l.weight.value(), true);
  c.bias = Tensor(l.bias.shape(), l.bias.value(), true);
  return c;
}

}  // namespace

EncoderModel EncoderModel::clone() const {
  EncoderModel c;
  c.config = config;
  for (const auto& l : backbone) c.backbone.push_back(clone_linear(l));
  for (const auto& n : norms) {
    BatchNormLayer bn;
    bn.gamma = Tensor(n.gamma.shape(), n.gamma.value(), true);
    bn.beta = Tensor(n.beta.shape(), n.beta.value(), true);
    bn.running_mean = n.running_mean;
    bn.running_var = n.running_var;
    c.norms.push_back(std::move(bn));
  }
  c.embed = clone_linear(embed);
  if (config.two_layer_head) c.proj_hidden = clone_linear(proj_hidden);
  c.proj = clone_linear(proj);
  return c;
}

EncoderModel init_encoder(const EncoderConfig& cfg, Rng& rng) {
  cfg.validate();
  EncoderModel m;
  m.config = cfg;
  for (auto [in, out] : backbone_dims(cfg)) {
    m.backbone.push_back(make_linear(in, out, rng));
    m.norms.push_back(make_norm(out));
  }
  m.embed = make_linear(pooled_dim(cfg), cfg.embed_dim, rng);
  if (cfg.two_layer_head) m.proj_hidden = make_linear(cfg.embed_dim, cfg.embed_dim, rng);
  m.proj = make_linear(cfg.embed_dim, cfg.proj_dim, rng);
  return m;
}

std::vector<int> knn_indices(const std::vector<float>& feats, int n, int c, int k) {
  if (n < k + 1) throw std::runtime_error("too few points for k-NN graph");
  std::vector<int> out(size_t(n) * k);
  std::vector<std::pair<float, int>> dists(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      float d = 0.0f;
      for (int t = 0; t < c; ++t) {
        float diff = feats[size_t(i) * c + t] - feats[size_t(j) * c + t];
        d += diff * diff;
      }
      dists[j] = {j == i ? std::numeric_limits<float>::infinity() : d, j};
    }
    std::partial_sort(dists.begin(), dists.begin() + k, dists.end());
    for (int t = 0; t < k; ++t) out[size_t(i) * k + t] = dists[t].second;
  }
  return out;
}

namespace {

Tensor clouds_to_rows(const std::vector<PointCloud>& batch, std::vector<int>& offsets) {
  int64_t total = 0;
  offsets.assign(1, 0);
  for (const auto& c : batch) {
    if (c.empty()) throw std::runtime_error("forward_h: empty cloud in batch");
    total += int64_t(c.size());
    offsets.push_back(int(total));
  }
  std::vector<float> rows(size_t(total) * 6);
  size_t r = 0;
  for (const auto& c : batch)
    for (const auto& p : c.points) {
      rows[r * 6 + 0] = float(p.position.x);
      rows[r * 6 + 1] = float(p.position.y);
      rows[r * 6 + 2] = float(p.position.z);
      rows[r * 6 + 3] = p.r;
      rows[r * 6 + 4] = p.g;
      rows[r * 6 + 5] = p.b;
      ++r;
    }
  return Tensor({int(total), 6}, std::move(rows));
}

Tensor mlp_layer(EncoderModel& m, size_t layer, const Tensor& x, bool train) {
  Tensor y = linear(x, m.backbone[layer].weight, m.backbone[layer].bias);
  y = batch_norm(y, m.norms[layer].gamma, m.norms[layer].beta, m.norms[layer].running_mean,
                 m.norms[layer].running_var, train);
  return relu(y);
}

// One dynamic edge convolution: kNN graph on the current feature values of each
// cloud (graph_cols restricts which leading columns define the metric), edge
// MLP, then max over each point's k neighbors.
Tensor edge_conv(EncoderModel& m, size_t layer, const Tensor& feats,
                 const std::vector<int>& cloud_offsets, int graph_cols, bool train) {
  const int k = m.config.knn_k;
  const int n = feats.dim(0), c = feats.dim(1);
  std::vector<int> center_idx, neighbor_idx;
  center_idx.reserve(size_t(n) * k);
  neighbor_idx.reserve(size_t(n) * k);
  for (size_t ci = 0; ci + 1 < cloud_offsets.size(); ++ci) {
    int lo = cloud_offsets[ci], hi = cloud_offsets[ci + 1];
    int nc = hi - lo;
    std::vector<float> sub(size_t(nc) * graph_cols);
    for (int i = 0; i < nc; ++i)
      for (int j = 0; j < graph_cols; ++j)
        sub[size_t(i) * graph_cols + j] = feats.value()[size_t(lo + i) * c + j];
    std::vector<int> nn = knn_indices(sub, nc, graph_cols, k);
    for (int i = 0; i < nc; ++i)
      for (int t = 0; t < k; ++t) {
        center_idx.push_back(lo + i);
        neighbor_idx.push_back(lo + nn[size_t(i) * k + t]);
      }
  }
  Tensor fi = gather_rows(feats, center_idx);
  Tensor fj = gather_rows(feats, neighbor_idx);
  Tensor edges = concat_cols({fi, sub(fj, fi)});
  Tensor y = mlp_layer(m, layer, edges, train);
  std::vector<int> point_offsets(size_t(n) + 1);
  for (int i = 0; i <= n; ++i) point_offsets[i] = i * k;
  return segment_max(y, std::move(point_offsets));
}

}  // namespace

Tensor forward_h(EncoderModel& model, const std::vector<PointCloud>& batch, bool train) {
  if (batch.empty()) throw std::invalid_argument("forward_h: empty batch");
  std::vector<int> offsets;
  Tensor x = clouds_to_rows(batch, offsets);
  Tensor pooled;
  if (model.config.arch == Arch::kPointNet) {
    Tensor f = x;
    for (size_t l = 0; l < model.config.pointnet_widths.size(); ++l)
      f = mlp_layer(model, l, f, train);
    pooled = segment_max(f, offsets);
  } else {
    std::vector<Tensor> layer_outs;
    Tensor f = x;
    for (size_t l = 0; l < model.config.dgcnn_widths.size(); ++l) {
      int graph_cols = (l == 0) ? 3 : f.dim(1);  // first graph on xyz only
      f = edge_conv(model, l, f, offsets, graph_cols, train);
      layer_outs.push_back(f);
    }
    Tensor fused = mlp_layer(model, model.config.dgcnn_widths.size(), concat_cols(layer_outs), train);
    pooled = segment_max(fused, offsets);
  }
  return linear(pooled, model.embed.weight, model.embed.bias);
}

Tensor forward_g(EncoderModel& model, const Tensor& h) {
  Tensor z = h;
  if (model.config.two_layer_head)
    z = relu(linear(z, model.proj_hidden.weight, model.proj_hidden.bias));
  return linear(z, model.proj.weight, model.proj.bias);
}

// --- checkpoint I/O ---------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'B', 'Y', 'E', '1'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ostream& os, uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }

uint32_t read_u32(std::istream& is) {
  uint32_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), 4)) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

void write_record(std::ostream& os, const std::string& name, const Shape& shape,
                  const std::vector<float>& data) {
  write_u32(os, uint32_t(name.size()));
  os.write(name.data(), std::streamsize(name.size()));
  write_u32(os, uint32_t(shape.size()));
  for (int d : shape) write_u32(os, uint32_t(d));
  os.write(reinterpret_cast<const char*>(data.data()), std::streamsize(data.size() * 4));
}

struct Record {
  Shape shape;
  std::vector<float> data;
};

Record read_record(std::istream& is, std::string& name) {
  uint32_t len = read_u32(is);
  name.resize(len);
  if (!is.read(name.data(), len)) throw std::runtime_error("checkpoint: truncated file");
  Record r;
  uint32_t nd = read_u32(is);
  r.shape.resize(nd);
  for (auto& d : r.shape) d = int(read_u32(is));
  r.data.resize(size_t(numel_of(r.shape)));
  if (!is.read(reinterpret_cast<char*>(r.data.data()), std::streamsize(r.data.size() * 4)))
    throw std::runtime_error("checkpoint: truncated file");
  return r;
}

void collect_records(const EncoderModel& m,
                     std::vector<std::pair<std::string, std::pair<Shape, const std::vector<float>*>>>& recs) {
  auto put = [&](const std::string& name, const Tensor& t) {
    recs.push_back({name, {t.shape(), &t.value()}});
  };
  for (size_t i = 0; i < m.backbone.size(); ++i) {
    put("backbone." + std::to_string(i) + ".weight", m.backbone[i].weight);
    put("backbone." + std::to_string(i) + ".bias", m.backbone[i].bias);
  }
  for (size_t i = 0; i < m.norms.size(); ++i) {
    std::string p = "norms." + std::to_string(i) + ".";
    put(p + "gamma", m.norms[i].gamma);
    put(p + "beta", m.norms[i].beta);
    int c = int(m.norms[i].running_mean.size());
    recs.push_back({p + "running_mean", {{c}, &m.norms[i].running_mean}});
    recs.push_back({p + "running_var", {{c}, &m.norms[i].running_var}});
  }
  put("embed.weight", m.embed.weight);
  put("embed.bias", m.embed.bias);
  if (m.config.two_layer_head) {
    put("proj_hidden.weight", m.proj_hidden.weight);
    put("proj_hidden.bias", m.proj_hidden.bias);
  }
  put("proj.weight", m.proj.weight);
  put("proj.bias", m.proj.bias);
}

}  // namespace

void save_checkpoint(const EncoderModel& model, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("checkpoint: cannot open '" + path + "' for writing");
  os.write(kMagic, 4);
  write_u32(os, kVersion);
  const auto& cfg = model.config;
  write_u32(os, uint32_t(cfg.arch));
  write_u32(os, uint32_t(cfg.input_dim));
  write_u32(os, uint32_t(cfg.embed_dim));
  write_u32(os, uint32_t(cfg.proj_dim));
  write_u32(os, uint32_t(cfg.knn_k));
  write_u32(os, uint32_t(cfg.pointnet_widths.size()));
  for (int w : cfg.pointnet_widths) write_u32(os, uint32_t(w));
  write_u32(os, uint32_t(cfg.dgcnn_widths.size()));
  for (int w : cfg.dgcnn_widths) write_u32(os, uint32_t(w));
  write_u32(os, uint32_t(cfg.dgcnn_fuse_dim));
  write_u32(os, cfg.two_layer_head ? 1u : 0u);
  std::vector<std::pair<std::string, std::pair<Shape, const std::vector<float>*>>> recs;
  collect_records(model, recs);
  write_u32(os, uint32_t(recs.size()));
  for (const auto& [name, sv] : recs) write_record(os, name, sv.first, *sv.second);
  if (!os) throw std::runtime_error("checkpoint: write failed for '" + path + "'");
}

EncoderModel load_checkpoint(const std::string& path, Arch expected) {
  EncoderModel model = load_checkpoint(path);
  if (model.config.arch != expected)
    throw std::runtime_error("checkpoint: config mismatch, file holds " +
                             arch_name(model.config.arch) + " but " + arch_name(expected) +
                             " was requested");
  return model;
}

EncoderModel load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("checkpoint: bad magic in '" + path + "'");
  uint32_t version = read_u32(is);
  if (version != kVersion)
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  EncoderConfig cfg;
  cfg.arch = Arch(read_u32(is));
  cfg.input_dim = int(read_u32(is));
  cfg.embed_dim = int(read_u32(is));
  cfg.proj_dim = int(read_u32(is));
  cfg.knn_k = int(read_u32(is));
  cfg.pointnet_widths.resize(read_u32(is));
  for (auto& w : cfg.pointnet_widths) w = int(read_u32(is));
  cfg.dgcnn_widths.resize(read_u32(is));
  for (auto& w : cfg.dgcnn_widths) w = int(read_u32(is));
  cfg.dgcnn_fuse_dim = int(read_u32(is));
  cfg.two_layer_head = read_u32(is) != 0;
  cfg.validate();

  Rng rng(0);
  EncoderModel m = init_encoder(cfg, rng);
  std::map<std::string, Record> records;
  uint32_t count = read_u32(is);
  for (uint32_t i = 0; i < count; ++i) {
    std::string name;
    Record r = read_record(is, name);
    records.emplace(std::move(name), std::move(r));
  }
  auto fill = [&](const std::string& name, Tensor& t) {
    auto it = records.find(name);
    if (it == records.end()) throw std::runtime_error("checkpoint: missing record '" + name + "'");
    if (it->second.shape != t.shape())
      throw std::runtime_error("checkpoint: shape mismatch for '" + name + "': file " +
                               shape_str(it->second.shape) + " vs model " + shape_str(t.shape()));
    t.value() = it->second.data;
  };
  auto fill_vec = [&](const std::string& name, std::vector<float>& v) {
    auto it = records.find(name);
    if (it == records.end()) throw std::runtime_error("checkpoint: missing record '" + name + "'");
    if (it->second.data.size() != v.size())
      throw std::runtime_error("checkpoint: size mismatch for '" + name + "'");
    v = it->second.data;
  };
  for (size_t i = 0; i < m.backbone.size(); ++i) {
    fill("backbone." + std::to_string(i) + ".weight", m.backbone[i].weight);
    fill("backbone." + std::to_string(i) + ".bias", m.backbone[i].bias);
  }
  for (size_t i = 0; i < m.norms.size(); ++i) {
    std::string p = "norms." + std::to_string(i) + ".";
    fill(p + "gamma", m.norms[i].gamma);
    fill(p + "beta", m.norms[i].beta);
    fill_vec(p + "running_mean", m.norms[i].running_mean);
    fill_vec(p + "running_var", m.norms[i].running_var);
  }
  fill("embed.weight", m.embed.weight);
  fill("embed.bias", m.embed.bias);
  if (cfg.two_layer_head) {
    fill("proj_hidden.weight", m.proj_hidden.weight);
    fill("proj_hidden.bias", m.proj_hidden.bias);
  }
  fill("proj.weight", m.proj.weight);
  fill("proj.bias", m.proj.bias);
  return m;
}

}  // namespace bye
