#include "bye/memory_bank.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <stdexcept>

namespace bye {

MemoryBank build_bank(const std::vector<ObservationSample>& dataset, EncoderModel& model) {
  if (dataset.empty()) throw std::invalid_argument("build_bank: empty dataset");
  MemoryBank bank;
  bank.embed_dim = model.config.embed_dim;
  bank.embeddings.reserve(dataset.size() * size_t(bank.embed_dim));
  std::set<int> ids;
  // Chunked eval-mode forward to bound peak graph memory.
  const size_t chunk = 64;
  for (size_t start = 0; start < dataset.size(); start += chunk) {
    size_t end = std::min(dataset.size(), start + chunk);
    std::vector<PointCloud> clouds;
    for (size_t i = start; i < end; ++i) clouds.push_back(dataset[i].cloud);
    Tensor h = forward_h(model, clouds, /*train=*/false);
    const int e = bank.embed_dim;
    for (size_t i = start; i < end; ++i) {
      const float* row = h.value().data() + (i - start) * size_t(e);
      double norm = 0.0;
      for (int j = 0; j < e; ++j) norm += double(row[j]) * row[j];
      norm = std::sqrt(norm);
      if (norm < 1e-12) throw std::runtime_error("build_bank: zero-norm embedding");
      for (int j = 0; j < e; ++j) bank.embeddings.push_back(float(row[j] / norm));
      bank.labels.push_back(dataset[i].label);
      ids.insert(dataset[i].label);
    }
  }
  bank.ref_ids.assign(ids.begin(), ids.end());
  return bank;
}

std::vector<Neighbor> knn_query(const MemoryBank& bank, const std::vector<float>& query, int k,
                                bool* truncated) {
  if (k < 1) throw std::invalid_argument("knn_query: k must be >= 1");
  if (int(query.size()) != bank.embed_dim)
    throw std::invalid_argument("knn_query: query dimension mismatch");
  double qn = 0.0;
  for (float v : query) {
    if (!std::isfinite(v)) throw std::invalid_argument("knn_query: non-finite query");
    qn += double(v) * v;
  }
  qn = std::sqrt(qn);
  if (qn < 1e-12) throw std::invalid_argument("knn_query: zero-norm query");

  const int n = bank.size();
  std::vector<Neighbor> all(n);
  for (int i = 0; i < n; ++i) {
    const float* row = bank.row(i);
    double dot = 0.0;
    for (int j = 0; j < bank.embed_dim; ++j) dot += double(row[j]) * query[j];
    all[i] = {i, bank.labels[i], dot / qn};
  }
  if (truncated) *truncated = k > n;
  int take = std::min(k, n);
  std::partial_sort(all.begin(), all.begin() + take, all.end(),
                    [](const Neighbor& a, const Neighbor& b) {
                      if (a.similarity != b.similarity) return a.similarity > b.similarity;
                      return a.row < b.row;
                    });
  all.resize(size_t(take));
  return all;
}

void AssociationTracker::update(int new_id, const std::vector<int>& neighbor_labels) {
  auto& row = counts[new_id];
  for (int label : neighbor_labels) row[label] += 1;
  observations[new_id] += 1;
}

ScoreMatrix score_matrix(const AssociationTracker& tracker, const std::vector<int>& new_ids,
                         const std::vector<int>& ref_ids) {
  ScoreMatrix m(new_ids, ref_ids);
  for (size_t j = 0; j < new_ids.size(); ++j) {
    auto it = tracker.counts.find(new_ids[j]);
    if (it == tracker.counts.end()) continue;  // all-zero row, caller warns
    double total = 0.0;
    for (const auto& [label, count] : it->second) total += count;
    if (total <= 0.0) continue;
    for (size_t i = 0; i < ref_ids.size(); ++i) {
      auto cit = it->second.find(ref_ids[i]);
      if (cit != it->second.end()) m.at(j, i) = cit->second / total;
    }
  }
  return m;
}

std::map<int, int> associate_majority(const AssociationTracker& tracker) {
  std::map<int, int> result;
  for (const auto& [new_id, row] : tracker.counts) {
    if (row.empty()) throw std::runtime_error("associate_majority: new object " +
                                              std::to_string(new_id) + " has no observations");
    int best_label = 0, best_count = -1;
    for (const auto& [label, count] : row)  // map order breaks ties toward low ids
      if (count > best_count) {
        best_label = label;
        best_count = count;
      }
    result[new_id] = best_label;
  }
  return result;
}

// --- bank file (magic "BYEB") ------------------------------------------------

namespace {

constexpr char kBankMagic[4] = {'B', 'Y', 'E', 'B'};
constexpr uint32_t kBankVersion = 1;

void write_u32(std::ostream& os, uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }

uint32_t read_u32(std::istream& is) {
  uint32_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), 4)) throw std::runtime_error("bank: truncated file");
  return v;
}

}  // namespace

void save_bank(const MemoryBank& bank, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("bank: cannot open '" + path + "' for writing");
  os.write(kBankMagic, 4);
  write_u32(os, kBankVersion);
  write_u32(os, uint32_t(bank.embed_dim));
  write_u32(os, uint32_t(bank.size()));
  os.write(reinterpret_cast<const char*>(bank.embeddings.data()),
           std::streamsize(bank.embeddings.size() * 4));
  for (int label : bank.labels) write_u32(os, uint32_t(label));
  write_u32(os, uint32_t(bank.ref_ids.size()));
  for (int id : bank.ref_ids) write_u32(os, uint32_t(id));
  if (!os) throw std::runtime_error("bank: write failed for '" + path + "'");
}

MemoryBank load_bank(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("bank: cannot open '" + path + "'");
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kBankMagic, 4) != 0)
    throw std::runtime_error("bank: bad magic in '" + path + "'");
  uint32_t version = read_u32(is);
  if (version != kBankVersion)
    throw std::runtime_error("bank: unsupported version " + std::to_string(version));
  MemoryBank bank;
  bank.embed_dim = int(read_u32(is));
  uint32_t n = read_u32(is);
  bank.embeddings.resize(size_t(n) * bank.embed_dim);
  if (!is.read(reinterpret_cast<char*>(bank.embeddings.data()),
               std::streamsize(bank.embeddings.size() * 4)))
    throw std::runtime_error("bank: truncated file");
  bank.labels.resize(n);
  for (auto& l : bank.labels) l = int(read_u32(is));
  bank.ref_ids.resize(read_u32(is));
  for (auto& id : bank.ref_ids) id = int(read_u32(is));
  return bank;
}

}  // namespace bye
