#pragma once

#include <map>
#include <string>
#include <vector>

#include "bye/assignment.hpp"
#include "bye/encoder.hpp"
#include "bye/instance_mapping.hpp"

namespace bye {

// Reference-trial embedding store; rows are l2-normalized h vectors.
struct MemoryBank {
  int embed_dim = 0;
  std::vector<float> embeddings;  // L x embed_dim, row-major
  std::vector<int> labels;        // length L
  std::vector<int> ref_ids;       // distinct reference instance ids

  int size() const { return int(labels.size()); }
  const float* row(int i) const { return embeddings.data() + size_t(i) * embed_dim; }
};

struct Neighbor {
  int row = 0;
  int label = 0;
  double similarity = 0.0;
};

MemoryBank build_bank(const std::vector<ObservationSample>& dataset, EncoderModel& model);

// Exact linear-scan cosine kNN, descending similarity, ties by lowest row.
// When k exceeds the bank size all rows are returned and *truncated is set.
std::vector<Neighbor> knn_query(const MemoryBank& bank, const std::vector<float>& query, int k,
                                bool* truncated = nullptr);

// Per-new-object counts of retrieved reference labels (frequency voting).
struct AssociationTracker {
  std::map<int, std::map<int, int>> counts;  // new id -> ref label -> count
  std::map<int, int> observations;           // new id -> number of updates

  void update(int new_id, const std::vector<int>& neighbor_labels);
};

// Row j holds P(f(j)=i | observations); rows without evidence stay all-zero.
ScoreMatrix score_matrix(const AssociationTracker& tracker, const std::vector<int>& new_ids,
                         const std::vector<int>& ref_ids);

// Majority vote per new id; ties resolved toward the lowest reference id.
std::map<int, int> associate_majority(const AssociationTracker& tracker);

void save_bank(const MemoryBank& bank, const std::string& path);
MemoryBank load_bank(const std::string& path);

}  // namespace bye
