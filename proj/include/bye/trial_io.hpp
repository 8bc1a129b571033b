#pragma once

#include <map>
#include <string>
#include <vector>

#include "bye/assignment.hpp"
#include "bye/instance_mapping.hpp"

namespace bye {

// Trial directory layout: manifest.json plus per-frame raw blobs
// (NNNNNN.depth.f32, NNNNNN.mask.u16, NNNNNN.rgb.u8, NNNNNN.pose.txt) under
// frames/.
void write_trial(const Trial& trial, const std::string& dir);
Trial read_trial(const std::string& dir);

// Dataset store: index.json plus one points.f32 blob of 6-float records.
void write_dataset(const std::vector<ObservationSample>& samples, const std::string& dir);
std::vector<ObservationSample> read_dataset(const std::string& dir);

// Ground truth mapping.json: new id -> ref id plus per-new-id category.
void save_mapping(const std::map<int, int>& new_to_ref, const std::map<int, int>& categories,
                  const std::string& path);
void load_mapping(const std::string& path, std::map<int, int>& new_to_ref,
                  std::map<int, int>& categories);

struct AssociationOutput {
  std::string method;  // "majority" or "ensemble"
  int k = 10;
  std::map<int, int> predictions;
  std::map<int, double> prediction_scores;
  ScoreMatrix bye_scores;
  bool has_vlm = false;
  ScoreMatrix vlm_scores;
  ScoreMatrix combined_scores;
};

void save_association(const AssociationOutput& out, const std::string& path);
AssociationOutput load_association(const std::string& path);

struct EvalRow {
  int new_id = 0;
  int predicted_ref = 0;
  int true_ref = 0;
  bool correct = false;
  double score = 0.0;
};

struct EvalReport {
  int total = 0;
  int correct = 0;
  double overall = 0.0;
  std::map<int, std::pair<int, int>> per_category;  // category -> (correct, total)
  std::vector<EvalRow> rows;
};

EvalReport evaluate_association(const std::map<int, int>& pred, const std::map<int, int>& gt,
                                const std::map<int, int>& categories,
                                const std::map<int, double>& scores = {});

void save_report(const EvalReport& report, const std::string& path);

}  // namespace bye
