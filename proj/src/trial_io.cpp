#include "bye/trial_io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace fs = std::filesystem;

namespace bye {

namespace {

std::string frame_stem(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06d", index);
  return buf;
}

template <typename T>
void write_blob(const fs::path& path, const std::vector<T>& data) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  os.write(reinterpret_cast<const char*>(data.data()), std::streamsize(data.size() * sizeof(T)));
  if (!os) throw std::runtime_error("write failed for '" + path.string() + "'");
}

template <typename T>
void read_blob(const fs::path& path, std::vector<T>& data) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open '" + path.string() + "'");
  is.seekg(0, std::ios::end);
  auto bytes = size_t(is.tellg());
  is.seekg(0);
  if (bytes != data.size() * sizeof(T))
    throw std::runtime_error("size mismatch for '" + path.string() + "': expected " +
                             std::to_string(data.size() * sizeof(T)) + " bytes, found " +
                             std::to_string(bytes));
  is.read(reinterpret_cast<char*>(data.data()), std::streamsize(bytes));
}

}  // namespace

void write_trial(const Trial& trial, const std::string& dir) {
  fs::create_directories(fs::path(dir) / "frames");
  nlohmann::json manifest;
  manifest["format_version"] = 1;
  manifest["trial_id"] = trial.trial_id;
  manifest["frame_count"] = trial.frames.size();
  manifest["width"] = trial.intrinsics.width;
  manifest["height"] = trial.intrinsics.height;
  manifest["fx"] = trial.intrinsics.fx;
  manifest["fy"] = trial.intrinsics.fy;
  manifest["cx"] = trial.intrinsics.cx;
  manifest["cy"] = trial.intrinsics.cy;
  manifest["depth_scale"] = trial.intrinsics.depth_scale;
  {
    std::ofstream os(fs::path(dir) / "manifest.json");
    if (!os) throw std::runtime_error("cannot write manifest in '" + dir + "'");
    os << manifest.dump(2) << "\n";
  }
  for (const auto& frame : trial.frames) {
    fs::path base = fs::path(dir) / "frames" / frame_stem(frame.index);
    write_blob(base.string() + ".depth.f32", frame.depth.data);
    write_blob(base.string() + ".mask.u16", frame.mask.data);
    write_blob(base.string() + ".rgb.u8", frame.color.data);
    std::ofstream os(base.string() + ".pose.txt");
    if (!os) throw std::runtime_error("cannot write pose for frame " + std::to_string(frame.index));
    os.precision(17);
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) {
        double v;
        if (r < 3 && c < 3)
          v = frame.pose.rotation(r, c);
        else if (r < 3)
          v = r == 0 ? frame.pose.translation.x
                     : (r == 1 ? frame.pose.translation.y : frame.pose.translation.z);
        else
          v = c == 3 ? 1.0 : 0.0;
        os << v << (c == 3 ? "\n" : " ");
      }
    }
  }
}

Trial read_trial(const std::string& dir) {
  std::ifstream is(fs::path(dir) / "manifest.json");
  if (!is) throw std::runtime_error("trial: cannot open manifest in '" + dir + "'");
  nlohmann::json manifest = nlohmann::json::parse(is);
  Trial trial;
  trial.trial_id = manifest.value("trial_id", "");
  trial.intrinsics.width = manifest.at("width");
  trial.intrinsics.height = manifest.at("height");
  trial.intrinsics.fx = manifest.at("fx");
  trial.intrinsics.fy = manifest.at("fy");
  trial.intrinsics.cx = manifest.at("cx");
  trial.intrinsics.cy = manifest.at("cy");
  trial.intrinsics.depth_scale = manifest.at("depth_scale");
  trial.intrinsics.validate();
  int frames = manifest.at("frame_count");
  const int w = trial.intrinsics.width, h = trial.intrinsics.height;
  for (int t = 0; t < frames; ++t) {
    ObservationFrame frame;
    frame.index = t;
    frame.depth = DepthImage(w, h);
    frame.mask = MaskImage(w, h);
    frame.color = ColorImage(w, h, 3);
    fs::path base = fs::path(dir) / "frames" / frame_stem(t);
    read_blob(base.string() + ".depth.f32", frame.depth.data);
    read_blob(base.string() + ".mask.u16", frame.mask.data);
    read_blob(base.string() + ".rgb.u8", frame.color.data);
    std::ifstream ps(base.string() + ".pose.txt");
    if (!ps) throw std::runtime_error("trial: cannot open pose for frame " + std::to_string(t));
    double m[16];
    for (auto& v : m)
      if (!(ps >> v)) throw std::runtime_error("trial: malformed pose for frame " + std::to_string(t));
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) frame.pose.rotation(r, c) = m[r * 4 + c];
    frame.pose.translation = {m[3], m[7], m[11]};
    if (!frame.pose.is_orthonormal())
      throw std::runtime_error("trial: non-rigid pose in frame " + std::to_string(t));
    trial.frames.push_back(std::move(frame));
  }
  return trial;
}

void write_dataset(const std::vector<ObservationSample>& samples, const std::string& dir) {
  fs::create_directories(dir);
  nlohmann::json index;
  index["format_version"] = 1;
  index["sample_count"] = samples.size();
  std::vector<float> blob;
  size_t offset = 0;
  for (const auto& s : samples) {
    nlohmann::json js;
    js["label"] = s.label;
    js["frame_index"] = s.frame_index;
    js["centroid"] = {s.centroid.x, s.centroid.y, s.centroid.z};
    js["offset"] = offset;  // in points
    js["count"] = s.cloud.size();
    index["samples"].push_back(js);
    for (const auto& p : s.cloud.points) {
      blob.push_back(float(p.position.x));
      blob.push_back(float(p.position.y));
      blob.push_back(float(p.position.z));
      blob.push_back(p.r);
      blob.push_back(p.g);
      blob.push_back(p.b);
    }
    offset += s.cloud.size();
  }
  {
    std::ofstream os(fs::path(dir) / "index.json");
    if (!os) throw std::runtime_error("dataset: cannot write index in '" + dir + "'");
    os << index.dump(2) << "\n";
  }
  write_blob(fs::path(dir) / "points.f32", blob);
}

std::vector<ObservationSample> read_dataset(const std::string& dir) {
  std::ifstream is(fs::path(dir) / "index.json");
  if (!is) throw std::runtime_error("dataset: cannot open index in '" + dir + "'");
  nlohmann::json index = nlohmann::json::parse(is);
  size_t total = 0;
  for (const auto& js : index.at("samples")) total += size_t(js.at("count"));
  std::vector<float> blob(total * 6);
  read_blob(fs::path(dir) / "points.f32", blob);
  std::vector<ObservationSample> samples;
  for (const auto& js : index.at("samples")) {
    ObservationSample s;
    s.label = js.at("label");
    s.frame_index = js.at("frame_index");
    s.centroid = {js.at("centroid")[0], js.at("centroid")[1], js.at("centroid")[2]};
    size_t offset = js.at("offset");
    size_t count = js.at("count");
    s.cloud.frame = Frame::kCamera;
    s.cloud.points.resize(count);
    for (size_t i = 0; i < count; ++i) {
      const float* p = blob.data() + (offset + i) * 6;
      s.cloud.points[i].position = {p[0], p[1], p[2]};
      s.cloud.points[i].r = p[3];
      s.cloud.points[i].g = p[4];
      s.cloud.points[i].b = p[5];
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

void save_mapping(const std::map<int, int>& new_to_ref, const std::map<int, int>& categories,
                  const std::string& path) {
  nlohmann::json j;
  j["format_version"] = 1;
  for (const auto& [n, r] : new_to_ref) j["new_to_ref"][std::to_string(n)] = r;
  for (const auto& [n, c] : categories) j["categories"][std::to_string(n)] = c;
  std::ofstream os(path);
  if (!os) throw std::runtime_error("mapping: cannot open '" + path + "' for writing");
  os << j.dump(2) << "\n";
}

void load_mapping(const std::string& path, std::map<int, int>& new_to_ref,
                  std::map<int, int>& categories) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("mapping: cannot open '" + path + "'");
  nlohmann::json j = nlohmann::json::parse(is);
  new_to_ref.clear();
  categories.clear();
  for (auto& [k, v] : j.at("new_to_ref").items()) new_to_ref[std::stoi(k)] = v;
  if (j.contains("categories"))
    for (auto& [k, v] : j.at("categories").items()) categories[std::stoi(k)] = v;
}

namespace {

nlohmann::json matrix_json(const ScoreMatrix& m) {
  nlohmann::json j;
  j["new_ids"] = m.new_ids;
  j["ref_ids"] = m.ref_ids;
  j["values"] = m.values;
  return j;
}

ScoreMatrix matrix_from_json(const nlohmann::json& j) {
  ScoreMatrix m(j.at("new_ids").get<std::vector<int>>(), j.at("ref_ids").get<std::vector<int>>());
  m.values = j.at("values").get<std::vector<double>>();
  if (m.values.size() != m.rows() * m.cols())
    throw std::runtime_error("association: malformed score matrix");
  return m;
}

}  // namespace

void save_association(const AssociationOutput& out, const std::string& path) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["method"] = out.method;
  j["k"] = out.k;
  for (const auto& [n, r] : out.predictions) {
    nlohmann::json row;
    row["new_id"] = n;
    row["ref_id"] = r;
    auto it = out.prediction_scores.find(n);
    row["score"] = it == out.prediction_scores.end() ? 0.0 : it->second;
    j["predictions"].push_back(row);
  }
  j["bye_scores"] = matrix_json(out.bye_scores);
  if (out.has_vlm) {
    j["vlm_scores"] = matrix_json(out.vlm_scores);
    j["combined_scores"] = matrix_json(out.combined_scores);
  }
  std::ofstream os(path);
  if (!os) throw std::runtime_error("association: cannot open '" + path + "' for writing");
  os << j.dump(2) << "\n";
}

AssociationOutput load_association(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("association: cannot open '" + path + "'");
  nlohmann::json j = nlohmann::json::parse(is);
  AssociationOutput out;
  out.method = j.at("method");
  out.k = j.at("k");
  for (const auto& row : j.at("predictions")) {
    out.predictions[row.at("new_id")] = row.at("ref_id");
    out.prediction_scores[row.at("new_id")] = row.at("score");
  }
  out.bye_scores = matrix_from_json(j.at("bye_scores"));
  if (j.contains("vlm_scores")) {
    out.has_vlm = true;
    out.vlm_scores = matrix_from_json(j.at("vlm_scores"));
    out.combined_scores = matrix_from_json(j.at("combined_scores"));
  }
  return out;
}

EvalReport evaluate_association(const std::map<int, int>& pred, const std::map<int, int>& gt,
                                const std::map<int, int>& categories,
                                const std::map<int, double>& scores) {
  if (pred.size() != gt.size())
    throw std::invalid_argument("evaluate: prediction and ground truth cover different id sets");
  EvalReport report;
  for (const auto& [new_id, true_ref] : gt) {
    auto it = pred.find(new_id);
    if (it == pred.end())
      throw std::invalid_argument("evaluate: missing prediction for new object " +
                                  std::to_string(new_id));
    EvalRow row;
    row.new_id = new_id;
    row.predicted_ref = it->second;
    row.true_ref = true_ref;
    row.correct = it->second == true_ref;
    auto sit = scores.find(new_id);
    row.score = sit == scores.end() ? 0.0 : sit->second;
    report.rows.push_back(row);
    report.total += 1;
    if (row.correct) report.correct += 1;
    auto cit = categories.find(new_id);
    int category = cit == categories.end() ? -1 : cit->second;
    auto& [c_correct, c_total] = report.per_category[category];
    c_total += 1;
    if (row.correct) c_correct += 1;
  }
  report.overall = report.total ? double(report.correct) / report.total : 0.0;
  return report;
}

void save_report(const EvalReport& report, const std::string& path) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["total"] = report.total;
  j["correct"] = report.correct;
  j["overall"] = report.overall;
  for (const auto& [cat, cc] : report.per_category) {
    nlohmann::json jc;
    jc["category"] = cat;
    jc["correct"] = cc.first;
    jc["total"] = cc.second;
    jc["rate"] = cc.second ? double(cc.first) / cc.second : 0.0;
    j["per_category"].push_back(jc);
  }
  for (const auto& row : report.rows) {
    nlohmann::json jr;
    jr["new_id"] = row.new_id;
    jr["predicted_ref"] = row.predicted_ref;
    jr["true_ref"] = row.true_ref;
    jr["correct"] = row.correct;
    jr["score"] = row.score;
    j["objects"].push_back(jr);
  }
  std::ofstream os(path);
  if (!os) throw std::runtime_error("report: cannot open '" + path + "' for writing");
  os << j.dump(2) << "\n";
}

}  // namespace bye
