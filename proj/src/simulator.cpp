#include "bye/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

namespace bye {

std::string primitive_name(Primitive p) {
  switch (p) {
    case Primitive::kSphere: return "sphere";
    case Primitive::kBox: return "box";
    case Primitive::kCylinder: return "cylinder";
  }
  throw std::invalid_argument("unknown primitive");
}

Primitive primitive_from_name(const std::string& name) {
  if (name == "sphere") return Primitive::kSphere;
  if (name == "box") return Primitive::kBox;
  if (name == "cylinder") return Primitive::kCylinder;
  throw std::invalid_argument("unknown primitive '" + name + "'");
}

double ObjectSpec::footprint_radius() const {
  switch (primitive) {
    case Primitive::kSphere: return size.x;
    case Primitive::kBox: return std::sqrt(size.x * size.x + size.y * size.y);
    case Primitive::kCylinder: return size.x;
  }
  return 0.0;
}

namespace {

double center_height(const ObjectSpec& o) {
  switch (o.primitive) {
    case Primitive::kSphere: return o.size.x;
    case Primitive::kBox: return o.size.z;
    case Primitive::kCylinder: return o.size.z;
  }
  return 0.0;
}

bool placement_ok(const std::vector<ObjectSpec>& placed, size_t upto, const Vec3& pos,
                  double footprint, const WorkspaceBounds& b) {
  if (pos.x - footprint < b.xmin || pos.x + footprint > b.xmax || pos.y - footprint < b.ymin ||
      pos.y + footprint > b.ymax)
    return false;
  for (size_t i = 0; i < upto; ++i) {
    double dx = pos.x - placed[i].position.x;
    double dy = pos.y - placed[i].position.y;
    if (std::sqrt(dx * dx + dy * dy) < footprint + placed[i].footprint_radius() + 0.05)
      return false;
  }
  return true;
}

ObjectSpec random_shape(int category, Rng& rng) {
  ObjectSpec o;
  o.category_id = category;
  o.primitive = Primitive(rng.uniform_int(3));
  switch (o.primitive) {
    case Primitive::kSphere:
      o.size = {rng.uniform(0.12, 0.20), 0.0, 0.0};
      break;
    case Primitive::kBox:
      o.size = {rng.uniform(0.10, 0.20), rng.uniform(0.10, 0.20), rng.uniform(0.10, 0.22)};
      break;
    case Primitive::kCylinder:
      o.size = {rng.uniform(0.10, 0.16), 0.0, rng.uniform(0.12, 0.25)};
      break;
  }
  o.base_color = {rng.uniform(0.2, 0.9), rng.uniform(0.2, 0.9), rng.uniform(0.2, 0.9)};
  return o;
}

}  // namespace

SceneSpec generate_scene(int n_objects, int duplicates, const WorkspaceBounds& bounds,
                         uint64_t seed) {
  if (n_objects < 1) throw std::invalid_argument("generate_scene: need at least one object");
  if (duplicates > n_objects)
    throw std::invalid_argument("generate_scene: duplicates exceed object count");
  // Rejection sampling can paint itself into a corner on crowded scenes, so a
  // stuck layout restarts from scratch with a derived stream. Deterministic:
  // the restart count is itself a function of the seed.
  for (uint64_t restart = 0; restart < 64; ++restart) {
    Rng rng = Rng::derive(seed, 0x5CE11Eull + restart);
    SceneSpec scene;
    scene.bounds = bounds;
    scene.seed = seed;
    ObjectSpec dup_template = random_shape(1, rng);
    bool stuck = false;
    for (int i = 0; i < n_objects && !stuck; ++i) {
      ObjectSpec o;
      bool is_dup = duplicates >= 2 && i < duplicates;
      if (is_dup) {
        o = dup_template;
        double s = rng.uniform(0.9, 1.1);
        o.size = o.size * s;
      } else {
        o = random_shape(duplicates >= 2 ? 2 + i : 1 + i, rng);
      }
      o.instance_id = i + 1;
      o.texture_seed = rng.next_u64();
      double fr = o.footprint_radius();
      bool placed = false;
      for (int attempt = 0; attempt < 2000 && !placed; ++attempt) {
        Vec3 pos{rng.uniform(bounds.xmin, bounds.xmax), rng.uniform(bounds.ymin, bounds.ymax),
                 0.0};
        if (placement_ok(scene.objects, scene.objects.size(), pos, fr, bounds)) {
          o.position = {pos.x, pos.y, center_height(o)};
          placed = true;
        }
      }
      if (!placed) {
        stuck = true;
        break;
      }
      scene.objects.push_back(o);
    }
    if (!stuck) return scene;
  }
  throw std::runtime_error("generate_scene: could not place " + std::to_string(n_objects) +
                           " objects; enlarge the workspace or reduce the object count");
}

namespace {

// Smallest s > smin with o + s*d on the primitive surface; negative if none.
double intersect_local(const ObjectSpec& obj, const Vec3& o, const Vec3& d) {
  constexpr double kMin = 1e-6;
  switch (obj.primitive) {
    case Primitive::kSphere: {
      double r = obj.size.x;
      double a = d.dot(d), b = 2.0 * o.dot(d), c = o.dot(o) - r * r;
      double disc = b * b - 4.0 * a * c;
      if (disc < 0.0) return -1.0;
      double sq = std::sqrt(disc);
      double s0 = (-b - sq) / (2.0 * a), s1 = (-b + sq) / (2.0 * a);
      if (s0 > kMin) return s0;
      if (s1 > kMin) return s1;
      return -1.0;
    }
    case Primitive::kBox: {
      double t0 = kMin, t1 = std::numeric_limits<double>::infinity();
      const double oo[3] = {o.x, o.y, o.z};
      const double dd[3] = {d.x, d.y, d.z};
      const double hh[3] = {obj.size.x, obj.size.y, obj.size.z};
      for (int ax = 0; ax < 3; ++ax) {
        if (std::abs(dd[ax]) < 1e-12) {
          if (std::abs(oo[ax]) > hh[ax]) return -1.0;
          continue;
        }
        double ta = (-hh[ax] - oo[ax]) / dd[ax];
        double tb = (hh[ax] - oo[ax]) / dd[ax];
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 > t1) return -1.0;
      }
      return t0 > kMin ? t0 : -1.0;
    }
    case Primitive::kCylinder: {
      double r = obj.size.x, hz = obj.size.z;
      double best = std::numeric_limits<double>::infinity();
      double a = d.x * d.x + d.y * d.y;
      if (a > 1e-12) {
        double b = 2.0 * (o.x * d.x + o.y * d.y);
        double c = o.x * o.x + o.y * o.y - r * r;
        double disc = b * b - 4.0 * a * c;
        if (disc >= 0.0) {
          double sq = std::sqrt(disc);
          for (double s : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
            if (s > kMin && s < best && std::abs(o.z + s * d.z) <= hz) best = s;
          }
        }
      }
      if (std::abs(d.z) > 1e-12) {
        for (double zcap : {-hz, hz}) {
          double s = (zcap - o.z) / d.z;
          if (s > kMin && s < best) {
            double x = o.x + s * d.x, y = o.y + s * d.y;
            if (x * x + y * y <= r * r) best = s;
          }
        }
      }
      return std::isfinite(best) ? best : -1.0;
    }
  }
  return -1.0;
}

double hash01(int64_t x, int64_t y, int64_t z, uint64_t seed) {
  uint64_t h = Rng::splitmix(uint64_t(x) * 0x9E3779B185EBCA87ull ^ uint64_t(y) * 0xC2B2AE3D27D4EB4Full ^
                             uint64_t(z) * 0x165667B19E3779F9ull ^ seed);
  return std::ldexp(double(h >> 11), -53);
}

// Base color blended toward a per-seed tint by a spatial hash pattern; the
// pattern is anchored to the object's local frame so appearance survives
// relocation.
Vec3 surface_color(const ObjectSpec& obj, const Vec3& local_point) {
  constexpr double kCell = 0.03;
  uint64_t tint_seed = Rng::splitmix(obj.texture_seed ^ 0x7157u);
  Vec3 tint{std::ldexp(double(Rng::splitmix(tint_seed) >> 11), -53),
            std::ldexp(double(Rng::splitmix(tint_seed + 1) >> 11), -53),
            std::ldexp(double(Rng::splitmix(tint_seed + 2) >> 11), -53)};
  double pattern = hash01(int64_t(std::floor(local_point.x / kCell)),
                          int64_t(std::floor(local_point.y / kCell)),
                          int64_t(std::floor(local_point.z / kCell)), obj.texture_seed);
  double w = 0.5 * pattern;
  Vec3 c = obj.base_color * (1.0 - w) + tint * w;
  return {std::clamp(c.x, 0.0, 1.0), std::clamp(c.y, 0.0, 1.0), std::clamp(c.z, 0.0, 1.0)};
}

Pose orbit_pose(const TrajectorySpec& traj, int frame) {
  double angle = 2.0 * M_PI * double(frame) / double(std::max(1, traj.frame_count));
  Vec3 cam{traj.orbit_radius * std::cos(angle), traj.orbit_radius * std::sin(angle),
           traj.camera_height};
  Vec3 forward = (traj.look_at - cam).normalized();
  Vec3 up{0.0, 0.0, 1.0};
  Vec3 right = forward.cross(up).normalized();
  Vec3 down = forward.cross(right);  // +y points down in the image
  Pose pose;
  pose.rotation = Mat3::from_columns(right, down, forward);
  pose.translation = cam;
  return pose;
}

}  // namespace

double surface_residual(const ObjectSpec& obj, const Vec3& world_point) {
  Vec3 local = Mat3::rot_z(-obj.yaw) * (world_point - obj.position);
  switch (obj.primitive) {
    case Primitive::kSphere:
      return std::abs(local.norm() - obj.size.x);
    case Primitive::kBox: {
      double dx = std::abs(local.x) - obj.size.x;
      double dy = std::abs(local.y) - obj.size.y;
      double dz = std::abs(local.z) - obj.size.z;
      // Inside: distance to the closest face; outside: distance to the box.
      double inside = std::max({dx, dy, dz});
      if (inside <= 0.0) return std::abs(inside);
      Vec3 d{std::max(dx, 0.0), std::max(dy, 0.0), std::max(dz, 0.0)};
      return d.norm();
    }
    case Primitive::kCylinder: {
      double dr = std::sqrt(local.x * local.x + local.y * local.y) - obj.size.x;
      double dz = std::abs(local.z) - obj.size.z;
      double inside = std::max(dr, dz);
      if (inside <= 0.0) return std::abs(inside);
      double ox = std::max(dr, 0.0), oz = std::max(dz, 0.0);
      return std::sqrt(ox * ox + oz * oz);
    }
  }
  return 0.0;
}

Trial render_trial(const SceneSpec& scene, const TrajectorySpec& traj,
                   const std::string& trial_id) {
  traj.intrinsics.validate();
  if (traj.frame_count < 1) throw std::invalid_argument("render_trial: frame_count must be >= 1");
  Trial trial;
  trial.intrinsics = traj.intrinsics;
  trial.trial_id = trial_id;
  const int w = traj.intrinsics.width, h = traj.intrinsics.height;

  struct LocalObj {
    const ObjectSpec* spec;
    Mat3 world_to_local;  // rotation only
  };
  std::vector<LocalObj> objs;
  for (const auto& o : scene.objects) objs.push_back({&o, Mat3::rot_z(-o.yaw)});

  for (int t = 0; t < traj.frame_count; ++t) {
    ObservationFrame frame;
    frame.index = t;
    frame.pose = orbit_pose(traj, t);
    frame.depth = DepthImage(w, h);
    frame.mask = MaskImage(w, h);
    frame.color = ColorImage(w, h, 3);
    for (int v = 0; v < h; ++v) {
      for (int u = 0; u < w; ++u) {
        Vec3 dir_cam{(u - traj.intrinsics.cx) / traj.intrinsics.fx,
                     (v - traj.intrinsics.cy) / traj.intrinsics.fy, 1.0};
        Vec3 dir_world = frame.pose.rotation * dir_cam;
        double best_s = std::numeric_limits<double>::infinity();
        const LocalObj* hit = nullptr;
        for (const auto& lo : objs) {
          Vec3 ol = lo.world_to_local * (frame.pose.translation - lo.spec->position);
          Vec3 dl = lo.world_to_local * dir_world;
          double s = intersect_local(*lo.spec, ol, dl);
          if (s > 0.0 && s < best_s) {
            best_s = s;
            hit = &lo;
          }
        }
        if (!hit) continue;
        frame.depth.at(u, v) = float(best_s);  // camera z since dir_cam.z == 1
        frame.mask.at(u, v) = uint16_t(hit->spec->instance_id);
        Vec3 world_pt = frame.pose.translation + dir_world * best_s;
        Vec3 local_pt = hit->world_to_local * (world_pt - hit->spec->position);
        Vec3 c = surface_color(*hit->spec, local_pt);
        frame.color.at(u, v, 0) = uint8_t(std::lround(c.x * 255.0));
        frame.color.at(u, v, 1) = uint8_t(std::lround(c.y * 255.0));
        frame.color.at(u, v, 2) = uint8_t(std::lround(c.z * 255.0));
      }
    }
    trial.frames.push_back(std::move(frame));
  }
  return trial;
}

Relocation relocate(const SceneSpec& scene, const RelocationSpec& spec) {
  if (spec.fraction < 0.0 || spec.fraction > 1.0)
    throw std::invalid_argument("relocate: fraction must be in [0, 1]");
  Rng rng = Rng::derive(spec.seed, 0x2E10Cull);
  const int n = int(scene.objects.size());
  Relocation out;
  out.scene = scene;
  out.scene.seed = spec.seed;

  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  for (int j = n; j > 1; --j) std::swap(order[j - 1], order[rng.uniform_int(j)]);
  int n_move = int(std::lround(spec.fraction * n));
  double yaw_range = spec.yaw_range_deg * M_PI / 180.0;

  for (int mi = 0; mi < n_move; ++mi) {
    ObjectSpec& o = out.scene.objects[order[mi]];
    double fr = o.footprint_radius();
    bool placed = false;
    for (int attempt = 0; attempt < 4000 && !placed; ++attempt) {
      double radius = spec.max_translation * std::sqrt(rng.uniform());
      double theta = rng.uniform(0.0, 2.0 * M_PI);
      Vec3 pos{o.position.x + radius * std::cos(theta), o.position.y + radius * std::sin(theta),
               0.0};
      // Check against every other object in its current layout.
      std::vector<ObjectSpec> others;
      for (int i = 0; i < n; ++i)
        if (i != order[mi]) others.push_back(out.scene.objects[i]);
      if (placement_ok(others, others.size(), pos, fr, out.scene.bounds)) {
        o.position.x = pos.x;
        o.position.y = pos.y;
        placed = true;
      }
    }
    if (!placed) throw std::runtime_error("relocate: could not re-place object " +
                                          std::to_string(o.instance_id));
    o.yaw += rng.uniform(-yaw_range, yaw_range);
  }

  // Fresh shuffled ids in the new trial so no identity leaks through numbering.
  std::vector<int> new_ids(n);
  for (int i = 0; i < n; ++i) new_ids[i] = i + 1;
  for (int j = n; j > 1; --j) std::swap(new_ids[j - 1], new_ids[rng.uniform_int(j)]);
  for (int i = 0; i < n; ++i) {
    out.new_to_ref[new_ids[i]] = out.scene.objects[i].instance_id;
    out.scene.objects[i].instance_id = new_ids[i];
  }
  return out;
}

SemanticFeatureSet emit_semantic_features(const SceneSpec& scene, const Trial& trial, int dim,
                                          double noise_sigma, uint64_t seed) {
  if (dim < 2) throw std::invalid_argument("emit_semantic_features: dim must be >= 2");
  std::map<int, std::vector<float>> prototypes;
  std::map<int, int> category_of;
  for (const auto& o : scene.objects) {
    category_of[o.instance_id] = o.category_id;
    if (!prototypes.count(o.category_id)) {
      // Prototypes are fixed per category so that features emitted for
      // different trials (different noise seeds) stay comparable.
      Rng rng = Rng::derive(0xCA7ull, 1000003ull + uint64_t(o.category_id));
      std::vector<float> p(static_cast<size_t>(dim), 0.0f);
      double norm = 0.0;
      for (auto& v : p) {
        v = float(rng.normal());
        norm += double(v) * v;
      }
      norm = std::sqrt(norm);
      for (auto& v : p) v = float(v / norm);
      prototypes[o.category_id] = std::move(p);
    }
  }
  SemanticFeatureSet set;
  set.dim = dim;
  for (const auto& frame : trial.frames) {
    for (uint16_t id : mask_ids(frame.mask)) {
      const auto& proto = prototypes.at(category_of.at(int(id)));
      Rng rng = Rng::derive(seed, 0xFEA7ull + uint64_t(frame.index) * 65537ull + id);
      std::vector<float> f(static_cast<size_t>(dim), 0.0f);
      double norm = 0.0;
      for (int j = 0; j < dim; ++j) {
        f[j] = proto[j] + float(noise_sigma * rng.normal());
        norm += double(f[j]) * f[j];
      }
      norm = std::sqrt(norm);
      for (auto& v : f) v = float(v / norm);
      set.features[{frame.index, int(id)}] = std::move(f);
    }
  }
  return set;
}

// --- scene.json ---------------------------------------------------------------

void save_scene(const SceneSpec& scene, const std::string& path) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["seed"] = scene.seed;
  j["bounds"] = {scene.bounds.xmin, scene.bounds.xmax, scene.bounds.ymin, scene.bounds.ymax};
  for (const auto& o : scene.objects) {
    nlohmann::json jo;
    jo["instance_id"] = o.instance_id;
    jo["category_id"] = o.category_id;
    jo["primitive"] = primitive_name(o.primitive);
    jo["size"] = {o.size.x, o.size.y, o.size.z};
    jo["base_color"] = {o.base_color.x, o.base_color.y, o.base_color.z};
    jo["texture_seed"] = o.texture_seed;
    jo["position"] = {o.position.x, o.position.y, o.position.z};
    jo["yaw"] = o.yaw;
    j["objects"].push_back(jo);
  }
  std::ofstream os(path);
  if (!os) throw std::runtime_error("scene: cannot open '" + path + "' for writing");
  os << j.dump(2) << "\n";
}

SceneSpec load_scene(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("scene: cannot open '" + path + "'");
  nlohmann::json j = nlohmann::json::parse(is);
  SceneSpec scene;
  scene.seed = j.value("seed", 0ull);
  auto b = j.at("bounds");
  scene.bounds = {b[0], b[1], b[2], b[3]};
  for (const auto& jo : j.at("objects")) {
    ObjectSpec o;
    o.instance_id = jo.at("instance_id");
    o.category_id = jo.at("category_id");
    o.primitive = primitive_from_name(jo.at("primitive"));
    o.size = {jo.at("size")[0], jo.at("size")[1], jo.at("size")[2]};
    o.base_color = {jo.at("base_color")[0], jo.at("base_color")[1], jo.at("base_color")[2]};
    o.texture_seed = jo.at("texture_seed");
    o.position = {jo.at("position")[0], jo.at("position")[1], jo.at("position")[2]};
    o.yaw = jo.at("yaw");
    scene.objects.push_back(o);
  }
  return scene;
}

}  // namespace bye
