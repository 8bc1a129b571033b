#pragma once

#include <map>
#include <string>
#include <vector>

#include "bye/instance_mapping.hpp"
#include "bye/semantic_features.hpp"

namespace bye {

enum class Primitive : uint32_t { kSphere = 0, kBox = 1, kCylinder = 2 };

std::string primitive_name(Primitive p);
Primitive primitive_from_name(const std::string& name);

struct ObjectSpec {
  int instance_id = 0;
  int category_id = 0;
  Primitive primitive = Primitive::kSphere;
  Vec3 size;        // sphere: radius in x; box: half extents; cylinder: radius x, half height z
  Vec3 base_color;  // [0,1]
  uint64_t texture_seed = 0;
  Vec3 position;  // center, world frame (z up)
  double yaw = 0.0;

  double footprint_radius() const;
};

struct WorkspaceBounds {
  double xmin = -1.2, xmax = 1.2;
  double ymin = -1.2, ymax = 1.2;
};

struct SceneSpec {
  std::vector<ObjectSpec> objects;
  WorkspaceBounds bounds;
  uint64_t seed = 0;
};

struct TrajectorySpec {
  double orbit_radius = 3.2;
  double camera_height = 1.8;
  Vec3 look_at{0.0, 0.0, 0.2};
  int frame_count = 60;
  CameraIntrinsics intrinsics{110.0, 110.0, 80.0, 60.0, 160, 120, 1.0};
};

struct RelocationSpec {
  double fraction = 0.5;
  double max_translation = 1.5;  // meters
  double yaw_range_deg = 180.0;
  uint64_t seed = 0;
};

// Deterministic scene for a seed. The first `duplicates` objects (when >= 2)
// share one category, primitive and base color but differ in size (+-10%) and
// texture seed.
SceneSpec generate_scene(int n_objects, int duplicates, const WorkspaceBounds& bounds,
                         uint64_t seed);

// Analytic ray-cast rendering of depth / instance mask / color along a camera
// orbit. Background pixels carry depth 0 and mask 0.
Trial render_trial(const SceneSpec& scene, const TrajectorySpec& traj,
                   const std::string& trial_id);

// Signed distance style residual of a world point against an object's surface;
// used by the geometric-chain oracle.
double surface_residual(const ObjectSpec& obj, const Vec3& world_point);

struct Relocation {
  SceneSpec scene;                // relocated scene with fresh shuffled ids
  std::map<int, int> new_to_ref;  // ground-truth id mapping
};

Relocation relocate(const SceneSpec& scene, const RelocationSpec& spec);

// Category prototype + Gaussian noise, renormalized; one record per visible
// (frame, mask) pair of the trial.
SemanticFeatureSet emit_semantic_features(const SceneSpec& scene, const Trial& trial, int dim,
                                          double noise_sigma, uint64_t seed);

void save_scene(const SceneSpec& scene, const std::string& path);
SceneSpec load_scene(const std::string& path);

}  // namespace bye
