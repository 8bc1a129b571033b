#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace bye {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const;
  Vec3 normalized() const;
};

// Row-major 3x3 matrix.
struct Mat3 {
  double m[9] = {1, 0, 0, 0, 1, 0, 0, 0, 1};

  static Mat3 identity() { return Mat3{}; }
  static Mat3 from_columns(const Vec3& c0, const Vec3& c1, const Vec3& c2);
  static Mat3 rot_x(double rad);
  static Mat3 rot_y(double rad);
  static Mat3 rot_z(double rad);

  double operator()(int r, int c) const { return m[r * 3 + c]; }
  double& operator()(int r, int c) { return m[r * 3 + c]; }
  Vec3 operator*(const Vec3& v) const;
  Mat3 operator*(const Mat3& o) const;
  Mat3 transposed() const;
  double determinant() const;
};

struct CameraIntrinsics {
  double fx = 0.0, fy = 0.0;
  double cx = 0.0, cy = 0.0;
  int width = 0, height = 0;
  double depth_scale = 1.0;  // stored depth units -> meters

  void validate() const;  // throws std::invalid_argument on broken fields
};

// Rigid transform mapping camera-frame points into the world frame.
struct Pose {
  Mat3 rotation;
  Vec3 translation;

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  Pose inverse() const;
  Pose operator*(const Pose& o) const;  // composition: this after o
  bool is_orthonormal(double tol = 1e-5) const;
};

struct Point6 {
  Vec3 position;
  float r = 0.0f, g = 0.0f, b = 0.0f;  // in [0, 1]
};

enum class Frame : uint8_t { kCamera, kWorld };

struct PointCloud {
  std::vector<Point6> points;
  Frame frame = Frame::kCamera;

  size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

template <typename T>
struct Image {
  int width = 0, height = 0, channels = 1;
  std::vector<T> data;

  Image() = default;
  Image(int w, int h, int c = 1) : width(w), height(h), channels(c), data(size_t(w) * h * c) {}
  T& at(int x, int y, int c = 0) { return data[(size_t(y) * width + x) * channels + c]; }
  const T& at(int x, int y, int c = 0) const {
    return data[(size_t(y) * width + x) * channels + c];
  }
};

using DepthImage = Image<float>;    // meters after depth_scale, 0 = invalid
using MaskImage = Image<uint16_t>;  // instance ids, 0 = background
using ColorImage = Image<uint8_t>;  // 3 interleaved channels

// Back-projects every pixel of `mask` equal to `instance_id` through the depth
// image into a camera-frame cloud. Pixels with zero or non-finite depth are
// skipped; output order is row-major over the mask. May return an empty cloud
// when no pixel has valid depth.
PointCloud back_project_mask(const DepthImage& depth, const MaskImage& mask,
                             uint16_t instance_id, const ColorImage& color,
                             const CameraIntrinsics& intr);

// Applies the pose to every position; colors and ordering are preserved.
PointCloud transform_cloud(const PointCloud& cloud, const Pose& pose);

}  // namespace bye
