#include "bye/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace bye {

double Vec3::norm() const { return std::sqrt(x * x + y * y + z * z); }

Vec3 Vec3::normalized() const {
  double n = norm();
  if (n <= 0.0) throw std::runtime_error("cannot normalize zero vector");
  return *this / n;
}

Mat3 Mat3::from_columns(const Vec3& c0, const Vec3& c1, const Vec3& c2) {
  Mat3 r;
  r.m[0] = c0.x;
  r.m[1] = c1.x;
  r.m[2] = c2.x;
  r.m[3] = c0.y;
  r.m[4] = c1.y;
  r.m[5] = c2.y;
  r.m[6] = c0.z;
  r.m[7] = c1.z;
  r.m[8] = c2.z;
  return r;
}

Mat3 Mat3::rot_x(double rad) {
  double c = std::cos(rad), s = std::sin(rad);
  Mat3 r;
  r.m[0] = 1;
  r.m[1] = 0;
  r.m[2] = 0;
  r.m[3] = 0;
  r.m[4] = c;
  r.m[5] = -s;
  r.m[6] = 0;
  r.m[7] = s;
  r.m[8] = c;
  return r;
}

Mat3 Mat3::rot_y(double rad) {
  double c = std::cos(rad), s = std::sin(rad);
  Mat3 r;
  r.m[0] = c;
  r.m[1] = 0;
  r.m[2] = s;
  r.m[3] = 0;
  r.m[4] = 1;
  r.m[5] = 0;
  r.m[6] = -s;
  r.m[7] = 0;
  r.m[8] = c;
  return r;
}

Mat3 Mat3::rot_z(double rad) {
  double c = std::cos(rad), s = std::sin(rad);
  Mat3 r;
  r.m[0] = c;
  r.m[1] = -s;
  r.m[2] = 0;
  r.m[3] = s;
  r.m[4] = c;
  r.m[5] = 0;
  r.m[6] = 0;
  r.m[7] = 0;
  r.m[8] = 1;
  return r;
}

Vec3 Mat3::operator*(const Vec3& v) const {
  return {m[0] * v.x + m[1] * v.y + m[2] * v.z, m[3] * v.x + m[4] * v.y + m[5] * v.z,
          m[6] * v.x + m[7] * v.y + m[8] * v.z};
}

Mat3 Mat3::operator*(const Mat3& o) const {
  Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
      r(i, j) = s;
    }
  return r;
}

Mat3 Mat3::transposed() const {
  Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
  return r;
}

double Mat3::determinant() const {
  return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
         m[2] * (m[3] * m[7] - m[4] * m[6]);
}

void CameraIntrinsics::validate() const {
  if (fx <= 0.0 || fy <= 0.0) throw std::invalid_argument("intrinsics: focal lengths must be > 0");
  if (width <= 0 || height <= 0) throw std::invalid_argument("intrinsics: image size must be > 0");
  if (cx < 0.0 || cx >= width || cy < 0.0 || cy >= height)
    throw std::invalid_argument("intrinsics: principal point outside image");
  if (depth_scale <= 0.0) throw std::invalid_argument("intrinsics: depth_scale must be > 0");
}

Pose Pose::inverse() const {
  Pose inv;
  inv.rotation = rotation.transposed();
  Vec3 t = inv.rotation * translation;
  inv.translation = {-t.x, -t.y, -t.z};
  return inv;
}

Pose Pose::operator*(const Pose& o) const {
  Pose r;
  r.rotation = rotation * o.rotation;
  r.translation = rotation * o.translation + translation;
  return r;
}

bool Pose::is_orthonormal(double tol) const {
  Mat3 rtr = rotation.transposed() * rotation;
  double max_dev = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double target = (i == j) ? 1.0 : 0.0;
      max_dev = std::max(max_dev, std::abs(rtr(i, j) - target));
    }
  return max_dev < tol && rotation.determinant() > 0.0;
}

PointCloud back_project_mask(const DepthImage& depth, const MaskImage& mask,
                             uint16_t instance_id, const ColorImage& color,
                             const CameraIntrinsics& intr) {
  intr.validate();
  if (depth.width != mask.width || depth.height != mask.height || color.width != depth.width ||
      color.height != depth.height)
    throw std::invalid_argument("back_project_mask: image dimensions disagree");
  PointCloud out;
  out.frame = Frame::kCamera;
  for (int v = 0; v < depth.height; ++v) {
    for (int u = 0; u < depth.width; ++u) {
      if (mask.at(u, v) != instance_id) continue;
      double d = double(depth.at(u, v)) * intr.depth_scale;
      if (!(d > 0.0) || !std::isfinite(d)) continue;
      Point6 p;
      p.position = {(u - intr.cx) * d / intr.fx, (v - intr.cy) * d / intr.fy, d};
      p.r = color.at(u, v, 0) / 255.0f;
      p.g = color.at(u, v, 1) / 255.0f;
      p.b = color.at(u, v, 2) / 255.0f;
      out.points.push_back(p);
    }
  }
  return out;
}

PointCloud transform_cloud(const PointCloud& cloud, const Pose& pose) {
  PointCloud out = cloud;
  for (auto& p : out.points) p.position = pose.apply(p.position);
  out.frame = Frame::kWorld;
  return out;
}

}  // namespace bye
