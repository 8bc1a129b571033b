#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "bye/geometry.hpp"
#include "bye/rng.hpp"

using namespace bye;

namespace {

CameraIntrinsics test_intrinsics() {
  CameraIntrinsics intr;
  intr.fx = 500.0;
  intr.fy = 500.0;
  intr.cx = 320.0;
  intr.cy = 240.0;
  intr.width = 640;
  intr.height = 480;
  return intr;
}

Pose random_pose(Rng& rng) {
  Mat3 r = Mat3::rot_z(rng.uniform(-M_PI, M_PI)) * Mat3::rot_y(rng.uniform(-M_PI, M_PI)) *
           Mat3::rot_x(rng.uniform(-M_PI, M_PI));
  return Pose{r, {rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)}};
}

}  // namespace

TEST_CASE("principal ray back-projects to the optical axis") {
  CameraIntrinsics intr = test_intrinsics();
  DepthImage depth(intr.width, intr.height);
  MaskImage mask(intr.width, intr.height);
  ColorImage color(intr.width, intr.height, 3);
  depth.at(320, 240) = 1.0f;
  mask.at(320, 240) = 3;
  PointCloud cloud = back_project_mask(depth, mask, 3, color, intr);
  REQUIRE(cloud.size() == 1);
  CHECK(cloud.points[0].position.x == doctest::Approx(0.0));
  CHECK(cloud.points[0].position.y == doctest::Approx(0.0));
  CHECK(cloud.points[0].position.z == doctest::Approx(1.0));
}

TEST_CASE("off-axis pixel follows similar triangles") {
  CameraIntrinsics intr = test_intrinsics();
  intr.cx = 100.0;
  intr.cy = 240.0;
  DepthImage depth(intr.width, intr.height);
  MaskImage mask(intr.width, intr.height);
  ColorImage color(intr.width, intr.height, 3);
  // pixel at cx + 500 with d = 2 and fx = 500 -> x = 2
  depth.at(600, 240) = 2.0f;
  mask.at(600, 240) = 1;
  PointCloud cloud = back_project_mask(depth, mask, 1, color, intr);
  REQUIRE(cloud.size() == 1);
  CHECK(cloud.points[0].position.x == doctest::Approx(2.0));
  CHECK(cloud.points[0].position.y == doctest::Approx(0.0));
  CHECK(cloud.points[0].position.z == doctest::Approx(2.0));
}

TEST_CASE("back-projection round-trips through the pinhole model") {
  CameraIntrinsics intr = test_intrinsics();
  DepthImage depth(intr.width, intr.height);
  MaskImage mask(intr.width, intr.height);
  ColorImage color(intr.width, intr.height, 3);
  Rng rng(21);
  std::vector<std::pair<int, int>> pixels;
  for (int i = 0; i < 100; ++i) {
    int u = rng.uniform_int(intr.width), v = rng.uniform_int(intr.height);
    if (depth.at(u, v) > 0.0f) continue;
    depth.at(u, v) = float(rng.uniform(0.5, 5.0));
    mask.at(u, v) = 2;
    pixels.push_back({u, v});
  }
  PointCloud cloud = back_project_mask(depth, mask, 2, color, intr);
  REQUIRE(cloud.size() == pixels.size());
  // Output is row-major over the mask; sort the pixel list the same way.
  std::sort(pixels.begin(), pixels.end(),
            [](auto a, auto b) { return a.second != b.second ? a.second < b.second : a.first < b.first; });
  for (size_t i = 0; i < pixels.size(); ++i) {
    const Vec3& p = cloud.points[i].position;
    double u = intr.fx * p.x / p.z + intr.cx;
    double v = intr.fy * p.y / p.z + intr.cy;
    CHECK(std::abs(u - pixels[i].first) < 0.5);
    CHECK(std::abs(v - pixels[i].second) < 0.5);
  }
}

TEST_CASE("invalid depths are skipped") {
  CameraIntrinsics intr = test_intrinsics();
  DepthImage depth(intr.width, intr.height);
  MaskImage mask(intr.width, intr.height);
  ColorImage color(intr.width, intr.height, 3);
  mask.at(0, 0) = 1;  // depth 0
  mask.at(1, 0) = 1;
  depth.at(1, 0) = std::numeric_limits<float>::quiet_NaN();
  mask.at(2, 0) = 1;
  depth.at(2, 0) = 1.5f;
  PointCloud cloud = back_project_mask(depth, mask, 1, color, intr);
  CHECK(cloud.size() == 1);
}

TEST_CASE("intrinsics validation rejects broken fields") {
  CameraIntrinsics intr = test_intrinsics();
  CHECK_NOTHROW(intr.validate());
  CameraIntrinsics bad = intr;
  bad.fx = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = intr;
  bad.width = -1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = intr;
  bad.depth_scale = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("identity pose leaves a cloud unchanged") {
  PointCloud cloud;
  cloud.points.push_back({{1.0, -2.0, 3.0}, 0.1f, 0.2f, 0.3f});
  PointCloud out = transform_cloud(cloud, Pose{});
  CHECK(out.points[0].position.x == 1.0);
  CHECK(out.points[0].position.y == -2.0);
  CHECK(out.points[0].position.z == 3.0);
  CHECK(out.points[0].r == 0.1f);
}

TEST_CASE("pure translation moves the origin") {
  Pose pose;
  pose.translation = {1.0, 2.0, 3.0};
  Vec3 p = pose.apply({0.0, 0.0, 0.0});
  CHECK(p.x == 1.0);
  CHECK(p.y == 2.0);
  CHECK(p.z == 3.0);
}

TEST_CASE("pose application matches the homogeneous-matrix oracle") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    Pose pose = random_pose(rng);
    REQUIRE(pose.is_orthonormal());
    Vec3 p{rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)};
    // 4x4 homogeneous multiplication, spelled out.
    double h[4] = {p.x, p.y, p.z, 1.0};
    double out[3];
    for (int r = 0; r < 3; ++r) {
      out[r] = 0.0;
      for (int c = 0; c < 3; ++c) out[r] += pose.rotation(r, c) * h[c];
      double t = r == 0 ? pose.translation.x : (r == 1 ? pose.translation.y : pose.translation.z);
      out[r] += t * h[3];
    }
    Vec3 q = pose.apply(p);
    CHECK(std::abs(q.x - out[0]) < 1e-6);
    CHECK(std::abs(q.y - out[1]) < 1e-6);
    CHECK(std::abs(q.z - out[2]) < 1e-6);
  }
}

TEST_CASE("pose inverse and composition") {
  Rng rng(33);
  for (int trial = 0; trial < 20; ++trial) {
    Pose a = random_pose(rng), b = random_pose(rng);
    Vec3 p{rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)};
    Vec3 round = a.inverse().apply(a.apply(p));
    CHECK(std::abs(round.x - p.x) < 1e-9);
    CHECK(std::abs(round.y - p.y) < 1e-9);
    CHECK(std::abs(round.z - p.z) < 1e-9);
    Vec3 composed = (a * b).apply(p);
    Vec3 nested = a.apply(b.apply(p));
    CHECK(std::abs(composed.x - nested.x) < 1e-9);
    CHECK(std::abs(composed.y - nested.y) < 1e-9);
    CHECK(std::abs(composed.z - nested.z) < 1e-9);
  }
}

TEST_CASE("rotation helpers produce proper rotations") {
  Rng rng(35);
  for (int trial = 0; trial < 10; ++trial) {
    Mat3 r = Mat3::rot_x(rng.uniform(-M_PI, M_PI)) * Mat3::rot_y(rng.uniform(-M_PI, M_PI)) *
             Mat3::rot_z(rng.uniform(-M_PI, M_PI));
    CHECK(r.determinant() == doctest::Approx(1.0).epsilon(1e-9));
    Mat3 rtr = r.transposed() * r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) CHECK(rtr(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-9));
  }
}
