#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "ctlio/trajectory.hpp"
#include "oracles.hpp"

using namespace ctlio;

TEST_SUITE_BEGIN("trajectory");

namespace {

Trajectory random_trajectory(std::mt19937& rng, double t0, double dt, int n) {
  const KnotGrid grid{t0, dt, 4, n};
  return Trajectory(oracle::random_spline_r3(rng, grid), oracle::random_spline_so3(rng, grid));
}

}  // namespace

TEST_CASE("pose composition and extrinsics") {
  std::mt19937 rng(43);
  Trajectory traj = random_trajectory(rng, 0.0, 0.1, 10);

  SUBCASE("identity trajectory gives identity pose") {
    Trajectory id(0.0, 0.1, 4, Rotation::identity(), Vec3::Zero());
    const RigidTransform T = id.pose(0.05);
    CHECK(T.rotation.is_approx(Rotation::identity(), 1e-14));
    CHECK(T.translation.norm() < 1e-14);
  }

  SUBCASE("pose round trip through inverse") {
    const RigidTransform T = traj.pose(0.31);
    const RigidTransform id = T.inverse() * T;
    CHECK(id.rotation.is_approx(Rotation::identity(), 1e-12));
    CHECK(id.translation.norm() < 1e-12);
  }

  SUBCASE("pose components equal the individual spline evaluations") {
    const double t = 0.27;
    const RigidTransform T = traj.pose(t);
    CHECK(T.rotation.is_approx(traj.rotation(t), 1e-15));
    CHECK((T.translation - traj.position_spline().position(t)).norm() == 0.0);
  }

  SUBCASE("lidar pose composes the extrinsic transform") {
    Extrinsics ext{{exp_so3(Vec3(0.1, -0.05, 0.2)), Vec3(0.2, 0.1, -0.05)}};
    const double t = 0.4;
    const Eigen::Matrix4d expected = traj.pose(t).matrix() * ext.imu_to_lidar.matrix();
    CHECK((traj.lidar_pose(ext, t).matrix() - expected).norm() < 1e-12);

    Extrinsics identity_ext;
    CHECK((traj.lidar_pose(identity_ext, t).matrix() - traj.pose(t).matrix()).norm() == 0.0);

    Trajectory id(0.0, 0.1, 4, Rotation::identity(), Vec3::Zero());
    CHECK((id.lidar_pose(ext, 0.05).matrix() - ext.imu_to_lidar.matrix()).norm() < 1e-14);
  }
}

TEST_CASE("extend_to knot arithmetic") {
  std::mt19937 rng(47);
  Trajectory traj = random_trajectory(rng, 0.0, 0.1, 8);
  const double end0 = traj.max_time();  // 0.5

  SUBCASE("extend by exactly dt adds one control point") {
    const auto added = traj.extend_to(end0 + 0.1);
    CHECK(added == std::vector<int>{8});
    CHECK(traj.max_time() == doctest::Approx(end0 + 0.1));
  }

  SUBCASE("extend by 3.5 dt adds four control points") {
    const auto added = traj.extend_to(end0 + 0.35);
    CHECK(added.size() == 4);
    CHECK(traj.max_time() >= end0 + 0.35);
  }

  SUBCASE("extension before the end is a no-op and idempotent") {
    CHECK(traj.extend_to(end0 - 0.05).empty());
    const auto first = traj.extend_to(end0 + 0.2);
    CHECK(first.size() == 2);
    CHECK(traj.extend_to(end0 + 0.2).empty());
  }

  SUBCASE("old range evaluations are bit-identical after extension") {
    std::vector<Vec3> before;
    for (double t = 0.0; t <= end0; t += 0.05) before.push_back(traj.pose(t).translation);
    traj.extend_to(end0 + 0.4);
    int i = 0;
    for (double t = 0.0; t <= end0; t += 0.05) {
      CHECK(traj.pose(t).translation == before[i++]);
    }
  }

  SUBCASE("new points seed by constant extrapolation") {
    const Vec3 last = traj.position_spline().control_points().back();
    traj.extend_to(end0 + 0.2);
    CHECK(traj.position_spline().control_point(8) == last);
    CHECK(traj.position_spline().control_point(9) == last);
  }
}

TEST_CASE("window_for active and static sets") {
  std::mt19937 rng(53);
  Trajectory traj = random_trajectory(rng, 0.0, 0.1, 14);

  SUBCASE("single segment yields k active ids") {
    const auto w = traj.window_for(0.5, 0.6);  // segment 5
    CHECK(w.active_ids == std::vector<int>{5, 6, 7, 8});
    CHECK(w.static_ids == std::vector<int>{2, 3, 4});
    CHECK(w.static_start == doctest::Approx(0.2));
  }

  SUBCASE("two segments yield k+1 active ids") {
    const auto w = traj.window_for(0.5, 0.7);
    CHECK(w.active_ids == std::vector<int>{5, 6, 7, 8, 9});
    CHECK(w.static_ids == std::vector<int>{2, 3, 4});
  }

  SUBCASE("window at the grid start has no static points") {
    const auto w = traj.window_for(0.0, 0.1);
    CHECK(w.active_ids == std::vector<int>{0, 1, 2, 3});
    CHECK(w.static_ids.empty());
    CHECK(w.static_start == doctest::Approx(0.0));
  }

  SUBCASE("repeated calls return identical sets") {
    const auto a = traj.window_for(0.35, 0.62);
    const auto b = traj.window_for(0.35, 0.62);
    CHECK(a.active_ids == b.active_ids);
    CHECK(a.static_ids == b.static_ids);
  }

  SUBCASE("perturbing points outside the union leaves window poses unchanged") {
    const auto w = traj.window_for(0.5, 0.6);
    const Vec3 p_before = traj.pose(0.55).translation;
    // Control points beyond the active/static union.
    for (int idx : {0, 1, 9, 10, 11, 12, 13}) {
      traj.position_spline().control_point(idx) += Vec3(10, 10, 10);
    }
    CHECK(traj.pose(0.55).translation == p_before);
    (void)w;
  }
}

TEST_CASE("serialization round trip is exact") {
  std::mt19937 rng(59);
  const Trajectory traj = random_trajectory(rng, 1.5, 0.07, 9);
  const std::string path = (std::filesystem::temp_directory_path() / "ctlio_traj_test.txt").string();
  traj.save(path);
  const Trajectory loaded = Trajectory::load(path);

  CHECK(loaded.grid().t0 == traj.grid().t0);
  CHECK(loaded.grid().dt == traj.grid().dt);
  CHECK(loaded.grid().n_control == traj.grid().n_control);
  for (int i = 0; i < traj.grid().n_control; ++i) {
    CHECK(loaded.position_spline().control_point(i) == traj.position_spline().control_point(i));
    CHECK(loaded.rotation_spline().control_point(i).quaternion().coeffs() ==
          traj.rotation_spline().control_point(i).quaternion().coeffs());
  }
  std::filesystem::remove(path);
}

TEST_CASE("TUM export format") {
  Trajectory traj(0.0, 0.1, 4, Rotation::identity(), Vec3(1, 2, 3));
  traj.extend_to(1.0);
  const std::string path = (std::filesystem::temp_directory_path() / "ctlio_tum_test.txt").string();
  traj.export_tum(path, 100.0);

  std::ifstream in(path);
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    std::istringstream ss(line);
    double v;
    int fields = 0;
    while (ss >> v) ++fields;
    CHECK(fields == 8);
  }
  CHECK(rows == 101);  // [0, 1] at 100 Hz inclusive
  std::filesystem::remove(path);
}

TEST_SUITE_END();
