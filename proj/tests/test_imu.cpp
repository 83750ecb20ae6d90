#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "ctlio/imu.hpp"
#include "oracles.hpp"

using namespace ctlio;

TEST_SUITE_BEGIN("imu");

namespace {

// Noise-free measurements synthesized from a trajectory (the inverse of the
// residual model), local to this suite to stay independent of the simulator.
std::vector<ImuMeasurement> synth_stream(const Trajectory& traj, const ImuBias& bias,
                                         const GravityVector& g, double t0, double t1,
                                         double rate) {
  std::vector<ImuMeasurement> stream;
  const double dt = 1.0 / rate;
  for (double t = t0; t <= t1 + 1e-12; t += dt) {
    ImuMeasurement m;
    m.t = t;
    m.gyro = traj.angular_velocity(t) + bias.gyro_bias;
    m.accel = traj.rotation(t).inverse() * (traj.acceleration(t) - g.g) + bias.accel_bias;
    stream.push_back(m);
  }
  return stream;
}

Trajectory smooth_random_trajectory(std::mt19937& rng, double t0, double dt, int n) {
  std::vector<Vec3> pts;
  std::vector<Rotation> rots;
  Vec3 p = Vec3::Zero();
  Rotation r;
  for (int i = 0; i < n; ++i) {
    pts.push_back(p);
    rots.push_back(r);
    p += oracle::random_vec3(rng, 0.05);
    r = r * exp_so3(oracle::random_vec3(rng, 0.04));
  }
  const KnotGrid grid{t0, dt, 4, n};
  return Trajectory(SplineR3(grid, pts), SplineSO3(grid, rots));
}

}  // namespace

TEST_CASE("stationary stream integrates to the initial state") {
  const GravityVector g;
  std::vector<ImuMeasurement> stream;
  for (int i = 0; i <= 100; ++i) {
    stream.push_back({i * 0.01, Vec3::Zero(), Vec3(0, 0, 9.81)});
  }
  IntegratedState init;
  init.t = 0.0;
  const auto states = integrate(stream, init, ImuBias{}, g);
  REQUIRE(states.size() == stream.size());
  for (const auto& s : states) {
    CHECK(s.position.norm() < 1e-12);
    CHECK(s.velocity.norm() < 1e-12);
    CHECK(s.rotation.is_approx(Rotation::identity(), 1e-12));
  }
}

TEST_CASE("constant spin about z with gravity-compensating accel") {
  const GravityVector g;
  const double w = 0.8;
  std::vector<ImuMeasurement> stream;
  for (int i = 0; i <= 400; ++i) {
    const double t = i * 0.0025;
    // R(t) = Exp(w t z), so R^T g stays (0,0,-9.81): the z spin leaves the
    // gravity reaction unrotated.
    stream.push_back({t, Vec3(0, 0, w), Vec3(0, 0, 9.81)});
  }
  const auto states = integrate(stream, IntegratedState{}, ImuBias{}, g);
  for (const auto& s : states) {
    CHECK(s.position.norm() < 1e-10);
    // closed-form rigid-body spin oracle
    const Rotation expected = exp_so3(Vec3(0, 0, w * s.t));
    CHECK(s.rotation.angular_distance(expected) < 1e-10);
  }
}

TEST_CASE("integration converges to spline states at O(1/rate)") {
  std::mt19937 rng(73);
  const GravityVector g;
  const Trajectory traj = smooth_random_trajectory(rng, 0.0, 0.1, 16);
  const double t0 = traj.min_time(), t1 = std::min(traj.max_time(), t0 + 1.0);

  auto final_error = [&](double rate) {
    const auto stream = synth_stream(traj, ImuBias{}, g, t0, t1, rate);
    IntegratedState init{t0, traj.rotation(t0), traj.pose(t0).translation, traj.velocity(t0)};
    const auto states = integrate(stream, init, ImuBias{}, g);
    const auto& last = states.back();
    return (last.position - traj.pose(last.t).translation).norm();
  };

  const double e100 = final_error(100.0);
  const double e200 = final_error(200.0);
  const double e400 = final_error(400.0);
  CHECK(e400 < 1e-4);  // 400 Hz over 1 s
  // The midpoint scheme observes ratio ~4 per rate doubling (second order);
  // require at least first-order decay.
  CHECK(e100 / e200 > 1.4);
  CHECK(e200 / e400 > 1.4);
}

TEST_CASE("residuals vanish on noise-free synthesized measurements") {
  std::mt19937 rng(79);
  const GravityVector g;
  const ImuBias bias{Vec3(0.05, -0.02, 0.03), Vec3(0.004, 0.001, -0.002)};
  const Trajectory traj = smooth_random_trajectory(rng, 0.5, 0.08, 14);
  const auto stream = synth_stream(traj, bias, g, traj.min_time(), traj.max_time(), 400.0);
  for (const auto& m : stream) {
    CHECK(accel_residual(traj, m, bias, g).norm() < 1e-10);
    CHECK(gyro_residual(traj, m, bias).norm() < 1e-10);
  }
}

TEST_CASE("residual bias cancellation on a stationary trajectory") {
  const GravityVector g;
  Trajectory traj(0.0, 0.1, 4, Rotation::identity(), Vec3::Zero());
  traj.extend_to(1.0);

  ImuMeasurement m{0.5, Vec3::Zero(), Vec3(0, 0, 9.81)};
  CHECK(accel_residual(traj, m, ImuBias{}, g).norm() < 1e-12);
  CHECK(gyro_residual(traj, m, ImuBias{}).norm() < 1e-12);

  m.accel += Vec3(0.1, 0, 0);
  const ImuBias bias{Vec3(0.1, 0, 0), Vec3::Zero()};
  CHECK(accel_residual(traj, m, bias, g).norm() < 1e-12);
}

TEST_CASE("gyro residual on a constant-spin spline") {
  const double theta = 0.15, dt = 0.1;
  std::vector<Rotation> rots;
  Rotation r;
  for (int i = 0; i < 10; ++i) {
    rots.push_back(r);
    r = r * exp_so3(Vec3(0, 0, theta));
  }
  const KnotGrid grid{0.0, dt, 4, 10};
  Trajectory traj(SplineR3(grid, std::vector<Vec3>(10, Vec3::Zero())), SplineSO3(grid, rots));
  const ImuMeasurement m{0.33, Vec3(0, 0, theta / dt), Vec3::Zero()};
  CHECK(gyro_residual(traj, m, ImuBias{}).norm() < 1e-11);
}

TEST_CASE("error paths") {
  const GravityVector g;
  CHECK(integrate({}, IntegratedState{}, ImuBias{}, g).empty());

  std::vector<ImuMeasurement> bad = {{0.0, {}, {}}, {0.0, {}, {}}};
  CHECK_THROWS_AS(integrate(bad, IntegratedState{}, ImuBias{}, g), std::invalid_argument);

  std::vector<ImuMeasurement> ok = {{0.0, {}, {}}, {0.1, {}, {}}};
  IntegratedState late;
  late.t = 0.5;
  CHECK_THROWS_AS(integrate(ok, late, ImuBias{}, g), std::invalid_argument);
}

TEST_CASE("gravity alignment recovers roll and pitch") {
  const GravityVector g;
  const Rotation true_tilt = exp_so3(Vec3(0.1, -0.15, 0.0));
  std::vector<ImuMeasurement> samples;
  for (int i = 0; i < 100; ++i) {
    samples.push_back({i * 0.0025, Vec3::Zero(), true_tilt.inverse() * Vec3(0, 0, 9.81)});
  }
  const Rotation r0 = align_gravity(samples);
  // r0 maps the measured direction back to +z: same gravity reaction.
  CHECK((r0 * samples[0].accel - Vec3(0, 0, 9.81)).norm() < 1e-9);
  CHECK(align_gravity({}).is_approx(Rotation::identity(), 1e-15));
}

TEST_CASE("imu csv round trip") {
  std::mt19937 rng(83);
  std::vector<ImuMeasurement> stream;
  for (int i = 0; i < 50; ++i) {
    stream.push_back({i * 0.0025, oracle::random_vec3(rng, 0.5), oracle::random_vec3(rng, 10.0)});
  }
  const auto path = (std::filesystem::temp_directory_path() / "ctlio_imu_test.csv").string();
  save_imu_csv(path, stream);
  const auto loaded = load_imu_csv(path);
  REQUIRE(loaded.size() == stream.size());
  for (size_t i = 0; i < stream.size(); ++i) {
    CHECK(loaded[i].t == stream[i].t);
    CHECK(loaded[i].gyro == stream[i].gyro);
    CHECK(loaded[i].accel == stream[i].accel);
  }
  std::filesystem::remove(path);

  CHECK_THROWS_AS(load_imu_csv("/nonexistent/imu.csv"), IoError);
}

TEST_SUITE_END();
