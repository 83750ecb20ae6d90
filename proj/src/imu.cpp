// SPDX-License-Identifier: Apache-2.0

#include "ctlio/imu.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "ctlio/errors.hpp"
#include "ctlio/io.hpp"

namespace ctlio {

std::vector<IntegratedState> integrate(const std::vector<ImuMeasurement>& stream,
                                       const IntegratedState& init, const ImuBias& bias,
                                       const GravityVector& gravity) {
  std::vector<IntegratedState> states;
  if (stream.empty()) return states;
  if (init.t > stream.front().t + 1e-12) {
    throw std::invalid_argument("integrate: init state is after the first measurement");
  }
  for (size_t i = 1; i < stream.size(); ++i) {
    if (stream[i].t <= stream[i - 1].t) {
      throw std::invalid_argument("integrate: non-monotone measurement timestamps");
    }
  }
  states.reserve(stream.size());

  // Bootstrap to the first sample with a zero-order hold on that sample.
  IntegratedState state = init;
  {
    const double dt = stream.front().t - init.t;
    if (dt > 0.0) {
      const Vec3 w = stream.front().gyro - bias.gyro_bias;
      const Vec3 a = stream.front().accel - bias.accel_bias;
      const Rotation r_mid = state.rotation * exp_so3(0.5 * dt * w);
      const Vec3 a_world = r_mid * a + gravity.g;
      state.position += state.velocity * dt + 0.5 * a_world * dt * dt;
      state.velocity += a_world * dt;
      state.rotation = state.rotation * exp_so3(dt * w);
    }
    state.t = stream.front().t;
    states.push_back(state);
  }

  for (size_t i = 1; i < stream.size(); ++i) {
    const auto& prev = stream[i - 1];
    const auto& cur = stream[i];
    const double dt = cur.t - prev.t;
    const Vec3 w = 0.5 * (prev.gyro + cur.gyro) - bias.gyro_bias;
    const Vec3 a = 0.5 * (prev.accel + cur.accel) - bias.accel_bias;
    const Rotation r_mid = state.rotation * exp_so3(0.5 * dt * w);
    const Vec3 a_world = r_mid * a + gravity.g;
    state.position += state.velocity * dt + 0.5 * a_world * dt * dt;
    state.velocity += a_world * dt;
    state.rotation = state.rotation * exp_so3(dt * w);
    state.t = cur.t;
    states.push_back(state);
  }
  return states;
}

Vec3 accel_residual(const Trajectory& traj, const ImuMeasurement& m, const ImuBias& bias,
                    const GravityVector& gravity) {
  const Rotation r = traj.rotation(m.t);
  const Vec3 a = traj.acceleration(m.t);
  return r.inverse() * (a - gravity.g) - m.accel + bias.accel_bias;
}

Vec3 gyro_residual(const Trajectory& traj, const ImuMeasurement& m, const ImuBias& bias) {
  return traj.angular_velocity(m.t) - m.gyro + bias.gyro_bias;
}

Rotation align_gravity(const std::vector<ImuMeasurement>& samples) {
  if (samples.empty()) return Rotation::identity();
  Vec3 mean = Vec3::Zero();
  for (const auto& m : samples) mean += m.accel;
  mean /= static_cast<double>(samples.size());
  if (mean.norm() < 1e-6) return Rotation::identity();

  const Vec3 up = mean.normalized();
  const Vec3 target(0.0, 0.0, 1.0);
  const Vec3 axis = up.cross(target);
  const double sin_angle = axis.norm();
  const double cos_angle = up.dot(target);
  if (sin_angle < 1e-12) {
    return cos_angle > 0.0 ? Rotation::identity() : exp_so3(Vec3(M_PI, 0.0, 0.0));
  }
  return exp_so3(std::atan2(sin_angle, cos_angle) * axis.normalized());
}

std::vector<ImuMeasurement> load_imu_csv(const std::string& path) {
  const auto rows = read_csv(path, "t,wx,wy,wz,ax,ay,az");
  std::vector<ImuMeasurement> stream;
  stream.reserve(rows.size());
  for (const auto& r : rows) {
    stream.push_back({r[0], Vec3(r[1], r[2], r[3]), Vec3(r[4], r[5], r[6])});
  }
  return stream;
}

void save_imu_csv(const std::string& path, const std::vector<ImuMeasurement>& stream) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write IMU file: " + path);
  out << "t,wx,wy,wz,ax,ay,az\n";
  char line[256];
  for (const auto& m : stream) {
    std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", m.t,
                  m.gyro.x(), m.gyro.y(), m.gyro.z(), m.accel.x(), m.accel.y(), m.accel.z());
    out << line;
  }
}

std::vector<ImuMeasurement> slice_stream(const std::vector<ImuMeasurement>& stream,
                                         double t_begin, double t_end) {
  std::vector<ImuMeasurement> out;
  for (const auto& m : stream) {
    if (m.t >= t_begin - 1e-12 && m.t <= t_end + 1e-12) out.push_back(m);
  }
  return out;
}

}  // namespace ctlio
