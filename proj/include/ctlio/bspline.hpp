// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include <Eigen/Dense>

#include "ctlio/errors.hpp"
#include "ctlio/geometry.hpp"

namespace ctlio {

/// Uniform knot grid shared by the position and rotation splines.
/// Knot i sits at t0 + i * dt; the value on segment i (t in [t_i, t_{i+1}))
/// is controlled by the k control points i .. i+k-1. With n control points the
/// last full window belongs to segment n-k, so the evaluable time range is the
/// closed interval [t0, t0 + (n-k+1) * dt]; the right endpoint evaluates the
/// final segment at u = 1.
struct KnotGrid {
  double t0 = 0.0;
  double dt = 0.1;
  int order = 4;
  int n_control = 0;

  double knot_time(int i) const { return t0 + i * dt; }
  int last_segment() const { return n_control - order; }
  double min_time() const { return t0; }
  double max_time() const { return t0 + (last_segment() + 1) * dt; }
  /// Tolerates 1 ns of floating jitter at both ends.
  bool evaluable(double t) const {
    return n_control >= order && t >= min_time() - 1e-9 && t <= max_time() + 1e-9;
  }
};

/// Segment index plus normalized local time u = (t - t0)/dt - i.
/// u lies in [0, 1) except at the exact right end of the evaluable range,
/// where the final segment is evaluated at u = 1.
struct NormalizedTime {
  int segment = 0;
  double u = 0.0;
};

/// Maps t to (segment, u), throwing RangeError outside the evaluable range.
NormalizedTime normalize_time(const KnotGrid& grid, double t);

/// Cumulative blending coefficients at one normalized time.
/// lambda[0] == 1 always; dlambda/ddlambda carry the 1/dt and 1/dt^2 factors,
/// so they are derivatives with respect to time, not to u.
struct CumulativeBasis {
  Eigen::VectorXd lambda;
  Eigen::VectorXd dlambda;
  Eigen::VectorXd ddlambda;
};

/// Non-cumulative blending coefficients (weights of the k window control
/// points); same time-derivative convention as CumulativeBasis.
struct Basis {
  Eigen::VectorXd phi;
  Eigen::VectorXd dphi;
  Eigen::VectorXd ddphi;
};

/// Blending matrices of one spline order, derived once from the Cox-de Boor
/// recurrence. Row j holds the polynomial coefficients (ascending powers of u)
/// of basis function phi_j / cumulative basis lambda_j.
class BasisMatrices {
public:
  /// Cached accessor; throws ConfigError for order < 2.
  static const BasisMatrices& get(int order);

  Basis basis(double u, double dt) const;
  CumulativeBasis cumulative(double u, double dt) const;

  const Eigen::MatrixXd& coeff_matrix() const { return m_; }
  const Eigen::MatrixXd& cumulative_coeff_matrix() const { return m_cum_; }

private:
  explicit BasisMatrices(int order);

  int order_;
  Eigen::MatrixXd m_;      // phi polynomials
  Eigen::MatrixXd m_cum_;  // lambda polynomials
};

/// Evaluates the cumulative coefficient vector and its time derivatives.
CumulativeBasis cumulative_basis(double u, int order, double dt);

/// Uniform B-spline on R^3 in cumulative form.
class SplineR3 {
public:
  SplineR3() = default;
  SplineR3(const KnotGrid& grid, std::vector<Vec3> control_points);

  const KnotGrid& grid() const { return grid_; }
  const std::vector<Vec3>& control_points() const { return points_; }
  Vec3& control_point(int i) { return points_[i]; }
  const Vec3& control_point(int i) const { return points_[i]; }
  void append_control_point(const Vec3& p);

  Vec3 position(double t) const;
  Vec3 velocity(double t) const;
  Vec3 acceleration(double t) const;

  /// Segment-level evaluation (u may be 1 for the left limit at a knot).
  Vec3 position_at(int segment, double u) const;
  Vec3 velocity_at(int segment, double u) const;
  Vec3 acceleration_at(int segment, double u) const;

private:
  KnotGrid grid_;
  std::vector<Vec3> points_;
};

/// Uniform B-spline on SO(3) in cumulative form:
///   R(u) = R_i * prod_j Exp(lambda_j(u) * Log(R_{i+j-1}^-1 R_{i+j})).
class SplineSO3 {
public:
  SplineSO3() = default;
  SplineSO3(const KnotGrid& grid, std::vector<Rotation> control_points);

  const KnotGrid& grid() const { return grid_; }
  const std::vector<Rotation>& control_points() const { return rotations_; }
  Rotation& control_point(int i) { return rotations_[i]; }
  const Rotation& control_point(int i) const { return rotations_[i]; }
  void append_control_point(const Rotation& r);

  Rotation rotation(double t) const;
  /// Body-frame angular velocity, rad/s.
  Vec3 angular_velocity(double t) const;

  Rotation rotation_at(int segment, double u) const;
  Vec3 angular_velocity_at(int segment, double u) const;

private:
  KnotGrid grid_;
  std::vector<Rotation> rotations_;
};

/// Window-local evaluation helpers shared with the solver residuals: evaluate
/// the cumulative form directly from k consecutive control-point values and a
/// precomputed basis, without touching a spline object.
namespace detail {
Vec3 eval_position(const Vec3* window, const CumulativeBasis& cb, int order);
Vec3 eval_derivative(const Vec3* window, const Eigen::VectorXd& dlambda, int order);
Rotation eval_rotation(const Rotation* window, const CumulativeBasis& cb, int order);
Vec3 eval_angular_velocity(const Rotation* window, const CumulativeBasis& cb, int order);
}  // namespace detail

}  // namespace ctlio
