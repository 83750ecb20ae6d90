// SPDX-License-Identifier: Apache-2.0

#include "ctlio/bspline.hpp"

#include <cmath>
#include <map>
#include <mutex>

namespace ctlio {

namespace {

using Poly = std::vector<double>;  // ascending coefficients

Poly mul_linear(const Poly& p, double a, double b) {
  // p(u) * (a + b*u)
  Poly out(p.size() + 1, 0.0);
  for (size_t i = 0; i < p.size(); ++i) {
    out[i] += a * p[i];
    out[i + 1] += b * p[i];
  }
  return out;
}

void add_into(Poly& dst, const Poly& src) {
  if (dst.size() < src.size()) dst.resize(src.size(), 0.0);
  for (size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
}

/// Piecewise polynomials of the base uniform B-spline basis N_{0,k} on integer
/// knots, built by the Cox-de Boor recurrence carried out on the polynomial
/// coefficients. segs[m] is the polynomial in local u valid on [m, m+1).
std::vector<Poly> base_function_segments(int order) {
  std::vector<Poly> segs = {{1.0}};  // order 1: indicator of [0, 1)
  for (int r = 2; r <= order; ++r) {
    std::vector<Poly> next(r);
    const double inv = 1.0 / (r - 1);
    for (int m = 0; m < r; ++m) {
      Poly acc;
      if (m <= r - 2) {
        // (s - 0)/(r-1) * N_{0,r-1}(s), s = m + u
        add_into(acc, mul_linear(segs[m], m * inv, inv));
      }
      if (m >= 1) {
        // (r - s)/(r-1) * N_{1,r-1}(s) = (r - m - u)/(r-1) * N_{0,r-1}(s - 1)
        add_into(acc, mul_linear(segs[m - 1], (r - m) * inv, -inv));
      }
      acc.resize(r, 0.0);
      next[m] = std::move(acc);
    }
    segs = std::move(next);
  }
  return segs;
}

double eval_poly(const Eigen::MatrixXd& coeffs, int row, double u) {
  double v = 0.0;
  for (int n = coeffs.cols() - 1; n >= 0; --n) v = v * u + coeffs(row, n);
  return v;
}

double eval_poly_d1(const Eigen::MatrixXd& coeffs, int row, double u) {
  double v = 0.0;
  for (int n = coeffs.cols() - 1; n >= 1; --n) v = v * u + n * coeffs(row, n);
  return v;
}

double eval_poly_d2(const Eigen::MatrixXd& coeffs, int row, double u) {
  double v = 0.0;
  for (int n = coeffs.cols() - 1; n >= 2; --n) v = v * u + n * (n - 1) * coeffs(row, n);
  return v;
}

}  // namespace

BasisMatrices::BasisMatrices(int order) : order_(order) {
  const auto segs = base_function_segments(order);
  m_ = Eigen::MatrixXd::Zero(order, order);
  // On segment i of the spline, the weight of control point i+j is the base
  // function evaluated on its own segment k-1-j.
  for (int j = 0; j < order; ++j) {
    for (int n = 0; n < order; ++n) m_(j, n) = segs[order - 1 - j][n];
  }
  m_cum_ = Eigen::MatrixXd::Zero(order, order);
  for (int j = order - 1; j >= 1; --j) {
    m_cum_.row(j) = m_.row(j);
    if (j + 1 < order) m_cum_.row(j) += m_cum_.row(j + 1);
  }
  // Partition of unity makes lambda_0 identically one; write it exactly so
  // dlambda[0] and ddlambda[0] are bit-zero.
  m_cum_(0, 0) = 1.0;
}

const BasisMatrices& BasisMatrices::get(int order) {
  if (order < 2) throw ConfigError("unsupported spline order " + std::to_string(order));
  static std::mutex mutex;
  static std::map<int, BasisMatrices> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, BasisMatrices(order)).first;
  return it->second;
}

Basis BasisMatrices::basis(double u, double dt) const {
  Basis b;
  b.phi.resize(order_);
  b.dphi.resize(order_);
  b.ddphi.resize(order_);
  const double inv_dt = 1.0 / dt;
  for (int j = 0; j < order_; ++j) {
    b.phi(j) = eval_poly(m_, j, u);
    b.dphi(j) = eval_poly_d1(m_, j, u) * inv_dt;
    b.ddphi(j) = eval_poly_d2(m_, j, u) * inv_dt * inv_dt;
  }
  return b;
}

CumulativeBasis BasisMatrices::cumulative(double u, double dt) const {
  CumulativeBasis cb;
  cb.lambda.resize(order_);
  cb.dlambda.resize(order_);
  cb.ddlambda.resize(order_);
  const double inv_dt = 1.0 / dt;
  for (int j = 0; j < order_; ++j) {
    cb.lambda(j) = eval_poly(m_cum_, j, u);
    cb.dlambda(j) = eval_poly_d1(m_cum_, j, u) * inv_dt;
    cb.ddlambda(j) = eval_poly_d2(m_cum_, j, u) * inv_dt * inv_dt;
  }
  return cb;
}

CumulativeBasis cumulative_basis(double u, int order, double dt) {
  return BasisMatrices::get(order).cumulative(u, dt);
}

NormalizedTime normalize_time(const KnotGrid& grid, double t) {
  if (!grid.evaluable(t)) throw RangeError(t, grid.min_time(), grid.max_time());
  const double s = (t - grid.t0) / grid.dt;
  int segment = static_cast<int>(std::floor(s));
  double u = s - segment;
  if (segment < 0) {  // t == t0 with floor jitter
    segment = 0;
    u = 0.0;
  }
  if (segment > grid.last_segment()) {  // t at the closed right endpoint
    u += segment - grid.last_segment();
    segment = grid.last_segment();
  }
  return {segment, u};
}

namespace detail {

Vec3 eval_position(const Vec3* window, const CumulativeBasis& cb, int order) {
  Vec3 p = window[0];
  for (int j = 1; j < order; ++j) p += cb.lambda(j) * (window[j] - window[j - 1]);
  return p;
}

Vec3 eval_derivative(const Vec3* window, const Eigen::VectorXd& dlambda, int order) {
  Vec3 v = Vec3::Zero();
  for (int j = 1; j < order; ++j) v += dlambda(j) * (window[j] - window[j - 1]);
  return v;
}

Rotation eval_rotation(const Rotation* window, const CumulativeBasis& cb, int order) {
  Rotation r = window[0];
  for (int j = 1; j < order; ++j) {
    const Vec3 d = log_so3(window[j - 1].inverse() * window[j]);
    r = r * exp_so3(cb.lambda(j) * d);
  }
  return r;
}

Vec3 eval_angular_velocity(const Rotation* window, const CumulativeBasis& cb, int order) {
  // omega = sum_j dlambda_j * P_j^T d_j with P_j = A_{j+1} ... A_{k-1},
  // accumulated from the last factor inwards.
  Vec3 omega = Vec3::Zero();
  Rotation transport;  // P_j^T, starts at identity for j = k-1
  for (int j = order - 1; j >= 1; --j) {
    const Vec3 d = log_so3(window[j - 1].inverse() * window[j]);
    omega += cb.dlambda(j) * (transport * d);
    transport = transport * exp_so3(cb.lambda(j) * d).inverse();
  }
  return omega;
}

}  // namespace detail

SplineR3::SplineR3(const KnotGrid& grid, std::vector<Vec3> control_points)
    : grid_(grid), points_(std::move(control_points)) {
  grid_.n_control = static_cast<int>(points_.size());
}

void SplineR3::append_control_point(const Vec3& p) {
  points_.push_back(p);
  grid_.n_control = static_cast<int>(points_.size());
}

Vec3 SplineR3::position(double t) const {
  const auto nt = normalize_time(grid_, t);
  return position_at(nt.segment, nt.u);
}

Vec3 SplineR3::velocity(double t) const {
  const auto nt = normalize_time(grid_, t);
  return velocity_at(nt.segment, nt.u);
}

Vec3 SplineR3::acceleration(double t) const {
  const auto nt = normalize_time(grid_, t);
  return acceleration_at(nt.segment, nt.u);
}

Vec3 SplineR3::position_at(int segment, double u) const {
  const auto cb = cumulative_basis(u, grid_.order, grid_.dt);
  return detail::eval_position(points_.data() + segment, cb, grid_.order);
}

Vec3 SplineR3::velocity_at(int segment, double u) const {
  const auto cb = cumulative_basis(u, grid_.order, grid_.dt);
  return detail::eval_derivative(points_.data() + segment, cb.dlambda, grid_.order);
}

Vec3 SplineR3::acceleration_at(int segment, double u) const {
  const auto cb = cumulative_basis(u, grid_.order, grid_.dt);
  return detail::eval_derivative(points_.data() + segment, cb.ddlambda, grid_.order);
}

SplineSO3::SplineSO3(const KnotGrid& grid, std::vector<Rotation> control_points)
    : grid_(grid), rotations_(std::move(control_points)) {
  grid_.n_control = static_cast<int>(rotations_.size());
}

void SplineSO3::append_control_point(const Rotation& r) {
  rotations_.push_back(r);
  grid_.n_control = static_cast<int>(rotations_.size());
}

Rotation SplineSO3::rotation(double t) const {
  const auto nt = normalize_time(grid_, t);
  return rotation_at(nt.segment, nt.u);
}

Vec3 SplineSO3::angular_velocity(double t) const {
  const auto nt = normalize_time(grid_, t);
  return angular_velocity_at(nt.segment, nt.u);
}

Rotation SplineSO3::rotation_at(int segment, double u) const {
  const auto cb = cumulative_basis(u, grid_.order, grid_.dt);
  return detail::eval_rotation(rotations_.data() + segment, cb, grid_.order);
}

Vec3 SplineSO3::angular_velocity_at(int segment, double u) const {
  const auto cb = cumulative_basis(u, grid_.order, grid_.dt);
  return detail::eval_angular_velocity(rotations_.data() + segment, cb, grid_.order);
}

}  // namespace ctlio
