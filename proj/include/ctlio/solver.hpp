// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <deque>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ctlio/geometry.hpp"

namespace ctlio {

/// Optimization variable living on R^n or SO(3). SO(3) blocks update
/// on-manifold by right multiplication with Exp(delta); fixed blocks are part
/// of residual evaluation but never change.
class ParamBlock {
public:
  enum class Kind { euclidean, so3 };

  ParamBlock(int id, Eigen::VectorXd value, bool fixed)
      : id(id), kind(Kind::euclidean), fixed(fixed), vec_(std::move(value)) {}
  ParamBlock(int id, const Rotation& value, bool fixed)
      : id(id), kind(Kind::so3), fixed(fixed), rot_(value) {}

  int id;
  Kind kind;
  bool fixed;

  int tangent_dim() const {
    return kind == Kind::so3 ? 3 : static_cast<int>(vec_.size());
  }

  const Eigen::VectorXd& vec() const { return vec_; }
  const Rotation& rot() const { return rot_; }
  void set_vec(const Eigen::VectorXd& v) { vec_ = v; }
  void set_rot(const Rotation& r) { rot_ = r; }

  void apply_step(const Eigen::Ref<const Eigen::VectorXd>& delta) {
    if (kind == Kind::so3) {
      rot_ = rot_ * exp_so3(Vec3(delta(0), delta(1), delta(2)));
    } else {
      vec_ += delta;
    }
  }

private:
  Eigen::VectorXd vec_;
  Rotation rot_;
};

/// Robust loss on the weighted residual norm.
struct Loss {
  enum class Kind { none, huber };
  Kind kind = Kind::none;
  double delta = 1.0;

  static Loss none() { return {}; }
  static Loss huber(double delta) { return {Kind::huber, delta}; }
};

using ResidualFn = std::function<Eigen::VectorXd(const std::vector<const ParamBlock*>&)>;

struct SolveOptions {
  int max_iter = 10;
  double cost_tol = 1e-6;  // relative decrease of accepted cost
  double step_tol = 1e-8;
  double init_damping = 1e-4;
  std::string trace_path;  // optional CSV dump `iter,cost,damping,step_norm`
};

enum class Termination { converged, max_iter, stalled };

struct SolveReport {
  int iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  Termination reason = Termination::converged;
  double gradient_norm = 0.0;
  std::vector<double> cost_trace;  // accepted costs, starting at initial_cost
};

/// Central-difference Jacobian of `fn` with respect to the free blocks, in
/// block order; columns of fixed blocks are omitted. SO(3) blocks are
/// perturbed in the right tangent space. Throws std::runtime_error naming the
/// block when a perturbation produces a non-finite residual.
Eigen::MatrixXd numeric_jacobian(const ResidualFn& fn, std::vector<ParamBlock*> blocks,
                                 double h = 1e-6);

/// Sparse nonlinear least squares: sum over residual blocks of
/// rho(|W r(x)|^2), minimized by Levenberg-Marquardt with dense normal
/// equations over the free tangent dimensions.
class Problem {
public:
  int add_euclidean(const Eigen::VectorXd& value, bool fixed = false);
  int add_so3(const Rotation& value, bool fixed = false);
  void set_fixed(int id, bool fixed) { blocks_[id].fixed = fixed; }

  /// `weight` is the square root of the inverse covariance (scalar isotropic
  /// or per-dimension diagonal).
  int add_residual(std::vector<int> params, int dim, ResidualFn fn, double weight = 1.0,
                   Loss loss = Loss::none());
  int add_residual(std::vector<int> params, int dim, ResidualFn fn,
                   const Eigen::VectorXd& weight, Loss loss = Loss::none());

  ParamBlock& block(int id) { return blocks_[id]; }
  const ParamBlock& block(int id) const { return blocks_[id]; }
  const Rotation& rot(int id) const { return blocks_[id].rot(); }
  const Eigen::VectorXd& vec(int id) const { return blocks_[id].vec(); }

  int num_blocks() const { return static_cast<int>(blocks_.size()); }
  int num_residuals() const { return static_cast<int>(residuals_.size()); }

  double cost() const;

  SolveReport solve(const SolveOptions& options = {});

private:
  struct Residual {
    std::vector<int> params;
    int dim;
    ResidualFn fn;
    Eigen::VectorXd weight;
    Loss loss;
  };

  Eigen::VectorXd weighted_residual(const Residual& r) const;

  std::deque<ParamBlock> blocks_;
  std::vector<Residual> residuals_;
};

}  // namespace ctlio
