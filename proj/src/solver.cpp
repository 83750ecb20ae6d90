// SPDX-License-Identifier: Apache-2.0

#include "ctlio/solver.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace ctlio {

namespace {

constexpr double kMinDamping = 1e-12;
constexpr double kMaxDamping = 1e6;

double robust_cost(const Loss& loss, double squared_norm) {
  if (loss.kind == Loss::Kind::huber && squared_norm > loss.delta * loss.delta) {
    return 2.0 * loss.delta * std::sqrt(squared_norm) - loss.delta * loss.delta;
  }
  return squared_norm;
}

// sqrt of d rho / d s2, used to rescale residual and Jacobian rows.
double robust_scale(const Loss& loss, double squared_norm) {
  if (loss.kind == Loss::Kind::huber && squared_norm > loss.delta * loss.delta) {
    return std::sqrt(loss.delta / std::sqrt(squared_norm));
  }
  return 1.0;
}

}  // namespace

Eigen::MatrixXd numeric_jacobian(const ResidualFn& fn, std::vector<ParamBlock*> blocks,
                                 double h) {
  std::vector<const ParamBlock*> view(blocks.begin(), blocks.end());
  const Eigen::VectorXd r0 = fn(view);
  if (!r0.allFinite()) throw std::runtime_error("numeric_jacobian: non-finite residual");

  int n_cols = 0;
  for (const auto* b : blocks) {
    if (!b->fixed) n_cols += b->tangent_dim();
  }
  Eigen::MatrixXd jac(r0.size(), n_cols);

  int col = 0;
  for (auto* b : blocks) {
    if (b->fixed) continue;
    for (int d = 0; d < b->tangent_dim(); ++d) {
      Eigen::VectorXd delta = Eigen::VectorXd::Zero(b->tangent_dim());

      const Eigen::VectorXd saved_vec = b->vec();
      const Rotation saved_rot = b->rot();

      delta(d) = h;
      b->apply_step(delta);
      const Eigen::VectorXd r_plus = fn(view);

      if (b->kind == ParamBlock::Kind::so3) b->set_rot(saved_rot);
      else b->set_vec(saved_vec);

      delta(d) = -h;
      b->apply_step(delta);
      const Eigen::VectorXd r_minus = fn(view);

      if (b->kind == ParamBlock::Kind::so3) b->set_rot(saved_rot);
      else b->set_vec(saved_vec);

      if (!r_plus.allFinite() || !r_minus.allFinite()) {
        throw std::runtime_error("numeric_jacobian: non-finite residual when perturbing block " +
                                 std::to_string(b->id));
      }
      jac.col(col++) = (r_plus - r_minus) / (2.0 * h);
    }
  }
  return jac;
}

int Problem::add_euclidean(const Eigen::VectorXd& value, bool fixed) {
  const int id = static_cast<int>(blocks_.size());
  blocks_.emplace_back(id, value, fixed);
  return id;
}

int Problem::add_so3(const Rotation& value, bool fixed) {
  const int id = static_cast<int>(blocks_.size());
  blocks_.emplace_back(id, value, fixed);
  return id;
}

int Problem::add_residual(std::vector<int> params, int dim, ResidualFn fn, double weight,
                          Loss loss) {
  return add_residual(std::move(params), dim, std::move(fn),
                      Eigen::VectorXd::Constant(dim, weight), loss);
}

int Problem::add_residual(std::vector<int> params, int dim, ResidualFn fn,
                          const Eigen::VectorXd& weight, Loss loss) {
  if (weight.size() != dim || (weight.array() <= 0.0).any()) {
    throw std::invalid_argument("residual weight must be positive with one entry per dimension");
  }
  residuals_.push_back({std::move(params), dim, std::move(fn), weight, loss});
  return static_cast<int>(residuals_.size()) - 1;
}

Eigen::VectorXd Problem::weighted_residual(const Residual& r) const {
  std::vector<const ParamBlock*> view;
  view.reserve(r.params.size());
  for (int id : r.params) view.push_back(&blocks_[id]);
  return r.weight.cwiseProduct(r.fn(view));
}

double Problem::cost() const {
  double total = 0.0;
  for (const auto& r : residuals_) {
    total += robust_cost(r.loss, weighted_residual(r).squaredNorm());
  }
  return total;
}

SolveReport Problem::solve(const SolveOptions& options) {
  SolveReport report;
  report.initial_cost = cost();
  report.cost_trace.push_back(report.initial_cost);

  // Tangent layout over free blocks.
  std::vector<int> offsets(blocks_.size(), -1);
  int n_free = 0;
  for (const auto& b : blocks_) {
    if (!b.fixed) {
      offsets[b.id] = n_free;
      n_free += b.tangent_dim();
    }
  }

  std::ofstream trace;
  if (!options.trace_path.empty()) {
    trace.open(options.trace_path);
    trace << "iter,cost,damping,step_norm\n";
  }

  if (n_free == 0 || residuals_.empty()) {
    report.final_cost = report.initial_cost;
    report.reason = Termination::converged;
    return report;
  }

  // Per-residual pointer views, reused across iterations.
  std::vector<std::vector<ParamBlock*>> views(residuals_.size());
  for (size_t i = 0; i < residuals_.size(); ++i) {
    for (int id : residuals_[i].params) views[i].push_back(&blocks_[id]);
  }

  double damping = options.init_damping;
  double current_cost = report.initial_cost;
  Eigen::MatrixXd hessian(n_free, n_free);
  Eigen::VectorXd gradient(n_free);

  char trace_line[160];
  if (trace.is_open()) {
    std::snprintf(trace_line, sizeof(trace_line), "0,%.17g,%.17g,0\n", current_cost, damping);
    trace << trace_line;
  }

  while (report.iterations < options.max_iter) {
    // Linearize: accumulate J^T J and J^T r over residual blocks.
    hessian.setZero();
    gradient.setZero();
    for (size_t i = 0; i < residuals_.size(); ++i) {
      const auto& res = residuals_[i];
      Eigen::VectorXd r = weighted_residual(res);
      const double scale = robust_scale(res.loss, r.squaredNorm());

      Eigen::MatrixXd jac = numeric_jacobian(res.fn, views[i]);
      if (jac.cols() == 0) continue;
      jac = res.weight.asDiagonal() * jac;
      if (scale != 1.0) {
        r *= scale;
        jac *= scale;
      }

      // Scatter-add into the dense system using the free-block offsets.
      int col_a = 0;
      for (const auto* ba : views[i]) {
        if (ba->fixed) continue;
        const int da = ba->tangent_dim();
        const auto jac_a = jac.middleCols(col_a, da);
        gradient.segment(offsets[ba->id], da) += jac_a.transpose() * r;
        int col_b = 0;
        for (const auto* bb : views[i]) {
          if (bb->fixed) continue;
          const int db = bb->tangent_dim();
          hessian.block(offsets[ba->id], offsets[bb->id], da, db) +=
              jac_a.transpose() * jac.middleCols(col_b, db);
          col_b += db;
        }
        col_a += da;
      }
    }
    report.gradient_norm = gradient.norm();

    // Damped steps until one is accepted or damping saturates.
    bool accepted = false;
    while (true) {
      Eigen::MatrixXd damped = hessian;
      damped.diagonal().array() += damping;
      const Eigen::VectorXd step = damped.ldlt().solve(-gradient);

      if (step.allFinite()) {
        // Apply the candidate on-manifold, keeping a rollback copy.
        std::vector<Eigen::VectorXd> saved_vecs;
        std::vector<Rotation> saved_rots;
        for (const auto& b : blocks_) {
          saved_vecs.push_back(b.vec());
          saved_rots.push_back(b.rot());
        }
        for (auto& b : blocks_) {
          if (!b.fixed) b.apply_step(step.segment(offsets[b.id], b.tangent_dim()));
        }
        const double new_cost = cost();

        if (std::isfinite(new_cost) && new_cost <= current_cost) {
          ++report.iterations;
          const double decrease = current_cost - new_cost;
          const double step_norm = step.norm();
          current_cost = new_cost;
          report.cost_trace.push_back(current_cost);
          damping = std::max(kMinDamping, 0.5 * damping);
          if (trace.is_open()) {
            std::snprintf(trace_line, sizeof(trace_line), "%d,%.17g,%.17g,%.17g\n",
                          report.iterations, current_cost, damping, step_norm);
            trace << trace_line;
          }
          accepted = true;
          if (decrease <= options.cost_tol * std::max(current_cost, 1e-300) ||
              step_norm < options.step_tol) {
            report.reason = Termination::converged;
            report.final_cost = current_cost;
            return report;
          }
          break;
        }
        // Rejected: roll back and raise damping.
        for (auto& b : blocks_) {
          if (b.kind == ParamBlock::Kind::so3) b.set_rot(saved_rots[b.id]);
          else b.set_vec(saved_vecs[b.id]);
        }
      }
      damping *= 2.0;
      if (damping > kMaxDamping) break;
    }

    if (!accepted) {
      report.reason = Termination::stalled;
      report.final_cost = current_cost;
      return report;
    }
  }

  report.reason = Termination::max_iter;
  report.final_cost = current_cost;
  return report;
}

}  // namespace ctlio
