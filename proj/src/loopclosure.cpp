// SPDX-License-Identifier: Apache-2.0

#include "ctlio/loopclosure.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "ctlio/errors.hpp"
#include "ctlio/io.hpp"
#include "ctlio/spline_blocks.hpp"

namespace ctlio {

PoseGraph make_odometry_graph(const Trajectory& traj,
                              const std::vector<std::pair<int, double>>& keyscans) {
  PoseGraph graph;
  for (const auto& [id, t] : keyscans) graph.nodes.push_back({id, t, traj.pose(t)});
  for (size_t i = 1; i < graph.nodes.size(); ++i) {
    const auto& prev = graph.nodes[i - 1];
    const auto& cur = graph.nodes[i];
    graph.edges.push_back({prev.id, cur.id, prev.pose.inverse() * cur.pose, 1.0});
  }
  if (!graph.nodes.empty()) graph.fixed_ids.push_back(graph.nodes.front().id);
  return graph;
}

namespace {

void check_connected(const PoseGraph& graph, const std::vector<LoopConstraint>& loops) {
  std::map<int, int> parent;
  for (const auto& n : graph.nodes) parent[n.id] = n.id;
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  auto unite = [&](int a, int b) { parent[find(a)] = find(b); };
  for (const auto& e : graph.edges) unite(e.a, e.b);
  for (const auto& l : loops) {
    if (parent.count(l.id_a) && parent.count(l.id_b)) unite(l.id_a, l.id_b);
  }
  std::map<int, std::vector<int>> components;
  for (const auto& n : graph.nodes) components[find(n.id)].push_back(n.id);
  if (components.size() > 1) {
    std::ostringstream msg;
    msg << "pose graph is disconnected into " << components.size() << " components:";
    for (const auto& [root, ids] : components) {
      msg << " {";
      for (size_t i = 0; i < ids.size(); ++i) msg << (i ? "," : "") << ids[i];
      msg << "}";
    }
    throw std::invalid_argument(msg.str());
  }
}

}  // namespace

std::map<int, RigidTransform> optimize_pose_graph(const PoseGraph& graph,
                                                  const std::vector<LoopConstraint>& loops,
                                                  SolveReport* report) {
  if (graph.nodes.empty()) throw std::invalid_argument("pose graph has no nodes");
  check_connected(graph, loops);

  Problem problem;
  std::map<int, std::pair<int, int>> blocks;  // node id -> (rot, pos) block ids
  for (const auto& n : graph.nodes) {
    const bool fixed =
        std::find(graph.fixed_ids.begin(), graph.fixed_ids.end(), n.id) != graph.fixed_ids.end();
    const int rot = problem.add_so3(n.pose.rotation, fixed);
    const int pos = problem.add_euclidean(n.pose.translation, fixed);
    blocks[n.id] = {rot, pos};
  }

  auto add_edge = [&](int a, int b, const RigidTransform& rel, double weight) {
    const auto [rot_a, pos_a] = blocks.at(a);
    const auto [rot_b, pos_b] = blocks.at(b);
    problem.add_residual(
        {rot_a, pos_a, rot_b, pos_b}, 6,
        [rel](const std::vector<const ParamBlock*>& view) {
          const Rotation& ra = view[0]->rot();
          const Rotation& rb = view[2]->rot();
          const Vec3 pa(view[1]->vec());
          const Vec3 pb(view[3]->vec());
          Eigen::VectorXd r(6);
          r.head<3>() = log_so3(rel.rotation.inverse() * (ra.inverse() * rb));
          r.tail<3>() = ra.inverse() * (pb - pa) - rel.translation;
          return r;
        },
        weight);
  };

  for (const auto& e : graph.edges) add_edge(e.a, e.b, e.relative, e.weight);
  for (const auto& l : loops) {
    if (!blocks.count(l.id_a) || !blocks.count(l.id_b)) {
      throw std::invalid_argument("loop constraint references unknown key-scan id " +
                                  std::to_string(blocks.count(l.id_a) ? l.id_b : l.id_a));
    }
    add_edge(l.id_a, l.id_b, l.relative, l.weight);
  }

  const SolveReport local = problem.solve({.max_iter = 50});
  if (report != nullptr) *report = local;

  std::map<int, RigidTransform> out;
  for (const auto& [id, ids] : blocks) {
    out[id] = {problem.rot(ids.first), Vec3(problem.vec(ids.second))};
  }
  return out;
}

std::vector<VelocityAnchor> sample_velocity_anchors(const Trajectory& traj, double rate_hz) {
  std::vector<VelocityAnchor> anchors;
  const double span = traj.max_time() - traj.min_time();
  const long count = static_cast<long>(std::floor(span * rate_hz + 1e-9)) + 1;
  for (long i = 0; i < count; ++i) {
    const double t = std::min(traj.min_time() + i / rate_hz, traj.max_time());
    VelocityAnchor a;
    a.t = t;
    a.linear = traj.rotation(t).inverse() * traj.velocity(t);
    a.angular = traj.angular_velocity(t);
    anchors.push_back(a);
  }
  return anchors;
}

Trajectory correct_trajectory(const Trajectory& traj, const std::vector<PoseNode>& key_poses,
                              const std::vector<VelocityAnchor>& anchors, SolveReport* report,
                              const CorrectionOptions& options) {
  if (key_poses.empty()) throw std::invalid_argument("correct_trajectory: no key poses");
  const KnotGrid grid = traj.grid();
  const int k = grid.order;
  if (k > 8) throw std::invalid_argument("spline order above 8 is not supported");

  Problem problem;
  std::vector<int> rot_blocks, pos_blocks;
  for (int i = 0; i < grid.n_control; ++i) {
    rot_blocks.push_back(problem.add_so3(traj.rotation_spline().control_point(i)));
    pos_blocks.push_back(problem.add_euclidean(traj.position_spline().control_point(i)));
  }

  auto window_params = [&](double t, bool rot, bool pos) {
    const auto nt = normalize_time(grid, t);
    std::vector<int> params;
    if (rot) {
      for (int j = 0; j < k; ++j) params.push_back(rot_blocks[nt.segment + j]);
    }
    if (pos) {
      for (int j = 0; j < k; ++j) params.push_back(pos_blocks[nt.segment + j]);
    }
    return params;
  };

  for (const auto& kp : key_poses) {
    const auto nt = normalize_time(grid, kp.t);
    const CumulativeBasis cb = cumulative_basis(nt.u, k, grid.dt);

    const Rotation target_rot = kp.pose.rotation;
    problem.add_residual(
        window_params(kp.t, true, false), 3,
        [cb, k, target_rot](const std::vector<const ParamBlock*>& view) {
          Rotation window[8];
          detail::read_rotations(view, 0, k, window);
          return Eigen::VectorXd(
              log_so3(target_rot.inverse() * detail::eval_rotation(window, cb, k)));
        },
        options.pose_weight);

    const Vec3 target_pos = kp.pose.translation;
    problem.add_residual(
        window_params(kp.t, false, true), 3,
        [cb, k, target_pos](const std::vector<const ParamBlock*>& view) {
          Vec3 window[8];
          detail::read_positions(view, 0, k, window);
          return Eigen::VectorXd(detail::eval_position(window, cb, k) - target_pos);
        },
        options.pose_weight);
  }

  for (const auto& a : anchors) {
    const auto nt = normalize_time(grid, a.t);
    const CumulativeBasis cb = cumulative_basis(nt.u, k, grid.dt);

    const Vec3 v_hat = a.linear;
    problem.add_residual(
        window_params(a.t, true, true), 3,
        [cb, k, v_hat](const std::vector<const ParamBlock*>& view) {
          Rotation rot_window[8];
          Vec3 pos_window[8];
          detail::read_rotations(view, 0, k, rot_window);
          detail::read_positions(view, k, k, pos_window);
          const Rotation r = detail::eval_rotation(rot_window, cb, k);
          const Vec3 v = detail::eval_derivative(pos_window, cb.dlambda, k);
          return Eigen::VectorXd(r.inverse() * v - v_hat);
        },
        options.velocity_weight);

    const Vec3 w_hat = a.angular;
    problem.add_residual(
        window_params(a.t, true, false), 3,
        [cb, k, w_hat](const std::vector<const ParamBlock*>& view) {
          Rotation window[8];
          detail::read_rotations(view, 0, k, window);
          return Eigen::VectorXd(detail::eval_angular_velocity(window, cb, k) - w_hat);
        },
        options.velocity_weight);
  }

  const SolveReport local = problem.solve({.max_iter = options.max_iter});
  if (report != nullptr) *report = local;

  std::vector<Vec3> new_points;
  std::vector<Rotation> new_rots;
  for (int i = 0; i < grid.n_control; ++i) {
    new_rots.push_back(problem.rot(rot_blocks[i]));
    new_points.push_back(Vec3(problem.vec(pos_blocks[i])));
  }
  return Trajectory(SplineR3(grid, std::move(new_points)), SplineSO3(grid, std::move(new_rots)));
}

std::vector<LoopConstraint> load_loop_constraints(const std::string& path) {
  const auto rows = read_csv(path, "id_a,id_b,tx,ty,tz,qx,qy,qz,qw,weight");
  std::vector<LoopConstraint> loops;
  for (const auto& r : rows) {
    LoopConstraint l;
    l.id_a = static_cast<int>(r[0]);
    l.id_b = static_cast<int>(r[1]);
    l.relative.translation = Vec3(r[2], r[3], r[4]);
    l.relative.rotation = Rotation(Eigen::Quaterniond(r[8], r[5], r[6], r[7]));
    l.weight = r[9];
    loops.push_back(l);
  }
  return loops;
}

void save_loop_constraints(const std::string& path, const std::vector<LoopConstraint>& loops) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write loop constraints: " + path);
  out << "id_a,id_b,tx,ty,tz,qx,qy,qz,qw,weight\n";
  char line[512];
  for (const auto& l : loops) {
    const auto& q = l.relative.rotation.quaternion();
    std::snprintf(line, sizeof(line),
                  "%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", l.id_a, l.id_b,
                  l.relative.translation.x(), l.relative.translation.y(),
                  l.relative.translation.z(), q.x(), q.y(), q.z(), q.w(), l.weight);
    out << line;
  }
}

}  // namespace ctlio
