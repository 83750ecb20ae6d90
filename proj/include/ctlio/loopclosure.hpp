// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>
#include <vector>

#include "ctlio/solver.hpp"
#include "ctlio/trajectory.hpp"

namespace ctlio {

/// Key-scan pose node of the stage-one graph.
struct PoseNode {
  int id = 0;
  double t = 0.0;
  RigidTransform pose;
};

/// Relative-pose edge a -> b (measurement ^a T_b).
struct PoseEdge {
  int a = 0;
  int b = 0;
  RigidTransform relative;
  double weight = 1.0;
};

struct PoseGraph {
  std::vector<PoseNode> nodes;
  std::vector<PoseEdge> edges;
  std::vector<int> fixed_ids;
};

/// Externally supplied loop constraint between two key-scans.
struct LoopConstraint {
  int id_a = 0;
  int id_b = 0;
  RigidTransform relative;  // ^a T_b
  double weight = 1.0;
};

/// Body-frame velocities sampled from the trajectory before any control point
/// is modified; they preserve the local shape during stage two.
struct VelocityAnchor {
  double t = 0.0;
  Vec3 linear = Vec3::Zero();   // R(t)^T v(t)
  Vec3 angular = Vec3::Zero();  // w(t), already body-frame
};

/// Consecutive-node odometry edges evaluated on the trajectory, first node
/// fixed.
PoseGraph make_odometry_graph(const Trajectory& traj,
                              const std::vector<std::pair<int, double>>& keyscans);

/// Stage one: NLLS over node poses with 6-dim relative-pose residuals
/// (rotation Log and frame-local translation). Throws std::invalid_argument
/// listing the components when the graph is disconnected.
std::map<int, RigidTransform> optimize_pose_graph(const PoseGraph& graph,
                                                  const std::vector<LoopConstraint>& loops,
                                                  SolveReport* report = nullptr);

/// Uniformly spaced anchors over the full evaluable range; count is
/// floor(span * rate) + 1.
std::vector<VelocityAnchor> sample_velocity_anchors(const Trajectory& traj, double rate_hz);

struct CorrectionOptions {
  double pose_weight = 10.0;
  double velocity_weight = 1.0;
  int max_iter = 20;
};

/// Stage two: re-fits every control point to the updated key poses while
/// holding the sampled body-frame velocities; the knot grid is unchanged.
/// `key_poses` pairs node times with their stage-one results. Throws
/// std::invalid_argument when no key poses are given.
Trajectory correct_trajectory(const Trajectory& traj, const std::vector<PoseNode>& key_poses,
                              const std::vector<VelocityAnchor>& anchors,
                              SolveReport* report = nullptr,
                              const CorrectionOptions& options = {});

/// Loop-constraint file: CSV `id_a,id_b,tx,ty,tz,qx,qy,qz,qw,weight`.
std::vector<LoopConstraint> load_loop_constraints(const std::string& path);
void save_loop_constraints(const std::string& path, const std::vector<LoopConstraint>& loops);

}  // namespace ctlio
