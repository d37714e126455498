#pragma once

// 5-DOF serial arm: forward kinematics, PSO goal solving and cubic
// joint-space trajectories. Lengths in mm, angles in rad.

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace harvestsim::arm {

inline constexpr int kJoints = 5;

using JointVector = Eigen::Matrix<double, kJoints, 1>;

/// Standard Denavit-Hartenberg row: Rot_z(theta + offset) Trans_z(d) Trans_x(a) Rot_x(alpha).
struct DhRow {
  double a = 0.0;       // link length, mm
  double alpha = 0.0;   // link twist, rad
  double d = 0.0;       // link offset, mm
  double offset = 0.0;  // joint angle offset, rad
};

struct KinematicChain {
  std::array<DhRow, kJoints> rows{};
  JointVector lower = JointVector::Constant(-3.14159265358979);
  JointVector upper = JointVector::Constant(3.14159265358979);
  JointVector velocity_limit = JointVector::Constant(1.5);  // rad/s

  /// A joint whose range spans a full turn is continuous: PSO wraps it
  /// instead of clamping.
  bool is_continuous(int joint) const;
  /// Sum of |a| + |d| over the chain.
  double bounding_reach() const;
  bool within_limits(const JointVector& q) const;
};

void validate(const KinematicChain& chain);

/// Approximates a 750 mm-reach 5-DOF harvesting arm.
KinematicChain default_chain();

struct Pose {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d approach = Eigen::Vector3d::UnitZ();  // unit vector
};

Eigen::Matrix4d dh_transform(const DhRow& row, double q);

/// Base-to-tool transform; approach is the tool z axis.
Eigen::Matrix4d tool_transform(const KinematicChain& chain, const JointVector& q);

Pose forward_kinematics(const KinematicChain& chain, const JointVector& q);

struct PsoParams {
  int particle_count = 30;
  int iteration_count = 200;
  double inertia = 0.72;
  double cognitive = 1.49;
  double social = 1.49;
  double velocity_clamp = 0.1;  // fraction of each joint range
  std::uint64_t seed = 0;
};

void validate(const PsoParams& params);

struct GoalWeights {
  double direction = 0.5;  // mm per rad of approach misalignment
  double limit = 1000.0;   // mm per rad^2 beyond a joint limit
  bool use_direction = true;
  double converged_cost = 2.0;  // soft convergence threshold
};

struct GoalCost {
  double total = 0.0;
  double position_error = 0.0;   // mm
  double direction_error = 0.0;  // rad
};

GoalCost goal_cost(const KinematicChain& chain, const Pose& target, const JointVector& q,
                   const GoalWeights& weights);

struct GoalSolution {
  JointVector q = JointVector::Zero();
  GoalCost cost;
  bool converged = false;
  /// Global-best cost after initialisation and after each iteration.
  std::vector<double> best_history;
};

/// Global-best PSO over the joint space. Random draws for each iteration are
/// generated up front, so results do not depend on evaluation order.
GoalSolution pso_solve_goal(const KinematicChain& chain, const Pose& target,
                            const PsoParams& params, const GoalWeights& weights = {});

struct JointTrajectory {
  double dt = 0.0;
  std::vector<JointVector> waypoints;  // waypoint i at time i * dt
};

/// Shortest duration for which the cubic profile respects the velocity caps.
double min_cubic_duration(const KinematicChain& chain, const JointVector& q_start,
                          const JointVector& q_goal);

/// Cubic time scaling s(t) = 3 (t/T)^2 - 2 (t/T)^3 per joint.
JointTrajectory plan_trajectory(const KinematicChain& chain, const JointVector& q_start,
                                const JointVector& q_goal, double duration, double dt);

}  // namespace harvestsim::arm
