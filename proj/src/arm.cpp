#include "harvestsim/arm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "harvestsim/error.hpp"
#include "harvestsim/rng.hpp"

namespace harvestsim::arm {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

[[noreturn]] void invalid(const std::string& what) {
  throw Error(ErrorKind::kInvalidArgument, what);
}

double wrap_into(double value, double lower) {
  double shifted = std::fmod(value - lower, kTwoPi);
  if (shifted < 0.0) shifted += kTwoPi;
  return lower + shifted;
}

double wrap_pi(double angle) { return std::remainder(angle, kTwoPi); }

}  // namespace

bool KinematicChain::is_continuous(int joint) const {
  return upper(joint) - lower(joint) >= kTwoPi - 1e-9;
}

double KinematicChain::bounding_reach() const {
  double reach = 0.0;
  for (const DhRow& row : rows) reach += std::abs(row.a) + std::abs(row.d);
  return reach;
}

bool KinematicChain::within_limits(const JointVector& q) const {
  return ((q.array() >= lower.array()) && (q.array() <= upper.array())).all();
}

void validate(const KinematicChain& chain) {
  for (int j = 0; j < kJoints; ++j) {
    if (!(chain.lower(j) < chain.upper(j))) {
      invalid("arm: joint " + std::to_string(j + 1) + " has lower limit >= upper limit");
    }
    if (!(chain.velocity_limit(j) > 0.0)) {
      invalid("arm: joint " + std::to_string(j + 1) + " velocity limit must be positive");
    }
  }
}

KinematicChain default_chain() {
  KinematicChain chain;
  chain.rows = {{
      {0.0, -kPi / 2.0, 126.75, 0.0},  // waist
      {300.0, 0.0, 0.0, 0.0},          // shoulder
      {300.0, 0.0, 0.0, 0.0},          // elbow
      {0.0, -kPi / 2.0, 0.0, 0.0},     // wrist angle
      {0.0, 0.0, 150.0, 0.0},          // wrist rotate, tool length
  }};
  chain.lower << -kPi, -1.9, -2.1, -1.8, -kPi;
  chain.upper << kPi, 1.9, 1.6, 1.8, kPi;
  chain.velocity_limit << 1.5, 1.5, 1.5, 2.0, 2.0;
  return chain;
}

Eigen::Matrix4d dh_transform(const DhRow& row, double q) {
  const double theta = q + row.offset;
  const double ct = std::cos(theta), st = std::sin(theta);
  const double ca = std::cos(row.alpha), sa = std::sin(row.alpha);
  Eigen::Matrix4d t;
  t << ct, -st * ca, st * sa, row.a * ct,
       st, ct * ca, -ct * sa, row.a * st,
       0.0, sa, ca, row.d,
       0.0, 0.0, 0.0, 1.0;
  return t;
}

Eigen::Matrix4d tool_transform(const KinematicChain& chain, const JointVector& q) {
  Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
  for (int j = 0; j < kJoints; ++j) t = t * dh_transform(chain.rows[j], q(j));
  return t;
}

Pose forward_kinematics(const KinematicChain& chain, const JointVector& q) {
  const Eigen::Matrix4d t = tool_transform(chain, q);
  Pose pose;
  pose.position = t.block<3, 1>(0, 3);
  pose.approach = t.block<3, 1>(0, 2).normalized();
  return pose;
}

void validate(const PsoParams& p) {
  if (p.particle_count < 2) invalid("pso: particle_count must be >= 2");
  if (p.iteration_count < 0) invalid("pso: iteration_count must be >= 0");
  if (!(p.inertia >= 0.0 && p.inertia <= 1.0)) invalid("pso: inertia must be in [0, 1]");
  if (!(p.cognitive > 0.0 && p.social > 0.0)) invalid("pso: c1 and c2 must be positive");
  if (!(p.velocity_clamp > 0.0)) invalid("pso: velocity_clamp must be positive");
}

GoalCost goal_cost(const KinematicChain& chain, const Pose& target, const JointVector& q,
                   const GoalWeights& w) {
  const Pose pose = forward_kinematics(chain, q);
  GoalCost cost;
  cost.position_error = (pose.position - target.position).norm();
  if (w.use_direction) {
    cost.direction_error = std::acos(std::clamp(pose.approach.dot(target.approach), -1.0, 1.0));
  }
  double penalty = 0.0;
  for (int j = 0; j < kJoints; ++j) {
    const double over = std::max(0.0, q(j) - chain.upper(j)) + std::max(0.0, chain.lower(j) - q(j));
    penalty += over * over;
  }
  cost.total = cost.position_error + w.direction * cost.direction_error + w.limit * penalty;
  return cost;
}

GoalSolution pso_solve_goal(const KinematicChain& chain, const Pose& target,
                            const PsoParams& params, const GoalWeights& weights) {
  validate(chain);
  validate(params);
  const double reach = chain.bounding_reach();
  if (target.position.norm() > reach) {
    std::ostringstream os;
    os << "target at " << target.position.norm() << " mm is beyond the bounding reach of "
       << reach << " mm";
    throw Error(ErrorKind::kUnreachable, os.str());
  }

  const int n = params.particle_count;
  const JointVector range = chain.upper - chain.lower;
  const JointVector vmax = params.velocity_clamp * range;
  Rng rng = make_rng(params.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<JointVector> x(n), v(n, JointVector::Zero()), best_x(n);
  std::vector<double> best_cost(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < kJoints; ++j) x[i](j) = chain.lower(j) + unit(rng) * range(j);
  }
  auto evaluate = [&](const JointVector& q) { return goal_cost(chain, target, q, weights).total; };

  int g = 0;
  for (int i = 0; i < n; ++i) {
    best_x[i] = x[i];
    best_cost[i] = evaluate(x[i]);
    if (best_cost[i] < best_cost[g]) g = i;
  }
  JointVector g_x = best_x[g];
  double g_cost = best_cost[g];

  GoalSolution sol;
  sol.best_history.reserve(static_cast<std::size_t>(params.iteration_count) + 1);
  sol.best_history.push_back(g_cost);

  std::vector<JointVector> r1(n), r2(n);
  std::vector<double> cost(n);
  for (int it = 0; it < params.iteration_count; ++it) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < kJoints; ++j) r1[i](j) = unit(rng);
      for (int j = 0; j < kJoints; ++j) r2[i](j) = unit(rng);
    }
    for (int i = 0; i < n; ++i) {
      JointVector to_best = best_x[i] - x[i];
      JointVector to_global = g_x - x[i];
      for (int j = 0; j < kJoints; ++j) {
        if (chain.is_continuous(j)) {
          to_best(j) = wrap_pi(to_best(j));
          to_global(j) = wrap_pi(to_global(j));
        }
      }
      v[i] = params.inertia * v[i] +
             params.cognitive * r1[i].cwiseProduct(to_best) +
             params.social * r2[i].cwiseProduct(to_global);
      v[i] = v[i].cwiseMax(-vmax).cwiseMin(vmax);
      x[i] += v[i];
      for (int j = 0; j < kJoints; ++j) {
        x[i](j) = chain.is_continuous(j) ? wrap_into(x[i](j), chain.lower(j))
                                         : std::clamp(x[i](j), chain.lower(j), chain.upper(j));
      }
    }
    // Evaluations are independent; the barrier is the update below.
    for (int i = 0; i < n; ++i) cost[i] = evaluate(x[i]);
    for (int i = 0; i < n; ++i) {
      if (cost[i] < best_cost[i]) {
        best_cost[i] = cost[i];
        best_x[i] = x[i];
      }
      if (best_cost[i] < g_cost) {
        g_cost = best_cost[i];
        g_x = best_x[i];
      }
    }
    sol.best_history.push_back(g_cost);
  }

  sol.q = g_x.cwiseMax(chain.lower).cwiseMin(chain.upper);
  sol.cost = goal_cost(chain, target, sol.q, weights);
  sol.converged = sol.cost.total <= weights.converged_cost;
  return sol;
}

double min_cubic_duration(const KinematicChain& chain, const JointVector& q_start,
                          const JointVector& q_goal) {
  // Peak speed of the cubic profile is 1.5 * |dq| / T.
  double duration = 0.0;
  for (int j = 0; j < kJoints; ++j) {
    duration = std::max(duration, 1.5 * std::abs(q_goal(j) - q_start(j)) / chain.velocity_limit(j));
  }
  return duration;
}

JointTrajectory plan_trajectory(const KinematicChain& chain, const JointVector& q_start,
                                const JointVector& q_goal, double duration, double dt) {
  validate(chain);
  if (!(duration > 0.0 && dt > 0.0)) invalid("trajectory: duration and dt must be positive");
  if (!chain.within_limits(q_start) || !chain.within_limits(q_goal)) {
    invalid("trajectory: endpoints must be within joint limits");
  }
  const double needed = min_cubic_duration(chain, q_start, q_goal);
  if (needed > duration * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "duration " << duration << " s is shorter than the " << needed
       << " s the velocity limits allow";
    throw Error(ErrorKind::kVelocityInfeasible, os.str());
  }

  const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(duration / dt - 1e-9)));
  JointTrajectory traj;
  traj.dt = duration / static_cast<double>(steps);
  traj.waypoints.reserve(steps + 1);
  const JointVector delta = q_goal - q_start;
  for (std::size_t i = 0; i <= steps; ++i) {
    const double tau = static_cast<double>(i) / static_cast<double>(steps);
    const double s = tau * tau * (3.0 - 2.0 * tau);
    JointVector q = q_start + s * delta;
    traj.waypoints.push_back(q.cwiseMax(chain.lower).cwiseMin(chain.upper));
  }
  return traj;
}

}  // namespace harvestsim::arm
