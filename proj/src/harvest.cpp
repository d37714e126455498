#include "harvestsim/harvest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "harvestsim/error.hpp"

namespace harvestsim::harvest {
namespace {

[[noreturn]] void bad_config(const std::string& key, const std::string& what) {
  throw Error(ErrorKind::kConfigInvalid, "harvest." + key + ": " + what);
}

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) bad_config(key, what);
}

// Re-throws module validation errors as ConfigInvalid under `section`.
template <typename F>
void check_section(const std::string& section, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    bad_config(section, e.what());
  }
}

double sample_duration(const StageTimingModel& timing, int stage, double diameter_mm,
                       double z) {
  const double s = timing.sigma;
  const double mu = std::log(timing.means[stage]) - 0.5 * s * s;
  const double scale =
      1.0 + timing.diameter_gain_per_mm * (diameter_mm - timing.diameter_reference_mm);
  return std::max(0.0, scale) * std::exp(mu + s * z);
}

arm::JointVector solve_goal(const HarvestConfig& config, const Eigen::Vector3d& target,
                            const std::string& key) {
  arm::GoalWeights weights = config.goal_weights;
  weights.use_direction = false;
  arm::Pose pose;
  pose.position = target;
  arm::GoalSolution sol;
  try {
    sol = arm::pso_solve_goal(config.chain, pose, config.pso, weights);
  } catch (const Error& e) {
    bad_config(key, e.what());
  }
  if (!sol.converged) {
    bad_config(key, "PSO did not reach the target (residual " +
                        std::to_string(sol.cost.position_error) + " mm)");
  }
  return sol.q;
}

// Plans a point-to-point move, stretching the sampled duration when it is
// shorter than the velocity limits allow.
double timed_motion(const HarvestConfig& config, const arm::JointVector& from,
                    const arm::JointVector& to, double sampled) {
  const double duration =
      std::max({sampled, arm::min_cubic_duration(config.chain, from, to), config.trajectory_dt});
  arm::plan_trajectory(config.chain, from, to, duration, config.trajectory_dt);
  return duration;
}

}  // namespace

std::string_view to_string(HarvestStage stage) {
  switch (stage) {
    case HarvestStage::kApproach: return "approach";
    case HarvestStage::kSeparation: return "separation";
    case HarvestStage::kCutting: return "cutting";
    case HarvestStage::kGrasping: return "grasping";
    case HarvestStage::kDeparture: return "departure";
    case HarvestStage::kRelease: return "release";
  }
  return "unknown";
}

std::string_view to_string(FailureMode mode) {
  switch (mode) {
    case FailureMode::kPedicelMisalignment: return "pedicel_misalignment";
    case FailureMode::kKeypointDepthError: return "keypoint_depth_error";
    case FailureMode::kTransferSlip: return "transfer_slip";
  }
  return "unknown";
}

HarvestStage bound_stage(FailureMode mode) {
  return mode == FailureMode::kTransferSlip ? HarvestStage::kDeparture : HarvestStage::kCutting;
}

double StageTimingModel::total_mean() const {
  double total = 0.0;
  for (double m : means) total += m;
  return total;
}

double calibrate_failure_rate(double target_success) {
  if (!(target_success > 0.0 && target_success <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "target success must be in (0, 1]");
  }
  return 1.0 - std::cbrt(target_success);
}

FailureRates calibrate_failure_rates(double target_success) {
  const double p = calibrate_failure_rate(target_success);
  return FailureRates{{p, p, p}};
}

bool cutting_criterion(const Eigen::Vector3d& pedicel_keypoint, const Eigen::Vector3d& cutter_ref,
                       double tol) {
  if (!(tol > 0.0)) throw Error(ErrorKind::kInvalidArgument, "cutting tolerance must be positive");
  return (pedicel_keypoint - cutter_ref).norm() <= tol;
}

void validate(const HarvestConfig& c) {
  for (int s = 0; s < kStageCount; ++s) {
    const std::string stage(to_string(kStageOrder[s]));
    require(std::isfinite(c.timing.means[s]) && c.timing.means[s] > 0.0,
            "stage_means_s." + stage, "must be positive");
  }
  require(std::isfinite(c.timing.sigma) && c.timing.sigma >= 0.0, "duration_sigma",
          "must be >= 0");
  require(std::isfinite(c.timing.diameter_gain_per_mm), "diameter_gain_per_mm", "must be finite");
  for (int m = 0; m < kFailureModeCount; ++m) {
    const double p = c.failure_rates.probability[m];
    require(p >= 0.0 && p <= 1.0,
            "failure_rates." + std::string(to_string(static_cast<FailureMode>(m))),
            "must be in [0, 1]");
  }
  require(c.cutting_tol_mm > 0.0, "cutting_tol_mm", "must be positive");
  require(c.depth_window_mm > 0.0, "depth_window_mm", "must be positive");
  require(c.keypoint_sigma_mm >= 0.0, "keypoint_sigma_mm", "must be >= 0");
  require(c.depth_sigma_mm >= 0.0, "depth_sigma_mm", "must be >= 0");
  require(std::isfinite(c.pedicel_offset_mm), "pedicel_offset_mm", "must be finite");
  require(std::isfinite(c.depth_offset_mm), "depth_offset_mm", "must be finite");
  require(c.proximity_threshold_mm >= 0.0, "proximity_threshold_mm", "must be >= 0");
  require(c.control_dt > 0.0, "control_dt", "must be positive");
  require(c.fixed_reference >= 0.0, "fixed_reference", "must be >= 0");
  require(c.n_contacts >= 1, "n_contacts", "must be >= 1");
  require(c.slip_safety >= 1.0, "slip_safety", "must be >= 1");
  require(c.trajectory_dt > 0.0, "trajectory_dt", "must be positive");
  require(!c.tomatoes.empty(), "tomatoes", "must not be empty");
  require(c.threads >= 0, "threads", "must be >= 0");

  check_section("plant", [&] {
    plant::validate(c.plant.servo);
    plant::validate(c.plant.contact);
    plant::validate(c.plant.fsr);
    for (const auto& t : c.tomatoes) plant::validate(t);
  });
  check_section("control", [&] {
    control::validate(c.gains);
    control::validate(c.pid);
  });
  check_section("arm", [&] {
    arm::validate(c.chain);
    arm::validate(c.pso);
    if (!c.chain.within_limits(c.q_home)) {
      throw Error(ErrorKind::kInvalidArgument, "home configuration outside joint limits");
    }
  });
}

MotionPlan prepare_motion(const HarvestConfig& config) {
  MotionPlan plan;
  plan.q_home = config.q_home;
  plan.q_tomato = solve_goal(config, config.tomato_target_mm, "tomato_target_mm");
  plan.q_punnet = solve_goal(config, config.punnet_target_mm, "punnet_target_mm");
  // The last joint spins about the tool axis and cannot move the tool
  // point, so goals keep it at its home angle when that holds numerically.
  const int roll = arm::kJoints - 1;
  for (arm::JointVector* q : {&plan.q_tomato, &plan.q_punnet}) {
    arm::JointVector rolled = *q;
    rolled(roll) = plan.q_home(roll);
    const double moved = (arm::forward_kinematics(config.chain, rolled).position -
                          arm::forward_kinematics(config.chain, *q).position).norm();
    if (moved < 1e-9) *q = rolled;
  }
  return plan;
}

TrialRecord run_trial(const HarvestConfig& config, const MotionPlan& motion,
                      const plant::TomatoSample& tomato, Rng& rng) {
  // Every trial draws the same number of variates in the same order, so
  // changing a probability never shifts the stream of later draws.
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::array<double, kStageCount> z{};
  for (double& v : z) v = gauss(rng);
  std::array<double, kFailureModeCount> u{};
  for (double& v : u) v = unit(rng);
  Rng perception_rng = fork_rng(rng, 1);
  const std::uint64_t grasp_seed = rng();

  TrialRecord rec;
  rec.tomato_id = tomato.id;
  auto duration = [&](HarvestStage s) {
    const int i = static_cast<int>(s);
    return sample_duration(config.timing, i, tomato.diameter_mm, z[i]);
  };
  auto finish = [&](HarvestStage s, double d) {
    rec.durations[static_cast<int>(s)] = d;
    rec.stages_executed = static_cast<int>(s) + 1;
  };
  auto fail = [&](FailureMode m) {
    rec.failure = m;
    for (double d : rec.durations) rec.total += d;
    return rec;
  };

  finish(HarvestStage::kApproach,
         timed_motion(config, motion.q_home, motion.q_tomato, duration(HarvestStage::kApproach)));

  // Separation ends when the infrared sensor sees the fruit in the gripper.
  finish(HarvestStage::kSeparation, duration(HarvestStage::kSeparation));
  const bool seated =
      plant::proximity_triggered(0.5 * tomato.diameter_mm, config.proximity_threshold_mm);

  finish(HarvestStage::kCutting, duration(HarvestStage::kCutting));
  {
    perception::SceneObject fruit;
    fruit.center = config.fruit_position_mm;
    fruit.radius = 0.5 * tomato.diameter_mm;
    perception::SceneParams params;
    fruit.pedicel =
        fruit.center + Eigen::Vector3d(0.0, fruit.radius * (1.0 + params.stem_offset_fraction), 0.0);
    perception::NoiseModel noise;
    noise.keypoint_sigma = config.keypoint_sigma_mm;
    noise.depth_sigma = config.depth_sigma_mm;
    const auto dets = perception::simulate_detections({fruit}, noise, params, perception_rng);
    Eigen::Vector3d kp = dets.front().pedicel_keypoint;
    kp.x() += config.pedicel_offset_mm;
    kp.z() += config.depth_offset_mm;

    const double depth_error = std::abs(kp.z() - fruit.pedicel.z());
    if (!seated || depth_error > config.depth_window_mm ||
        u[1] < config.failure_rates.probability[1]) {
      return fail(FailureMode::kKeypointDepthError);
    }
    // Lateral alignment in the image plane; depth is judged by the window above.
    const Eigen::Vector3d kp_lateral(kp.x(), kp.y(), 0.0);
    const Eigen::Vector3d ref_lateral(fruit.pedicel.x(), fruit.pedicel.y(), 0.0);
    if (!cutting_criterion(kp_lateral, ref_lateral, config.cutting_tol_mm) ||
        u[0] < config.failure_rates.probability[0]) {
      return fail(FailureMode::kPedicelMisalignment);
    }
  }

  const double t_grasp = duration(HarvestStage::kGrasping);
  finish(HarvestStage::kGrasping, t_grasp);
  {
    control::GraspRun run;
    run.f_ref = config.reference_mode == ReferenceMode::kMassScaled
                    ? plant::reference_force(tomato, config.reference_policy)
                    : config.fixed_reference;
    run.duration = t_grasp;
    run.dt = config.control_dt;
    run.seed = grasp_seed;
    const control::ForceTrace trace =
        control::run_grasp(tomato, config.plant, config.gains, config.pid, run);
    for (const auto& s : trace.samples) rec.peak_force = std::max(rec.peak_force, s.true_force);
    rec.held_force = trace.samples.empty() ? 0.0 : trace.samples.back().true_force;
  }

  finish(HarvestStage::kDeparture, timed_motion(config, motion.q_tomato, motion.q_punnet,
                                                duration(HarvestStage::kDeparture)));
  const double needed = plant::min_grasp_force(tomato, config.n_contacts, config.slip_safety);
  if (rec.held_force < needed || u[2] < config.failure_rates.probability[2]) {
    return fail(FailureMode::kTransferSlip);
  }

  finish(HarvestStage::kRelease, duration(HarvestStage::kRelease));
  for (double d : rec.durations) rec.total += d;
  return rec;
}

CampaignSummary summarize(const std::vector<TrialRecord>& records) {
  CampaignSummary s;
  s.n_trials = records.size();
  double cycle_sum = 0.0;
  std::array<double, kStageCount> stage_sum{};
  bool first = true;
  for (const TrialRecord& r : records) {
    if (!r.success()) {
      ++s.failure_histogram[static_cast<int>(*r.failure)];
      continue;
    }
    ++s.successes;
    cycle_sum += r.total;
    for (int i = 0; i < kStageCount; ++i) stage_sum[i] += r.durations[i];
    s.min_peak_force = first ? r.peak_force : std::min(s.min_peak_force, r.peak_force);
    s.max_peak_force = first ? r.peak_force : std::max(s.max_peak_force, r.peak_force);
    first = false;
  }
  if (s.n_trials > 0) {
    s.success_rate = static_cast<double>(s.successes) / static_cast<double>(s.n_trials);
  }
  if (s.successes > 0) {
    const auto n = static_cast<double>(s.successes);
    s.mean_cycle_time = cycle_sum / n;
    for (int i = 0; i < kStageCount; ++i) s.stage_means[i] = stage_sum[i] / n;
  }
  return s;
}

Campaign run_campaign(std::size_t n, const HarvestConfig& config, std::uint64_t base_seed) {
  if (n < 1) throw Error(ErrorKind::kInvalidArgument, "campaign needs at least one trial");
  validate(config);
  const MotionPlan motion = prepare_motion(config);

  Campaign out;
  out.records.resize(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      Rng rng = make_rng(base_seed ^ static_cast<std::uint64_t>(i));
      const auto& tomato = config.tomatoes[i % config.tomatoes.size()];
      TrialRecord rec = run_trial(config, motion, tomato, rng);
      rec.trial = i;
      out.records[i] = std::move(rec);
    }
  };
  std::size_t threads = config.threads > 0 ? static_cast<std::size_t>(config.threads)
                                           : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  out.summary = summarize(out.records);
  return out;
}

std::vector<StageStats> stage_report(const std::vector<TrialRecord>& records) {
  std::vector<StageStats> table;
  std::size_t successes = 0;
  for (int i = 0; i < kStageCount; ++i) {
    table.push_back({kStageOrder[i], 0.0, std::numeric_limits<double>::infinity(),
                     -std::numeric_limits<double>::infinity()});
  }
  for (const TrialRecord& r : records) {
    if (!r.success()) continue;
    ++successes;
    for (int i = 0; i < kStageCount; ++i) {
      table[i].mean += r.durations[i];
      table[i].min = std::min(table[i].min, r.durations[i]);
      table[i].max = std::max(table[i].max, r.durations[i]);
    }
  }
  if (successes == 0) return {};
  for (auto& row : table) row.mean /= static_cast<double>(successes);
  return table;
}

}  // namespace harvestsim::harvest
