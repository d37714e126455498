#pragma once

// Picking-cycle state machine with failure injection and Monte Carlo
// campaign statistics.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "harvestsim/arm.hpp"
#include "harvestsim/control.hpp"
#include "harvestsim/perception.hpp"
#include "harvestsim/plant.hpp"

namespace harvestsim::harvest {

enum class HarvestStage { kApproach, kSeparation, kCutting, kGrasping, kDeparture, kRelease };
inline constexpr int kStageCount = 6;
inline constexpr std::array<HarvestStage, kStageCount> kStageOrder = {
    HarvestStage::kApproach, HarvestStage::kSeparation, HarvestStage::kCutting,
    HarvestStage::kGrasping, HarvestStage::kDeparture,  HarvestStage::kRelease};

std::string_view to_string(HarvestStage stage);

enum class FailureMode { kPedicelMisalignment, kKeypointDepthError, kTransferSlip };
inline constexpr int kFailureModeCount = 3;

std::string_view to_string(FailureMode mode);
HarvestStage bound_stage(FailureMode mode);

/// Lognormal stage durations parameterised by their arithmetic means.
struct StageTimingModel {
  std::array<double, kStageCount> means{6.0, 4.0, 3.0, 4.0, 5.0, 2.34};
  double sigma = 0.15;  // log-space standard deviation
  /// Optional linear diameter scaling: duration *= 1 + gain * (D - reference).
  double diameter_gain_per_mm = 0.0;
  double diameter_reference_mm = 50.0;

  double total_mean() const;
};

struct FailureRates {
  std::array<double, kFailureModeCount> probability{};  // per mode, per trial
};

/// Equal per-mode probability p with (1 - p)^3 = target_success.
double calibrate_failure_rate(double target_success);
FailureRates calibrate_failure_rates(double target_success);

bool cutting_criterion(const Eigen::Vector3d& pedicel_keypoint, const Eigen::Vector3d& cutter_ref,
                       double tol);

enum class ReferenceMode { kMassScaled, kFixed };

struct HarvestConfig {
  StageTimingModel timing;
  FailureRates failure_rates = calibrate_failure_rates(0.8);

  // Cutting
  double cutting_tol_mm = 5.0;
  double depth_window_mm = 10.0;
  double keypoint_sigma_mm = 1.0;
  double depth_sigma_mm = 1.0;
  double pedicel_offset_mm = 0.0;  // forced lateral keypoint bias
  double depth_offset_mm = 0.0;    // forced depth keypoint bias
  double proximity_threshold_mm = 20.0;
  Eigen::Vector3d fruit_position_mm{0.0, 0.0, 450.0};  // in the camera frame

  // Grasping and transfer
  control::PlantConfig plant;
  control::PidGains gains;
  control::PidConfig pid;
  double control_dt = 0.01;
  ReferenceMode reference_mode = ReferenceMode::kMassScaled;
  double fixed_reference = 0.30;
  plant::ReferencePolicy reference_policy;
  int n_contacts = 6;
  double slip_safety = 1.5;

  // Arm motions
  arm::KinematicChain chain = arm::default_chain();
  arm::PsoParams pso;
  arm::GoalWeights goal_weights;
  arm::JointVector q_home = arm::JointVector::Zero();
  Eigen::Vector3d tomato_target_mm{450.0, 0.0, 350.0};
  Eigen::Vector3d punnet_target_mm{0.0, 450.0, 200.0};
  double trajectory_dt = 0.05;

  std::vector<plant::TomatoSample> tomatoes = plant::default_tomatoes();
  int threads = 0;  // 0 = hardware concurrency
};

/// Throws ConfigInvalid naming the offending key.
void validate(const HarvestConfig& config);

/// Joint goals shared by all trials of a campaign.
struct MotionPlan {
  arm::JointVector q_home;
  arm::JointVector q_tomato;
  arm::JointVector q_punnet;
};

/// Solves the tomato and punnet goals with PSO. Throws ConfigInvalid when a
/// goal cannot be reached within the convergence threshold.
MotionPlan prepare_motion(const HarvestConfig& config);

struct TrialRecord {
  std::size_t trial = 0;
  std::string tomato_id;
  std::optional<FailureMode> failure;  // empty = success
  std::array<double, kStageCount> durations{};  // 0 for stages not reached
  int stages_executed = 0;
  double total = 0.0;
  double peak_force = 0.0;  // true force, N; 0 when grasping was not reached
  double held_force = 0.0;  // true force at departure onset

  bool success() const { return !failure.has_value(); }
};

TrialRecord run_trial(const HarvestConfig& config, const MotionPlan& motion,
                      const plant::TomatoSample& tomato, Rng& rng);

struct CampaignSummary {
  std::size_t n_trials = 0;
  std::size_t successes = 0;
  double success_rate = 0.0;
  std::optional<double> mean_cycle_time;  // over successful trials
  std::array<double, kStageCount> stage_means{};  // over successful trials
  std::array<std::size_t, kFailureModeCount> failure_histogram{};
  double min_peak_force = 0.0;  // over successful trials
  double max_peak_force = 0.0;
};

struct Campaign {
  CampaignSummary summary;
  std::vector<TrialRecord> records;
};

/// Runs n trials; trial i uses seed base_seed ^ i and tomato i mod |table|.
/// Trials execute on `config.threads` workers; results are order-independent.
Campaign run_campaign(std::size_t n, const HarvestConfig& config, std::uint64_t base_seed);

CampaignSummary summarize(const std::vector<TrialRecord>& records);

struct StageStats {
  HarvestStage stage;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

/// Per-stage statistics over successful trials; empty when none succeeded.
std::vector<StageStats> stage_report(const std::vector<TrialRecord>& records);

}  // namespace harvestsim::harvest
