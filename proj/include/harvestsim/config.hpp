#pragma once

// Run configuration: one JSON document with a section per module. Lengths
// in mm, angles in degrees, times in s, forces in N. Angles are converted
// to radians on load.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "harvestsim/arm.hpp"
#include "harvestsim/control.hpp"
#include "harvestsim/harvest.hpp"
#include "harvestsim/mechanism.hpp"
#include "harvestsim/perception.hpp"
#include "harvestsim/plant.hpp"

namespace harvestsim::config {

inline constexpr const char* kToolVersion = "1.0.0";

struct GeometrySection {
  mechanism::GripperGeometry geometry = mechanism::reference_geometry();
  mechanism::LinearContactMap contact_map;
  int fingers = 6;
  double eta = 0.8;
  double force_min = 0.0;
  double force_max = 1.0;
  int force_points = 21;
  int sweep_points = 121;
};

struct PlantSection {
  std::vector<plant::TomatoSample> tomatoes = plant::default_tomatoes();
  plant::ServoModel servo;
  plant::ContactModel contact;
  plant::FsrModel fsr;
};

struct ControlSection {
  control::PidGains gains;
  control::PidConfig pid;
  double dt = 0.01;
  double duration = 10.0;
  harvest::ReferenceMode reference_mode = harvest::ReferenceMode::kMassScaled;
  double fixed_reference = 0.30;
  plant::ReferencePolicy reference_policy;
  std::vector<double> tune_kp_grid;
  double tune_reference = 0.30;
  double tune_duration = 6.0;
  int tune_min_crossings = 4;
  double tune_amplitude_ratio = 0.9;

  ControlSection();
};

struct ArmSection {
  arm::KinematicChain chain = arm::default_chain();
  arm::PsoParams pso;
  arm::GoalWeights weights;
  arm::JointVector home = arm::JointVector::Zero();
  Eigen::Vector3d tomato_target{450.0, 0.0, 350.0};
  Eigen::Vector3d punnet_target{0.0, 450.0, 200.0};
  double plan_duration = 4.0;
  double trajectory_dt = 0.02;
};

struct PerceptionSection {
  perception::NoiseModel noise;
  perception::SceneParams scene;
  int tomatoes_per_scene = 5;
  int scenes = 100;
  double iou_threshold = 0.5;
};

struct HarvestSection {
  harvest::StageTimingModel timing;
  double target_success = 0.8;
  /// Explicit per-mode probabilities; when absent they are calibrated from
  /// target_success.
  std::optional<harvest::FailureRates> failure_rates;
  double cutting_tol = 5.0;
  double depth_window = 10.0;
  double keypoint_sigma = 1.0;
  double depth_sigma = 1.0;
  double pedicel_offset = 0.0;
  double depth_offset = 0.0;
  double proximity_threshold = 20.0;
  Eigen::Vector3d fruit_position{0.0, 0.0, 450.0};
  int n_contacts = 6;
  double slip_safety = 1.5;
  double trajectory_dt = 0.05;
  int trials = 100;
  int threads = 0;
};

struct RunConfig {
  std::uint64_t seed = 7;
  GeometrySection geometry;
  PlantSection plant;
  ControlSection control;
  ArmSection arm;
  PerceptionSection perception;
  HarvestSection harvest;

  control::PlantConfig plant_config() const;
  harvest::HarvestConfig harvest_config() const;
};

/// Parses and validates a document. Every section is required; unknown keys
/// and invalid values throw ConfigInvalid with the key path in the message.
RunConfig parse(const nlohmann::json& doc);

/// Full document for `config`; parse(to_json(c)) reproduces c up to
/// degree/radian rounding.
nlohmann::json to_json(const RunConfig& config);

/// Re-runs every module validation; throws ConfigInvalid naming the section.
void validate(const RunConfig& config);

/// Reads a JSON file; throws Io when unreadable, ConfigInvalid when malformed.
nlohmann::json load_document(const std::string& path);

/// FNV-1a 64 over the canonical serialisation, as 16 hex digits.
std::string config_hash(const RunConfig& config);

nlohmann::json manifest(const RunConfig& config, const std::string& command,
                        const std::vector<std::string>& outputs);

}  // namespace harvestsim::config
