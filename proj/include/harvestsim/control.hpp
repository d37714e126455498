#pragma once

// Discrete PID grasp-force regulation against the simulated plant.

#include <cstdint>
#include <optional>
#include <vector>

#include "harvestsim/plant.hpp"

namespace harvestsim::control {

/// Gains in servo degrees per newton (kp), per N*s (ki) and deg*s/N (kd).
struct PidGains {
  double kp = 0.15;
  double ki = 0.02;
  double kd = 0.001;
};

void validate(const PidGains& gains);

struct PidConfig {
  double base_angle = 70.0;    // deg, command at zero PID output
  double output_scale = 6000.0;  // PID units -> servo degrees
  double integral_limit = 0.16;  // |integral| clamp, N*s
  double derivative_filter = 0.1;  // EMA coefficient in (0, 1]; 1 = unfiltered
  double angle_min = 0.0;
  double angle_max = 180.0;
};

void validate(const PidConfig& config);

struct ControllerState {
  double integral = 0.0;
  double prev_error = 0.0;
  double filtered_derivative = 0.0;
  double prev_command = 0.0;
  bool primed = false;  // false until the first error sample is seen
};

struct PidOutput {
  double command = 0.0;  // deg
  ControllerState state;
};

PidOutput pid_step(const PidGains& gains, const PidConfig& config,
                   const ControllerState& state, double f_ref, double f_meas, double dt);

struct TraceSample {
  double time = 0.0;
  double reference = 0.0;
  double measured = 0.0;
  double true_force = 0.0;
  double command = 0.0;
  double servo_angle = 0.0;
};

struct ForceTrace {
  double dt = 0.0;
  std::vector<TraceSample> samples;
};

struct PlantConfig {
  plant::ServoModel servo;
  plant::ContactModel contact;
  plant::FsrModel fsr;
};

struct GraspRun {
  double f_ref = 0.30;
  double duration = 10.0;
  double dt = 0.01;
  std::uint64_t seed = 0;
};

/// Closed loop: plant step, averaged FSR reading, PID update. Samples are
/// recorded after each plant step, so sample i is at time (i + 1) * dt.
ForceTrace run_grasp(const plant::TomatoSample& tomato, const PlantConfig& plant_config,
                     const PidGains& gains, const PidConfig& pid, const GraspRun& run);

/// Grasp under PID until `hold_end`, then open the servo with a ramp at
/// `release_rate` deg/s from its current angle.
struct GraspCycle {
  GraspRun grasp;
  double hold_end = 10.0;
  double release_rate = 10.0;
};

ForceTrace run_grasp_cycle(const plant::TomatoSample& tomato,
                           const PlantConfig& plant_config, const PidGains& gains,
                           const PidConfig& pid, const GraspCycle& cycle);

inline constexpr double kSettleBand = 0.02;  // N

struct ResponseMetrics {
  /// Start of the final uninterrupted stay inside the band; empty when the
  /// trace never settles.
  std::optional<double> settle_time;
  double overshoot = 0.0;         // fraction of reference
  double steady_state_dev = 0.0;  // max |error| over the final 30 %
};

/// Metrics on the measured force. Requires a non-empty trace; the reference
/// is taken from the final sample.
ResponseMetrics response_metrics(const ForceTrace& trace);

struct Oscillation {
  double ultimate_gain = 0.0;  // kp at which sustained oscillation appeared
  double period = 0.0;         // s
};

struct AutotuneResult {
  PidGains gains;
  Oscillation oscillation;
};

struct AutotuneOptions {
  double duration = 6.0;
  double dt = 0.01;
  std::uint64_t seed = 0;
  int min_crossings = 4;
  double amplitude_ratio = 0.9;
};

/// Detects sustained oscillation in an error signal: at least
/// `min_crossings` zero crossings in the analysed tail, successive half-cycle
/// peak ratio >= `amplitude_ratio`, and half-periods of at least two samples
/// (single-sample alternation is a sampling artefact, not a resolvable
/// oscillation). Returns the period in samples.
std::optional<double> detect_oscillation(const std::vector<double>& error,
                                         int min_crossings, double amplitude_ratio);

/// Classic Ziegler-Nichols PID from the ultimate gain and period.
PidGains ziegler_nichols(double ultimate_gain, double period);

/// P-only sweep over `kp_grid` (ascending) until sustained oscillation;
/// throws NoOscillationFound when the grid is exhausted.
AutotuneResult zn_autotune(const plant::TomatoSample& tomato, const PlantConfig& plant_config,
                           const PidConfig& pid, const std::vector<double>& kp_grid,
                           double f_ref, const AutotuneOptions& options = {});

}  // namespace harvestsim::control
