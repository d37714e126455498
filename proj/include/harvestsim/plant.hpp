#pragma once

// Behavioral model of the grasped fruit, the gripper servo and the FSR
// sensing chain. Servo angles are in degrees (that is what the hardware
// speaks), forces in newtons.

#include <array>
#include <string>
#include <vector>

#include "harvestsim/rng.hpp"

namespace harvestsim::plant {

inline constexpr double kGravity = 9.81;

struct TomatoSample {
  std::string id;
  double mass_g = 0.0;
  double diameter_mm = 0.0;
  double stiffness_n_per_mm = 0.4;
  double friction_mu = 0.8;
};

void validate(const TomatoSample& tomato);

/// F1..F5 grasp-trial samples (mass g, diameter mm).
std::vector<TomatoSample> default_tomatoes();

struct ServoModel {
  double angle_min = 0.0;    // deg
  double angle_max = 180.0;  // deg
  double max_rate = 60.0;    // deg/s
  double time_constant = 0.5;  // s, first-order lag
  int delay_steps = 1;       // command transport delay in control periods
  double initial_angle = 0.0;  // fully open
};

void validate(const ServoModel& servo);

/// Maps servo angle to finger squeeze. Engagement angle falls linearly with
/// fruit diameter; past engagement the fruit acts as a linear spring.
struct ContactModel {
  double engage_intercept_deg = 100.0;  // engagement angle at zero diameter
  double engage_slope_deg_per_mm = 0.5;
  double travel_mm_per_deg = 0.05;      // finger closure per servo degree
  double force_limit = 5.0;             // N
};

void validate(const ContactModel& contact);

struct FsrModel {
  double force_max = 2.0;    // saturation, N
  int adc_bits = 10;
  double noise_sigma = 0.003;  // N
  double cal_gain = 1023.0 / 2.0;  // counts per N
  double cal_offset = 0.0;         // counts
  int sensor_count = 3;
};

void validate(const FsrModel& fsr);

struct PlantState {
  double servo_angle = 0.0;
  double true_force = 0.0;
  double time = 0.0;
};

/// Servo angle at which the fingers first touch a fruit of this diameter.
double contact_angle(const ContactModel& contact, double diameter_mm);

double contact_force(const ContactModel& contact, const TomatoSample& tomato,
                     double servo_angle);

/// One sensor read: saturate, add noise, quantize through the ADC and map
/// counts back to newtons with the calibration.
double fsr_read(const FsrModel& fsr, double true_force, Rng& rng);

/// Mean of `fsr.sensor_count` independent reads of the same force.
double fsr_mean(const FsrModel& fsr, double true_force, Rng& rng);

/// Newtons per ADC count.
double fsr_resolution(const FsrModel& fsr);

/// Advances the servo one period toward `command_angle`. First-order lag
/// toward the command, slew-limited, clamped to the servo range.
PlantState step(const PlantState& state, double command_angle, double dt,
                const ServoModel& servo, const ContactModel& contact,
                const TomatoSample& tomato);

/// Mass-scaled force reference, clamped to the gentle-grasp envelope.
struct ReferencePolicy {
  double k_ref = 0.60;
  double floor = 0.20;
  double ceiling = 0.50;
};

double reference_force(const TomatoSample& tomato, const ReferencePolicy& policy = {});

/// Friction-limited minimum squeeze to carry the fruit against gravity.
double min_grasp_force(const TomatoSample& tomato, int n_contacts, double safety);

/// Infrared proximity trigger: true once the fruit sits at least
/// `threshold_mm` deep in the gripper.
bool proximity_triggered(double depth_mm, double threshold_mm);

/// Servo with a transport-delay line, stepped by a closed loop.
class ServoPlant {
 public:
  ServoPlant(ServoModel servo, ContactModel contact, TomatoSample tomato);

  const PlantState& state() const { return state_; }
  const TomatoSample& tomato() const { return tomato_; }

  /// Queues `command_angle` and advances by dt using the delayed command.
  const PlantState& advance(double command_angle, double dt);

 private:
  ServoModel servo_;
  ContactModel contact_;
  TomatoSample tomato_;
  PlantState state_;
  std::vector<double> pipeline_;
  std::size_t head_ = 0;
};

}  // namespace harvestsim::plant
