#include "harvestsim/plant.hpp"

#include <algorithm>
#include <cmath>

#include "harvestsim/error.hpp"

namespace harvestsim::plant {
namespace {

[[noreturn]] void invalid(const std::string& what) {
  throw Error(ErrorKind::kInvalidArgument, what);
}

}  // namespace

void validate(const TomatoSample& t) {
  if (!(t.mass_g > 0.0)) invalid("tomato '" + t.id + "': mass must be positive");
  if (!(t.diameter_mm >= 30.0 && t.diameter_mm <= 80.0)) {
    invalid("tomato '" + t.id + "': diameter outside [30, 80] mm");
  }
  if (!(t.stiffness_n_per_mm > 0.0)) invalid("tomato '" + t.id + "': stiffness must be positive");
  if (!(t.friction_mu > 0.0 && t.friction_mu < 2.0)) {
    invalid("tomato '" + t.id + "': friction_mu outside (0, 2)");
  }
}

std::vector<TomatoSample> default_tomatoes() {
  return {
      {"F1", 81.0, 57.0, 0.4, 0.8},
      {"F2", 72.0, 54.0, 0.4, 0.8},
      {"F3", 76.0, 55.0, 0.4, 0.8},
      {"F4", 50.0, 48.0, 0.4, 0.8},
      {"F5", 40.0, 43.0, 0.4, 0.8},
  };
}

void validate(const ServoModel& s) {
  if (!(s.angle_min >= 0.0 && s.angle_max <= 180.0 && s.angle_min < s.angle_max)) {
    invalid("servo: require 0 <= angle_min < angle_max <= 180");
  }
  if (!(s.max_rate > 0.0)) invalid("servo: max_rate must be positive");
  if (!(s.time_constant > 0.0)) invalid("servo: time_constant must be positive");
  if (s.delay_steps < 0) invalid("servo: delay_steps must be non-negative");
  if (s.initial_angle < s.angle_min || s.initial_angle > s.angle_max) {
    invalid("servo: initial_angle outside the servo range");
  }
}

void validate(const ContactModel& c) {
  if (!(c.engage_slope_deg_per_mm > 0.0)) invalid("contact: engagement slope must be positive");
  if (!(c.travel_mm_per_deg > 0.0)) invalid("contact: travel_mm_per_deg must be positive");
  if (!(c.force_limit > 0.0)) invalid("contact: force_limit must be positive");
}

void validate(const FsrModel& f) {
  if (!(f.force_max > 0.0)) invalid("fsr: force_max must be positive");
  if (f.adc_bits != 8 && f.adc_bits != 10 && f.adc_bits != 12) {
    invalid("fsr: adc_bits must be 8, 10 or 12");
  }
  if (!(f.noise_sigma >= 0.0)) invalid("fsr: noise_sigma must be non-negative");
  if (!(f.cal_gain > 0.0)) invalid("fsr: cal_gain must be positive");
  if (f.sensor_count < 1) invalid("fsr: sensor_count must be >= 1");
}

double contact_angle(const ContactModel& c, double diameter_mm) {
  return c.engage_intercept_deg - c.engage_slope_deg_per_mm * diameter_mm;
}

double contact_force(const ContactModel& c, const TomatoSample& t, double servo_angle) {
  const double squeeze_deg = std::max(0.0, servo_angle - contact_angle(c, t.diameter_mm));
  const double force = t.stiffness_n_per_mm * c.travel_mm_per_deg * squeeze_deg;
  return std::min(force, c.force_limit);
}

double fsr_resolution(const FsrModel& f) { return 1.0 / f.cal_gain; }

double fsr_read(const FsrModel& f, double true_force, Rng& rng) {
  double force = std::min(true_force, f.force_max);
  if (f.noise_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, f.noise_sigma);
    force += noise(rng);
  }
  const double full_scale = std::ldexp(1.0, f.adc_bits) - 1.0;
  const double counts = std::clamp(std::round(f.cal_gain * force + f.cal_offset), 0.0, full_scale);
  return (counts - f.cal_offset) / f.cal_gain;
}

double fsr_mean(const FsrModel& f, double true_force, Rng& rng) {
  double sum = 0.0;
  for (int i = 0; i < f.sensor_count; ++i) sum += fsr_read(f, true_force, rng);
  return sum / f.sensor_count;
}

PlantState step(const PlantState& state, double command_angle, double dt,
                const ServoModel& servo, const ContactModel& contact,
                const TomatoSample& tomato) {
  if (!(dt > 0.0)) invalid("plant step: dt must be positive");
  const double target = std::clamp(command_angle, servo.angle_min, servo.angle_max);
  const double blend = -std::expm1(-dt / servo.time_constant);
  const double max_move = servo.max_rate * dt;
  const double move = std::clamp((target - state.servo_angle) * blend, -max_move, max_move);

  PlantState next;
  next.servo_angle = std::clamp(state.servo_angle + move, servo.angle_min, servo.angle_max);
  next.true_force = contact_force(contact, tomato, next.servo_angle);
  next.time = state.time + dt;
  return next;
}

double reference_force(const TomatoSample& t, const ReferencePolicy& p) {
  const double weight = t.mass_g * 1e-3 * kGravity;
  return std::clamp(p.k_ref * weight, p.floor, p.ceiling);
}

double min_grasp_force(const TomatoSample& t, int n_contacts, double safety) {
  if (n_contacts < 1) invalid("min_grasp_force: n_contacts must be >= 1");
  if (!(safety >= 1.0)) invalid("min_grasp_force: safety must be >= 1");
  return safety * t.mass_g * 1e-3 * kGravity / (t.friction_mu * n_contacts);
}

bool proximity_triggered(double depth_mm, double threshold_mm) {
  return depth_mm >= threshold_mm;
}

ServoPlant::ServoPlant(ServoModel servo, ContactModel contact, TomatoSample tomato)
    : servo_(servo), contact_(contact), tomato_(std::move(tomato)) {
  validate(servo_);
  validate(contact_);
  validate(tomato_);
  state_.servo_angle = servo_.initial_angle;
  state_.true_force = contact_force(contact_, tomato_, state_.servo_angle);
  pipeline_.assign(static_cast<std::size_t>(servo_.delay_steps), servo_.initial_angle);
}

const PlantState& ServoPlant::advance(double command_angle, double dt) {
  double applied = command_angle;
  if (!pipeline_.empty()) {
    applied = pipeline_[head_];
    pipeline_[head_] = command_angle;
    head_ = (head_ + 1) % pipeline_.size();
  }
  state_ = step(state_, applied, dt, servo_, contact_, tomato_);
  return state_;
}

}  // namespace harvestsim::plant
