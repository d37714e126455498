#include "harvestsim/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "harvestsim/error.hpp"

namespace harvestsim::control {
namespace {

constexpr double kHysteresisFraction = 0.2;
constexpr std::size_t kMaxHalfPeriodSpread = 3;

[[noreturn]] void invalid(const std::string& what) {
  throw Error(ErrorKind::kInvalidArgument, what);
}

std::size_t step_count(double duration, double dt) {
  return static_cast<std::size_t>(std::llround(duration / dt));
}

}  // namespace

void validate(const PidGains& g) {
  if (!(g.kp >= 0.0 && g.ki >= 0.0 && g.kd >= 0.0)) invalid("pid gains must be non-negative");
}

void validate(const PidConfig& c) {
  if (!(c.output_scale > 0.0)) invalid("pid: output_scale must be positive");
  if (!(c.integral_limit >= 0.0)) invalid("pid: integral_limit must be non-negative");
  if (!(c.derivative_filter > 0.0 && c.derivative_filter <= 1.0)) {
    invalid("pid: derivative_filter must be in (0, 1]");
  }
  if (!(c.angle_min < c.angle_max)) invalid("pid: angle_min must be below angle_max");
  if (c.base_angle < c.angle_min || c.base_angle > c.angle_max) {
    invalid("pid: base_angle outside the command range");
  }
}

PidOutput pid_step(const PidGains& g, const PidConfig& c, const ControllerState& s,
                   double f_ref, double f_meas, double dt) {
  if (!(dt > 0.0)) invalid("pid_step: dt must be positive");
  const double error = f_ref - f_meas;

  ControllerState next = s;
  next.integral = std::clamp(s.integral + error * dt, -c.integral_limit, c.integral_limit);
  const double raw_derivative = s.primed ? (error - s.prev_error) / dt : 0.0;
  next.filtered_derivative =
      s.filtered_derivative + c.derivative_filter * (raw_derivative - s.filtered_derivative);
  next.prev_error = error;
  next.primed = true;

  const double output = g.kp * error + g.ki * next.integral + g.kd * next.filtered_derivative;
  next.prev_command = std::clamp(c.base_angle + c.output_scale * output, c.angle_min, c.angle_max);
  return {next.prev_command, next};
}

namespace {

struct Loop {
  plant::ServoPlant servo;
  Rng rng;
  ControllerState controller;
};

ForceTrace closed_loop(const plant::TomatoSample& tomato, const PlantConfig& pc,
                       const PidGains& gains, const PidConfig& pid, const GraspRun& run,
                       double hold_end, double release_rate) {
  validate(gains);
  validate(pid);
  plant::validate(pc.fsr);
  if (!(run.dt > 0.0)) invalid("grasp: dt must be positive");
  if (!(run.duration > 0.0)) invalid("grasp: duration must be positive");
  if (!(run.f_ref >= 0.0)) invalid("grasp: reference force must be non-negative");

  Loop loop{plant::ServoPlant(pc.servo, pc.contact, tomato), make_rng(run.seed), {}};
  loop.controller.prev_command = pid.base_angle;

  ForceTrace trace;
  trace.dt = run.dt;
  const std::size_t n = step_count(run.duration, run.dt);
  trace.samples.reserve(n);

  double command = pc.servo.initial_angle;
  double release_start = 0.0;
  bool releasing = false;
  for (std::size_t i = 0; i < n; ++i) {
    const plant::PlantState& ps = loop.servo.advance(command, run.dt);
    const double measured = plant::fsr_mean(pc.fsr, ps.true_force, loop.rng);
    const double t = static_cast<double>(i + 1) * run.dt;

    double reference = run.f_ref;
    if (t > hold_end) {
      if (!releasing) {
        releasing = true;
        release_start = ps.servo_angle;
      }
      reference = 0.0;
      release_start = std::max(pc.servo.angle_min, release_start - release_rate * run.dt);
      command = release_start;
    } else {
      const PidOutput out =
          pid_step(gains, pid, loop.controller, run.f_ref, measured, run.dt);
      loop.controller = out.state;
      command = out.command;
    }
    trace.samples.push_back({t, reference, measured, ps.true_force, command, ps.servo_angle});
  }
  return trace;
}

}  // namespace

ForceTrace run_grasp(const plant::TomatoSample& tomato, const PlantConfig& pc,
                     const PidGains& gains, const PidConfig& pid, const GraspRun& run) {
  return closed_loop(tomato, pc, gains, pid, run, std::numeric_limits<double>::infinity(), 0.0);
}

ForceTrace run_grasp_cycle(const plant::TomatoSample& tomato, const PlantConfig& pc,
                           const PidGains& gains, const PidConfig& pid,
                           const GraspCycle& cycle) {
  if (!(cycle.release_rate > 0.0)) invalid("grasp cycle: release_rate must be positive");
  return closed_loop(tomato, pc, gains, pid, cycle.grasp, cycle.hold_end, cycle.release_rate);
}

ResponseMetrics response_metrics(const ForceTrace& trace) {
  const auto& s = trace.samples;
  if (s.empty()) invalid("response_metrics: empty trace");
  const double reference = s.back().reference;

  ResponseMetrics m;
  // Walk backwards to find the last sample outside the band.
  std::size_t first_inside = s.size();
  for (std::size_t i = s.size(); i-- > 0;) {
    if (std::abs(s[i].measured - reference) > kSettleBand) break;
    first_inside = i;
  }
  // Traces start at t = 0; a trace that is in band throughout settles at 0.
  if (first_inside < s.size()) m.settle_time = first_inside == 0 ? 0.0 : s[first_inside].time;

  double peak = 0.0;
  for (const auto& x : s) peak = std::max(peak, x.measured);
  m.overshoot = reference > 0.0 ? std::max(0.0, peak - reference) / reference : 0.0;

  const std::size_t tail_start = s.size() - (s.size() * 3 + 9) / 10;
  for (std::size_t i = tail_start; i < s.size(); ++i) {
    m.steady_state_dev = std::max(m.steady_state_dev, std::abs(s[i].measured - reference));
  }
  return m;
}

std::optional<double> detect_oscillation(const std::vector<double>& error, int min_crossings,
                                         double amplitude_ratio) {
  if (error.size() < 4) return std::nullopt;
  // Oscillation about the window mean; a P-only loop settles with an offset.
  double mean = 0.0;
  for (double e : error) mean += e;
  mean /= static_cast<double>(error.size());
  std::vector<double> d(error.size());
  double amp = 0.0;
  for (std::size_t i = 0; i < error.size(); ++i) {
    d[i] = error[i] - mean;
    amp = std::max(amp, std::abs(d[i]));
  }
  if (!(amp > 0.0)) return std::nullopt;

  // Sign changes with hysteresis so sensor noise near zero does not chatter.
  const double band = kHysteresisFraction * amp;
  std::vector<std::size_t> crossings;
  int side = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const int now = d[i] > band ? 1 : (d[i] < -band ? -1 : 0);
    if (now == 0) continue;
    if (side != 0 && now != side) crossings.push_back(i);
    side = now;
  }
  if (static_cast<int>(crossings.size()) < std::max(min_crossings, 2) + 1) return std::nullopt;

  std::vector<double> peaks;
  std::size_t shortest = crossings.back(), longest = 0, total = 0;
  for (std::size_t j = 0; j + 1 < crossings.size(); ++j) {
    const std::size_t lo = crossings[j], hi = crossings[j + 1];
    shortest = std::min(shortest, hi - lo);
    longest = std::max(longest, hi - lo);
    total += hi - lo;
    double peak = 0.0;
    for (std::size_t i = lo; i < hi; ++i) peak = std::max(peak, std::abs(d[i]));
    peaks.push_back(peak);
  }
  // Single-sample alternation is not a resolvable oscillation, and noise
  // gives irregular half-cycles.
  if (shortest < 2 || longest > kMaxHalfPeriodSpread * shortest) return std::nullopt;

  // Peak-to-peak amplitude per full period, compared between the earlier
  // and later halves of the analysed periods.
  std::vector<double> p2p;
  for (std::size_t j = 0; j + 1 < peaks.size(); j += 2) p2p.push_back(peaks[j] + peaks[j + 1]);
  if (p2p.size() < 2) return std::nullopt;
  const std::size_t half = p2p.size() / 2;
  double early = 0.0, late = 0.0;
  for (std::size_t k = 0; k < half; ++k) early += p2p[k];
  for (std::size_t k = p2p.size() - half; k < p2p.size(); ++k) late += p2p[k];
  if (!(late >= amplitude_ratio * early)) return std::nullopt;

  return 2.0 * static_cast<double>(total) / static_cast<double>(peaks.size());
}

PidGains ziegler_nichols(double ultimate_gain, double period) {
  if (!(ultimate_gain > 0.0 && period > 0.0)) {
    invalid("ziegler_nichols: gain and period must be positive");
  }
  PidGains g;
  g.kp = 0.6 * ultimate_gain;
  g.ki = 2.0 * g.kp / period;
  g.kd = g.kp * period / 8.0;
  return g;
}

AutotuneResult zn_autotune(const plant::TomatoSample& tomato, const PlantConfig& pc,
                           const PidConfig& pid, const std::vector<double>& kp_grid,
                           double f_ref, const AutotuneOptions& opt) {
  if (kp_grid.empty()) invalid("zn_autotune: kp grid is empty");
  if (!std::is_sorted(kp_grid.begin(), kp_grid.end())) {
    invalid("zn_autotune: kp grid must be ascending");
  }
  for (const double kp : kp_grid) {
    const GraspRun run{f_ref, opt.duration, opt.dt, opt.seed};
    const ForceTrace trace = run_grasp(tomato, pc, PidGains{kp, 0.0, 0.0}, pid, run);
    // Skip the approach transient; judge the second half of the run.
    std::vector<double> error;
    const std::size_t start = trace.samples.size() / 2;
    for (std::size_t i = start; i < trace.samples.size(); ++i) {
      error.push_back(trace.samples[i].reference - trace.samples[i].measured);
    }
    if (const auto period_samples =
            detect_oscillation(error, opt.min_crossings, opt.amplitude_ratio)) {
      const double period = *period_samples * opt.dt;
      return {ziegler_nichols(kp, period), {kp, period}};
    }
  }
  throw Error(ErrorKind::kNoOscillationFound,
              "no sustained oscillation over the kp grid");
}

}  // namespace harvestsim::control
