// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Criterion 8 drives the command-line tool as a subprocess.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "harvestsim/arm.hpp"
#include "harvestsim/config.hpp"
#include "harvestsim/control.hpp"
#include "harvestsim/harvest.hpp"
#include "harvestsim/mechanism.hpp"
#include "harvestsim/perception.hpp"
#include "oracles.hpp"

namespace hs = harvestsim;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Shared by criteria 4 and 7.
const hs::harvest::Campaign& campaign() {
  static const hs::harvest::Campaign c =
      hs::harvest::run_campaign(10000, hs::config::RunConfig{}.harvest_config(), 7);
  return c;
}
double campaign_seconds = 0.0;

Outcome linkage() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto g = hs::mechanism::reference_geometry();
  double worst_residual = 0.0, worst_gap = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double theta = g.theta_min + (g.theta_max - g.theta_min) * i / 999.0;
    const auto s = hs::mechanism::solve_linkage(g, theta);
    const auto r = hs::mechanism::loop_residuals(g, theta, s.beta, s.xi);
    worst_residual = std::max({worst_residual, std::abs(r.horizontal), std::abs(r.vertical)});
    const auto root = oracle::linkage_root(g, theta);
    if (!root) {
      o.require(false, "oracle found no root at theta " + fmt("%.6f", theta));
      continue;
    }
    worst_gap = std::max({worst_gap, std::abs(oracle::wrap(s.beta - root->beta)),
                          std::abs(oracle::wrap(s.xi - root->xi))});
  }
  const double elapsed = seconds_since(t0);
  o.require(worst_residual <= 1e-9, "residual " + fmt("%.3g", worst_residual));
  o.require(worst_gap <= 1e-8, "oracle gap " + fmt("%.3g", worst_gap));
  o.require(elapsed < 1.0, "runtime " + fmt("%.2f", elapsed));
  if (o.pass) {
    o.detail = "max residual " + fmt("%.2g", worst_residual) + " mm, max oracle gap " +
               fmt("%.2g", worst_gap) + " rad, " + fmt("%.3f", elapsed) + " s";
  }
  return o;
}

Outcome torque() {
  Outcome o;
  const auto g = hs::mechanism::reference_geometry();
  double worst_fd = 0.0;
  for (int i = 0; i <= 20; ++i) {
    const double theta = g.theta_min + (g.theta_max - g.theta_min) * i / 20.0;
    const double base = hs::mechanism::torque_virtual_work(g, {theta, 0.3});
    for (double k : {0.5, 2.0, 4.0, 1024.0}) {
      const double scaled = hs::mechanism::torque_virtual_work(g, {theta, 0.3 * k});
      o.require(scaled == k * base, "homogeneity at theta " + fmt("%.3f", theta));
    }
    const double h = hs::mechanism::kJacobianStep;
    const double coarse = hs::mechanism::torque_virtual_work(g, {theta, 1.0}, h);
    const double fine = hs::mechanism::torque_virtual_work(g, {theta, 1.0}, h / 2.0);
    const double rel = std::abs(coarse - fine) / std::max(std::abs(fine), 1e-12);
    worst_fd = std::max(worst_fd, rel);
  }
  o.require(worst_fd <= 1e-4, "step-halving gap " + fmt("%.3g", worst_fd));

  const auto table = hs::mechanism::torque_discrepancy(g, 7);
  std::printf("    theta_rad  T_vw/P_mm  T_boxed/P_mm  T_intermediate/P_mm  boxed_rel_gap\n");
  double max_gap = 0.0;
  for (const auto& row : table) {
    std::printf("    %9.4f  %9.4f  %12.4f  %19.4f  %13.4f\n", row.theta, row.virtual_work, row.boxed,
                row.intermediate, row.boxed_relative_gap);
    max_gap = std::max(max_gap, std::abs(row.boxed_relative_gap));
  }
  o.require(!table.empty(), "empty discrepancy table");
  if (o.pass) {
    o.detail = "homogeneous exactly, step-halving gap " + fmt("%.2g", worst_fd) +
               ", boxed-formula gap up to " + fmt("%.0f", 100.0 * max_gap) + "% (reported only)";
  }
  return o;
}

Outcome pid_suite() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto tomato = hs::plant::default_tomatoes()[2];
  double worst_settle_lo = 1e9, worst_settle_hi = 0.0, worst_os = 0.0, worst_dev = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto tr = hs::control::run_grasp(tomato, {}, hs::control::PidGains{0.15, 0.02, 0.001}, {},
                                           {0.30, 10.0, 0.01, seed});
    const auto m = hs::control::response_metrics(tr);
    if (!m.settle_time) {
      o.require(false, "seed " + std::to_string(seed) + " never settled");
      continue;
    }
    worst_settle_lo = std::min(worst_settle_lo, *m.settle_time);
    worst_settle_hi = std::max(worst_settle_hi, *m.settle_time);
    worst_os = std::max(worst_os, m.overshoot);
    worst_dev = std::max(worst_dev, m.steady_state_dev);
    o.require(*m.settle_time >= 1.0 && *m.settle_time <= 2.0,
              "seed " + std::to_string(seed) + " settle " + fmt("%.2f", *m.settle_time));
    o.require(m.overshoot <= 0.10, "seed " + std::to_string(seed) + " overshoot " + fmt("%.3f", m.overshoot));
    o.require(m.steady_state_dev <= 0.02,
              "seed " + std::to_string(seed) + " deviation " + fmt("%.4f", m.steady_state_dev));
  }
  const double elapsed = seconds_since(t0);
  o.require(elapsed < 10.0, "runtime " + fmt("%.2f", elapsed));
  if (o.pass) {
    o.detail = "settle " + fmt("%.2f", worst_settle_lo) + ".." + fmt("%.2f", worst_settle_hi) +
               " s, overshoot <= " + fmt("%.1f", 100.0 * worst_os) + "%, deviation <= " +
               fmt("%.4f", worst_dev) + " N, " + fmt("%.2f", elapsed) + " s";
  }
  return o;
}

Outcome force_envelope() {
  Outcome o;
  const hs::config::RunConfig cfg;
  auto plateau = [&](const hs::plant::TomatoSample& t, std::uint64_t seed) {
    const double ref = hs::plant::reference_force(t, cfg.control.reference_policy);
    const auto tr = hs::control::run_grasp(t, cfg.plant_config(), cfg.control.gains,
                                           cfg.control.pid, {ref, 10.0, cfg.control.dt, seed});
    const std::size_t tail = tr.samples.size() * 7 / 10;
    double sum = 0.0;
    for (std::size_t i = tail; i < tr.samples.size(); ++i) sum += tr.samples[i].measured;
    return sum / static_cast<double>(tr.samples.size() - tail);
  };
  double f1_lo = 1e9, f1_hi = 0.0, f5_lo = 1e9, f5_hi = 0.0;
  for (const auto& t : cfg.plant.tomatoes) {
    if (t.id != "F1" && t.id != "F5") continue;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const double p = plateau(t, seed);
      if (t.id == "F1") {
        f1_lo = std::min(f1_lo, p);
        f1_hi = std::max(f1_hi, p);
      } else {
        f5_lo = std::min(f5_lo, p);
        f5_hi = std::max(f5_hi, p);
      }
    }
  }
  o.require(f1_lo >= 0.45 && f1_hi <= 0.52, "F1 plateau " + fmt("%.4f", f1_lo) + ".." + fmt("%.4f", f1_hi));
  o.require(f5_lo >= 0.18 && f5_hi <= 0.27, "F5 plateau " + fmt("%.4f", f5_lo) + ".." + fmt("%.4f", f5_hi));

  const auto t0 = Clock::now();
  const auto& c = campaign();
  campaign_seconds = seconds_since(t0);
  double lo = 1e9, hi = 0.0;
  for (const auto& r : c.records) {
    if (!r.success()) continue;
    lo = std::min(lo, r.peak_force);
    hi = std::max(hi, r.peak_force);
  }
  o.require(c.summary.successes > 0, "no successful trials");
  o.require(lo >= 0.20 && hi <= 0.50, "peak force " + fmt("%.4f", lo) + ".." + fmt("%.4f", hi));
  if (o.pass) {
    o.detail = "F1 plateau " + fmt("%.3f", f1_lo) + ".." + fmt("%.3f", f1_hi) + " N, F5 " +
               fmt("%.3f", f5_lo) + ".." + fmt("%.3f", f5_hi) + " N, peak force over " +
               std::to_string(c.summary.successes) + " successes " + fmt("%.3f", lo) + ".." +
               fmt("%.3f", hi) + " N";
  }
  return o;
}

Outcome planner() {
  Outcome o;
  const auto t0 = Clock::now();
  const hs::config::RunConfig cfg;
  const auto& chain = cfg.arm.chain;
  std::mt19937_64 gen(20240601);
  int hits = 0;
  double worst_hit_err = 0.0;
  for (int n = 0; n < 100; ++n) {
    hs::arm::JointVector q0;
    for (int j = 0; j < hs::arm::kJoints; ++j) {
      q0[j] = std::uniform_real_distribution<double>(chain.lower[j], chain.upper[j])(gen);
    }
    const hs::arm::Pose target = hs::arm::forward_kinematics(chain, q0);
    hs::arm::PsoParams pso = cfg.arm.pso;
    pso.seed = 1000 + n;
    const auto sol = hs::arm::pso_solve_goal(chain, target, pso, cfg.arm.weights);
    for (std::size_t i = 1; i < sol.best_history.size(); ++i) {
      if (sol.best_history[i] > sol.best_history[i - 1]) {
        o.require(false, "best cost rose in case " + std::to_string(n));
        break;
      }
    }
    const double err = (hs::arm::forward_kinematics(chain, sol.q).position - target.position).norm();
    if (err <= 2.0) {
      ++hits;
      worst_hit_err = std::max(worst_hit_err, err);
    }
    const double duration =
        std::max(cfg.arm.plan_duration, hs::arm::min_cubic_duration(chain, cfg.arm.home, sol.q));
    const auto traj =
        hs::arm::plan_trajectory(chain, cfg.arm.home, sol.q, duration, cfg.arm.trajectory_dt);
    for (std::size_t i = 0; i < traj.waypoints.size(); ++i) {
      bool ok = chain.within_limits(traj.waypoints[i]);
      if (i > 0) {
        const auto step = (traj.waypoints[i] - traj.waypoints[i - 1]).cwiseAbs();
        for (int j = 0; j < hs::arm::kJoints; ++j) {
          ok = ok && step[j] <= chain.velocity_limit[j] * traj.dt + 1e-12;
        }
      }
      if (!ok) {
        o.require(false, "trajectory " + std::to_string(n) + " violates limits");
        break;
      }
    }
  }
  const double elapsed = seconds_since(t0);
  o.require(hits >= 95, std::to_string(hits) + "/100 within 2 mm");
  o.require(elapsed < 30.0, "runtime " + fmt("%.2f", elapsed));
  if (o.pass) {
    o.detail = std::to_string(hits) + "/100 targets within 2 mm, cost histories non-increasing, "
               "trajectories within limits, " + fmt("%.2f", elapsed) + " s";
  }
  return o;
}

Outcome perception_metrics() {
  Outcome o;
  namespace p = hs::perception;
  const p::SceneParams params;
  auto frames = [&](const p::NoiseModel& noise, int scenes, std::uint64_t seed) {
    hs::Rng rng = hs::make_rng(seed);
    std::vector<p::Frame> out;
    for (int s = 0; s < scenes; ++s) {
      p::Frame f;
      f.ground_truth = p::generate_scene(5, params, rng);
      f.detections = p::simulate_detections(f.ground_truth, noise, params, rng);
      out.push_back(std::move(f));
    }
    return out;
  };

  const auto clean = p::evaluate(frames({}, 200, 1), 0.5);
  o.require(clean.precision == 1.0 && clean.recall == 1.0 && clean.mask_ap == 1.0,
            "zero-noise metrics not exactly 1");

  p::NoiseModel miss;
  miss.miss_rate = 0.25;
  const auto missed = p::evaluate(frames(miss, 2000, 2), 0.5);
  const std::size_t n_gt = missed.true_positives + missed.false_negatives;
  o.require(n_gt == 10000, "ground-truth count " + std::to_string(n_gt));
  o.require(std::abs(missed.recall - 0.75) <= 0.02, "recall " + fmt("%.4f", missed.recall));

  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> pos(-30.0, 30.0), rad(5.0, 30.0);
  double worst_iou = 0.0;
  for (int n = 0; n < 100; ++n) {
    const p::Circle a{{pos(gen), pos(gen)}, rad(gen)};
    const p::Circle b{{pos(gen), pos(gen)}, rad(gen)};
    worst_iou = std::max(worst_iou, std::abs(p::circle_iou(a, b) - oracle::raster_iou(a, b)));
  }
  o.require(worst_iou <= 1e-3, "IoU gap " + fmt("%.2g", worst_iou));

  p::NoiseModel kp;
  kp.keypoint_sigma = 2.0;
  const auto err = p::keypoint_error(frames(kp, 2000, 4));
  const double rayleigh = 2.0 * std::sqrt(std::numbers::pi / 2.0);
  double rel = 1.0;
  if (err) rel = std::abs(err->center_mean - rayleigh) / rayleigh;
  o.require(err.has_value() && rel <= 0.02, "keypoint mean gap " + fmt("%.4f", rel));
  if (o.pass) {
    o.detail = "zero-noise P=R=AP=1, recall " + fmt("%.4f", missed.recall) + " at miss 0.25, IoU gap " +
               fmt("%.2g", worst_iou) + ", keypoint mean " + fmt("%.4f", err->center_mean) +
               " mm vs " + fmt("%.4f", rayleigh);
  }
  return o;
}

Outcome campaign_stats() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto& c = campaign();  // computed by the force-envelope check when that ran first
  const double elapsed = campaign_seconds + seconds_since(t0);
  const auto& s = c.summary;
  o.require(s.success_rate >= 0.78 && s.success_rate <= 0.82, "success " + fmt("%.4f", s.success_rate));
  o.require(s.mean_cycle_time && std::abs(*s.mean_cycle_time - 24.34) <= 0.5,
            "cycle " + fmt("%.3f", s.mean_cycle_time.value_or(0.0)));
  o.require(elapsed < 60.0, "runtime " + fmt("%.2f", elapsed));
  if (o.pass) {
    o.detail = "success " + fmt("%.4f", s.success_rate) + ", mean cycle " +
               fmt("%.3f", *s.mean_cycle_time) + " s over 10000 trials, " + fmt("%.2f", elapsed) + " s";
  }
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  Outcome o;
  const fs::path dir = fs::path(HARVESTSIM_TEST_DIR) / "acceptance_work";
  fs::remove_all(dir);
  fs::create_directories(dir);
  // Each repetition runs in its own directory with identical relative paths,
  // so manifests are comparable too.
  auto run = [&](const fs::path& cwd, const std::string& args) {
    const std::string cmd = "cd \"" + cwd.string() + "\" && \"" + HARVESTSIM_CLI + "\" " + args +
                            " >>\"" + (dir / "log.txt").string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  struct Case {
    std::string name;
    std::string args;
    std::vector<std::string> files;
  };
  const std::vector<Case> cases = {
      {"grasp", "grasp --tomato F1 --ref auto --seed 7 --out g.csv --metrics g.json",
       {"g.csv", "g.json", "g.csv.manifest.json"}},
      {"tune", "tune --seed 7 --out t.json", {"t.json", "t.json.manifest.json"}},
      {"plan", "plan --target 400,100,300 --seed 7 --out p.csv --goal p.json",
       {"p.csv", "p.json", "p.csv.manifest.json"}},
      {"perception", "perception eval --scenes 200 --noise 1,0.1,0.5,0.05 --seed 7 --out e.json",
       {"e.json", "e.json.manifest.json"}},
      {"harvest", "harvest run --trials 10000 --seed 7 --out s.json --records r.csv --stages st.csv",
       {"s.json", "r.csv", "st.csv", "s.json.manifest.json"}},
      {"harvest-threads", "harvest run --trials 2000 --seed 11 --threads {T} --out s.json --records r.csv",
       {"s.json", "r.csv"}},
  };
  int compared = 0;
  for (const auto& c : cases) {
    std::vector<std::string> first;
    for (int rep = 0; rep < 2; ++rep) {
      std::string args = c.args;
      const fs::path cwd = dir / (c.name + "_" + std::to_string(rep));
      fs::create_directories(cwd);
      if (const auto at = args.find("{T}"); at != std::string::npos) {
        args.replace(at, 3, rep == 0 ? "1" : "4");
      }
      const int rc = run(cwd, args);
      if (rc != 0) {
        o.require(false, c.name + " exited " + std::to_string(rc));
        break;
      }
      for (std::size_t k = 0; k < c.files.size(); ++k) {
        const std::string content = slurp(cwd / c.files[k]);
        if (rep == 0) {
          first.push_back(content);
        } else {
          o.require(!content.empty() && content == first[k], c.name + " " + c.files[k] + " differs");
          ++compared;
        }
      }
    }
  }
  if (o.pass) {
    o.detail = std::to_string(compared) +
               " output files byte-identical on rerun, including 1 vs 4 worker threads";
  }
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria = {
      {1, "linkage correctness", linkage},
      {2, "torque consistency", torque},
      {3, "PID performance", pid_suite},
      {4, "force envelope", force_envelope},
      {5, "PSO planner", planner},
      {6, "perception metrics", perception_metrics},
      {7, "campaign statistics", campaign_stats},
      {8, "determinism", determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failures += o.pass ? 0 : 1;
    std::printf("[%s] criterion %d [PRIMARY] %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
