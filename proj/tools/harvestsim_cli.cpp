// harvestsim: command-line front end for the simulation suite.
//
// Exit codes: 0 ok, 2 usage or invalid configuration, 3 infeasible or no
// result, 4 I/O failure, 5 anything else.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "harvestsim/arm.hpp"
#include "harvestsim/config.hpp"
#include "harvestsim/control.hpp"
#include "harvestsim/error.hpp"
#include "harvestsim/harvest.hpp"
#include "harvestsim/mechanism.hpp"
#include "harvestsim/perception.hpp"
#include "harvestsim/plant.hpp"

namespace hs = harvestsim;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitIo = 4;
constexpr int kExitOther = 5;

int exit_code(hs::ErrorKind kind) {
  switch (kind) {
    case hs::ErrorKind::kInvalidArgument:
    case hs::ErrorKind::kConfigInvalid:
      return kExitUsage;
    case hs::ErrorKind::kIo:
      return kExitIo;
    case hs::ErrorKind::kInfeasibleConfiguration:
    case hs::ErrorKind::kDegenerateDiagonal:
    case hs::ErrorKind::kNoConsistentBranch:
    case hs::ErrorKind::kNoOscillationFound:
    case hs::ErrorKind::kUnreachable:
    case hs::ErrorKind::kVelocityInfeasible:
    case hs::ErrorKind::kPlacementFailed:
      return kExitInfeasible;
  }
  return kExitOther;
}

std::string fmt_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

// Command-line arguments after the program name; flags override config keys,
// so the manifest records them next to the config hash.
std::vector<std::string> g_arguments;

// Collected outputs are written only after every computation succeeded.
struct Outputs {
  std::vector<std::pair<std::string, std::string>> files;

  void add(const std::string& path, std::string content) {
    files.emplace_back(path, std::move(content));
  }
  void add_json(const std::string& path, const json& j) { add(path, j.dump(2) + "\n"); }

  void write(const hs::config::RunConfig& cfg, const std::string& command) {
    std::vector<std::string> names;
    for (const auto& f : files) names.push_back(f.first);
    json m = hs::config::manifest(cfg, command, names);
    m["arguments"] = g_arguments;
    add_json(files.front().first + ".manifest.json", m);
    for (const auto& [path, content] : files) {
      std::ofstream out(path, std::ios::binary | std::ios::trunc);
      if (!out) throw hs::Error(hs::ErrorKind::kIo, "cannot open " + path + " for writing");
      out << content;
      out.flush();
      if (!out) throw hs::Error(hs::ErrorKind::kIo, "failed writing " + path);
    }
  }
};

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& common, bool seed_required) {
  cmd->add_option("--config", common.config_path, "JSON run configuration")
      ->check(CLI::ExistingFile);
  auto* seed = cmd->add_option("--seed", common.seed, "Random seed (overrides the config)");
  if (seed_required) seed->required();
}

hs::config::RunConfig load_config(const Common& common) {
  json doc = common.config_path.empty() ? hs::config::to_json(hs::config::RunConfig{})
                                        : hs::config::load_document(common.config_path);
  if (common.seed) {
    if (!doc.is_object()) throw hs::Error(hs::ErrorKind::kConfigInvalid, "config: expected an object");
    doc["seed"] = *common.seed;
  }
  return hs::config::parse(doc);
}

hs::plant::TomatoSample pick_tomato(const hs::config::RunConfig& cfg, const std::string& id,
                                    std::optional<double> mass_g,
                                    std::optional<double> diameter_mm) {
  if (id == "custom") {
    if (!mass_g || !diameter_mm) {
      throw hs::Error(hs::ErrorKind::kInvalidArgument,
                      "--tomato custom needs --mass-g and --diameter-mm");
    }
    hs::plant::TomatoSample t;
    t.id = "custom";
    t.mass_g = *mass_g;
    t.diameter_mm = *diameter_mm;
    hs::plant::validate(t);
    return t;
  }
  for (const auto& t : cfg.plant.tomatoes) {
    if (t.id == id) return t;
  }
  throw hs::Error(hs::ErrorKind::kInvalidArgument, "unknown tomato id " + id);
}

// ---- mech -----------------------------------------------------------------

struct CurveArgs {
  Common common;
  std::string out;
  std::optional<int> fingers;
  std::optional<double> eta;
  std::optional<int> points;
};

void cmd_torque_curve(const CurveArgs& a) {
  auto cfg = load_config(a.common);
  const auto& gs = cfg.geometry;
  const int fingers = a.fingers.value_or(gs.fingers);
  const double eta = a.eta.value_or(gs.eta);
  const int points = a.points.value_or(gs.force_points);
  if (points < 1) throw hs::Error(hs::ErrorKind::kInvalidArgument, "--points must be >= 1");
  std::vector<double> grid;
  for (int i = 0; i < points; ++i) {
    grid.push_back(points == 1 ? gs.force_min
                               : gs.force_min + (gs.force_max - gs.force_min) * i / (points - 1));
  }
  const auto curve = hs::mechanism::force_torque_curve(gs.geometry, gs.contact_map, grid);
  std::ostringstream csv;
  csv << "P_newton,T_newton_mm,demand_newton_mm\n";
  for (const auto& s : curve) {
    csv << fmt_num(s.force) << ',' << fmt_num(s.torque) << ','
        << fmt_num(hs::mechanism::multi_finger_demand(s.torque, fingers, eta)) << '\n';
  }
  Outputs out;
  out.add(a.out, csv.str());
  out.write(cfg, "mech torque-curve");
}

struct SweepArgs {
  Common common;
  std::string out;
  std::optional<int> points;
};

void cmd_sweep(const SweepArgs& a) {
  auto cfg = load_config(a.common);
  const auto& g = cfg.geometry.geometry;
  const int n = a.points.value_or(cfg.geometry.sweep_points);
  if (n < 2) throw hs::Error(hs::ErrorKind::kInvalidArgument, "--points must be >= 2");
  std::ostringstream csv;
  csv << "theta_rad,beta_rad,xi_rad,gamma_rad,x_m_mm,y_m_mm,dxi_dtheta,"
         "T_virtual_work_per_N,T_boxed_per_N\n";
  for (int i = 0; i < n; ++i) {
    const double theta = g.theta_min + (g.theta_max - g.theta_min) * i / (n - 1);
    const auto s = hs::mechanism::solve_linkage(g, theta);
    const auto p = hs::mechanism::driven_point(g, s);
    csv << fmt_num(theta) << ',' << fmt_num(s.beta) << ',' << fmt_num(s.xi) << ','
        << fmt_num(s.gamma) << ',' << fmt_num(p.x) << ',' << fmt_num(p.y) << ','
        << fmt_num(hs::mechanism::linkage_jacobian(g, theta)) << ','
        << fmt_num(hs::mechanism::torque_virtual_work(g, {theta, 1.0})) << ','
        << fmt_num(hs::mechanism::torque_for_force(g, {theta, 1.0})) << '\n';
  }
  Outputs out;
  out.add(a.out, csv.str());
  out.write(cfg, "mech sweep");
}

// ---- grasp / tune ---------------------------------------------------------

struct GraspArgs {
  Common common;
  std::string tomato = "F3";
  std::string ref = "config";
  std::optional<double> mass_g;
  std::optional<double> diameter_mm;
  std::optional<double> duration;
  std::optional<double> release_at;
  std::vector<double> gains;
  std::string out;
  std::string metrics;
};

double resolve_reference(const hs::config::RunConfig& cfg, const hs::plant::TomatoSample& t,
                         const std::string& ref) {
  if (ref == "auto") return hs::plant::reference_force(t, cfg.control.reference_policy);
  if (ref == "config") {
    return cfg.control.reference_mode == hs::harvest::ReferenceMode::kMassScaled
               ? hs::plant::reference_force(t, cfg.control.reference_policy)
               : cfg.control.fixed_reference;
  }
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(ref, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != ref.size() || !(value >= 0.0) || !std::isfinite(value)) {
    throw hs::Error(hs::ErrorKind::kInvalidArgument,
                    "--ref must be auto, config or a non-negative force in N");
  }
  return value;
}

void cmd_grasp(const GraspArgs& a) {
  auto cfg = load_config(a.common);
  const auto tomato = pick_tomato(cfg, a.tomato, a.mass_g, a.diameter_mm);
  hs::control::GraspRun run;
  run.f_ref = resolve_reference(cfg, tomato, a.ref);
  run.duration = a.duration.value_or(cfg.control.duration);
  run.dt = cfg.control.dt;
  run.seed = cfg.seed;
  if (!(run.duration > 0.0)) throw hs::Error(hs::ErrorKind::kInvalidArgument, "--duration must be positive");
  hs::control::PidGains gains = cfg.control.gains;
  if (!a.gains.empty()) {
    gains = {a.gains[0], a.gains[1], a.gains[2]};
    hs::control::validate(gains);
  }

  hs::control::ForceTrace trace;
  if (a.release_at) {
    hs::control::GraspCycle cycle;
    cycle.grasp = run;
    cycle.hold_end = *a.release_at;
    trace = hs::control::run_grasp_cycle(tomato, cfg.plant_config(), gains, cfg.control.pid,
                                         cycle);
  } else {
    trace = hs::control::run_grasp(tomato, cfg.plant_config(), gains, cfg.control.pid, run);
  }
  std::ostringstream csv;
  csv << "time_s,f_ref_N,f_meas_N,f_true_N,servo_deg\n";
  for (const auto& s : trace.samples) {
    csv << fmt_num(s.time) << ',' << fmt_num(s.reference) << ',' << fmt_num(s.measured) << ','
        << fmt_num(s.true_force) << ',' << fmt_num(s.servo_angle) << '\n';
  }
  Outputs out;
  out.add(a.out, csv.str());
  if (!a.metrics.empty()) {
    hs::control::ForceTrace hold = trace;
    if (a.release_at) {
      std::erase_if(hold.samples, [&](const auto& s) { return s.time > *a.release_at + 1e-12; });
    }
    if (hold.samples.empty()) {
      throw hs::Error(hs::ErrorKind::kInvalidArgument, "--release-at leaves no hold phase");
    }
    const auto m = hs::control::response_metrics(hold);
    const std::size_t tail = hold.samples.size() * 7 / 10;
    double plateau = 0.0;
    for (std::size_t i = tail; i < hold.samples.size(); ++i) plateau += hold.samples[i].measured;
    plateau /= static_cast<double>(hold.samples.size() - tail);
    json j = {{"tomato", tomato.id},
              {"f_ref_N", run.f_ref},
              {"plateau_N", plateau},
              {"overshoot", m.overshoot},
              {"steady_state_dev_N", m.steady_state_dev}};
    j["settle_time_s"] = m.settle_time ? json(*m.settle_time) : json(nullptr);
    out.add_json(a.metrics, j);
  }
  out.write(cfg, "grasp");
}

struct TuneArgs {
  Common common;
  std::string tomato = "F3";
  std::string out;
};

void cmd_tune(const TuneArgs& a) {
  auto cfg = load_config(a.common);
  const auto tomato = pick_tomato(cfg, a.tomato, std::nullopt, std::nullopt);
  hs::control::AutotuneOptions opt;
  opt.duration = cfg.control.tune_duration;
  opt.dt = cfg.control.dt;
  opt.seed = cfg.seed;
  opt.min_crossings = cfg.control.tune_min_crossings;
  opt.amplitude_ratio = cfg.control.tune_amplitude_ratio;
  const auto r = hs::control::zn_autotune(tomato, cfg.plant_config(), cfg.control.pid,
                                          cfg.control.tune_kp_grid, cfg.control.tune_reference,
                                          opt);
  json j = {{"tomato", tomato.id},
            {"ultimate_gain", r.oscillation.ultimate_gain},
            {"ultimate_period_s", r.oscillation.period},
            {"kp", r.gains.kp},
            {"ki", r.gains.ki},
            {"kd", r.gains.kd}};
  Outputs out;
  out.add_json(a.out, j);
  out.write(cfg, "tune");
}

// ---- plan -----------------------------------------------------------------

struct PlanArgs {
  Common common;
  std::vector<double> target;
  std::vector<double> approach;
  std::vector<double> pso;
  std::optional<double> duration;
  std::string out;
  std::string goal;
};

void cmd_plan(const PlanArgs& a) {
  auto cfg = load_config(a.common);
  hs::arm::Pose pose;
  pose.position = a.target.empty() ? cfg.arm.tomato_target
                                   : Eigen::Vector3d(a.target[0], a.target[1], a.target[2]);
  hs::arm::GoalWeights weights = cfg.arm.weights;
  std::vector<double> approach = a.approach;
  if (a.target.size() == 6) {
    if (!approach.empty()) {
      throw hs::Error(hs::ErrorKind::kInvalidArgument, "give the approach in --target or --approach, not both");
    }
    approach.assign(a.target.begin() + 3, a.target.end());
  } else if (!a.target.empty() && a.target.size() != 3) {
    throw hs::Error(hs::ErrorKind::kInvalidArgument, "--target takes x,y,z or x,y,z,ax,ay,az");
  }
  if (approach.empty()) {
    weights.use_direction = false;
  } else {
    pose.approach = Eigen::Vector3d(approach[0], approach[1], approach[2]);
    if (!(pose.approach.norm() > 0.0)) {
      throw hs::Error(hs::ErrorKind::kInvalidArgument, "--approach must be non-zero");
    }
    pose.approach.normalize();
    weights.use_direction = true;
  }
  hs::arm::PsoParams pso = cfg.arm.pso;
  if (!a.pso.empty()) {
    const auto whole = [](double v) { return v == std::floor(v) && v >= 0.0 && v < 1e9; };
    if (!whole(a.pso[0]) || !whole(a.pso[1])) {
      throw hs::Error(hs::ErrorKind::kInvalidArgument, "--pso particles and iterations must be integers");
    }
    pso.particle_count = static_cast<int>(a.pso[0]);
    pso.iteration_count = static_cast<int>(a.pso[1]);
    pso.inertia = a.pso[2];
    pso.cognitive = a.pso[3];
    pso.social = a.pso[4];
  }
  pso.seed = cfg.seed;
  hs::arm::validate(pso);
  const auto sol = hs::arm::pso_solve_goal(cfg.arm.chain, pose, pso, weights);
  const double duration = a.duration.value_or(cfg.arm.plan_duration);
  const auto traj =
      hs::arm::plan_trajectory(cfg.arm.chain, cfg.arm.home, sol.q, duration, cfg.arm.trajectory_dt);

  std::ostringstream csv;
  csv << "t_s,q1_rad,q2_rad,q3_rad,q4_rad,q5_rad\n";
  for (std::size_t i = 0; i < traj.waypoints.size(); ++i) {
    csv << fmt_num(traj.dt * static_cast<double>(i));
    for (int j = 0; j < hs::arm::kJoints; ++j) csv << ',' << fmt_num(traj.waypoints[i](j));
    csv << '\n';
  }
  Outputs out;
  out.add(a.out, csv.str());
  if (!a.goal.empty()) {
    std::vector<double> q(sol.q.data(), sol.q.data() + hs::arm::kJoints);
    out.add_json(a.goal, {{"q_rad", q},
                          {"position_error_mm", sol.cost.position_error},
                          {"direction_error_rad", sol.cost.direction_error},
                          {"cost", sol.cost.total},
                          {"converged", sol.converged}});
  }
  out.write(cfg, "plan");
  if (!sol.converged) {
    std::cerr << "warning: PSO did not converge (position error "
              << fmt_num(sol.cost.position_error) << " mm)\n";
  }
}

// ---- perception -----------------------------------------------------------

struct PerceptionArgs {
  Common common;
  std::optional<int> scenes;
  std::vector<double> noise;
  std::string out;
  std::string export_scenes;
};

json scene_json(const hs::perception::Scene& scene) {
  json arr = json::array();
  for (const auto& o : scene) {
    arr.push_back({{"center_mm", {o.center.x(), o.center.y(), o.center.z()}},
                   {"radius_mm", o.radius},
                   {"ripe", o.ripeness == hs::perception::Ripeness::kRipe},
                   {"occlusion_fraction", o.occlusion_fraction},
                   {"pedicel_mm", {o.pedicel.x(), o.pedicel.y(), o.pedicel.z()}}});
  }
  return arr;
}

void cmd_perception(const PerceptionArgs& a) {
  auto cfg = load_config(a.common);
  auto noise = cfg.perception.noise;
  if (!a.noise.empty()) {
    noise.keypoint_sigma = a.noise[0];
    noise.miss_rate = a.noise[1];
    noise.false_positive_rate = a.noise[2];
    noise.ripeness_confusion = a.noise[3];
  }
  hs::perception::validate(noise);
  const int scenes = a.scenes.value_or(cfg.perception.scenes);
  if (scenes < 1) throw hs::Error(hs::ErrorKind::kInvalidArgument, "--scenes must be >= 1");

  hs::Rng rng = hs::make_rng(cfg.seed);
  std::vector<hs::perception::Frame> frames;
  frames.reserve(static_cast<std::size_t>(scenes));
  for (int i = 0; i < scenes; ++i) {
    hs::perception::Frame f;
    f.ground_truth =
        hs::perception::generate_scene(cfg.perception.tomatoes_per_scene, cfg.perception.scene, rng);
    f.detections =
        hs::perception::simulate_detections(f.ground_truth, noise, cfg.perception.scene, rng);
    frames.push_back(std::move(f));
  }
  const auto m = hs::perception::evaluate(frames, cfg.perception.iou_threshold);
  const auto kp = hs::perception::keypoint_error(frames);
  json j = {{"scenes", scenes},
            {"iou_threshold", cfg.perception.iou_threshold},
            {"precision", m.precision},
            {"recall", m.recall},
            {"mask_ap", m.mask_ap},
            {"true_positives", m.true_positives},
            {"false_positives", m.false_positives},
            {"false_negatives", m.false_negatives}};
  if (kp) {
    j["keypoints"] = {{"pairs", kp->pairs},
                      {"center_mean_mm", kp->center_mean},
                      {"center_max_mm", kp->center_max},
                      {"pedicel_mean_mm", kp->pedicel_mean},
                      {"pedicel_max_mm", kp->pedicel_max}};
  } else {
    j["keypoints"] = nullptr;
  }
  Outputs out;
  out.add_json(a.out, j);
  if (!a.export_scenes.empty()) {
    json arr = json::array();
    for (const auto& f : frames) arr.push_back(scene_json(f.ground_truth));
    out.add_json(a.export_scenes, arr);
  }
  out.write(cfg, "perception eval");
}

// ---- harvest --------------------------------------------------------------

struct HarvestArgs {
  Common common;
  std::optional<int> trials;
  std::optional<int> threads;
  std::string out;
  std::string records;
  std::string stages;
};

void cmd_harvest(const HarvestArgs& a) {
  auto cfg = load_config(a.common);
  auto hc = cfg.harvest_config();
  if (a.threads) hc.threads = *a.threads;
  const int trials = a.trials.value_or(cfg.harvest.trials);
  if (trials < 1) throw hs::Error(hs::ErrorKind::kInvalidArgument, "--trials must be >= 1");
  const auto campaign = hs::harvest::run_campaign(static_cast<std::size_t>(trials), hc, cfg.seed);
  const auto& s = campaign.summary;

  json stage_means = json::object();
  json histogram = json::object();
  for (int i = 0; i < hs::harvest::kStageCount; ++i) {
    stage_means[std::string(hs::harvest::to_string(hs::harvest::kStageOrder[i]))] =
        s.mean_cycle_time ? json(s.stage_means[i]) : json(nullptr);
  }
  for (int m = 0; m < hs::harvest::kFailureModeCount; ++m) {
    histogram[std::string(hs::harvest::to_string(static_cast<hs::harvest::FailureMode>(m)))] =
        s.failure_histogram[m];
  }
  json summary = {{"n_trials", s.n_trials},
                  {"successes", s.successes},
                  {"success_rate", s.success_rate},
                  {"stage_means_s", stage_means},
                  {"failure_histogram", histogram}};
  summary["mean_cycle_time_s"] = s.mean_cycle_time ? json(*s.mean_cycle_time) : json(nullptr);
  summary["peak_force_range_N"] =
      s.successes > 0 ? json::array({s.min_peak_force, s.max_peak_force}) : json(nullptr);

  Outputs out;
  out.add_json(a.out, summary);
  if (!a.records.empty()) {
    std::ostringstream csv;
    csv << "trial,outcome,failure_mode,t_approach,t_separation,t_cutting,t_grasping,"
           "t_departure,t_release,total_s,peak_force_N,tomato\n";
    for (const auto& r : campaign.records) {
      csv << r.trial << ',' << (r.success() ? "success" : "fail") << ','
          << (r.success() ? "" : std::string(hs::harvest::to_string(*r.failure)));
      for (double d : r.durations) csv << ',' << fmt_num(d);
      csv << ',' << fmt_num(r.total) << ',' << fmt_num(r.peak_force) << ',' << r.tomato_id << '\n';
    }
    out.add(a.records, csv.str());
  }
  if (!a.stages.empty()) {
    std::ostringstream csv;
    csv << "stage,mean_s,min_s,max_s\n";
    const auto table = hs::harvest::stage_report(campaign.records);
    if (table.empty()) csv << "# no successful trials\n";
    for (const auto& row : table) {
      csv << hs::harvest::to_string(row.stage) << ',' << fmt_num(row.mean) << ','
          << fmt_num(row.min) << ',' << fmt_num(row.max) << '\n';
    }
    out.add(a.stages, csv.str());
  }
  out.write(cfg, "harvest run");
}

struct DumpArgs {
  std::string out;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tomato-harvesting robot simulation suite"};
  app.require_subcommand(1);
  app.set_version_flag("--version", hs::config::kToolVersion);

  auto* mech = app.add_subcommand("mech", "Gripper linkage and torque analysis");
  mech->require_subcommand(1);
  CurveArgs curve;
  auto* c_curve = mech->add_subcommand("torque-curve", "Force-torque curve with multi-finger demand");
  add_common(c_curve, curve.common, false);
  c_curve->add_option("--out", curve.out, "CSV output")->required();
  c_curve->add_option("--fingers", curve.fingers, "Simultaneously loaded fingers");
  c_curve->add_option("--eta", curve.eta, "Transmission efficiency");
  c_curve->add_option("--points", curve.points, "Force grid size");

  SweepArgs sweep;
  auto* c_sweep = mech->add_subcommand("sweep", "Linkage state across the crank range");
  add_common(c_sweep, sweep.common, false);
  c_sweep->add_option("--out", sweep.out, "CSV output")->required();
  c_sweep->add_option("--points", sweep.points, "Number of crank angles");

  GraspArgs grasp;
  auto* c_grasp = app.add_subcommand("grasp", "Closed-loop grasp force trace");
  add_common(c_grasp, grasp.common, true);
  c_grasp->add_option("--tomato", grasp.tomato, "Tomato id from the table, or custom");
  c_grasp->add_option("--mass-g", grasp.mass_g, "Mass for --tomato custom");
  c_grasp->add_option("--diameter-mm", grasp.diameter_mm, "Diameter for --tomato custom");
  c_grasp->add_option("--ref", grasp.ref, "auto (mass-scaled), config, or a force in N");
  c_grasp->add_option("--gains", grasp.gains, "PID gains kp,ki,kd")->delimiter(',')->expected(3);
  c_grasp->add_option("--duration", grasp.duration, "Run length, s");
  c_grasp->add_option("--release-at", grasp.release_at, "Open the gripper after this time, s");
  c_grasp->add_option("--out", grasp.out, "CSV trace")->required();
  c_grasp->add_option("--metrics", grasp.metrics, "JSON response metrics");

  TuneArgs tune;
  auto* c_tune = app.add_subcommand("tune", "Ziegler-Nichols autotune");
  add_common(c_tune, tune.common, true);
  c_tune->add_option("--tomato", tune.tomato, "Tomato id");
  c_tune->add_option("--out", tune.out, "JSON result")->required();

  PlanArgs plan;
  auto* c_plan = app.add_subcommand("plan", "PSO goal solve and cubic trajectory");
  add_common(c_plan, plan.common, true);
  c_plan->add_option("--target", plan.target, "Goal x,y,z in mm, optionally followed by an approach direction")
      ->delimiter(',')
      ->expected(3, 6);
  c_plan->add_option("--pso", plan.pso, "particles,iterations,w,c1,c2")->delimiter(',')->expected(5);
  c_plan->add_option("--approach", plan.approach, "Approach direction x,y,z")->delimiter(',')->expected(3);
  c_plan->add_option("--duration", plan.duration, "Trajectory duration, s");
  c_plan->add_option("--out", plan.out, "CSV trajectory")->required();
  c_plan->add_option("--goal", plan.goal, "JSON goal solution");

  auto* percep = app.add_subcommand("perception", "Synthetic perception");
  percep->require_subcommand(1);
  PerceptionArgs peval;
  auto* c_eval = percep->add_subcommand("eval", "Detection metrics on synthetic scenes");
  add_common(c_eval, peval.common, true);
  c_eval->add_option("--scenes", peval.scenes, "Number of scenes");
  c_eval->add_option("--noise", peval.noise, "kp_sigma,miss,fp,confusion")->delimiter(',')->expected(4);
  c_eval->add_option("--out", peval.out, "JSON metrics")->required();
  c_eval->add_option("--export-scenes", peval.export_scenes, "JSON ground-truth scenes");

  auto* harv = app.add_subcommand("harvest", "Picking-cycle campaigns");
  harv->require_subcommand(1);
  HarvestArgs hrun;
  auto* c_run = harv->add_subcommand("run", "Monte Carlo harvest campaign");
  add_common(c_run, hrun.common, true);
  c_run->add_option("--trials", hrun.trials, "Number of trials");
  c_run->add_option("--threads", hrun.threads, "Worker threads (0 = all cores)");
  c_run->add_option("--out", hrun.out, "JSON summary")->required();
  c_run->add_option("--records", hrun.records, "CSV per-trial records");
  c_run->add_option("--stages", hrun.stages, "CSV per-stage duration table");

  auto* cfg_cmd = app.add_subcommand("config", "Configuration utilities");
  cfg_cmd->require_subcommand(1);
  DumpArgs dump;
  auto* c_dump = cfg_cmd->add_subcommand("dump", "Write the default configuration");
  c_dump->add_option("--out", dump.out, "JSON output")->required();

  g_arguments.assign(argv + 1, argv + argc);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (c_curve->parsed()) cmd_torque_curve(curve);
    else if (c_sweep->parsed()) cmd_sweep(sweep);
    else if (c_grasp->parsed()) cmd_grasp(grasp);
    else if (c_tune->parsed()) cmd_tune(tune);
    else if (c_plan->parsed()) cmd_plan(plan);
    else if (c_eval->parsed()) cmd_perception(peval);
    else if (c_run->parsed()) cmd_harvest(hrun);
    else if (c_dump->parsed()) {
      const hs::config::RunConfig defaults;
      Outputs out;
      out.add_json(dump.out, hs::config::to_json(defaults));
      out.write(defaults, "config dump");
    }
  } catch (const hs::Error& e) {
    std::cerr << "error [" << hs::to_string(e.kind()) << "]: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitOther;
  }
  return kExitOk;
}
