#include "harvestsim/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "harvestsim/error.hpp"

namespace harvestsim::config {
namespace {

using nlohmann::json;

double to_deg(double rad) { return rad * (180.0 / std::numbers::pi); }
double to_rad(double deg) { return deg * (std::numbers::pi / 180.0); }

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw Error(ErrorKind::kConfigInvalid, path + ": " + what);
}

// Reads one JSON object, remembering which keys were consumed so that
// leftovers can be reported as unknown.
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  Obj child(const std::string& key, bool required) {
    static const json empty = json::object();
    const json* v = find(key);
    if (v == nullptr) {
      if (required) fail(at(key), "missing section");
      return Obj(empty, at(key));
    }
    return Obj(*v, at(key));
  }

  const json* array(const std::string& key) {
    const json* v = find(key);
    if (v != nullptr && !v->is_array()) fail(at(key), "expected an array");
    return v;
  }

  void num(const std::string& key, double& out) {
    if (const json* v = find(key)) out = as_number(*v, at(key));
  }

  // Degrees in the document, radians in memory.
  void angle(const std::string& key, double& rad) {
    if (const json* v = find(key)) rad = to_rad(as_number(*v, at(key)));
  }

  void integer(const std::string& key, int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) fail(at(key), "expected an integer");
      out = v->get<int>();
    }
  }

  void u64(const std::string& key, std::uint64_t& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_unsigned()) fail(at(key), "expected a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) fail(at(key), "expected true or false");
      out = v->get<bool>();
    }
  }

  void str(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) fail(at(key), "expected a string");
      out = v->get<std::string>();
    }
  }

  void numbers(const std::string& key, std::vector<double>& out) {
    if (const json* v = array(key)) {
      out.clear();
      for (std::size_t i = 0; i < v->size(); ++i) {
        out.push_back(as_number((*v)[i], at(key) + "[" + std::to_string(i) + "]"));
      }
    }
  }

  template <int N>
  void fixed(const std::string& key, Eigen::Matrix<double, N, 1>& out) {
    if (const json* v = array(key)) {
      if (v->size() != static_cast<std::size_t>(N)) {
        fail(at(key), "expected " + std::to_string(N) + " numbers");
      }
      for (int i = 0; i < N; ++i) {
        out(i) = as_number((*v)[i], at(key) + "[" + std::to_string(i) + "]");
      }
    }
  }

  template <int N>
  void angles(const std::string& key, Eigen::Matrix<double, N, 1>& rad) {
    if (j_.contains(key)) {
      Eigen::Matrix<double, N, 1> deg;
      fixed<N>(key, deg);
      rad = deg * (std::numbers::pi / 180.0);
    } else {
      seen_.insert(key);
    }
  }

  void done() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) fail(at(item.key()), "unknown key");
    }
  }

 private:
  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  static double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) fail(path, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(path, "must be finite");
    return x;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename F>
void section_check(const std::string& section, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kConfigInvalid) throw;
    fail(section, e.what());
  }
}

json vec(const Eigen::Ref<const Eigen::VectorXd>& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

const char* mode_name(harvest::ReferenceMode m) {
  return m == harvest::ReferenceMode::kFixed ? "fixed" : "mass_scaled";
}

// ---- sections -------------------------------------------------------------

void read_geometry(Obj o, GeometrySection& s) {
  auto& g = s.geometry;
  o.num("r_mm", g.r);
  o.num("a_mm", g.a);
  o.num("b_mm", g.b);
  o.num("c_mm", g.c);
  o.num("d_mm", g.d);
  o.num("e_mm", g.e);
  o.num("f_mm", g.f);
  o.num("l_s_mm", g.l_s);
  o.num("l_p_mm", g.l_p);
  o.num("l_dm_mm", g.l_dm);
  o.angle("gamma_deg", g.gamma);
  o.angle("theta_min_deg", g.theta_min);
  o.angle("theta_max_deg", g.theta_max);
  o.angle("contact_theta_deg", s.contact_map.theta_contact);
  o.angle("contact_compliance_deg_per_n", s.contact_map.compliance);
  o.integer("fingers", s.fingers);
  o.num("eta", s.eta);
  o.num("force_min_n", s.force_min);
  o.num("force_max_n", s.force_max);
  o.integer("force_points", s.force_points);
  o.integer("sweep_points", s.sweep_points);
  o.done();
}

json write_geometry(const GeometrySection& s) {
  const auto& g = s.geometry;
  return {{"r_mm", g.r},
          {"a_mm", g.a},
          {"b_mm", g.b},
          {"c_mm", g.c},
          {"d_mm", g.d},
          {"e_mm", g.e},
          {"f_mm", g.f},
          {"l_s_mm", g.l_s},
          {"l_p_mm", g.l_p},
          {"l_dm_mm", g.l_dm},
          {"gamma_deg", to_deg(g.gamma)},
          {"theta_min_deg", to_deg(g.theta_min)},
          {"theta_max_deg", to_deg(g.theta_max)},
          {"contact_theta_deg", to_deg(s.contact_map.theta_contact)},
          {"contact_compliance_deg_per_n", to_deg(s.contact_map.compliance)},
          {"fingers", s.fingers},
          {"eta", s.eta},
          {"force_min_n", s.force_min},
          {"force_max_n", s.force_max},
          {"force_points", s.force_points},
          {"sweep_points", s.sweep_points}};
}

void read_plant(Obj o, PlantSection& s) {
  if (const json* arr = o.array("tomatoes")) {
    s.tomatoes.clear();
    for (std::size_t i = 0; i < arr->size(); ++i) {
      Obj t((*arr)[i], o.at("tomatoes") + "[" + std::to_string(i) + "]");
      plant::TomatoSample sample;
      t.str("id", sample.id);
      t.num("mass_g", sample.mass_g);
      t.num("diameter_mm", sample.diameter_mm);
      t.num("stiffness_n_per_mm", sample.stiffness_n_per_mm);
      t.num("friction_mu", sample.friction_mu);
      t.done();
      s.tomatoes.push_back(sample);
    }
  }
  Obj servo = o.child("servo", false);
  servo.num("angle_min_deg", s.servo.angle_min);
  servo.num("angle_max_deg", s.servo.angle_max);
  servo.num("max_rate_deg_s", s.servo.max_rate);
  servo.num("time_constant_s", s.servo.time_constant);
  servo.integer("delay_steps", s.servo.delay_steps);
  servo.num("initial_angle_deg", s.servo.initial_angle);
  servo.done();
  Obj contact = o.child("contact", false);
  contact.num("engage_intercept_deg", s.contact.engage_intercept_deg);
  contact.num("engage_slope_deg_per_mm", s.contact.engage_slope_deg_per_mm);
  contact.num("travel_mm_per_deg", s.contact.travel_mm_per_deg);
  contact.num("force_limit_n", s.contact.force_limit);
  contact.done();
  Obj fsr = o.child("fsr", false);
  fsr.num("force_max_n", s.fsr.force_max);
  fsr.integer("adc_bits", s.fsr.adc_bits);
  fsr.num("noise_sigma_n", s.fsr.noise_sigma);
  fsr.num("cal_gain_counts_per_n", s.fsr.cal_gain);
  fsr.num("cal_offset_counts", s.fsr.cal_offset);
  fsr.integer("sensor_count", s.fsr.sensor_count);
  fsr.done();
  o.done();
}

json write_plant(const PlantSection& s) {
  json tomatoes = json::array();
  for (const auto& t : s.tomatoes) {
    tomatoes.push_back({{"id", t.id},
                        {"mass_g", t.mass_g},
                        {"diameter_mm", t.diameter_mm},
                        {"stiffness_n_per_mm", t.stiffness_n_per_mm},
                        {"friction_mu", t.friction_mu}});
  }
  return {{"tomatoes", tomatoes},
          {"servo",
           {{"angle_min_deg", s.servo.angle_min},
            {"angle_max_deg", s.servo.angle_max},
            {"max_rate_deg_s", s.servo.max_rate},
            {"time_constant_s", s.servo.time_constant},
            {"delay_steps", s.servo.delay_steps},
            {"initial_angle_deg", s.servo.initial_angle}}},
          {"contact",
           {{"engage_intercept_deg", s.contact.engage_intercept_deg},
            {"engage_slope_deg_per_mm", s.contact.engage_slope_deg_per_mm},
            {"travel_mm_per_deg", s.contact.travel_mm_per_deg},
            {"force_limit_n", s.contact.force_limit}}},
          {"fsr",
           {{"force_max_n", s.fsr.force_max},
            {"adc_bits", s.fsr.adc_bits},
            {"noise_sigma_n", s.fsr.noise_sigma},
            {"cal_gain_counts_per_n", s.fsr.cal_gain},
            {"cal_offset_counts", s.fsr.cal_offset},
            {"sensor_count", s.fsr.sensor_count}}}};
}

void read_control(Obj o, ControlSection& s) {
  Obj gains = o.child("gains", false);
  gains.num("kp", s.gains.kp);
  gains.num("ki", s.gains.ki);
  gains.num("kd", s.gains.kd);
  gains.done();
  Obj pid = o.child("pid", false);
  pid.num("base_angle_deg", s.pid.base_angle);
  pid.num("output_scale_deg", s.pid.output_scale);
  pid.num("integral_limit_n_s", s.pid.integral_limit);
  pid.num("derivative_filter", s.pid.derivative_filter);
  pid.num("angle_min_deg", s.pid.angle_min);
  pid.num("angle_max_deg", s.pid.angle_max);
  pid.done();
  o.num("dt_s", s.dt);
  o.num("duration_s", s.duration);
  Obj ref = o.child("reference", false);
  std::string mode = mode_name(s.reference_mode);
  ref.str("policy", mode);
  if (mode == "mass_scaled") {
    s.reference_mode = harvest::ReferenceMode::kMassScaled;
  } else if (mode == "fixed") {
    s.reference_mode = harvest::ReferenceMode::kFixed;
  } else {
    fail(ref.at("policy"), "expected \"mass_scaled\" or \"fixed\"");
  }
  ref.num("fixed_n", s.fixed_reference);
  ref.num("k_ref", s.reference_policy.k_ref);
  ref.num("floor_n", s.reference_policy.floor);
  ref.num("ceiling_n", s.reference_policy.ceiling);
  ref.done();
  Obj tune = o.child("tune", false);
  tune.numbers("kp_grid", s.tune_kp_grid);
  tune.num("reference_n", s.tune_reference);
  tune.num("duration_s", s.tune_duration);
  tune.integer("min_crossings", s.tune_min_crossings);
  tune.num("amplitude_ratio", s.tune_amplitude_ratio);
  tune.done();
  o.done();
}

json write_control(const ControlSection& s) {
  return {{"gains", {{"kp", s.gains.kp}, {"ki", s.gains.ki}, {"kd", s.gains.kd}}},
          {"pid",
           {{"base_angle_deg", s.pid.base_angle},
            {"output_scale_deg", s.pid.output_scale},
            {"integral_limit_n_s", s.pid.integral_limit},
            {"derivative_filter", s.pid.derivative_filter},
            {"angle_min_deg", s.pid.angle_min},
            {"angle_max_deg", s.pid.angle_max}}},
          {"dt_s", s.dt},
          {"duration_s", s.duration},
          {"reference",
           {{"policy", mode_name(s.reference_mode)},
            {"fixed_n", s.fixed_reference},
            {"k_ref", s.reference_policy.k_ref},
            {"floor_n", s.reference_policy.floor},
            {"ceiling_n", s.reference_policy.ceiling}}},
          {"tune",
           {{"kp_grid", s.tune_kp_grid},
            {"reference_n", s.tune_reference},
            {"duration_s", s.tune_duration},
            {"min_crossings", s.tune_min_crossings},
            {"amplitude_ratio", s.tune_amplitude_ratio}}}};
}

void read_arm(Obj o, ArmSection& s) {
  if (const json* dh = o.array("dh")) {
    if (dh->size() != static_cast<std::size_t>(arm::kJoints)) {
      fail(o.at("dh"), "expected " + std::to_string(arm::kJoints) + " rows");
    }
    for (int j = 0; j < arm::kJoints; ++j) {
      Obj row((*dh)[j], o.at("dh") + "[" + std::to_string(j) + "]");
      row.num("a_mm", s.chain.rows[j].a);
      row.angle("alpha_deg", s.chain.rows[j].alpha);
      row.num("d_mm", s.chain.rows[j].d);
      row.angle("offset_deg", s.chain.rows[j].offset);
      row.done();
    }
  }
  o.angles<arm::kJoints>("lower_deg", s.chain.lower);
  o.angles<arm::kJoints>("upper_deg", s.chain.upper);
  o.angles<arm::kJoints>("velocity_limit_deg_s", s.chain.velocity_limit);
  Obj pso = o.child("pso", false);
  pso.integer("particles", s.pso.particle_count);
  pso.integer("iterations", s.pso.iteration_count);
  pso.num("inertia", s.pso.inertia);
  pso.num("c1", s.pso.cognitive);
  pso.num("c2", s.pso.social);
  pso.num("velocity_clamp", s.pso.velocity_clamp);
  pso.done();
  Obj w = o.child("weights", false);
  w.num("direction_mm_per_rad", s.weights.direction);
  w.num("limit_mm_per_rad2", s.weights.limit);
  w.boolean("use_direction", s.weights.use_direction);
  w.num("converged_cost", s.weights.converged_cost);
  w.done();
  o.angles<arm::kJoints>("home_deg", s.home);
  o.fixed<3>("tomato_target_mm", s.tomato_target);
  o.fixed<3>("punnet_target_mm", s.punnet_target);
  o.num("plan_duration_s", s.plan_duration);
  o.num("trajectory_dt_s", s.trajectory_dt);
  o.done();
}

json write_arm(const ArmSection& s) {
  json dh = json::array();
  for (const auto& r : s.chain.rows) {
    dh.push_back({{"a_mm", r.a}, {"alpha_deg", to_deg(r.alpha)}, {"d_mm", r.d}, {"offset_deg", to_deg(r.offset)}});
  }
  return {{"dh", dh},
          {"lower_deg", vec(s.chain.lower * (180.0 / std::numbers::pi))},
          {"upper_deg", vec(s.chain.upper * (180.0 / std::numbers::pi))},
          {"velocity_limit_deg_s", vec(s.chain.velocity_limit * (180.0 / std::numbers::pi))},
          {"pso",
           {{"particles", s.pso.particle_count},
            {"iterations", s.pso.iteration_count},
            {"inertia", s.pso.inertia},
            {"c1", s.pso.cognitive},
            {"c2", s.pso.social},
            {"velocity_clamp", s.pso.velocity_clamp}}},
          {"weights",
           {{"direction_mm_per_rad", s.weights.direction},
            {"limit_mm_per_rad2", s.weights.limit},
            {"use_direction", s.weights.use_direction},
            {"converged_cost", s.weights.converged_cost}}},
          {"home_deg", vec(s.home * (180.0 / std::numbers::pi))},
          {"tomato_target_mm", vec(s.tomato_target)},
          {"punnet_target_mm", vec(s.punnet_target)},
          {"plan_duration_s", s.plan_duration},
          {"trajectory_dt_s", s.trajectory_dt}};
}

void read_perception(Obj o, PerceptionSection& s) {
  Obj n = o.child("noise", false);
  n.num("keypoint_sigma_mm", s.noise.keypoint_sigma);
  n.num("depth_sigma_mm", s.noise.depth_sigma);
  n.num("miss_rate", s.noise.miss_rate);
  n.num("false_positive_rate", s.noise.false_positive_rate);
  n.num("ripeness_confusion", s.noise.ripeness_confusion);
  n.num("occlusion_miss_gain", s.noise.occlusion_miss_gain);
  n.done();
  Obj sc = o.child("scene", false);
  sc.fixed<3>("volume_min_mm", s.scene.volume_min);
  sc.fixed<3>("volume_max_mm", s.scene.volume_max);
  sc.num("radius_min_mm", s.scene.radius_min);
  sc.num("radius_max_mm", s.scene.radius_max);
  sc.num("stem_offset_fraction", s.scene.stem_offset_fraction);
  sc.num("ripe_fraction", s.scene.ripe_fraction);
  sc.integer("max_attempts", s.scene.max_attempts);
  sc.done();
  o.integer("tomatoes_per_scene", s.tomatoes_per_scene);
  o.integer("scenes", s.scenes);
  o.num("iou_threshold", s.iou_threshold);
  o.done();
}

json write_perception(const PerceptionSection& s) {
  return {{"noise",
           {{"keypoint_sigma_mm", s.noise.keypoint_sigma},
            {"depth_sigma_mm", s.noise.depth_sigma},
            {"miss_rate", s.noise.miss_rate},
            {"false_positive_rate", s.noise.false_positive_rate},
            {"ripeness_confusion", s.noise.ripeness_confusion},
            {"occlusion_miss_gain", s.noise.occlusion_miss_gain}}},
          {"scene",
           {{"volume_min_mm", vec(s.scene.volume_min)},
            {"volume_max_mm", vec(s.scene.volume_max)},
            {"radius_min_mm", s.scene.radius_min},
            {"radius_max_mm", s.scene.radius_max},
            {"stem_offset_fraction", s.scene.stem_offset_fraction},
            {"ripe_fraction", s.scene.ripe_fraction},
            {"max_attempts", s.scene.max_attempts}}},
          {"tomatoes_per_scene", s.tomatoes_per_scene},
          {"scenes", s.scenes},
          {"iou_threshold", s.iou_threshold}};
}

void read_harvest(Obj o, HarvestSection& s) {
  Obj means = o.child("stage_means_s", false);
  for (int i = 0; i < harvest::kStageCount; ++i) {
    means.num(std::string(harvest::to_string(harvest::kStageOrder[i])), s.timing.means[i]);
  }
  means.done();
  o.num("duration_sigma", s.timing.sigma);
  o.num("diameter_gain_per_mm", s.timing.diameter_gain_per_mm);
  o.num("diameter_reference_mm", s.timing.diameter_reference_mm);
  o.num("target_success", s.target_success);
  if (const json* rates = o.array("failure_rates")) {
    if (rates->size() != static_cast<std::size_t>(harvest::kFailureModeCount)) {
      fail(o.at("failure_rates"), "expected 3 probabilities");
    }
    std::vector<double> p;
    o.numbers("failure_rates", p);
    harvest::FailureRates fr;
    for (int m = 0; m < harvest::kFailureModeCount; ++m) fr.probability[m] = p[m];
    s.failure_rates = fr;
  }
  o.num("cutting_tol_mm", s.cutting_tol);
  o.num("depth_window_mm", s.depth_window);
  o.num("keypoint_sigma_mm", s.keypoint_sigma);
  o.num("depth_sigma_mm", s.depth_sigma);
  o.num("pedicel_offset_mm", s.pedicel_offset);
  o.num("depth_offset_mm", s.depth_offset);
  o.num("proximity_threshold_mm", s.proximity_threshold);
  o.fixed<3>("fruit_position_mm", s.fruit_position);
  o.integer("n_contacts", s.n_contacts);
  o.num("slip_safety", s.slip_safety);
  o.num("trajectory_dt_s", s.trajectory_dt);
  o.integer("trials", s.trials);
  o.integer("threads", s.threads);
  o.done();
}

json write_harvest(const HarvestSection& s) {
  json means = json::object();
  for (int i = 0; i < harvest::kStageCount; ++i) {
    means[std::string(harvest::to_string(harvest::kStageOrder[i]))] = s.timing.means[i];
  }
  json out = {{"stage_means_s", means},
              {"duration_sigma", s.timing.sigma},
              {"diameter_gain_per_mm", s.timing.diameter_gain_per_mm},
              {"diameter_reference_mm", s.timing.diameter_reference_mm},
              {"target_success", s.target_success},
              {"cutting_tol_mm", s.cutting_tol},
              {"depth_window_mm", s.depth_window},
              {"keypoint_sigma_mm", s.keypoint_sigma},
              {"depth_sigma_mm", s.depth_sigma},
              {"pedicel_offset_mm", s.pedicel_offset},
              {"depth_offset_mm", s.depth_offset},
              {"proximity_threshold_mm", s.proximity_threshold},
              {"fruit_position_mm", vec(s.fruit_position)},
              {"n_contacts", s.n_contacts},
              {"slip_safety", s.slip_safety},
              {"trajectory_dt_s", s.trajectory_dt},
              {"trials", s.trials},
              {"threads", s.threads}};
  if (s.failure_rates) {
    out["failure_rates"] = std::vector<double>(s.failure_rates->probability.begin(),
                                               s.failure_rates->probability.end());
  }
  return out;
}

}  // namespace

ControlSection::ControlSection() {
  for (int i = 1; i <= 20; ++i) tune_kp_grid.push_back(0.05 * i);
}

control::PlantConfig RunConfig::plant_config() const {
  return {plant.servo, plant.contact, plant.fsr};
}

harvest::HarvestConfig RunConfig::harvest_config() const {
  harvest::HarvestConfig h;
  h.timing = harvest.timing;
  h.failure_rates = harvest.failure_rates ? *harvest.failure_rates
                                          : harvest::calibrate_failure_rates(harvest.target_success);
  h.cutting_tol_mm = harvest.cutting_tol;
  h.depth_window_mm = harvest.depth_window;
  h.keypoint_sigma_mm = harvest.keypoint_sigma;
  h.depth_sigma_mm = harvest.depth_sigma;
  h.pedicel_offset_mm = harvest.pedicel_offset;
  h.depth_offset_mm = harvest.depth_offset;
  h.proximity_threshold_mm = harvest.proximity_threshold;
  h.fruit_position_mm = harvest.fruit_position;
  h.plant = plant_config();
  h.gains = control.gains;
  h.pid = control.pid;
  h.control_dt = control.dt;
  h.reference_mode = control.reference_mode;
  h.fixed_reference = control.fixed_reference;
  h.reference_policy = control.reference_policy;
  h.n_contacts = harvest.n_contacts;
  h.slip_safety = harvest.slip_safety;
  h.chain = arm.chain;
  h.pso = arm.pso;
  h.pso.seed = seed;
  h.goal_weights = arm.weights;
  h.q_home = arm.home;
  h.tomato_target_mm = arm.tomato_target;
  h.punnet_target_mm = arm.punnet_target;
  h.trajectory_dt = harvest.trajectory_dt;
  h.tomatoes = plant.tomatoes;
  h.threads = harvest.threads;
  return h;
}

void validate(const RunConfig& c) {
  section_check("geometry", [&] {
    mechanism::validate(c.geometry.geometry);
    const auto& g = c.geometry;
    if (g.fingers < 1) fail("geometry.fingers", "must be >= 1");
    if (!(g.eta > 0.0 && g.eta <= 1.0)) fail("geometry.eta", "must be in (0, 1]");
    if (!(g.force_min >= 0.0 && g.force_max > g.force_min)) {
      fail("geometry.force_max_n", "must exceed force_min_n >= 0");
    }
    if (g.force_points < 2) fail("geometry.force_points", "must be >= 2");
    if (g.sweep_points < 2) fail("geometry.sweep_points", "must be >= 2");
    for (double p : {g.force_min, g.force_max}) {
      const double theta = g.contact_map(p);
      if (theta < g.geometry.theta_min || theta > g.geometry.theta_max) {
        fail("geometry.contact_theta_deg", "contact map leaves the admissible crank range");
      }
    }
  });
  section_check("plant", [&] {
    if (c.plant.tomatoes.empty()) fail("plant.tomatoes", "must not be empty");
    std::set<std::string> ids;
    for (const auto& t : c.plant.tomatoes) {
      plant::validate(t);
      if (!ids.insert(t.id).second) fail("plant.tomatoes", "duplicate id " + t.id);
    }
    plant::validate(c.plant.servo);
    plant::validate(c.plant.contact);
    plant::validate(c.plant.fsr);
  });
  section_check("control", [&] {
    control::validate(c.control.gains);
    control::validate(c.control.pid);
    if (!(c.control.dt > 0.0)) fail("control.dt_s", "must be positive");
    if (!(c.control.duration > 0.0)) fail("control.duration_s", "must be positive");
    if (!(c.control.fixed_reference >= 0.0)) fail("control.reference.fixed_n", "must be >= 0");
    const auto& p = c.control.reference_policy;
    if (!(p.k_ref > 0.0 && p.floor >= 0.0 && p.ceiling >= p.floor)) {
      fail("control.reference", "need k_ref > 0 and 0 <= floor_n <= ceiling_n");
    }
    const auto& grid = c.control.tune_kp_grid;
    if (grid.empty()) fail("control.tune.kp_grid", "must not be empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (!(grid[i] > 0.0) || (i > 0 && !(grid[i] > grid[i - 1]))) {
        fail("control.tune.kp_grid", "must be positive and strictly ascending");
      }
    }
    if (!(c.control.tune_duration > 0.0)) fail("control.tune.duration_s", "must be positive");
    if (c.control.tune_min_crossings < 2) fail("control.tune.min_crossings", "must be >= 2");
    if (!(c.control.tune_amplitude_ratio > 0.0 && c.control.tune_amplitude_ratio <= 1.0)) {
      fail("control.tune.amplitude_ratio", "must be in (0, 1]");
    }
  });
  section_check("arm", [&] {
    arm::validate(c.arm.chain);
    arm::validate(c.arm.pso);
    if (!c.arm.chain.within_limits(c.arm.home)) fail("arm.home_deg", "outside joint limits");
    if (!(c.arm.plan_duration > 0.0)) fail("arm.plan_duration_s", "must be positive");
    if (!(c.arm.trajectory_dt > 0.0)) fail("arm.trajectory_dt_s", "must be positive");
    if (!(c.arm.weights.direction >= 0.0 && c.arm.weights.limit >= 0.0 &&
          c.arm.weights.converged_cost > 0.0)) {
      fail("arm.weights", "weights must be >= 0 and converged_cost > 0");
    }
  });
  section_check("perception", [&] {
    perception::validate(c.perception.noise);
    perception::validate(c.perception.scene);
    if (c.perception.tomatoes_per_scene < 1) fail("perception.tomatoes_per_scene", "must be >= 1");
    if (c.perception.scenes < 1) fail("perception.scenes", "must be >= 1");
    if (!(c.perception.iou_threshold > 0.0 && c.perception.iou_threshold <= 1.0)) {
      fail("perception.iou_threshold", "must be in (0, 1]");
    }
  });
  section_check("harvest", [&] {
    if (!(c.harvest.target_success > 0.0 && c.harvest.target_success <= 1.0)) {
      fail("harvest.target_success", "must be in (0, 1]");
    }
    if (c.harvest.trials < 1) fail("harvest.trials", "must be >= 1");
    harvest::validate(c.harvest_config());
  });
}

RunConfig parse(const json& doc) {
  RunConfig c;
  Obj root(doc, "");
  root.u64("seed", c.seed);
  if (!doc.is_object() || !doc.contains("seed")) fail("seed", "missing key");
  read_geometry(root.child("geometry", true), c.geometry);
  read_plant(root.child("plant", true), c.plant);
  read_control(root.child("control", true), c.control);
  read_arm(root.child("arm", true), c.arm);
  read_perception(root.child("perception", true), c.perception);
  read_harvest(root.child("harvest", true), c.harvest);
  root.done();
  validate(c);
  return c;
}

json to_json(const RunConfig& c) {
  return {{"seed", c.seed},
          {"geometry", write_geometry(c.geometry)},
          {"plant", write_plant(c.plant)},
          {"control", write_control(c.control)},
          {"arm", write_arm(c.arm)},
          {"perception", write_perception(c.perception)},
          {"harvest", write_harvest(c.harvest)}};
}

json load_document(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot read config file " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kConfigInvalid, path + ": malformed JSON: " + e.what());
  }
}

std::string config_hash(const RunConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_json(c).dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json manifest(const RunConfig& c, const std::string& command,
              const std::vector<std::string>& outputs) {
  return {{"tool", "harvestsim"},
          {"version", kToolVersion},
          {"command", command},
          {"config_hash", config_hash(c)},
          {"seed", c.seed},
          {"outputs", outputs}};
}

}  // namespace harvestsim::config
