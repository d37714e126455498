#include "harvestsim/mechanism.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "harvestsim/error.hpp"

namespace harvestsim::mechanism {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kResidualTol = 1e-9;
constexpr double kMinDiagonal = 1e-9;

double wrap_pi(double angle) {
  double w = std::remainder(angle, 2.0 * kPi);
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

std::string angle_msg(const char* what, double theta) {
  std::ostringstream os;
  os << what << " at theta = " << theta << " rad";
  return os.str();
}

// Horizontal leg of the k diagonal.
double diagonal_x(const GripperGeometry& g, double theta) {
  return g.r * std::cos(theta) + g.f - g.a;
}

}  // namespace

GripperGeometry reference_geometry() { return GripperGeometry{}; }

double closure_cosine(const GripperGeometry& g, double theta) {
  const double x = diagonal_x(g, theta);
  const double y = g.c - g.b;
  const double k = std::hypot(x, y);
  // Law of cosines on the triangle (k, e, d). The e^2 term is required for
  // the loop to close.
  return (k * k + g.e * g.e - g.d * g.d) / (2.0 * g.e * k);
}

bool is_feasible(const GripperGeometry& g, double theta) {
  const double k = std::hypot(diagonal_x(g, theta), g.c - g.b);
  if (k < kMinDiagonal) return false;
  const double cosine = closure_cosine(g, theta);
  return std::isfinite(cosine) && cosine >= -1.0 && cosine <= 1.0;
}

void validate(const GripperGeometry& g, int samples) {
  const std::array<std::pair<const char*, double>, 10> lengths{{
      {"r", g.r}, {"a", g.a}, {"b", g.b}, {"c", g.c}, {"d", g.d},
      {"e", g.e}, {"f", g.f}, {"l_s", g.l_s}, {"l_p", g.l_p}, {"l_dm", g.l_dm}}};
  for (const auto& [name, value] : lengths) {
    if (!(value > 0.0)) {
      throw Error(ErrorKind::kInvalidArgument,
                  std::string("geometry length '") + name + "' must be positive");
    }
  }
  if (!(g.theta_min < g.theta_max)) {
    throw Error(ErrorKind::kInvalidArgument, "geometry admissible range is empty");
  }
  samples = std::max(samples, 2);
  for (int i = 0; i < samples; ++i) {
    const double theta = g.theta_min + (g.theta_max - g.theta_min) * i / (samples - 1);
    if (!is_feasible(g, theta)) {
      throw Error(ErrorKind::kInfeasibleConfiguration,
                  angle_msg("geometry does not close", theta));
    }
  }
}

LoopResiduals loop_residuals(const GripperGeometry& g, double theta, double beta,
                             double xi) {
  return {
      g.r * std::cos(theta) + g.f - g.a - g.e * std::cos(beta) - g.d * std::cos(xi),
      g.c + g.e * std::sin(beta) - g.b - g.d * std::sin(xi),
  };
}

LinkageState solve_linkage(const GripperGeometry& g, double theta) {
  const double x = diagonal_x(g, theta);
  const double y = g.c - g.b;
  const double k = std::hypot(x, y);
  if (k < kMinDiagonal) {
    throw Error(ErrorKind::kDegenerateDiagonal, angle_msg("diagonal k vanishes", theta));
  }
  const double cosine = closure_cosine(g, theta);
  if (!(cosine >= -1.0 && cosine <= 1.0)) {
    throw Error(ErrorKind::kInfeasibleConfiguration,
                angle_msg("arccos argument outside [-1, 1]", theta));
  }
  const double u = std::atan2(y, x);
  const double opening = std::acos(cosine);

  LinkageState best;
  double best_gap = std::numeric_limits<double>::infinity();
  for (const double s_acos : {1.0, -1.0}) {
    for (const double s_u : {-1.0, 1.0}) {
      const double beta = s_acos * opening + s_u * u;
      // Link d closes the loop from the end of link e.
      const double xi_raw = std::atan2(y + g.e * std::sin(beta), x - g.e * std::cos(beta));
      const LoopResiduals res = loop_residuals(g, theta, beta, xi_raw);
      if (std::abs(res.horizontal) > kResidualTol || std::abs(res.vertical) > kResidualTol) {
        continue;
      }
      const double gamma = wrap_pi(kPi - beta - xi_raw);
      const double gap = std::abs(wrap_pi(gamma - g.gamma));
      if (gap < best_gap) {
        best_gap = gap;
        best = LinkageState{theta, beta, kPi - beta - gamma, u, k, gamma};
      }
    }
  }
  if (!std::isfinite(best_gap)) {
    throw Error(ErrorKind::kNoConsistentBranch,
                angle_msg("no branch satisfies the loop closure", theta));
  }
  return best;
}

DrivenPoint driven_point(const GripperGeometry& g, const LinkageState& s) {
  return {g.r * std::cos(s.theta) + g.l_s + g.l_dm * std::cos(s.xi),
          g.l_p + g.l_dm * std::sin(s.xi)};
}

double linkage_jacobian(const GripperGeometry& g, double theta, double step) {
  const double ahead = solve_linkage(g, theta + step).xi;
  const double behind = solve_linkage(g, theta - step).xi;
  return (ahead - behind) / (2.0 * step);
}

namespace {

void check_query(const GripperGeometry& g, const TorqueQuery& q) {
  if (!(q.force >= 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "grasp force must be non-negative");
  }
  if (q.theta < g.theta_min || q.theta > g.theta_max) {
    throw Error(ErrorKind::kInfeasibleConfiguration,
                angle_msg("crank angle outside the admissible range", q.theta));
  }
}

}  // namespace

double torque_for_force(const GripperGeometry& g, const TorqueQuery& q) {
  check_query(g, q);
  const double xi = solve_linkage(g, q.theta).xi;
  const double dxi = linkage_jacobian(g, q.theta);
  return q.force * g.l_dm * std::sin(xi) * dxi + q.force * g.r * std::sin(q.theta);
}

double torque_intermediate_form(const GripperGeometry& g, const TorqueQuery& q) {
  check_query(g, q);
  const double xi = solve_linkage(g, q.theta).xi;
  const double dxi = linkage_jacobian(g, q.theta);
  return q.force * g.l_dm * (std::cos(xi) - std::sin(xi)) * dxi +
         q.force * g.r * std::sin(q.theta);
}

double torque_virtual_work(const GripperGeometry& g, const TorqueQuery& q, double step) {
  check_query(g, q);
  auto sum_xy = [&g](double theta) {
    const DrivenPoint p = driven_point(g, solve_linkage(g, theta));
    return p.x + p.y;
  };
  const double slope = (sum_xy(q.theta + step) - sum_xy(q.theta - step)) / (2.0 * step);
  return -q.force * slope;
}

std::vector<CurveSample> force_torque_curve(const GripperGeometry& g,
                                            const ContactMap& contact_map,
                                            const std::vector<double>& forces) {
  if (forces.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "force grid is empty");
  }
  if (!std::is_sorted(forces.begin(), forces.end())) {
    throw Error(ErrorKind::kInvalidArgument, "force grid must be ascending");
  }
  std::vector<CurveSample> curve;
  curve.reserve(forces.size());
  for (const double p : forces) {
    const double theta = contact_map(p);
    curve.push_back({p, torque_virtual_work(g, {theta, p})});
  }
  return curve;
}

double multi_finger_demand(double single_finger_torque, int fingers, double eta) {
  if (fingers < 1 || !(eta > 0.0 && eta <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "fingers >= 1 and eta in (0, 1] required");
  }
  return fingers * single_finger_torque / eta;
}

std::vector<DiscrepancyRow> torque_discrepancy(const GripperGeometry& g, int samples) {
  samples = std::max(samples, 2);
  std::vector<DiscrepancyRow> rows;
  rows.reserve(static_cast<std::size_t>(samples));
  for (int i = 0; i < samples; ++i) {
    const double theta = g.theta_min + (g.theta_max - g.theta_min) * i / (samples - 1);
    const TorqueQuery unit{theta, 1.0};
    DiscrepancyRow row;
    row.theta = theta;
    row.virtual_work = torque_virtual_work(g, unit);
    row.boxed = torque_for_force(g, unit);
    row.intermediate = torque_intermediate_form(g, unit);
    const double scale = std::max(std::abs(row.virtual_work), 1e-12);
    row.boxed_relative_gap = (row.boxed - row.virtual_work) / scale;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace harvestsim::mechanism
