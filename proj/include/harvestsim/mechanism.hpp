#pragma once

// Gripper finger linkage: loop closure, driven point, and the torque needed
// at the crank to transmit a grasp force.
//
// Units: lengths in millimeters, angles in radians, force in newtons,
// torque in N*mm.

#include <functional>
#include <numbers>
#include <vector>

namespace harvestsim::mechanism {

struct GripperGeometry {
  double r = 15.0;     // crank radius
  double a = 40.0;     // frame offsets
  double b = 10.0;
  double c = 25.0;
  double f = 20.0;
  double d = 35.0;     // link lengths
  double e = 30.0;
  double l_s = 12.0;   // slider offset
  double l_p = 18.0;   // pivot height
  double l_dm = 45.0;  // finger moment arm
  double gamma = 0.35; // nominal structural angle between links e and d
  double theta_min = 0.0;  // admissible crank range
  double theta_max = 1.2;
};

/// Repository default geometry; feasible over [0, 1.2] rad.
GripperGeometry reference_geometry();

struct LinkageState {
  double theta = 0.0;
  double beta = 0.0;
  double xi = 0.0;
  double u = 0.0;
  double k = 0.0;
  /// Realized interior angle, so that xi == pi - beta - gamma exactly.
  double gamma = 0.0;
};

struct LoopResiduals {
  double horizontal = 0.0;
  double vertical = 0.0;
};

struct TorqueQuery {
  double theta = 0.0;
  double force = 0.0;  // P, newtons
};

struct DrivenPoint {
  double x = 0.0;
  double y = 0.0;
};

/// Argument of the arccos in the branch formula at crank angle theta.
double closure_cosine(const GripperGeometry& geom, double theta);

/// True when the loop closes at theta (arccos argument within [-1, 1]).
bool is_feasible(const GripperGeometry& geom, double theta);

/// Throws InvalidArgument on non-positive lengths, an empty admissible
/// range, or an infeasible/degenerate sample inside that range.
void validate(const GripperGeometry& geom, int samples = 1001);

LoopResiduals loop_residuals(const GripperGeometry& geom, double theta,
                             double beta, double xi);

/// Solves the closure for beta and xi. Candidate branches are
/// beta = +/-acos(C) +/- u; the ones closing the loop to 1e-9 mm are kept
/// and the assembly mode whose realized interior angle is nearest to
/// geom.gamma wins.
LinkageState solve_linkage(const GripperGeometry& geom, double theta);

DrivenPoint driven_point(const GripperGeometry& geom, const LinkageState& state);

inline constexpr double kJacobianStep = 1e-6;

/// d(xi)/d(theta) by central difference.
double linkage_jacobian(const GripperGeometry& geom, double theta,
                        double step = kJacobianStep);

/// Closed-form torque as printed in the boxed result:
/// T = P * l_DM * sin(xi) * dxi/dtheta + P * r * sin(theta).
double torque_for_force(const GripperGeometry& geom, const TorqueQuery& q);

/// Intermediate-line variant with (cos(xi) - sin(xi)) in place of sin(xi).
double torque_intermediate_form(const GripperGeometry& geom, const TorqueQuery& q);

/// Canonical torque from the virtual-work balance
/// T dtheta + P dx_m + P dy_m = 0, i.e. T = -P d(x_m + y_m)/dtheta.
double torque_virtual_work(const GripperGeometry& geom, const TorqueQuery& q,
                           double step = kJacobianStep);

/// Crank angle at contact as a function of the desired force.
using ContactMap = std::function<double(double force)>;

/// theta(P) = theta_contact + compliance * P.
struct LinearContactMap {
  double theta_contact = 0.3;  // rad
  double compliance = 0.5;     // rad per N
  double operator()(double force) const { return theta_contact + compliance * force; }
};

struct CurveSample {
  double force = 0.0;
  double torque = 0.0;
};

std::vector<CurveSample> force_torque_curve(const GripperGeometry& geom,
                                            const ContactMap& contact_map,
                                            const std::vector<double>& forces);

/// Total actuator demand for `fingers` simultaneously loaded fingers through
/// a transmission of efficiency `eta`.
double multi_finger_demand(double single_finger_torque, int fingers, double eta);

struct DiscrepancyRow {
  double theta = 0.0;
  double virtual_work = 0.0;  // canonical, per newton
  double boxed = 0.0;         // per newton
  double intermediate = 0.0;  // per newton
  double boxed_relative_gap = 0.0;
};

/// Per-newton comparison of the torque variants across the admissible range.
std::vector<DiscrepancyRow> torque_discrepancy(const GripperGeometry& geom, int samples);

}  // namespace harvestsim::mechanism
