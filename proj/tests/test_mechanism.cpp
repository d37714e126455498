#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "harvestsim/error.hpp"
#include "harvestsim/mechanism.hpp"
#include "oracles.hpp"

using namespace harvestsim;
using namespace harvestsim::mechanism;

namespace {

constexpr double kPi = std::numbers::pi;

using oracle::wrap;

oracle::LinkageRoot oracle_root(const GripperGeometry& g, double theta) {
  const auto root = oracle::linkage_root(g, theta);
  REQUIRE(root.has_value());
  return *root;
}

}  // namespace

TEST_CASE("reference geometry closes over the whole admissible range") {
  const auto g = reference_geometry();
  CHECK_NOTHROW(validate(g));
  CHECK(closure_cosine(g, 0.0) == doctest::Approx(-0.0788).epsilon(0.01));
  for (int i = 0; i <= 1000; ++i) {
    const double theta = 1.2 * i / 1000.0;
    const LinkageState s = solve_linkage(g, theta);
    const LoopResiduals r = loop_residuals(g, theta, s.beta, s.xi);
    REQUIRE(std::abs(r.horizontal) <= 1e-9);
    REQUIRE(std::abs(r.vertical) <= 1e-9);
    // xi = pi - beta - gamma holds exactly with the realized gamma.
    REQUIRE(s.xi == kPi - s.beta - s.gamma);
  }
}

TEST_CASE("solve_linkage agrees with an independent Newton root-find") {
  const auto g = reference_geometry();
  for (double theta : {0.0, 0.13, 0.5, 0.77, 1.05, 1.2}) {
    const oracle::LinkageRoot o = oracle_root(g, theta);
    const LinkageState s = solve_linkage(g, theta);
    CHECK(std::abs(wrap(s.beta - o.beta)) < 1e-8);
    CHECK(std::abs(wrap(s.xi - o.xi)) < 1e-8);
  }
}

TEST_CASE("frozen linkage values at theta = 0.5") {
  // Computed with scipy.optimize.fsolve on the loop equations.
  const auto g = reference_geometry();
  const LinkageState s = solve_linkage(g, 0.5);
  CHECK(s.beta == doctest::Approx(-0.373745323321).epsilon(1e-10));
  CHECK(wrap(s.xi) == doctest::Approx(3.025708964294).epsilon(1e-10));
  CHECK(s.gamma == doctest::Approx(0.489629012617).epsilon(1e-10));
  const DrivenPoint p = driven_point(g, s);
  CHECK(p.x == doctest::Approx(-19.5344463931).epsilon(1e-9));
  CHECK(p.y == doctest::Approx(23.2031023116).epsilon(1e-9));
  // Direct substitution.
  CHECK(p.x == doctest::Approx(g.r * std::cos(0.5) + g.l_s + g.l_dm * std::cos(s.xi)));
  CHECK(p.y == doctest::Approx(g.l_p + g.l_dm * std::sin(s.xi)));
}

TEST_CASE("frozen linkage values at the range ends") {
  const auto g = reference_geometry();
  const LinkageState s0 = solve_linkage(g, 0.0);
  CHECK(s0.beta == doctest::Approx(-0.242611029434).epsilon(1e-10));
  CHECK(wrap(s0.xi) == doctest::Approx(2.917057572015).epsilon(1e-10));
  const LinkageState s1 = solve_linkage(g, 1.2);
  CHECK(s1.beta == doctest::Approx(-0.860176887385).epsilon(1e-10));
  CHECK(wrap(s1.xi) == doctest::Approx(-2.918643417305).epsilon(1e-10));
}

TEST_CASE("u vanishes when c equals b") {
  auto g = reference_geometry();
  g.c = g.b;
  g.a = 10.0;  // r cos(theta) + f > a everywhere
  g.d = 30.0;
  for (double theta : {0.0, 0.4, 0.9}) {
    REQUIRE(is_feasible(g, theta));
    CHECK(solve_linkage(g, theta).u == 0.0);
  }
}

TEST_CASE("linkage errors") {
  auto g = reference_geometry();
  SUBCASE("infeasible closure") {
    g.d = 100.0;
    CHECK_FALSE(is_feasible(g, 0.5));
    try {
      solve_linkage(g, 0.5);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kInfeasibleConfiguration);
    }
  }
  SUBCASE("degenerate diagonal") {
    g.c = g.b;
    g.a = g.r + g.f;  // k = 0 at theta = 0
    try {
      solve_linkage(g, 0.0);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kDegenerateDiagonal);
    }
  }
  SUBCASE("non-positive length") {
    g.l_dm = 0.0;
    CHECK_THROWS_AS(validate(g), Error);
  }
}

TEST_CASE("driven point identities") {
  const auto g = reference_geometry();
  LinkageState s;
  s.theta = 0.0;
  s.xi = 0.0;
  DrivenPoint p = driven_point(g, s);
  CHECK(p.x == g.r + g.l_s + g.l_dm);
  CHECK(p.y == g.l_p);
  s.xi = kPi / 2.0;
  CHECK(driven_point(g, s).y == doctest::Approx(g.l_p + g.l_dm));
}

TEST_CASE("driven point is continuous along the sweep") {
  const auto g = reference_geometry();
  const int n = 1000;
  const double step = 1.2 / n;
  DrivenPoint prev = driven_point(g, solve_linkage(g, 0.0));
  for (int i = 1; i <= n; ++i) {
    const DrivenPoint p = driven_point(g, solve_linkage(g, i * step));
    // |dx/dtheta|, |dy/dtheta| <= r + l_dm * max|dxi/dtheta| < 15 + 45 * 1.
    REQUIRE(std::abs(p.x - prev.x) < 60.0 * step);
    REQUIRE(std::abs(p.y - prev.y) < 60.0 * step);
    prev = p;
  }
}

TEST_CASE("jacobian is zero where xi is stationary") {
  // The closure depends on theta only through cos(theta), so xi is even in
  // theta and the central difference at 0 cancels exactly.
  auto g = reference_geometry();
  g.theta_min = -0.5;
  CHECK(linkage_jacobian(g, 0.0) == 0.0);
}

TEST_CASE("jacobian step-halving consistency and totality") {
  const auto g = reference_geometry();
  CHECK(linkage_jacobian(g, 0.5) == doctest::Approx(0.4067286761).epsilon(1e-6));
  for (int i = 1; i < 200; ++i) {
    const double theta = 1.2 * i / 200.0;
    const double j1 = linkage_jacobian(g, theta, 1e-6);
    const double j2 = linkage_jacobian(g, theta, 1e-7);
    REQUIRE(std::isfinite(j1));
    REQUIRE(std::abs(j1 - j2) <= 1e-4 * std::max(std::abs(j1), 1e-3));
  }
}

TEST_CASE("torque variants") {
  const auto g = reference_geometry();
  SUBCASE("zero force gives zero torque") {
    CHECK(torque_for_force(g, {0.5, 0.0}) == 0.0);
    CHECK(torque_virtual_work(g, {0.5, 0.0}) == 0.0);
  }
  SUBCASE("boxed formula at theta = 0 drops the crank term") {
    const double xi = solve_linkage(g, 0.0).xi;
    // Evaluated inside the admissible range, so use a geometry admitting -h.
    auto g2 = g;
    g2.theta_min = -0.1;
    CHECK(torque_for_force(g2, {0.0, 2.0}) ==
          doctest::Approx(2.0 * g.l_dm * std::sin(xi) * linkage_jacobian(g2, 0.0)));
  }
  SUBCASE("homogeneous in P") {
    for (double theta : {0.2, 0.5, 1.0}) {
      const double t1 = torque_virtual_work(g, {theta, 1.0});
      CHECK(torque_virtual_work(g, {theta, 2.0}) == 2.0 * t1);
      CHECK(torque_virtual_work(g, {theta, 0.25}) == 0.25 * t1);
      const double b1 = torque_for_force(g, {theta, 1.0});
      CHECK(torque_for_force(g, {theta, 2.0}) == 2.0 * b1);
    }
  }
  SUBCASE("frozen virtual-work and boxed values") {
    CHECK(torque_virtual_work(g, {0.5, 1.0}) == doctest::Approx(27.48766753).epsilon(1e-6));
    CHECK(torque_virtual_work(g, {0.8, 1.0}) == doctest::Approx(33.24966658).epsilon(1e-6));
    CHECK(torque_for_force(g, {0.5, 1.0}) == doctest::Approx(9.30763399).epsilon(1e-6));
    CHECK(torque_for_force(g, {0.8, 1.0}) == doctest::Approx(10.16556010).epsilon(1e-6));
  }
  SUBCASE("intermediate form uses cos - sin") {
    const double xi = solve_linkage(g, 0.5).xi;
    const double dxi = linkage_jacobian(g, 0.5);
    CHECK(torque_intermediate_form(g, {0.5, 1.0}) ==
          doctest::Approx(g.l_dm * (std::cos(xi) - std::sin(xi)) * dxi + g.r * std::sin(0.5)));
  }
  SUBCASE("query validation") {
    CHECK_THROWS_AS(torque_virtual_work(g, {0.5, -1.0}), Error);
    CHECK_THROWS_AS(torque_for_force(g, {1.5, 1.0}), Error);
  }
}

TEST_CASE("discrepancy table covers the range") {
  const auto rows = torque_discrepancy(reference_geometry(), 13);
  REQUIRE(rows.size() == 13);
  CHECK(rows.front().theta == 0.0);
  CHECK(rows.back().theta == doctest::Approx(1.2));
  for (const auto& r : rows) {
    CHECK(std::isfinite(r.virtual_work));
    CHECK(std::isfinite(r.boxed));
  }
}

TEST_CASE("force-torque curve") {
  const auto g = reference_geometry();
  SUBCASE("single zero sample") {
    const auto c = force_torque_curve(g, LinearContactMap{}, {0.0});
    REQUIRE(c.size() == 1);
    CHECK(c[0].force == 0.0);
    CHECK(c[0].torque == 0.0);
  }
  SUBCASE("fixed contact angle gives a linear curve") {
    const ContactMap fixed = [](double) { return 0.6; };
    const auto c = force_torque_curve(g, fixed, {0.0, 0.5, 1.0, 2.0});
    const double slope = c[2].torque;
    for (const auto& s : c) CHECK(s.torque == doctest::Approx(slope * s.force).epsilon(1e-12));
  }
  SUBCASE("default contact map is strictly increasing") {
    std::vector<double> grid;
    for (int i = 0; i <= 20; ++i) grid.push_back(0.05 * i);
    const auto c = force_torque_curve(g, LinearContactMap{}, grid);
    for (std::size_t i = 1; i < c.size(); ++i) CHECK(c[i].torque > c[i - 1].torque);
  }
  SUBCASE("bad grids") {
    CHECK_THROWS_AS(force_torque_curve(g, LinearContactMap{}, {}), Error);
    CHECK_THROWS_AS(force_torque_curve(g, LinearContactMap{}, {0.5, 0.2}), Error);
  }
}

TEST_CASE("multi-finger demand") {
  CHECK(multi_finger_demand(10.0, 6, 0.8) == doctest::Approx(75.0));
  CHECK(multi_finger_demand(10.0, 1, 1.0) == 10.0);
  CHECK_THROWS_AS(multi_finger_demand(10.0, 0, 0.8), Error);
  CHECK_THROWS_AS(multi_finger_demand(10.0, 6, 0.0), Error);
}
