#include <numbers>
#include <string>

#include "doctest.h"
#include "harvestsim/config.hpp"
#include "harvestsim/error.hpp"

using namespace harvestsim;
using namespace harvestsim::config;
using nlohmann::json;

namespace {

std::string error_of(const json& doc) {
  try {
    parse(doc);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kConfigInvalid);
    return e.what();
  }
  return {};
}

bool mentions(const std::string& msg, const std::string& part) {
  return msg.find(part) != std::string::npos;
}

}  // namespace

TEST_CASE("config round trip") {
  const RunConfig defaults;
  const json doc = to_json(defaults);
  const RunConfig back = parse(doc);
  CHECK(to_json(back) == doc);
  CHECK(config_hash(back) == config_hash(defaults));
  CHECK(back.seed == defaults.seed);
  CHECK(back.control.gains.kp == defaults.control.gains.kp);
  CHECK(back.arm.chain.rows[1].a == defaults.arm.chain.rows[1].a);
  CHECK(back.geometry.geometry.gamma == doctest::Approx(defaults.geometry.geometry.gamma).epsilon(1e-15));
}

TEST_CASE("config hash") {
  RunConfig a, b;
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  b.seed = a.seed + 1;
  CHECK(config_hash(a) != config_hash(b));
  b = a;
  b.harvest.trials += 1;
  CHECK(config_hash(a) != config_hash(b));
  const json m = manifest(a, "grasp", {"x.csv"});
  CHECK(m["config_hash"] == config_hash(a));
  CHECK(m["seed"] == a.seed);
  CHECK(m["version"] == kToolVersion);
  CHECK(m["outputs"].size() == 1);
}

TEST_CASE("config errors carry key paths") {
  const json good = to_json(RunConfig{});
  SUBCASE("missing section") {
    for (const char* section : {"geometry", "plant", "control", "arm", "perception", "harvest"}) {
      json doc = good;
      doc.erase(section);
      const std::string msg = error_of(doc);
      CAPTURE(section);
      CHECK(mentions(msg, section));
      CHECK(mentions(msg, "missing section"));
    }
  }
  SUBCASE("unknown key") {
    json doc = good;
    doc["control"]["gains"]["kq"] = 1.0;
    const std::string msg = error_of(doc);
    CHECK(mentions(msg, "control.gains.kq"));
    doc = good;
    doc["extra"] = 1;
    CHECK(mentions(error_of(doc), "extra"));
  }
  SUBCASE("type error") {
    json doc = good;
    doc["harvest"]["trials"] = "many";
    CHECK(mentions(error_of(doc), "harvest.trials"));
    doc = good;
    doc["seed"] = -4;
    CHECK(mentions(error_of(doc), "seed"));
  }
  SUBCASE("module validation is reported per section") {
    json doc = good;
    doc["control"]["gains"]["kp"] = -1.0;
    CHECK(mentions(error_of(doc), "control"));
    doc = good;
    doc["perception"]["noise"]["miss_rate"] = 2.0;
    CHECK(mentions(error_of(doc), "perception"));
    doc = good;
    doc["geometry"]["d_mm"] = 1000.0;
    CHECK(mentions(error_of(doc), "geometry"));
  }
  SUBCASE("angles are degrees at the boundary") {
    const double gamma_deg = good["geometry"]["gamma_deg"].get<double>();
    CHECK(gamma_deg * std::numbers::pi / 180.0 ==
          doctest::Approx(RunConfig{}.geometry.geometry.gamma).epsilon(1e-15));
    json doc = good;
    doc["plant"]["servo"]["angle_max_deg"] = 170.0;
    CHECK(parse(doc).plant.servo.angle_max == doctest::Approx(170.0));
  }
}
