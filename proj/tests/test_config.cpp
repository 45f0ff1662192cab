#include <doctest.h>

#include <stdexcept>

#include "sonarscale/config.hpp"

using namespace sonarscale;

TEST_CASE("parsing and typed access") {
  const ConfigMap cfg = ConfigMap::parse_string(
      "# a comment\n"
      "seed = 7\n"
      "simulate.n_beams = 64   # trailing comment\n"
      "simulate.noise_sigma = 1.25\n"
      "train.gaussian_uncertainty = true\n"
      "simulate.target.1.freqs_hz = 140 300\n"
      "\n");
  CHECK(cfg.get_int("seed", 0) == 7);
  CHECK(cfg.get_int("simulate.n_beams", 0) == 64);
  CHECK(cfg.get_double("simulate.noise_sigma", 0.0) == doctest::Approx(1.25));
  CHECK(cfg.get_bool("train.gaussian_uncertainty", false));
  const auto freqs = cfg.get_doubles("simulate.target.1.freqs_hz");
  REQUIRE(freqs.size() == 2);
  CHECK(freqs[0] == 140.0);
  CHECK(freqs[1] == 300.0);
  // fallbacks for absent keys
  CHECK(cfg.get("cluster.measure", "symkl") == "symkl");
  CHECK(cfg.get_int("train.max_iters", 200) == 200);
}

TEST_CASE("malformed input is rejected") {
  CHECK_THROWS(ConfigMap::parse_string("no equals sign here"));
  CHECK_THROWS(ConfigMap::parse_string("= value"));
  CHECK_THROWS(ConfigMap::parse_string("seed = 1\nseed = 2\n"));
  const ConfigMap cfg = ConfigMap::parse_string("seed = notanumber");
  CHECK_THROWS(cfg.get_int("seed", 0));
}

TEST_CASE("unknown keys are errors, not warnings") {
  CHECK_NOTHROW(ConfigMap::parse_string("simulate.n_beams = 8").validate_keys());
  CHECK_NOTHROW(
      ConfigMap::parse_string("simulate.target.2.beam_sigma = 0.5").validate_keys());
  CHECK_THROWS_WITH_AS(ConfigMap::parse_string("simulate.nbeams = 8").validate_keys(),
                       doctest::Contains("simulate.nbeams"), std::runtime_error);
  CHECK_THROWS(ConfigMap::parse_string("simulate.target.x.freqs_hz = 1").validate_keys());
}

TEST_CASE("section lines are sorted key = value") {
  const ConfigMap cfg =
      ConfigMap::parse_string("train.step_size = 0.1\ntrain.max_iters = 5\nseed = 1\n");
  const auto lines = cfg.section("train.");
  REQUIRE(lines.size() == 2);
  CHECK(lines[0] == "train.max_iters = 5");
  CHECK(lines[1] == "train.step_size = 0.1");
}

TEST_CASE("fnv1a fingerprint is stable and sensitive") {
  const std::vector<std::string> a = {"x = 1", "y = 2"};
  CHECK(fnv1a_hex(a) == fnv1a_hex(a));
  CHECK(fnv1a_hex(a) != fnv1a_hex({"x = 1", "y = 3"}));
  CHECK(fnv1a_hex(a) != fnv1a_hex({"x = 1"}));
  // concatenation does not collide with separate lines
  CHECK(fnv1a_hex({"x = 1y = 2"}) != fnv1a_hex(a));
}
