#include "doctest.h"

#include "tangle/config.hpp"
#include "tangle/error.hpp"

#include <string>

using namespace tangle;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("defaults") {
  const RunConfig c = parse_config("");
  CHECK(c.grid == GridMode::Full);
  CHECK(c.targets().size() == 27);
  CHECK(c.study.iterations == 10);
  CHECK(c.study.units == 100);
  CHECK(c.study.magnet.face_diameter == 80.0);
  CHECK(c.study.magnet.capture_gap == 3.0);
  CHECK(c.study.gripper.closed_gap() == doctest::Approx(5.0));
  CHECK(c.grain_types.size() == 9);
  CHECK(c.segments == 100);
}

TEST_CASE("values are parsed") {
  const RunConfig c = parse_config(
      "# comment\n"
      "\n"
      "seed = 99\n"
      "grid = single\n"
      "target.tau_mm = 0.4\n"
      "target.lambda_mm = 60\n"
      "target.spikes = 2\n"
      "protocol = gripper\n"
      "return_mode = redrop\n"
      "link.constant = 0.5\n"
      "pack.types = I, V,IV\n"
      "integrity.shake = true\n"
      "fit.sigma = 12.5\n");
  CHECK(c.seed == 99);
  CHECK(c.grid == GridMode::Single);
  REQUIRE(c.targets().size() == 1);
  CHECK(c.targets()[0] == TargetConfig{0.4, 60, 2});
  CHECK(c.study.protocol == Protocol::Gripper);
  CHECK(c.study.return_mode == ReturnMode::Redrop);
  REQUIRE(c.study.link_model.constant.has_value());
  CHECK(*c.study.link_model.constant == 0.5);
  CHECK(c.grain_types == std::vector<GrainType>{GrainType::I, GrainType::V, GrainType::IV});
  CHECK(c.shake);
  CHECK(c.fit.sigma == 12.5);
  CHECK_FALSE(parse_config("link.constant = none\n").study.link_model.constant.has_value());
}

TEST_CASE("errors cite the key and line") {
  const std::string unknown = error_of("seed = 1\n\nmagnet.colour = red\n");
  CHECK(unknown.find("line 3") != std::string::npos);
  CHECK(unknown.find("magnet.colour") != std::string::npos);

  const std::string bad = error_of("seed = 1\niterations = ten\n");
  CHECK(bad.find("line 2") != std::string::npos);
  CHECK(bad.find("iterations") != std::string::npos);

  const std::string repeated = error_of("seed = 1\nseed = 2\n");
  CHECK(repeated.find("line 2") != std::string::npos);
  CHECK(repeated.find("repeated") != std::string::npos);

  CHECK(error_of("just words\n").find("line 1") != std::string::npos);
  CHECK(error_of("grid = diagonal\n").find("grid") != std::string::npos);
  CHECK(error_of("protocol = tweezers\n").find("protocol") != std::string::npos);
  CHECK(error_of("pack.types = I,XI\n").find("pack.types") != std::string::npos);
  CHECK_FALSE(error_of("iterations = 0\n").empty());
  CHECK_FALSE(error_of("magnet.capture_gap_mm = 0\n").empty());
  CHECK_FALSE(error_of("link.d0_mm = -1\n").empty());
  CHECK_THROWS_AS(load_config("/nonexistent/run.cfg"), ConfigError);
}

TEST_CASE("text round trip is exact") {
  RunConfig c = parse_config("seed = 5\ngrid = single\ntarget.tau_mm = 0.2\nlink.d0_mm = 3.3\n");
  c.study.params.dt = 1.0 / 30000.0;
  c.study.supply.settle_reach = 0.1 + 0.2;
  const std::string text = to_text(c);
  const RunConfig back = parse_config(text);
  CHECK(to_text(back) == text);
  CHECK(back.study.params.dt == c.study.params.dt);
  CHECK(back.study.supply.settle_reach == c.study.supply.settle_reach);
  CHECK(back.study.link_model.d0 == 3.3);
  CHECK(back.single == c.single);
}

TEST_CASE("checksum") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);
}
