#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "specdiff/config.hpp"
#include "specdiff/errors.hpp"
#include "specdiff/output.hpp"
#include "specdiff/svg.hpp"

using namespace specdiff;

namespace {

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("empty config keeps defaults") {
  const auto c = parse("");
  CHECK(c.law.A == 1.01);
  CHECK(c.grid.dt == 1e-3);
  CHECK(c.kappa == kDefaultKappa);
  CHECK(c.baseline.sigma0 == Baseline::reference(c.law).sigma0);
  CHECK_FALSE(c.emitter().has_value());
}

TEST_CASE("sections and lists") {
  const auto c = parse(
      "[grid]\nseed = 7\nn_traj = 500\nscheme = hazard\n"
      "[emitter]\nT1_ns = 2\nT2_ns = 1\n"
      "[dephasing]\nsweep_T_K = 5, 10\ntable = 5:0.1, 30:3\n"
      "[simplex]\ntie_weights = 1, 2, 3\n");
  CHECK(c.grid.seed == 7);
  CHECK(c.grid.n_traj == 500);
  CHECK(c.scheme == JumpScheme::Hazard);
  REQUIRE(c.emitter(3.0).has_value());
  CHECK(c.emitter(3.0)->omega_R == 3.0);
  CHECK(c.sweep_T_K == std::vector<double>{5.0, 10.0});
  REQUIRE(c.dephasing_table.has_value());
  CHECK(c.dephasing_table->second(1) == 3.0);
  CHECK(c.calib.tie_weights(2) == 3.0);
  CHECK(c.calibration_config().mc_grid.seed == 7);
  CHECK(c.calibration_config().mc_grid.n_traj == c.mc_n_traj);
}

TEST_CASE("baseline T0 override recomputes the reference") {
  const auto c = parse("[baseline]\nT0 = 5\n");
  CHECK(c.baseline.T0 == 5.0);
  CHECK(c.baseline.sigma0 == Baseline::reference(c.law, 5.0).sigma0);
  const auto d = parse("[baseline]\nsigma0_GHz = 0.5\n");
  CHECK(d.baseline.sigma0 == 0.5);
}

TEST_CASE("unknown keys and sections are errors") {
  CHECK_THROWS_AS(parse("[grid]\nstep = 1\n"), InvalidInput);
  CHECK_THROWS_AS(parse("[gird]\ndt_ns = 1\n"), InvalidInput);
  CHECK_THROWS_AS(parse("[grid]\ndt_ns = fast\n"), InvalidInput);
}

TEST_CASE("cross-field validation") {
  CHECK_THROWS_AS(parse("[emitter]\nT1_ns = 2\n"), InvalidInput);
  CHECK_THROWS_AS(parse("[emitter]\nT1_ns = 1\nT2_ns = 3\n"), InvalidInput);
  CHECK_THROWS_AS(parse("[grid]\nburn_in_ns = 20\n"), InvalidInput);
  CHECK_THROWS_AS(parse("[dephasing]\nnodes_K = 10, 5\n"), InvalidInput);
}

TEST_CASE("list parsing") {
  CHECK(parse_list("1, 2.5,3") == std::vector<double>{1.0, 2.5, 3.0});
  CHECK_THROWS_AS(parse_list("1,,2"), InvalidInput);
  CHECK_THROWS_AS(parse_list("a"), InvalidInput);
}

TEST_CASE("shipped config parses") {
  const auto path = std::filesystem::path(__FILE__).parent_path().parent_path().parent_path() / "configs" / "default.ini";
  const auto c = load_config(path);
  CHECK(c.emitter().has_value());
  CHECK_THROWS_AS(load_config("/nonexistent/specdiff.ini"), InvalidInput);
}

}

TEST_SUITE("output") {

TEST_CASE("json summaries carry the documented keys") {
  GaussianFit f;
  f.fwhm = 1.5;
  const auto j = to_json(f);
  for (const char* k : {"mu", "sigma_fit", "fwhm", "residual_rms", "skewness", "excess_kurtosis"}) CHECK(j.contains(k));
  CHECK(j["fwhm"] == 1.5);
}

TEST_CASE("file tags") {
  CHECK(tag(20.0) == "20");
  CHECK(tag(2.5) == "2.5");
}

TEST_CASE("write_file creates directories") {
  const auto dir = std::filesystem::temp_directory_path() / "specdiff_output_test";
  std::filesystem::remove_all(dir);
  write_file(dir / "a" / "b.txt", [](std::ostream& o) { o << "x\n"; });
  std::ifstream in(dir / "a" / "b.txt");
  std::string s;
  std::getline(in, s);
  CHECK(s == "x");
  std::filesystem::remove_all(dir);
}

TEST_CASE("svg: version line then data-only content") {
  svg::Plot p{"t", "x", "y", {{"s", {0, 1, 2}, {0, 1, 4}, false, false}, {"d", {0, 2}, {0, 2}, true, true}}};
  std::ostringstream a, b;
  svg::write(a, p);
  svg::write(b, p);
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("<!-- specdiff", 0) == 0);
  CHECK(a.str().find("stroke-dasharray") != std::string::npos);
  CHECK(a.str().find("<circle") != std::string::npos);
}

}
