#include <doctest.h>

#include <fstream>
#include <sstream>

#include "fdptomo/serialize.hpp"
#include "pipeline.hpp"

using namespace fdptomo;
using namespace fdptomo::cli;

namespace {

ExperimentConfig mini_config() {
  auto c = parse_config(R"(
dim: 12
probes:
  count: 8
  alpha_max: 1.2
  pulses: 20000
detector:
  static_blocked_samples: 20000
source:
  pulses: 20000
  states: [vacuum, herald:1]
mc:
  n_trials: 4
)");
  return c;
}

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("fdptomo_pipeline_" + name);
  fs::remove_all(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void run_all(const ExperimentConfig& c, const fs::path& out) {
  cmd_calibrate(c, out);
  cmd_acquire(c, out, {});
  cmd_fit(c, out, {});
  cmd_mc(c, out, {});
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("selectors") {
  CHECK(parse_selector("vacuum").kind == "vacuum");
  const auto h = parse_selector("herald:2");
  CHECK(h.kind == "herald");
  CHECK(h.index == 2);
  CHECK(h.stem() == "herald_2");
  CHECK(parse_selector("phav:1.25").amplitude == 1.25);
  CHECK(parse_selector("fock:3").index == 3);
  CHECK(parse_selector("file:/tmp/some state.json").stem() == "file_some_state");
  CHECK_THROWS_AS(parse_selector("squeezed:1"), ConfigError);
  CHECK_THROWS_AS(parse_selector("herald:x"), ConfigError);
  CHECK_THROWS_AS(parse_selector("fock:-1"), ConfigError);
  CHECK_THROWS_AS(parse_selector("vacuum:1"), ConfigError);
  const auto c = mini_config();
  CHECK(selector_state(parse_selector("fock:2"), c) == fock_state(2, 12));
  CHECK(selector_state(parse_selector("herald:1"), c) ==
        heralded_state(c.source.tmsv, c.source.smd, 1));
}

TEST_CASE("file selector loads a saved state") {
  const auto dir = fresh_dir("file");
  fs::create_directories(dir);
  const auto rho = loss_channel(fock_state(2, 12), 0.5);
  save_json(dir / "mine.json", to_json(rho));
  const auto c = mini_config();
  CHECK(selector_state(parse_selector("file:" + (dir / "mine.json").string()), c) == rho);
  save_json(dir / "small.json", to_json(fock_state(1, 4)));
  CHECK_THROWS(selector_state(parse_selector("file:" + (dir / "small.json").string()), c));
  fs::remove_all(dir);
}

TEST_CASE("stages write their outputs") {
  const auto c = mini_config();
  const auto out = fresh_dir("stages");
  run_all(c, out);
  for (const char* f : {"probes.json", "probes.csv", "state_vacuum.json", "pattern_herald_1.csv",
                        "fit_herald_1.json", "coefficients_herald_1.csv", "wigner_herald_1.csv",
                        "residuals_vacuum.csv", "mc_herald_1.json", "mc_herald_1.csv",
                        "timings/calibrate.json"}) {
    CHECK_MESSAGE(fs::exists(out / f), f);
  }
  const Json fit = load_json(out / "fit_herald_1.json");
  CHECK(fit["fdp"]["coefficients"].size() == 8);
  CHECK(std::abs(fit["fdp"]["sum_residual"].get<double>()) <= 1e-8);
  CHECK(fit["comparison"]["fidelity_truth"].get<double>() > 0.8);
  const Json st = load_json(out / "state_herald_1.json");
  CHECK(st["simulation_only"] == true);

  // Thresholds decide the report exit code.
  auto lax = c;
  lax.thresholds.min_fidelity_truth = {{"herald:1", 0.5}};
  lax.thresholds.min_fidelity_ml = 0.0;
  lax.thresholds.min_envelope_fraction = 0.0;
  CHECK(cmd_report(lax, out) == kExitOk);
  CHECK(fs::exists(out / "report.json"));
  CHECK(fs::exists(out / "report.txt"));
  auto strict = lax;
  strict.thresholds.min_fidelity_truth = {{"herald:1", 0.9999}};
  CHECK(cmd_report(strict, out) == kExitAcceptance);
  const Json rep = load_json(out / "report.json");
  CHECK(rep.dump().find("herald:1") != std::string::npos);
  fs::remove_all(out);
}

TEST_CASE("fit accepts a bare pattern csv") {
  const auto c = mini_config();
  const auto out = fresh_dir("csv");
  cmd_calibrate(c, out);
  cmd_acquire(c, out, {"fock:1"});
  const auto other = fresh_dir("csv_src");
  fs::create_directories(other);
  fs::copy_file(out / "pattern_fock_1.csv", other / "measured.csv");
  cmd_fit(c, out, {(other / "measured.csv").string()});
  CHECK(fs::exists(out / "fit_measured.json"));
  fs::remove_all(out);
  fs::remove_all(other);
}

TEST_CASE("report without earlier stages names the missing commands") {
  const auto out = fresh_dir("empty");
  try {
    cmd_report(mini_config(), out);
    FAIL("expected an error");
  } catch (const FormatError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("fdptomo calibrate") != std::string::npos);
    CHECK(msg.find("fdptomo fit") != std::string::npos);
  }
  CHECK_THROWS_AS(cmd_fit(mini_config(), out, {}), Error);
}

TEST_CASE("same seed gives bitwise identical outputs") {
  const auto c = mini_config();
  const auto a = fresh_dir("det_a"), b = fresh_dir("det_b");
  run_all(c, a);
  run_all(c, b);
  const auto fa = numeric_outputs(a), fb = numeric_outputs(b);
  REQUIRE(fa == fb);
  CHECK(fa.size() > 10);
  for (const auto& f : fa) CHECK_MESSAGE(slurp(a / f) == slurp(b / f), f.string());

  auto c2 = c;
  c2.seed += 1;
  const auto d = fresh_dir("det_d");
  cmd_calibrate(c2, d);
  CHECK(slurp(a / "probes.json") != slurp(d / "probes.json"));
  fs::remove_all(a);
  fs::remove_all(b);
  fs::remove_all(d);
}

TEST_CASE("heralded photon number shows in the quadrature variance") {
  const auto c = mini_config();
  const auto out = fresh_dir("variance");
  cmd_acquire(c, out, {"herald:1", "herald:3"});
  const auto p1 = pattern_from_json(load_json(out / "state_herald_1.json")["pattern"]);
  const auto p3 = pattern_from_json(load_json(out / "state_herald_3.json")["pattern"]);
  CHECK(p3.variance() > p1.variance() + 1.0);
  fs::remove_all(out);
}

TEST_CASE("probe count follows the configuration") {
  auto c = mini_config();
  c.probes.count = 2;
  const auto out = fresh_dir("two");
  cmd_calibrate(c, out);
  const auto set = probe_set_from_json(load_json(out / "probes.json"));
  CHECK(set.probes.size() == 2);
  CHECK(set.patterns().size() == 2);
  fs::remove_all(out);
}

}  // TEST_SUITE
