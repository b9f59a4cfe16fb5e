#include <doctest.h>

#include <random>

#include "fdptomo/errors.hpp"
#include "fdptomo/uncertainty.hpp"

using namespace fdptomo;

namespace {

McInputs small_inputs(std::int64_t pulses) {
  const BinningSpec b;
  DetectorModel d;
  d.static_blocked_samples = 50000;
  const auto ladder = build_probe_ladder(0.2, 1.8, 6, 20);
  const auto set = calibrate_probes(ladder, d, pulses, b, 11);
  McInputs in;
  in.probe_patterns = set.patterns();
  in.probe_amplitudes = set.effective_amplitudes();
  const auto truth = loss_channel(fock_state(1, 20), 0.85);
  in.target = acquire_pattern(truth, d, pulses, b, 12);
  in.references = {{"truth", truth}};
  return in;
}

}  // namespace

TEST_SUITE("uncertainty") {

TEST_CASE("summarize") {
  const auto i = summarize("x", {1.0, 2.0, 3.0, 4.0});
  CHECK(i.name == "x");
  CHECK(i.mean == doctest::Approx(2.5));
  CHECK(i.sd == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(i.lo == doctest::Approx(2.5 - i.sd));
  CHECK(i.hi == doctest::Approx(2.5 + i.sd));
  CHECK(std::isnan(summarize("e", {}).mean));
  CHECK(std::isnan(summarize("one", {1.0}).sd));
}

TEST_CASE("one-sigma intervals of a linear toy cover 68 percent") {
  // y = 2 x + 1 with x ~ N(0, 0.3): the propagated one-sigma interval should
  // hold a fresh draw about 68.3 % of the time.
  std::mt19937_64 rng(99);
  std::normal_distribution<double> x(0.0, 0.3);
  int covered = 0;
  const int reps = 1000;
  for (int r = 0; r < reps; ++r) {
    std::vector<double> ys(1000);
    for (auto& y : ys) y = 2.0 * x(rng) + 1.0;
    const auto iv = summarize("y", ys);
    const double fresh = 2.0 * x(rng) + 1.0;
    if (fresh >= iv.lo && fresh <= iv.hi) ++covered;
  }
  const double rate = static_cast<double>(covered) / reps;
  CHECK(rate == doctest::Approx(0.6827).epsilon(0.10));
}

TEST_CASE("no noise gives zero width") {
  auto in = small_inputs(20000);
  McSpec spec;
  spec.n_trials = 4;
  spec.bin_noise = false;
  spec.alpha_rel_error = 0.0;
  const auto rep = mc_propagate(in, spec);
  CHECK(rep.n_failed == 0);
  CHECK_FALSE(rep.flagged);
  for (const auto& c : rep.coefficients) CHECK(c.sd == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(rep.coefficient_sd_rms() <= 1e-12);
  REQUIRE(rep.find("F(truth)") != nullptr);
  CHECK(rep.find("F(truth)")->sd <= 1e-12);
  CHECK(rep.populations.size() == 20);
  CHECK(rep.find("P(1)") != nullptr);
  CHECK(rep.find("nope") == nullptr);
}

TEST_CASE("reproducible and independent of thread count") {
  auto in = small_inputs(20000);
  McSpec spec;
  spec.n_trials = 8;
  spec.threads = 1;
  const auto a = mc_propagate(in, spec);
  spec.threads = 4;
  const auto b = mc_propagate(in, spec);
  REQUIRE(a.coefficients.size() == b.coefficients.size());
  for (std::size_t i = 0; i < a.coefficients.size(); ++i) {
    CHECK(a.coefficients[i].mean == b.coefficients[i].mean);
    CHECK(a.coefficients[i].sd == b.coefficients[i].sd);
  }
  CHECK(a.find("F(truth)")->mean == b.find("F(truth)")->mean);
  CHECK(a.coefficient_sd_rms() > 0.0);
  spec.seed = 2;
  CHECK(mc_propagate(in, spec).coefficients[0].mean != a.coefficients[0].mean);
}

TEST_CASE("ml fidelity is reported when requested") {
  auto in = small_inputs(20000);
  in.ml_povm = build_binned_povm(BinningSpec{}, 20, 1.0);
  McSpec spec;
  spec.n_trials = 3;
  const auto rep = mc_propagate(in, spec);
  REQUIRE(rep.find("F(ml)") != nullptr);
  CHECK(rep.find("F(ml)")->mean > 0.5);
}

TEST_CASE("failing trials are counted and flagged") {
  auto in = small_inputs(20000);
  // A single-count target resamples to an empty pattern about a third of the time.
  std::vector<std::int64_t> counts(151, 0);
  counts[80] = 1;
  in.target = DataPattern::from_counts(BinningSpec{}, counts);
  McSpec spec;
  spec.n_trials = 20;
  const auto rep = mc_propagate(in, spec);
  CHECK(rep.n_failed > 1);
  CHECK(rep.n_failed < 20);
  CHECK(rep.flagged);
  CHECK(rep.failures.size() == static_cast<std::size_t>(rep.n_failed));
}

TEST_CASE("input validation") {
  auto in = small_inputs(5000);
  McSpec spec;
  spec.n_trials = 1;
  CHECK_THROWS_AS(mc_propagate(in, spec), DomainError);
  spec.n_trials = 4;
  spec.alpha_rel_error = -1.0;
  CHECK_THROWS_AS(mc_propagate(in, spec), DomainError);
  spec.alpha_rel_error = 0.0;
  in.probe_amplitudes.pop_back();
  CHECK_THROWS_AS(mc_propagate(in, spec), DimensionError);
}

}  // TEST_SUITE
