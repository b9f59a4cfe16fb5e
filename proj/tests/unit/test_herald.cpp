#include <doctest.h>

#include "fdptomo/errors.hpp"
#include "fdptomo/herald.hpp"
#include "oracles.hpp"

using namespace fdptomo;

TEST_SUITE("herald") {

TEST_CASE("click probabilities match photon-by-photon enumeration") {
  struct Case {
    std::vector<double> split;
    double eff, dark;
  };
  const std::vector<Case> cases{{{1. / 3, 1. / 3, 1. / 3}, 1.0, 0.0},
                                {{1. / 3, 1. / 3, 1. / 3}, 0.6, 0.0},
                                {{0.5, 0.3, 0.2}, 0.8, 0.01},
                                {{0.25, 0.25, 0.5}, 0.45, 0.2}};
  for (const auto& c : cases) {
    SmdSpec smd;
    smd.splitting = c.split;
    smd.apd_efficiency = c.eff;
    smd.dark_count_prob = c.dark;
    for (int m = 0; m <= 4; ++m) {
      double total = 0.0;
      for (int k = 0; k <= 3; ++k) {
        const double p = click_probability(m, k, smd);
        CHECK(p == doctest::Approx(oracle::click_enumeration(m, k, c.split, c.eff, c.dark))
                       .epsilon(1e-12)
                       .scale(1.0));
        total += p;
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("ideal click values") {
  const SmdSpec smd;
  CHECK(click_probability(2, 2, smd) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(click_probability(2, 1, smd) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(click_probability(0, 0, smd) == 1.0);
  CHECK(click_probability(1, 1, smd) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(click_probability(1, 2, smd) == doctest::Approx(0.0).scale(1.0));
  CHECK(click_probability(3, 3, smd) == doctest::Approx(6.0 / 27.0).epsilon(1e-14));
  CHECK_THROWS_AS(click_probability(1, 4, smd), DomainError);
  CHECK_THROWS_AS(click_probability(-1, 0, smd), DomainError);
}

TEST_CASE("spec validation") {
  SmdSpec bad;
  bad.splitting = {0.5, 0.5};
  CHECK_THROWS_AS(bad.validate(), DimensionError);
  bad.splitting = {0.5, 0.5, 0.5};
  CHECK_THROWS_AS(bad.validate(), DomainError);
  CHECK_THROWS_AS(SmdSpec::symmetric(0), DomainError);
  CHECK_THROWS_AS((TmsvSpec{1.0, 20}.validate()), DomainError);
  CHECK_THROWS_AS((TmsvSpec{-0.1, 20}.validate()), DomainError);
}

TEST_CASE("tmsv distribution and cutoff") {
  const RealVector p = tmsv_photon_distribution(TmsvSpec{0.3, 20});
  CHECK(p(0) == doctest::Approx(1 - 0.09));
  CHECK(p(3) == doctest::Approx((1 - 0.09) * std::pow(0.09, 3)));
  CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-12));
  try {
    tmsv_photon_distribution(TmsvSpec{0.9, 20});
    FAIL("expected CutoffError");
  } catch (const CutoffError& e) {
    CHECK(e.required_dim() > 20);
    CHECK(std::pow(0.81, e.required_dim()) <= kMaxTruncationLeakage);
  }
}

TEST_CASE("herald outcome probabilities sum to one") {
  for (double g : {0.05, 0.2, 0.4}) {
    const TmsvSpec t{g, 40};
    for (const auto& smd : {SmdSpec{}, SmdSpec::symmetric(4, 0.7, 1e-3)}) {
      double total = 0.0;
      for (int k = 0; k <= smd.n_apds; ++k) total += herald_probability(t, smd, k);
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("weak pumping heralds near-Fock states") {
  const TmsvSpec t{0.05, 20};
  const SmdSpec smd;
  for (int k = 1; k <= 3; ++k) {
    const auto rho = heralded_state(t, smd, k);
    CHECK(rho.is_diagonal());
    CHECK(rho.check().valid());
    CHECK(fidelity(rho, fock_state(k, 20)) >= 0.99);
  }
  CHECK(heralded_state(t, smd, 3)(3, 3).real() >= 0.97);
  CHECK(heralded_state(t, smd, 0)(0, 0).real() > 0.99);
}

TEST_CASE("multi-photon contamination grows with gamma") {
  const SmdSpec smd;
  double last = 2.0;
  for (double g : {0.02, 0.05, 0.1, 0.2, 0.3}) {
    const double w = heralded_state(TmsvSpec{g, 40}, smd, 2)(2, 2).real();
    CHECK(w < last);
    last = w;
  }
}

TEST_CASE("zero-probability herald is rejected") {
  CHECK_THROWS_AS(heralded_state(TmsvSpec{0.0, 20}, SmdSpec{}, 1), DomainError);
  const SmdSpec dead = SmdSpec::symmetric(3, 0.0, 0.0);
  CHECK_THROWS_AS(heralded_state(TmsvSpec{0.2, 20}, dead, 2), DomainError);
}

}  // TEST_SUITE
