#include <doctest.h>

#include <numbers>
#include <random>

#include "fdptomo/errors.hpp"
#include "fdptomo/fock.hpp"
#include "fdptomo/homodyne.hpp"
#include "fdptomo/probe.hpp"
#include "oracles.hpp"

using namespace fdptomo;

namespace {

DensityMatrix random_state(std::mt19937_64& rng, int dim, int rank) {
  std::normal_distribution<double> g;
  ComplexMatrix v(dim, rank);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < rank; ++j) v(i, j) = Complex(g(rng), g(rng));
  ComplexMatrix r = v * v.adjoint();
  r /= r.trace().real();
  return DensityMatrix(0.5 * (r + r.adjoint()));
}

}  // namespace

TEST_SUITE("fock") {

TEST_CASE("fock_state basics") {
  const auto v = fock_state(0, 5);
  CHECK(v(0, 0) == Complex(1.0));
  CHECK(v.matrix().cwiseAbs().sum() == doctest::Approx(1.0));
  const auto one = fock_state(1, 5);
  CHECK(one(1, 1) == Complex(1.0));
  CHECK(one(0, 0) == Complex(0.0));
  CHECK_THROWS_AS(fock_state(4, 3), DomainError);
  CHECK_THROWS_AS(fock_state(-1, 3), DomainError);
}

TEST_CASE("density matrix validation") {
  ComplexMatrix bad = ComplexMatrix::Zero(2, 2);
  bad(0, 0) = 0.5;
  CHECK_THROWS_AS(DensityMatrix{bad}, DomainError);  // trace
  bad(1, 1) = 0.5;
  bad(0, 1) = 0.1;  // not Hermitian
  CHECK_THROWS_AS(DensityMatrix{bad}, DomainError);
  ComplexMatrix neg = ComplexMatrix::Zero(2, 2);
  neg(0, 0) = 1.5;
  neg(1, 1) = -0.5;
  CHECK_THROWS_AS(DensityMatrix{neg}, DomainError);
  CHECK_THROWS_AS(DensityMatrix{ComplexMatrix::Zero(2, 3)}, DimensionError);
}

TEST_CASE("loss channel matches beam-splitter oracle") {
  std::mt19937_64 rng(7);
  for (int dim = 1; dim <= 4; ++dim) {
    for (double eta : {0.0, 0.3, 0.5, 0.85, 1.0}) {
      const auto rho = random_state(rng, dim, std::min(dim, 2));
      const auto out = loss_channel(rho, eta);
      const auto ref = oracle::beam_splitter_loss(rho.matrix(), eta);
      CHECK((out.matrix() - ref).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("loss channel examples") {
  CHECK(loss_channel(fock_state(1, 4), 1.0) == fock_state(1, 4));
  const auto half = loss_channel(fock_state(1, 4), 0.5);
  CHECK(half(0, 0).real() == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(half(1, 1).real() == doctest::Approx(0.5).epsilon(1e-14));
  const auto two = loss_channel(fock_state(2, 4), 0.5);
  CHECK(two(0, 0).real() == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(two(1, 1).real() == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(two(2, 2).real() == doctest::Approx(0.25).epsilon(1e-14));
  CHECK_THROWS_AS(loss_channel(fock_state(1, 4), 1.1), DomainError);
  CHECK_THROWS_AS(loss_channel(fock_state(1, 4), -0.1), DomainError);
}

TEST_CASE("loss channel semigroup and trace") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 20; ++t) {
    const auto rho = random_state(rng, 12, 3);
    const double e1 = std::uniform_real_distribution<double>(0, 1)(rng);
    const double e2 = std::uniform_real_distribution<double>(0, 1)(rng);
    const auto twice = loss_channel(loss_channel(rho, e1), e2);
    const auto once = loss_channel(rho, e1 * e2);
    CHECK((twice.matrix() - once.matrix()).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(std::abs(once.matrix().trace().real() - 1.0) <= 1e-12);
    CHECK(once.check().valid());
  }
}

TEST_CASE("loss adjoint is the dual map") {
  std::mt19937_64 rng(3);
  const auto rho = random_state(rng, 6, 6);
  const auto obs = random_state(rng, 6, 2).matrix();
  const double eta = 0.7;
  const Complex lhs = (loss_channel(rho, eta).matrix() * obs).trace();
  const Complex rhs = (rho.matrix() * loss_channel_adjoint(obs, eta)).trace();
  CHECK(std::abs(lhs - rhs) <= 1e-13);
}

TEST_CASE("photon statistics") {
  const auto p = photon_statistics(fock_state(2, 5));
  CHECK(p(2) == 1.0);
  CHECK(p.sum() == 1.0);
  const auto mixed = photon_statistics(maximally_mixed(2));
  CHECK(mixed(0) == doctest::Approx(0.5));
  CHECK(mixed(1) == doctest::Approx(0.5));
  const auto poisson = photon_statistics(phav_density(1.0, 20));
  CHECK(poisson(0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-7));
}

TEST_CASE("wigner closed forms") {
  CHECK(wigner_point(fock_state(0, 5), 0, 0) == doctest::Approx(1.0 / std::numbers::pi).epsilon(1e-12));
  CHECK(wigner_point(fock_state(1, 5), 0, 0) == doctest::Approx(-1.0 / std::numbers::pi).epsilon(1e-12));
  const auto mm = maximally_mixed(40);
  for (double x : {-3.0, -1.0, 0.0, 0.7, 2.5}) {
    for (double p : {-2.0, 0.0, 1.3}) CHECK(wigner_point(mm, x, p) >= 0.0);
  }
}

TEST_CASE("wigner matches displaced-parity oracle") {
  std::mt19937_64 rng(5);
  for (int dim : {2, 5, 10}) {
    const auto rho = random_state(rng, dim, 2);
    for (double x : {-1.5, 0.0, 0.4, 2.0}) {
      for (double p : {-0.8, 0.0, 1.1}) {
        const double ref = oracle::displaced_parity_wigner(rho.matrix(), x, p);
        CHECK(wigner_point(rho, x, p) == doctest::Approx(ref).epsilon(1e-9).scale(1.0));
      }
    }
  }
}

TEST_CASE("wigner grid normalisation and marginal") {
  const auto rho = loss_channel(fock_state(2, 10), 0.8);
  const auto xs = linspace(-6, 6, 121);
  const auto grid = wigner(rho, xs, xs);
  CHECK(grid.integral() == doctest::Approx(1.0).epsilon(1e-3));
  // Integrating over p reproduces the homodyne quadrature density.
  const auto fine = linspace(-8, 8, 1601);
  for (double x : {-1.7, -0.3, 0.0, 0.9, 2.2}) {
    const std::vector<double> one{x};
    const auto row = wigner(rho, one, fine);
    double m = 0.0;
    for (std::size_t j = 0; j + 1 < fine.size(); ++j) {
      m += 0.5 * (row.values(0, j) + row.values(0, j + 1)) * (fine[j + 1] - fine[j]);
    }
    CHECK(m == doctest::Approx(quadrature_pdf(rho, x)).epsilon(1e-4).scale(1.0));
  }
}

TEST_CASE("fidelity") {
  std::mt19937_64 rng(9);
  const auto a = random_state(rng, 6, 3);
  CHECK(fidelity(a, a) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(fidelity(fock_state(0, 3), fock_state(1, 3)) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(fidelity(fock_state(0, 2), maximally_mixed(2)) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS(fidelity(fock_state(0, 2), fock_state(0, 3)), DimensionError);
  for (int t = 0; t < 20; ++t) {
    const auto x = random_state(rng, 8, 1 + t % 4);
    const auto y = random_state(rng, 8, 1 + (t + 1) % 4);
    const double fxy = fidelity(x, y);
    CHECK(std::abs(fxy - fidelity(y, x)) <= 1e-9);
    CHECK(fxy >= 0.0);
    CHECK(fxy <= 1.0);
  }
  // Pure states: 1 only for identical vectors (overlap formula).
  for (int t = 0; t < 10; ++t) {
    const auto x = random_state(rng, 5, 1);
    const auto y = random_state(rng, 5, 1);
    const double overlap = (x.matrix() * y.matrix()).trace().real();
    CHECK(fidelity(x, y) == doctest::Approx(overlap).epsilon(1e-8).scale(1.0));
    CHECK(fidelity(x, y) < 1.0 - 1e-6);
  }
}

TEST_CASE("operations preserve validity") {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 25; ++t) {
    const auto rho = random_state(rng, 10, 1 + t % 5);
    CHECK(loss_channel(rho, 0.37).check().valid());
    CHECK(resize_cutoff(rho, 14).check().valid());
    CHECK(resize_cutoff(rho, 7).check().valid());
  }
}

}  // TEST_SUITE
