#include <doctest.h>

#include <algorithm>
#include <random>

#include "fdptomo/errors.hpp"
#include "fdptomo/fdp.hpp"
#include "fdptomo/probe.hpp"
#include "instances.hpp"

using namespace fdptomo;

namespace {

const BinningSpec kBins{};

FdpProblem exact_problem(const std::vector<DensityMatrix>& probes, const RealVector& target) {
  FdpProblem p;
  p.patterns.resize(static_cast<Eigen::Index>(probes.size()), kBins.n_bins);
  const auto proj = binned_quadrature_projectors(kBins, probes.front().dim());
  for (std::size_t i = 0; i < probes.size(); ++i) {
    p.patterns.row(static_cast<Eigen::Index>(i)) = bin_probabilities(probes[i], proj).transpose();
  }
  p.target = target;
  p.probe_states = probes;
  return p;
}

std::vector<DensityMatrix> phav_probes(const std::vector<double>& amps, int dim = 20) {
  std::vector<DensityMatrix> out;
  for (double a : amps) out.push_back(phav_density(a, dim));
  return out;
}

RealVector sampled(const RealVector& probs, std::int64_t k, std::mt19937_64& rng) {
  std::vector<double> w(probs.data(), probs.data() + probs.size());
  std::discrete_distribution<int> d(w.begin(), w.end());
  RealVector f = RealVector::Zero(probs.size());
  for (std::int64_t i = 0; i < k; ++i) f(d(rng)) += 1.0;
  return f / static_cast<double>(k);
}

// Minimiser of E under sum(a) = 1 alone, from the KKT system.
RealVector equality_only_ls(const FdpProblem& p) {
  const Eigen::Index m = p.patterns.rows();
  RealMatrix kkt = RealMatrix::Zero(m + 1, m + 1);
  kkt.topLeftCorner(m, m) = 2.0 * p.patterns * p.patterns.transpose();
  kkt.block(0, m, m, 1).setOnes();
  kkt.block(m, 0, 1, m).setOnes();
  RealVector rhs(m + 1);
  rhs.head(m) = 2.0 * p.patterns * p.target;
  rhs(m) = 1.0;
  return kkt.fullPivLu().solve(rhs).head(m);
}

}  // namespace

TEST_SUITE("fdp") {

TEST_CASE("assemble state") {
  const auto probes = phav_probes({0.0, 1.0});
  RealVector a(2);
  a << 0.25, 0.75;
  const auto rho = assemble_state(a, probes);
  CHECK(rho(0, 0).real() == doctest::Approx(0.25 + 0.75 * std::exp(-1.0)));
  CHECK(rho.matrix().trace().real() == doctest::Approx(1.0).epsilon(1e-12));
  a << 0.3, 0.3;
  CHECK_THROWS_AS(assemble_state(a, probes), DomainError);
  CHECK_THROWS_AS(assemble_state(RealVector::Ones(3) / 3.0, probes), DimensionError);
  // Negative weights are allowed; positivity is checked by the caller.
  a << 2.0, -1.0;
  CHECK(assemble_state(a, probes).min_eigenvalue() < 0.0);
}

TEST_CASE("objective matches the explicit sum") {
  const auto probes = phav_probes({0.3, 0.9, 1.5});
  const auto p = exact_problem(probes, bin_probabilities(fock_state(1, 20), kBins));
  RealVector a(3);
  a << 0.2, -0.1, 0.9;
  double e = 0.0;
  for (int n = 0; n < p.bin_count(); ++n) {
    double model = 0.0;
    for (int x = 0; x < 3; ++x) model += a(x) * p.patterns(x, n);
    e += (p.target(n) - model) * (p.target(n) - model);
  }
  CHECK(objective(p, a) == doctest::Approx(e).epsilon(1e-13));
  CHECK(objective(p, a) >= 0.0);
}

TEST_CASE("problem validation") {
  const auto probes = phav_probes({0.3, 0.9});
  auto p = exact_problem(probes, bin_probabilities(fock_state(0, 20), kBins));
  p.validate();
  CHECK(p.diagonal_probes());
  auto bad = p;
  bad.target *= 1.01;
  CHECK_THROWS_AS(bad.validate(), DomainError);
  bad = p;
  bad.probe_states.pop_back();
  CHECK_THROWS_AS(bad.validate(), DimensionError);
  bad = p;
  bad.target.conservativeResize(10);
  CHECK_THROWS_AS(bad.validate(), DimensionError);

  DataPattern a = DataPattern::from_counts(kBins, std::vector<std::int64_t>(151, 1));
  DataPattern b = DataPattern::from_counts(BinningSpec{150, -6, 6}, std::vector<std::int64_t>(150, 1));
  const std::vector<DataPattern> pats{a, a};
  CHECK_THROWS_AS(FdpProblem::from_patterns(pats, b, probes), DimensionError);
  CHECK_THROWS_AS(FdpProblem::from_patterns(pats, a, phav_probes({0.3})), DimensionError);
}

TEST_CASE("exact probe pattern is recovered one-hot") {
  const auto probes = phav_probes({0.2, 0.8, 1.4, 2.0});
  for (int which = 0; which < 4; ++which) {
    const auto p = exact_problem(probes, bin_probabilities(probes[static_cast<std::size_t>(which)], kBins));
    const auto sol = fdp_fit(p);
    CHECK(sol.admissible());
    for (int x = 0; x < 4; ++x) {
      CHECK(sol.coefficients(x) == doctest::Approx(x == which ? 1.0 : 0.0).epsilon(1e-6).scale(1.0));
    }
    CHECK(sol.objective <= 1e-12);
  }
}

TEST_CASE("exact mixture is recovered") {
  const auto probes = phav_probes({0.2, 0.8, 1.4, 2.0});
  const RealVector target = 0.5 * bin_probabilities(probes[1], kBins) + 0.5 * bin_probabilities(probes[2], kBins);
  const auto sol = fdp_fit(exact_problem(probes, target));
  CHECK(sol.coefficients(1) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(sol.coefficients(2) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(std::abs(sol.coefficients(0)) <= 1e-6);
  CHECK(std::abs(sol.coefficients(3)) <= 1e-6);
}

TEST_CASE("single probe gives a = 1") {
  const auto probes = phav_probes({1.0});
  const auto sol = fdp_fit(exact_problem(probes, bin_probabilities(fock_state(1, 20), kBins)));
  CHECK(sol.coefficients(0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("inactive positivity reproduces the equality-constrained least squares") {
  // Broad diagonal probes keep every population of the fitted mixture well
  // away from zero, so only sum(a) = 1 binds.
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.2, 1.0);
  std::vector<DensityMatrix> probes;
  for (int i = 0; i < 4; ++i) {
    RealVector pops(6);
    for (int n = 0; n < 6; ++n) pops(n) = u(rng);
    probes.push_back(DensityMatrix::diagonal(pops / pops.sum()));
  }
  const RealVector truth = 0.4 * bin_probabilities(probes[1], kBins) + 0.6 * bin_probabilities(probes[3], kBins);
  const auto p = exact_problem(probes, sampled(truth, 200000, rng));
  const RealVector ls = equality_only_ls(p);
  REQUIRE(assemble_state(ls, probes).min_eigenvalue() > 1e-3);
  const auto sol = fdp_fit(p);
  CHECK(sol.converged);
  CHECK((sol.coefficients - ls).cwiseAbs().maxCoeff() <= 1e-6);
  CHECK(sol.objective == doctest::Approx(objective(p, ls)).epsilon(1e-8));
}

TEST_CASE("active positivity beats every admissible perturbation") {
  std::mt19937_64 rng(5);
  const auto probes = phav_probes({0.1, 0.5, 0.9, 1.3, 1.7, 2.1});
  const auto p = exact_problem(probes, sampled(bin_probabilities(loss_channel(fock_state(2, 20), 0.85), kBins), 100000, rng));
  const auto sol = fdp_fit(p);
  REQUIRE(sol.admissible());
  // A pure Fock state is not a PHAV combination: some constraint must bind.
  CHECK(sol.min_eigenvalue <= 1e-8);
  std::normal_distribution<double> g;
  for (int t = 0; t < 200; ++t) {
    RealVector d(6);
    for (int i = 0; i < 6; ++i) d(i) = g(rng);
    d.array() -= d.mean();
    d *= 1e-3;
    const RealVector a = sol.coefficients + d;
    if (assemble_state(a, probes).min_eigenvalue() < 0.0) continue;
    CHECK(objective(p, a) >= sol.objective - 1e-14);
  }
}

TEST_CASE("probe permutation permutes the coefficients") {
  std::mt19937_64 rng(8);
  const std::vector<double> amps{0.2, 0.6, 1.0, 1.4, 1.8};
  const auto probes = phav_probes(amps);
  const RealVector target = sampled(bin_probabilities(loss_channel(fock_state(1, 20), 0.85), kBins), 100000, rng);
  const auto sol = fdp_fit(exact_problem(probes, target));
  const std::vector<int> perm{3, 0, 4, 2, 1};
  std::vector<DensityMatrix> shuffled;
  for (int i : perm) shuffled.push_back(probes[static_cast<std::size_t>(i)]);
  const auto sol2 = fdp_fit(exact_problem(shuffled, target));
  for (std::size_t i = 0; i < perm.size(); ++i) {
    CHECK(sol2.coefficients(static_cast<Eigen::Index>(i)) ==
          doctest::Approx(sol.coefficients(perm[i])).epsilon(1e-7).scale(1.0));
  }
  CHECK(sol2.objective == doctest::Approx(sol.objective).epsilon(1e-9));
}

TEST_CASE("an all-zero bin does not change the fit") {
  std::mt19937_64 rng(2);
  const auto probes = phav_probes({0.2, 0.7, 1.2, 1.7});
  const auto p = exact_problem(probes, sampled(bin_probabilities(loss_channel(fock_state(1, 20), 0.85), kBins), 50000, rng));
  FdpProblem wide = p;
  wide.patterns.conservativeResize(Eigen::NoChange, p.bin_count() + 1);
  wide.patterns.col(p.bin_count()).setZero();
  wide.target.conservativeResize(p.bin_count() + 1);
  wide.target(p.bin_count()) = 0.0;
  const auto a = fdp_fit(p), b = fdp_fit(wide);
  CHECK((a.coefficients - b.coefficients).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("residuals sum to zero and envelope scales with counts") {
  std::mt19937_64 rng(4);
  const auto probes = phav_probes({0.2, 0.7, 1.2, 1.7});
  const auto p = exact_problem(probes, sampled(bin_probabilities(fock_state(1, 20), kBins), 50000, rng));
  const auto sol = fdp_fit(p);
  CHECK(std::abs(residuals(p, sol).sum()) <= 1e-9);
  std::vector<std::int64_t> counts(151, 0);
  counts[10] = 100;
  counts[20] = 900;
  const auto env = noise_envelope(DataPattern::from_counts(kBins, counts));
  CHECK(env(10) == doctest::Approx(3.0 * 10.0 / 1000.0));
  CHECK(env(20) == doctest::Approx(3.0 * 30.0 / 1000.0));
  CHECK(env(0) == 0.0);
}

TEST_CASE("general path agrees with the diagonal reduction") {
  std::mt19937_64 rng(6);
  const auto probes = phav_probes({0.2, 0.5, 0.8, 1.1, 1.3}, 12);
  const auto p = exact_problem(probes, sampled(bin_probabilities(loss_channel(fock_state(2, 12), 0.85), kBins), 100000, rng));
  SolverOptions general;
  general.force_general = true;
  const auto diag = fdp_fit(p);
  const auto gen = fdp_fit(p, general);
  CHECK(gen.admissible());
  CHECK(gen.objective == doctest::Approx(diag.objective).epsilon(1e-6));
  CHECK(fidelity(gen.state, diag.state) >= 1.0 - 1e-6);
}

TEST_CASE("non-diagonal probes use the general path") {
  std::mt19937_64 rng(10);
  std::normal_distribution<double> g;
  std::vector<DensityMatrix> probes;
  for (int i = 0; i < 5; ++i) {
    ComplexMatrix v(6, 2);
    for (int r = 0; r < 6; ++r)
      for (int c = 0; c < 2; ++c) v(r, c) = Complex(g(rng), g(rng)) / (1.0 + r);
    ComplexMatrix rho = v * v.adjoint();
    rho /= rho.trace().real();
    probes.emplace_back(ComplexMatrix(0.5 * (rho + rho.adjoint())));
  }
  const auto p = exact_problem(probes, sampled(bin_probabilities(fock_state(1, 6), kBins), 100000, rng));
  CHECK_FALSE(p.diagonal_probes());
  const auto pg = solve_projected_gradient(p);
  const auto pen = solve_penalty(p);
  CHECK(pg.admissible());
  CHECK(pen.admissible());
  CHECK(pg.objective == doctest::Approx(pen.objective).epsilon(1e-6));
}

TEST_CASE("both solver paths agree on randomized measured instances") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const auto inst = testing_support::random_instance(seed, 10000);
    CAPTURE(inst.label);
    const auto& p = inst.problem;
    const auto pg = solve_projected_gradient(p);
    const auto pen = solve_penalty(p);
    CHECK(pg.converged);
    CHECK(pen.converged);
    CHECK(pg.admissible());
    CHECK(pen.admissible());
    CHECK(std::abs(pg.objective - pen.objective) <= 1e-8);
    const auto best = fdp_fit(p);
    CHECK(best.objective <= std::min(pg.objective, pen.objective) + 1e-12);
    CHECK(std::abs(best.cross_check_objective - best.objective) <= 1e-8);
  }
}

TEST_CASE("both solver paths agree on exact patterns of separated probes") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> mcount(3, 6), nstate(0, 3);
  std::uniform_real_distribution<double> jitter(-0.05, 0.05);
  for (int inst = 0; inst < 10; ++inst) {
    const int m = mcount(rng);
    std::vector<double> amps;
    for (int i = 0; i < m; ++i) amps.push_back(0.2 + i * 1.9 / (m - 1) + jitter(rng));
    const auto probes = phav_probes(amps);
    const auto truth = loss_channel(fock_state(nstate(rng), 20), 0.85);
    const auto p = exact_problem(probes, sampled(bin_probabilities(truth, kBins), 20000, rng));
    const auto pg = solve_projected_gradient(p);
    const auto pen = solve_penalty(p);
    CHECK(pg.admissible());
    CHECK(pen.admissible());
    CHECK(std::abs(pg.objective - pen.objective) <= 1e-8);
  }
}

TEST_CASE("solver is deterministic") {
  std::mt19937_64 rng(1);
  const auto probes = phav_probes({0.2, 0.7, 1.2, 1.7});
  const auto p = exact_problem(probes, sampled(bin_probabilities(fock_state(1, 20), kBins), 20000, rng));
  const auto a = fdp_fit(p), b = fdp_fit(p);
  CHECK(a.coefficients == b.coefficients);
  CHECK(a.objective == b.objective);
}

}  // TEST_SUITE
