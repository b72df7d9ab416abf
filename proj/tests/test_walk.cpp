#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "qcme/lattice.hpp"
#include "qcme/walk.hpp"

using namespace qcme;
using Complex = std::complex<double>;

namespace {

WalkSpec three_site_spec() {
  WalkSpec spec;
  spec.beta.resize(3);
  spec.beta << 0.3, 0.4, 0.5;
  return spec;
}

WalkSpec quasiperiodic_spec(int index, double A, double kappa, double theta) {
  const FibonacciApproximant alpha = fibonacci_approximant(index);
  WalkSpec spec;
  spec.beta = coupling_angles(A, kappa * A, alpha, int(alpha.denominator), theta);
  return spec;
}

WalkSpec uniform_spec(int sites, double theta_off) {
  WalkSpec spec;
  spec.beta = Eigen::VectorXd::Constant(sites, std::numbers::pi / 2.0 - theta_off);
  return spec;
}

double walk_norm(const WalkState& state) {
  return std::sqrt(state.u.squaredNorm() + state.v.squaredNorm());
}

}  // namespace

TEST_CASE("two coherent steps from a point source follow the closed form") {
  const WalkSpec spec = three_site_spec();
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(3);
  const double c0 = std::cos(0.3), s0 = std::sin(0.3);
  const double c1 = std::cos(0.4), s1 = std::sin(0.4);
  const double c2 = std::cos(0.5), s2 = std::sin(0.5);

  WalkState state = initial_walk_state(3, 0);
  CHECK(state.u[0] == Complex(1.0));
  CHECK(state.v.cwiseAbs().maxCoeff() == 0.0);

  state = step_coherent(spec, state, zero);
  CHECK(std::abs(state.u[0]) < 1e-15);
  CHECK(std::abs(state.u[1]) < 1e-15);
  CHECK(std::abs(state.u[2] - Complex(c0)) < 1e-15);
  CHECK(std::abs(state.v[0]) < 1e-15);
  CHECK(std::abs(state.v[1] - Complex(0.0, s0)) < 1e-15);
  CHECK(std::abs(state.v[2]) < 1e-15);

  state = step_coherent(spec, state, zero);
  CHECK(std::abs(state.u[0] - Complex(-s1 * s0)) < 1e-15);
  CHECK(std::abs(state.u[1] - Complex(c2 * c0)) < 1e-15);
  CHECK(std::abs(state.u[2]) < 1e-15);
  CHECK(std::abs(state.v[0] - Complex(0.0, s2 * c0)) < 1e-15);
  CHECK(std::abs(state.v[1]) < 1e-15);
  CHECK(std::abs(state.v[2] - Complex(0.0, c1 * s0)) < 1e-15);

  // step phases multiply the u rail only
  Eigen::VectorXd phases(3);
  phases << 0.1, 0.2, 0.3;
  const WalkState phased = step_coherent(spec, initial_walk_state(3, 0), phases);
  CHECK(std::abs(phased.u[2] - Complex(c0) * std::exp(Complex(0.0, 0.3))) < 1e-15);
  CHECK(std::abs(phased.v[1] - Complex(0.0, s0)) < 1e-15);
}

TEST_CASE("occupation map matches coherent amplitudes until paths interfere") {
  const WalkSpec spec = three_site_spec();
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(3);

  WalkState state = initial_walk_state(3, 0);
  Eigen::VectorXd xy = Eigen::VectorXd::Zero(6);
  xy[0] = 1.0;
  CHECK((occupations(state) - xy).cwiseAbs().maxCoeff() == 0.0);

  for (int step = 1; step <= 2; ++step) {
    state = step_coherent(spec, state, zero);
    xy = step_incoherent(spec, xy);
    CHECK((occupations(state) - xy).cwiseAbs().maxCoeff() < 1e-15);
  }
  state = step_coherent(spec, state, zero);
  xy = step_incoherent(spec, xy);
  CHECK((occupations(state) - xy).cwiseAbs().maxCoeff() > 1e-2);
}

TEST_CASE("coherent stepping is unitary over long runs") {
  const WalkSpec spec = quasiperiodic_spec(6, 0.1, 0.95, 0.3);
  Eigen::VectorXd phases(spec.sites());
  for (int n = 0; n < spec.sites(); ++n) phases[n] = 0.37 * n * n + 0.11 * n;
  WalkState state = initial_walk_state(spec.sites(), 6);
  for (int step = 0; step < 200; ++step) state = step_coherent(spec, state, phases);
  CHECK(walk_norm(state) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("incoherent propagator is doubly stochastic to the last bit") {
  const WalkSpec spec = quasiperiodic_spec(6, 0.1, 0.9, 0.2);
  const Eigen::MatrixXd P = build_incoherent_propagator(spec);
  REQUIRE(P.rows() == 26);
  CHECK(P.minCoeff() >= 0.0);
  for (int j = 0; j < P.rows(); ++j) {
    CHECK(P.row(j).sum() == 1.0);
    CHECK(P.col(j).sum() == 1.0);
  }

  // the propagator reproduces the incoherent step exactly
  Eigen::VectorXd xy = Eigen::VectorXd::Zero(26);
  xy[6] = 1.0;
  CHECK(((P * xy) - step_incoherent(spec, xy)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("propagator spectrum peaks at the uniform stationary mode") {
  const WalkSpec spec = quasiperiodic_spec(6, 0.1, 0.9, 0.2);
  const int L = spec.sites();
  const PropagatorSpectrum spectrum =
      eigendecompose_propagator(build_incoherent_propagator(spec));
  REQUIRE(spectrum.eigenvalues.size() == 2 * L);

  CHECK(std::abs(spectrum.eigenvalues[0] - Complex(1.0)) < 1e-12);
  CHECK(std::abs(spectrum.eigenvalues[1]) < 1.0 - 1e-5);
  for (Eigen::Index j = 0; j < spectrum.eigenvalues.size(); ++j) {
    CHECK(std::abs(spectrum.eigenvalues[j]) <= 1.0 + 1e-12);
    if (j > 0) CHECK(std::abs(spectrum.eigenvalues[j]) <= std::abs(spectrum.eigenvalues[j - 1]));
  }

  const Eigen::VectorXd q = site_marginal(spectrum.eigenvectors.col(0));
  CHECK((q.array() - 1.0 / double(L)).abs().maxCoeff() < 1e-10);
  CHECK(spectrum.site_ipr[0] == doctest::Approx(1.0 / double(L)).epsilon(1e-10));
}

TEST_CASE("site marginals fold the two rails onto the lattice") {
  Eigen::VectorXcd mode(4);
  mode << Complex(0.5, 0.0), Complex(0.0, 0.5), Complex(0.5, 0.0), Complex(0.0, -0.5);
  const Eigen::VectorXd q = site_marginal(mode);
  REQUIRE(q.size() == 2);
  CHECK(q[0] == doctest::Approx(0.5));
  CHECK(q[1] == doctest::Approx(0.5));
  CHECK(site_marginal_ipr(mode) == doctest::Approx(0.5));
  CHECK_THROWS_AS(site_marginal(Eigen::VectorXcd::Zero(5)), std::invalid_argument);
  CHECK_THROWS_AS(site_marginal_ipr(Eigen::VectorXcd::Zero(4)), std::invalid_argument);
}

TEST_CASE("phase-averaged ensemble converges to the dephased walk") {
  const WalkSpec spec = quasiperiodic_spec(6, 0.1, 0.9, 0.0);
  const std::vector<int> record = {1, 2, 4, 8};
  const int origin = 6;

  const WalkTrajectory exact = run_incoherent_walk(spec, origin, record);
  WalkEnsembleSpec ensemble;
  ensemble.realizations = 4000;
  ensemble.seed = 99;
  const WalkTrajectory sampled = run_walk_ensemble(spec, origin, record, ensemble, 2);

  REQUIRE(exact.distributions.rows() == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(exact.steps[i] == record[std::size_t(i)]);
    CHECK(exact.distributions.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((sampled.distributions.row(i) - exact.distributions.row(i)).cwiseAbs().maxCoeff() <
          0.02);
  }
  CHECK(sampled.second_moment[3] ==
        doctest::Approx(exact.second_moment[3]).epsilon(0.15));
}

TEST_CASE("ensemble results are seed-deterministic and thread-invariant") {
  const WalkSpec spec = quasiperiodic_spec(6, 0.1, 0.9, 0.0);
  const std::vector<int> record = {2, 6};
  WalkEnsembleSpec ensemble;
  ensemble.realizations = 128;
  ensemble.seed = 5;

  const WalkTrajectory a = run_walk_ensemble(spec, 6, record, ensemble, 1);
  const WalkTrajectory b = run_walk_ensemble(spec, 6, record, ensemble, 4);
  CHECK((a.distributions - b.distributions).cwiseAbs().maxCoeff() == 0.0);

  ensemble.seed = 6;
  const WalkTrajectory c = run_walk_ensemble(spec, 6, record, ensemble, 1);
  CHECK((a.distributions - c.distributions).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("an ensemble without dephasing reproduces the hand-stepped walk") {
  const WalkSpec spec = three_site_spec();
  WalkEnsembleSpec ensemble;
  ensemble.realizations = 17;  // ignored without dephasing
  ensemble.dephasing = Dephasing::None;
  const WalkTrajectory traj = run_walk_ensemble(spec, 0, {5}, ensemble, 2);

  WalkState state = initial_walk_state(3, 0);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(3);
  for (int step = 0; step < 5; ++step) state = step_coherent(spec, state, zero);
  const Eigen::VectorXd expected = site_distribution(occupations(state));
  CHECK((traj.distributions.row(0).transpose() - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("small-angle dephased walk reduces to the bond-rate master equation") {
  const ReductionCheck narrow = verify_master_equation_reduction(uniform_spec(34, 0.1), 40);
  CHECK(narrow.final_ratio > 0.85);
  CHECK(narrow.final_ratio < 1.15);
  CHECK(narrow.max_tail_deviation < 0.2);
  CHECK(narrow.steps[39] == 40);

  // spreading accelerates with the coupling angle as sin^2
  const ReductionCheck wide = verify_master_equation_reduction(uniform_spec(34, 0.2), 40);
  const double ratio = wide.walk_sigma2[39] / narrow.walk_sigma2[39];
  CHECK(ratio > 2.5);
  CHECK(ratio < 5.5);

  CHECK_THROWS_AS(verify_master_equation_reduction(uniform_spec(34, 0.3), 40),
                  std::invalid_argument);
  CHECK_THROWS_AS(verify_master_equation_reduction(uniform_spec(34, 0.1), 3),
                  std::invalid_argument);
}

TEST_CASE("walk interfaces reject malformed inputs") {
  WalkSpec bad;
  bad.beta.resize(1);
  bad.beta << 0.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad.beta.resize(3);
  bad.beta << 0.5, 0.0, 0.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad.beta << 0.5, 1.6, 0.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad.beta << 0.5, std::numbers::pi / 2.0, 0.5;
  CHECK_NOTHROW(bad.validate());

  const WalkSpec spec = three_site_spec();
  CHECK_THROWS_AS(initial_walk_state(3, 3), std::invalid_argument);
  CHECK_THROWS_AS(initial_walk_state(3, -1), std::invalid_argument);
  CHECK_THROWS_AS(run_incoherent_walk(spec, 0, {}), std::invalid_argument);
  CHECK_THROWS_AS(run_incoherent_walk(spec, 0, {3, 3}), std::invalid_argument);
  CHECK_THROWS_AS(run_incoherent_walk(spec, 0, {-1, 2}), std::invalid_argument);

  WalkEnsembleSpec ensemble;
  ensemble.realizations = 0;
  CHECK_THROWS_AS(ensemble.validate(), std::invalid_argument);

  CHECK_THROWS_AS(step_incoherent(spec, Eigen::VectorXd::Zero(5)), std::invalid_argument);
  WalkState state = initial_walk_state(3, 0);
  CHECK_THROWS_AS(step_coherent(spec, state, Eigen::VectorXd::Zero(2)), std::invalid_argument);
}
