#include "property_suite.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <string>

#include "qcme/dynamics.hpp"
#include "qcme/io.hpp"
#include "qcme/lattice.hpp"
#include "qcme/liouvillian.hpp"
#include "qcme/rng.hpp"
#include "qcme/spectra.hpp"
#include "qcme/walk.hpp"

namespace qcme_tests {

namespace {

using namespace qcme;
using Complex = std::complex<double>;

class CaseChecker {
 public:
  CaseChecker(PropertyReport& report, int index) : report_(report), index_(index) {}

  void require(bool ok, const char* label) {
    if (ok) return;
    ++report_.failures;
    if (report_.messages.size() < 20)
      report_.messages.push_back("case " + std::to_string(index_) + ": " + label);
  }

 private:
  PropertyReport& report_;
  int index_;
};

void run_case(int index, PropertyReport& report) {
  CaseChecker check(report, index);
  SplitMix rng(mix64(std::uint64_t(index) + 0x5157ULL));

  LatticeSpec spec;
  spec.alpha = fibonacci_approximant(4 + int(rng.next() % 3));
  spec.L = int(spec.alpha.denominator);
  spec.boundary = (rng.next() & 1) ? Boundary::Periodic : Boundary::Open;
  spec.theta = rng.phase();
  spec.A = 0.2 + 1.8 * rng.uniform01();
  if (rng.next() & 1) {
    spec.model = Model::DiagonalGAA;
    spec.J = 0.3 + 1.2 * rng.uniform01();
    spec.B = 0.95 * rng.uniform01();
  } else {
    spec.model = Model::OffDiagonalAA;
    spec.B = spec.A * rng.uniform01();  // kappa in (0, 1)
  }
  const double gamma = 0.1 * std::pow(1000.0, rng.uniform01());
  const double t = 10.0 * rng.uniform01();
  const int L = spec.L;

  // -- lattice builders ------------------------------------------------------
  const HoppingProfile profile = build_profile(spec);
  check.require(profile.hopping.size() == L && profile.onsite.size() == L,
                "profile lengths match the lattice");
  const Eigen::MatrixXd H = build_hamiltonian(profile, spec.boundary);
  check.require((H - H.transpose()).cwiseAbs().maxCoeff() == 0.0,
                "Hamiltonian is symmetric to the bit");

  const Eigen::MatrixXd W = build_markov(profile, gamma, spec.boundary);
  check.require((W - W.transpose()).cwiseAbs().maxCoeff() == 0.0,
                "generator is symmetric to the bit");
  check.require(W.colwise().sum().cwiseAbs().maxCoeff() <= 1e-12 * W.cwiseAbs().maxCoeff(),
                "generator columns sum to zero within 1e-12 of the largest rate");
  bool signs = true;
  for (int i = 0; i < L; ++i)
    for (int j = 0; j < L; ++j)
      signs = signs && (i == j ? W(i, j) <= 0.0 : W(i, j) >= 0.0);
  check.require(signs, "generator sign structure");

  // -- symmetric eigendecomposition -----------------------------------------
  const double h_scale = std::max(1.0, H.cwiseAbs().maxCoeff());
  const SpectralResult eig = eigendecompose_symmetric(H);
  check.require((H * eig.eigenvectors -
                 eig.eigenvectors * eig.eigenvalues.asDiagonal())
                        .cwiseAbs()
                        .maxCoeff() < 1e-10 * h_scale,
                "eigendecomposition residual");
  check.require((eig.eigenvectors.transpose() * eig.eigenvectors -
                 Eigen::MatrixXd::Identity(L, L))
                        .cwiseAbs()
                        .maxCoeff() < 1e-10,
                "eigenvectors are orthonormal");
  bool ascending = true;
  for (int j = 1; j < L; ++j)
    ascending = ascending && eig.eigenvalues[j] >= eig.eigenvalues[j - 1];
  check.require(ascending, "eigenvalues ascend");
  const Eigen::VectorXd iprs = ipr2_columns(eig.eigenvectors);
  check.require(iprs.minCoeff() >= 1.0 / double(L) - 1e-12 && iprs.maxCoeff() <= 1.0 + 1e-12,
                "participation stays within [1/L, 1]");

  const Eigen::VectorXd w_evals = eigenvalues_symmetric(W);
  const double w_scale = std::max(1.0, W.cwiseAbs().maxCoeff());
  check.require(w_evals.maxCoeff() > -1e-10 * w_scale && w_evals.maxCoeff() < 1e-10 * w_scale,
                "generator has a zero top eigenvalue");

  // -- probability and norm conservation ------------------------------------
  Eigen::VectorXd times(3);
  times << 0.0, 0.5 * t, t;
  Eigen::VectorXcd psi0 = Eigen::VectorXcd::Zero(L);
  psi0[L / 2] = 1.0;
  const Trajectory coherent = evolve_coherent(H, psi0, times, spec.boundary, L / 2);
  check.require((coherent.norm_record.array() - 1.0).abs().maxCoeff() < 1e-9,
                "coherent evolution conserves the norm");
  Eigen::VectorXd p0 = Eigen::VectorXd::Zero(L);
  p0[L / 2] = 1.0;
  const Trajectory classical = evolve_markov(W, p0, times, spec.boundary, L / 2);
  check.require((classical.norm_record.array() - 1.0).abs().maxCoeff() < 1e-9,
                "classical evolution conserves probability");

  // -- dephasing generator identities ----------------------------------------
  const Eigen::MatrixXcd uniform = Eigen::MatrixXcd::Identity(L, L) / double(L);
  check.require(apply_liouvillian(H, gamma, uniform).cwiseAbs().maxCoeff() < 1e-15,
                "uniform mixture is stationary");

  Eigen::VectorXd x(L * L);
  for (int k = 0; k < L * L; ++k) x[k] = 2.0 * rng.uniform01() - 1.0;
  const Eigen::MatrixXcd rho = matrix_from_coordinates(x);
  const Eigen::VectorXd x_back = hermitian_coordinates(rho);
  check.require((x_back - x).cwiseAbs().maxCoeff() < 1e-15, "coordinate round trip");
  check.require(std::abs(x.norm() - rho.norm()) < 1e-13 * x.norm(),
                "coordinates preserve the Frobenius norm");

  const Eigen::MatrixXd rep = real_representation(H, gamma);
  const Eigen::VectorXd via_rep = rep * x;
  const Eigen::VectorXd direct = hermitian_coordinates(apply_liouvillian(H, gamma, rho));
  const double l_scale = std::max(1.0, rep.cwiseAbs().maxCoeff() * x.cwiseAbs().maxCoeff());
  check.require((via_rep - direct).cwiseAbs().maxCoeff() < 1e-9 * l_scale,
                "real representation matches the direct action");

  if (L <= 8) {
    const LiouvillianSpectrum lspec = eigendecompose_liouvillian(H, gamma);
    bool left = true;
    for (Eigen::Index j = 0; j < lspec.eigenvalues.size(); ++j)
      left = left && lspec.eigenvalues[j].real() <= 1e-8 * lspec.operator_norm;
    check.require(left, "dephasing spectrum stays in the left half plane");
    check.require(lspec.max_residual < 1e-6 * lspec.operator_norm,
                  "dephasing eigenmode residual");
  }

  // -- split-step walk --------------------------------------------------------
  const double walk_A = 0.02 + 0.28 * rng.uniform01();
  const double walk_B = walk_A * rng.uniform01();
  WalkSpec walk;
  walk.beta = coupling_angles(walk_A, walk_B, spec.alpha, L, spec.theta);
  walk.validate();

  const Eigen::MatrixXd P = build_incoherent_propagator(walk);
  check.require(P.minCoeff() >= 0.0, "walk propagator is nonnegative");
  bool stochastic = true;
  for (int j = 0; j < 2 * L; ++j)
    stochastic = stochastic && P.row(j).sum() == 1.0 && P.col(j).sum() == 1.0;
  check.require(stochastic, "walk propagator is doubly stochastic to the bit");

  Eigen::VectorXd phases(L);
  for (int n = 0; n < L; ++n) phases[n] = rng.phase();
  const WalkState stepped =
      step_coherent(walk, initial_walk_state(L, int(rng.next() % std::uint64_t(L))), phases);
  check.require(std::abs(stepped.u.squaredNorm() + stepped.v.squaredNorm() - 1.0) < 1e-14,
                "coherent walk step is unitary");

  Eigen::VectorXd xy(2 * L);
  for (int k = 0; k < 2 * L; ++k) xy[k] = rng.uniform01();
  xy /= xy.sum();
  const Eigen::VectorXd next = step_incoherent(walk, xy);
  check.require(std::abs(next.sum() - 1.0) < 1e-14, "incoherent step conserves probability");
  check.require(next.minCoeff() >= 0.0, "incoherent step keeps occupations nonnegative");

  // -- exact phase periodicity and printing -----------------------------------
  const std::int64_t n = std::int64_t(rng.next() % (std::uint64_t(1) << 40));
  check.require(quasiperiodic_phase(n, spec.alpha, spec.theta) ==
                    quasiperiodic_phase(n + spec.alpha.denominator, spec.alpha, spec.theta),
                "phase sequence repeats bitwise after one period");

  const double printed = spec.theta * gamma + t;
  check.require(std::strtod(format_double(printed).c_str(), nullptr) == printed,
                "printed doubles parse back exactly");
}

}  // namespace

PropertyReport run_property_suite(int cases) {
  PropertyReport report;
  for (int index = 0; index < cases; ++index) {
    ++report.cases;
    try {
      run_case(index, report);
    } catch (const std::exception& e) {
      ++report.failures;
      if (report.messages.size() < 20)
        report.messages.push_back("case " + std::to_string(index) +
                                  ": unexpected exception: " + e.what());
    }
  }
  return report;
}

}  // namespace qcme_tests
