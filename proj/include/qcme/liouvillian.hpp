#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "qcme/lattice.hpp"
#include "qcme/spectra.hpp"

namespace qcme {

// Dense Lindblad superoperators for pure dephasing: d(rho)/dt =
// -i[H, rho] - gamma * offdiag(rho).  Density matrices are vectorized
// column-major, entry (n, m) at index n + m*L.  Dense superoperators are
// capped at kMaxLiouvillianSites sites; beyond that the classical generator
// from build_markov is the intended tool.
inline constexpr int kMaxLiouvillianSites = 89;

// Dimension of the superoperator acting on L-site density matrices.
int liouvillian_dimension(int sites);

// Index of the symmetric/antisymmetric coefficient pair for sites n < m in
// the Hermitian matrix basis (diagonal units first, then pair coefficients
// in row-major order of (n, m)).
int pair_index(int n, int m, int sites);

// Throws std::invalid_argument unless rho is Hermitian, unit trace, and
// positive semidefinite within tolerance.
void validate_density_matrix(const Eigen::Ref<const Eigen::MatrixXcd>& rho);

// |n><n| on an L-site lattice.
Eigen::MatrixXcd site_density_matrix(int sites, int n);

struct LiouvillianMatrix {
  Eigen::MatrixXcd mat;          // L^2 x L^2, vec index k = n + m*L
  Eigen::MatrixXd hamiltonian;   // L x L
  double gamma = 0.0;
};

LiouvillianMatrix build_liouvillian(const Eigen::Ref<const Eigen::MatrixXd>& H, double gamma);

// Action of the generator on a density matrix, computed from H and gamma
// directly (no superoperator materialization).
Eigen::MatrixXcd apply_liouvillian(const Eigen::Ref<const Eigen::MatrixXd>& H, double gamma,
                                   const Eigen::Ref<const Eigen::MatrixXcd>& rho);

// The generator preserves Hermiticity, so in the orthonormal Hermitian basis
// {E_n; (|n><m| + |m><n|)/sqrt(2), i(|n><m| - |m><n|)/sqrt(2)} it is a real
// L^2 x L^2 matrix.  Coordinates: x[n] = Re rho(n, n); for each pair n < m
// with pair index k, x[L + 2k] = sqrt(2) Re rho(n, m) and
// x[L + 2k + 1] = sqrt(2) Im rho(n, m).
Eigen::MatrixXd real_representation(const Eigen::Ref<const Eigen::MatrixXd>& H, double gamma);

Eigen::VectorXd hermitian_coordinates(const Eigen::Ref<const Eigen::MatrixXcd>& rho);
Eigen::MatrixXcd matrix_from_coordinates(const Eigen::Ref<const Eigen::VectorXd>& x);

struct LiouvillianSpectrum {
  Eigen::VectorXcd eigenvalues;      // sorted by Re descending, then Im ascending
  Eigen::MatrixXcd diagonals;        // L x L^2: populations rho_nn of each unit-norm mode
  Eigen::VectorXd population_ipr;    // participation of |rho_nn| / sum_m |rho_mm|
  Eigen::VectorXd diagonal_weight;   // sum_n |rho_nn|^2 for unit Frobenius norm modes
  int stationary_index = -1;         // eigenvalue of smallest magnitude
  Eigen::MatrixXcd stationary;       // trace-normalized stationary state (empty if trace ~ 0)
  double max_residual = 0.0;         // max ||L(rho_j) - lambda_j rho_j||_F over modes
  double operator_norm = 0.0;        // Frobenius norm of the generator
};

LiouvillianSpectrum eigendecompose_liouvillian(const Eigen::Ref<const Eigen::MatrixXd>& H,
                                               double gamma);

struct LiouvillianModePoint {
  double re = 0.0;
  double im = 0.0;
  double ipr = 0.0;
};

// Population statistics over the slow branch |Re lambda| < gamma / 2.  Modes
// whose diagonal weight falls below weight_floor carry no population signal
// and are skipped.
struct SlowBranchSummary {
  double ipr_min = 0.0;
  double ipr_max = 0.0;
  int mode_count = 0;
  std::vector<LiouvillianModePoint> modes;
};

SlowBranchSummary slow_branch_populations(const LiouvillianSpectrum& spectrum, double gamma,
                                          double weight_floor = 1e-9);

struct LindbladTrajectory {
  Eigen::VectorXd times;
  Eigen::MatrixXd populations;           // T x L, Re rho_nn clamped at 0
  std::vector<Eigen::MatrixXcd> states;  // full density matrix at each time
  Eigen::VectorXd trace_record;
  int clamp_warnings = 0;
  double worst_negative = 0.0;
};

// Spectral propagation through the real representation.  Aborts with
// std::runtime_error if the reconstructed trace drifts from 1 by more
// than 1e-6.
LindbladTrajectory evolve_lindblad(const Eigen::Ref<const Eigen::MatrixXd>& H, double gamma,
                                   const Eigen::Ref<const Eigen::MatrixXcd>& rho0,
                                   const Eigen::Ref<const Eigen::VectorXd>& times);

}  // namespace qcme
