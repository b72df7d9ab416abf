#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "qcme/lattice.hpp"
#include "qcme/spectra.hpp"

namespace qcme {

// Split-step photonic walk on a ring. Site amplitudes come in pairs
// (u_n, v_n); the fully dephased limit acts on occupations
// [X_0..X_{L-1}, Y_0..Y_{L-1}] with X_n = |u_n|^2 and Y_n = |v_{n+1}|^2.
struct WalkSpec {
  Eigen::VectorXd beta;  // coupling angles, one per site, each in (0, pi/2]

  int sites() const { return static_cast<int>(beta.size()); }
  void validate() const;
};

struct WalkState {
  Eigen::VectorXcd u, v;
};

// Walker fully in the u rail at `origin`.
WalkState initial_walk_state(int sites, int origin);

// One coherent step with per-site phases applied to the u rail:
//   u'_n = (cos b_{n+1} u_{n+1} + i sin b_{n+1} v_{n+1}) e^{i phi_n}
//   v'_n = i sin b_{n-1} u_{n-1} + cos b_{n-1} v_{n-1}
WalkState step_coherent(const WalkSpec& spec, const WalkState& state,
                        const Eigen::Ref<const Eigen::VectorXd>& phases);

// Occupations of a coherent state in the propagator basis.
Eigen::VectorXd occupations(const WalkState& state);

// One step of the dephased walk acting on occupations; the transfer weights
// are cos^2 and its exact complement, so probability is conserved exactly.
Eigen::VectorXd step_incoherent(const WalkSpec& spec,
                                const Eigen::Ref<const Eigen::VectorXd>& xy);

// Column-stochastic 2L x 2L one-step map in the occupation basis.
Eigen::MatrixXd build_incoherent_propagator(const WalkSpec& spec);

// Site distribution P_n = X_n + Y_n of an occupation vector.
Eigen::VectorXd site_distribution(const Eigen::Ref<const Eigen::VectorXd>& xy);

// Marginal q_n = |w_n|^2 + |w_{L+n}|^2 of a 2L mode vector, and the
// participation ratio sum q^2 / (sum q)^2 of that marginal.
Eigen::VectorXd site_marginal(const Eigen::Ref<const Eigen::VectorXcd>& mode);
double site_marginal_ipr(const Eigen::Ref<const Eigen::VectorXcd>& mode);

struct PropagatorSpectrum {
  Eigen::VectorXcd eigenvalues;   // sorted by |mu| descending
  Eigen::MatrixXcd eigenvectors;  // columns paired with eigenvalues
  Eigen::VectorXd site_ipr;       // site-marginal participation per mode
};

PropagatorSpectrum eigendecompose_propagator(const Eigen::Ref<const Eigen::MatrixXd>& propagator);

enum class Dephasing { None, Full };

struct WalkEnsembleSpec {
  int realizations = 200;
  std::uint64_t seed = 0;
  Dephasing dephasing = Dephasing::Full;

  void validate() const;
};

struct WalkTrajectory {
  Eigen::VectorXi steps;          // recorded step counts, strictly increasing
  Eigen::MatrixXd distributions;  // one site distribution per recorded step
  Eigen::VectorXd second_moment;  // minimal-image sigma^2 about the origin
  int origin = 0;
};

// Deterministic dephased walk from occupations concentrated at `origin`.
WalkTrajectory run_incoherent_walk(const WalkSpec& spec, int origin,
                                   const std::vector<int>& record);

// Coherent walk with fresh uniform phases every step, averaged over
// realizations. Phases are a pure function of (seed, site, step,
// realization), so the result is independent of threading. With
// Dephasing::None a single zero-phase run is performed, bit-identical to
// stepping the coherent walk by hand.
WalkTrajectory run_walk_ensemble(const WalkSpec& spec, int origin,
                                 const std::vector<int>& record,
                                 const WalkEnsembleSpec& ensemble, int threads = 1);

// Small-angle reduction to the classical master equation: the dephased walk
// with angles beta_n = pi/2 - theta_n matches the bond-rate generator with
// J_n = cos(beta_{n+1}) / 2, gamma = 1, and t = step count. Requires
// max theta_n <= 0.25.
struct ReductionCheck {
  Eigen::VectorXi steps;
  Eigen::VectorXd walk_sigma2;
  Eigen::VectorXd markov_sigma2;
  double final_ratio = 0.0;        // walk / markov at the last step
  double max_tail_deviation = 0.0; // max relative gap over the second half
};

ReductionCheck verify_master_equation_reduction(const WalkSpec& spec, int horizon);

}  // namespace qcme
