#pragma once

#include <Eigen/Dense>

#include <cstdint>

#include "qcme/lattice.hpp"
#include "qcme/spectra.hpp"

namespace qcme {

// Time series of site distributions with spreading diagnostics. Rows of
// `distributions` pair with `times`; `second_moment` measures displacement
// from `origin` (minimal-image under Periodic).
struct Trajectory {
  Eigen::VectorXd times;
  Eigen::MatrixXd distributions;  // times.size() x L
  Eigen::VectorXd second_moment;
  Eigen::VectorXd norm_record;
  int origin = 0;
  Boundary boundary = Boundary::Periodic;
  int clamp_warnings = 0;          // entries clamped below -1e-10
  double worst_negative = 0.0;     // most negative population before clamping
  bool low_statistics_warning = false;
};

// sum_n d(n, origin)^2 p_n with minimal-image d under Periodic. The
// distribution must sum to 1 (within 1e-8).
double second_moment(const Eigen::Ref<const Eigen::VectorXd>& distribution, int origin,
                     Boundary boundary);

// Center site (L-1)/2, the excitation origin used by the presets.
inline int center_site(int L) { return (L - 1) / 2; }

// psi(t) = exp(-iHt) psi0 via the spectral decomposition of symmetric H.
Eigen::VectorXcd coherent_state_at(const SpectralResult& eig,
                                   const Eigen::Ref<const Eigen::VectorXcd>& psi0, double t);
Trajectory evolve_coherent(const Eigen::Ref<const Eigen::MatrixXd>& H,
                           const Eigen::Ref<const Eigen::VectorXcd>& psi0,
                           const Eigen::Ref<const Eigen::VectorXd>& times, Boundary boundary,
                           int origin = -1);

// P(t) = exp(Wt) P0 via the spectral decomposition of symmetric W.
Eigen::VectorXd markov_state_at(const SpectralResult& eig,
                                const Eigen::Ref<const Eigen::VectorXd>& P0, double t);
Trajectory evolve_markov(const Eigen::Ref<const Eigen::MatrixXd>& W,
                         const Eigen::Ref<const Eigen::VectorXd>& P0,
                         const Eigen::Ref<const Eigen::VectorXd>& times, Boundary boundary,
                         int origin = -1);

struct StochasticEvolutionSpec {
  double dt = 0.0;          // time between phase randomizations
  int realizations = 200;
  std::uint64_t seed = 0;
  double phase_scale = 1.0;  // 0 disables dephasing (coherent limit)

  void validate() const;
};

// Ensemble mean of |psi_n|^2 over realizations of: propagate exp(-iH dt),
// then multiply each amplitude by exp(i phi_n) with fresh uniform phases on
// (-pi, pi). Recorded times must be multiples of dt. Realization r draws its
// phases from SplitMix(derive_stream(seed, r)); the ensemble reduction sums
// realization blocks in index order, so a fixed (seed, threads) pair is
// bit-reproducible.
Trajectory evolve_phase_randomized(const Eigen::Ref<const Eigen::MatrixXd>& H,
                                   const Eigen::Ref<const Eigen::VectorXcd>& psi0,
                                   const StochasticEvolutionSpec& spec,
                                   const Eigen::Ref<const Eigen::VectorXd>& times,
                                   Boundary boundary, int origin = -1, int threads = 1);

// Deterministic one-step intensity map of the infinite-ensemble limit:
// U_{n,m} = |exp(-iH dt)_{n,m}|^2.
Eigen::MatrixXd incoherent_map(const Eigen::Ref<const Eigen::MatrixXd>& H, double dt);

// Log-log slope of sigma^2(t) over [t_min, t_max]; requires >= 10 samples in
// the window and sigma^2 < (L/4)^2 throughout (before boundary reflection).
LineFit fit_spreading_exponent(const Trajectory& trajectory, double t_min, double t_max);

struct DiffusionFit {
  double D = 0.0;
  double D_stderr = 0.0;
  LineFit line;  // sigma^2 = slope * t + intercept, D = slope / 2
};

DiffusionFit fit_diffusion(const Trajectory& trajectory, double t_min, double t_max);

}  // namespace qcme
