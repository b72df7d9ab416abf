#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>

namespace qcme {

enum class Model { DiagonalGAA, OffDiagonalAA };
enum class Boundary { Periodic, Open };

// Rational approximant alpha = F_{l-1}/F_l of the inverse golden ratio,
// with F_0 = F_1 = 1. Exact integer arithmetic throughout.
struct FibonacciApproximant {
  int index = 0;
  std::int64_t numerator = 0;    // F_{l-1}
  std::int64_t denominator = 0;  // F_l

  double value() const { return double(numerator) / double(denominator); }
};

FibonacciApproximant fibonacci_approximant(int l);

// Quasiperiodic phase 2*pi*alpha*n + theta evaluated with the integer
// residue (n*p) mod q so the sequence is exactly q-periodic (no drift at
// large n).
double quasiperiodic_phase(std::int64_t n, const FibonacciApproximant& alpha, double theta);

struct LatticeSpec {
  Model model = Model::DiagonalGAA;
  double J = 1.0;  // hopping scale, DiagonalGAA only
  double A = 1.0;
  double B = 0.0;
  double theta = 0.0;
  FibonacciApproximant alpha;
  int L = 0;
  Boundary boundary = Boundary::Periodic;

  void validate() const;
};

// Per-site/bond sequences of Eq-of-motion coefficients. Bond n couples
// sites n and n+1; bond L-1 wraps under Periodic.
struct HoppingProfile {
  Eigen::VectorXd hopping;  // J_n, length L
  Eigen::VectorXd onsite;   // V_n, length L
};

HoppingProfile build_profile(const LatticeSpec& spec);

// Mobility edge of the diagonal model, E_m = (2/B)(J - A). Empty when B = 0
// (no edge exists).
std::optional<double> mobility_edge_energy(const LatticeSpec& spec);

// Coupling angles beta_n = pi/2 - 2A - 2B cos(2*pi*alpha*n + theta) for the
// mesh-lattice walk emulation of the off-diagonal model.
Eigen::VectorXd coupling_angles(double A, double B, const FibonacciApproximant& alpha,
                                int L, double theta);

// Tight-binding Hamiltonian: diagonal V_n, off-diagonal -J_n, corner -J_{L-1}
// when Periodic.
template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>
build_hamiltonian(const HoppingProfile& profile, Boundary boundary) {
  const auto L = static_cast<Eigen::Index>(profile.onsite.size());
  if (L < 2) throw std::invalid_argument("build_hamiltonian: profile needs at least 2 sites");
  if (profile.hopping.size() != L)
    throw std::invalid_argument("build_hamiltonian: hopping/onsite length mismatch");
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> H =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(L, L);
  for (Eigen::Index n = 0; n < L; ++n) H(n, n) = Scalar(profile.onsite[n]);
  for (Eigen::Index n = 0; n + 1 < L; ++n) {
    H(n, n + 1) = Scalar(-profile.hopping[n]);
    H(n + 1, n) = Scalar(-profile.hopping[n]);
  }
  if (boundary == Boundary::Periodic) {
    H(0, L - 1) += Scalar(-profile.hopping[L - 1]);
    H(L - 1, 0) += Scalar(-profile.hopping[L - 1]);
  }
  return H;
}

// Markov transition matrix of the strong-dephasing master equation:
// W_{n,n+1} = W_{n+1,n} = 2 J_n^2 / gamma, diagonal accumulated per bond from
// the same rate values, keeping every column sum within a few ulps of zero.
template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>
build_markov(const HoppingProfile& profile, double gamma, Boundary boundary) {
  if (!(gamma > 0.0)) throw std::invalid_argument("build_markov: gamma must be positive");
  const auto L = static_cast<Eigen::Index>(profile.hopping.size());
  if (L < 2) throw std::invalid_argument("build_markov: profile needs at least 2 sites");
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> W =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(L, L);
  const Eigen::Index bonds = boundary == Boundary::Periodic ? L : L - 1;
  for (Eigen::Index n = 0; n < bonds; ++n) {
    const Eigen::Index m = (n + 1) % L;
    const Scalar w = Scalar(2.0 * profile.hopping[n] * profile.hopping[n] / gamma);
    W(n, m) += w;
    W(m, n) += w;
    W(n, n) -= w;
    W(m, m) -= w;
  }
  return W;
}

}  // namespace qcme
