#include "qcme/lattice.hpp"

namespace qcme {

FibonacciApproximant fibonacci_approximant(int l) {
  if (l < 2) throw std::invalid_argument("fibonacci_approximant: index must be >= 2");
  std::int64_t a = 1, b = 1;  // F_0, F_1
  for (int i = 1; i < l; ++i) {
    std::int64_t next = 0;
    if (__builtin_add_overflow(a, b, &next))
      throw std::overflow_error("fibonacci_approximant: F_" + std::to_string(i + 1) +
                                " overflows 64-bit integer arithmetic");
    a = b;
    b = next;
  }
  return FibonacciApproximant{l, a, b};
}

double quasiperiodic_phase(std::int64_t n, const FibonacciApproximant& alpha, double theta) {
  if (alpha.denominator <= 0)
    throw std::invalid_argument("quasiperiodic_phase: approximant denominator must be positive");
  const auto residue = static_cast<std::int64_t>(
      (static_cast<__int128>(n) * alpha.numerator) % alpha.denominator);
  return 2.0 * std::numbers::pi * double(residue) / double(alpha.denominator) + theta;
}

void LatticeSpec::validate() const {
  if (L < 2) throw std::invalid_argument("LatticeSpec: L must be >= 2");
  if (alpha.denominator <= 0 || alpha.numerator <= 0)
    throw std::invalid_argument("LatticeSpec: alpha must be a valid Fibonacci approximant");
  if (boundary == Boundary::Periodic && std::int64_t(L) != alpha.denominator)
    throw std::invalid_argument(
        "LatticeSpec: Periodic boundary requires L equal to the approximant denominator");
  if (model == Model::DiagonalGAA) {
    if (!(J > 0.0)) throw std::invalid_argument("LatticeSpec: DiagonalGAA requires J > 0");
    if (!(A > 0.0)) throw std::invalid_argument("LatticeSpec: DiagonalGAA requires A > 0");
    if (!(B >= 0.0 && B < 1.0))
      throw std::invalid_argument("LatticeSpec: DiagonalGAA requires 0 <= B < 1");
  } else {
    if (!(A > 0.0)) throw std::invalid_argument("LatticeSpec: OffDiagonalAA requires A > 0");
    if (!(B >= 0.0)) throw std::invalid_argument("LatticeSpec: OffDiagonalAA requires B >= 0");
    if (B / A > 1.0)
      throw std::invalid_argument("LatticeSpec: OffDiagonalAA requires kappa = B/A <= 1");
  }
}

HoppingProfile build_profile(const LatticeSpec& spec) {
  spec.validate();
  HoppingProfile profile;
  profile.hopping.resize(spec.L);
  profile.onsite.resize(spec.L);
  for (int n = 0; n < spec.L; ++n) {
    const double phase = quasiperiodic_phase(n, spec.alpha, spec.theta);
    const double c = std::cos(phase);
    if (spec.model == Model::DiagonalGAA) {
      profile.hopping[n] = spec.J;
      profile.onsite[n] = 2.0 * spec.A * c / (1.0 - spec.B * c);
    } else {
      profile.hopping[n] = spec.A + spec.B * c;
      profile.onsite[n] = 0.0;
    }
  }
  return profile;
}

std::optional<double> mobility_edge_energy(const LatticeSpec& spec) {
  if (spec.model != Model::DiagonalGAA)
    throw std::invalid_argument("mobility_edge_energy: defined for DiagonalGAA only");
  if (spec.B == 0.0) return std::nullopt;
  return (2.0 / spec.B) * (spec.J - spec.A);
}

Eigen::VectorXd coupling_angles(double A, double B, const FibonacciApproximant& alpha,
                                int L, double theta) {
  if (L < 2) throw std::invalid_argument("coupling_angles: L must be >= 2");
  Eigen::VectorXd beta(L);
  for (int n = 0; n < L; ++n) {
    beta[n] = std::numbers::pi / 2.0 -
              2.0 * A - 2.0 * B * std::cos(quasiperiodic_phase(n, alpha, theta));
    if (!(beta[n] > 0.0 && beta[n] <= std::numbers::pi / 2.0))
      throw std::invalid_argument("coupling_angles: beta_" + std::to_string(n) +
                                  " outside (0, pi/2]");
  }
  return beta;
}

}  // namespace qcme
