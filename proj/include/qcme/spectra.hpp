#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qcme {

// Localization thresholds shared by classification, edge detection, and the
// sweep-table kappa_c estimator: localized above 0.1, extended below 10/L,
// in between "critical candidate".
inline constexpr double kLocalizedIpr = 0.1;
inline double extended_ipr_threshold(Eigen::Index L) { return 10.0 / double(L); }

struct SpectralResult {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // column l pairs with eigenvalue l
};

// Dense symmetric eigendecomposition (divide-and-conquer). Eigenvalues
// ascending; each eigenvector's largest-magnitude component (first such on
// ties) is made positive so the decomposition is deterministic.
SpectralResult eigendecompose_symmetric(const Eigen::Ref<const Eigen::MatrixXd>& M);
Eigen::VectorXd eigenvalues_symmetric(const Eigen::Ref<const Eigen::MatrixXd>& M);

struct ComplexSpectrum {
  Eigen::VectorXcd eigenvalues;
  Eigen::MatrixXcd eigenvectors;
};

// Full eigendecomposition of a real general (nonsymmetric) matrix; conjugate
// pairs are reconstructed into complex columns. Order: descending real part,
// ties by ascending imaginary part.
ComplexSpectrum eigendecompose_general(const Eigen::Ref<const Eigen::MatrixXd>& M);

// Generalized inverse participation ratio sum_n |psi_n|^{2q} of a normalized
// state.
template <typename Derived>
double ipr(const Eigen::MatrixBase<Derived>& state, double q = 2.0) {
  if (!(q >= 0.0)) throw std::invalid_argument("ipr: q must be >= 0");
  double norm2 = 0.0, value = 0.0;
  for (Eigen::Index n = 0; n < state.size(); ++n) {
    const double p = std::norm(std::complex<double>(state[n]));
    norm2 += p;
    value += (q == 2.0) ? p * p : std::pow(p, q);
  }
  if (std::abs(std::sqrt(norm2) - 1.0) > 1e-10)
    throw std::invalid_argument("ipr: state must be normalized to unit 2-norm");
  return value;
}

// IPR^(2) of every eigenvector column.
Eigen::VectorXd ipr2_columns(const Eigen::Ref<const Eigen::MatrixXd>& vectors);

const char* classify_ipr(double ipr2, Eigen::Index L);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  int n = 0;
};

// Ordinary least squares with intercept; slope standard error from the
// residual variance (zero when n < 3).
LineFit fit_line(const Eigen::Ref<const Eigen::VectorXd>& x,
                 const Eigen::Ref<const Eigen::VectorXd>& y);

// One lattice size of a finite-size-scaling family.
struct SizePoint {
  int L = 0;
  Eigen::VectorXd eigenvalues;  // ascending
  Eigen::VectorXd ipr;          // IPR^(q) paired with eigenvalues
};

struct BetaFit {
  LineFit fit;  // slope = beta^(q)
  double anchor = 0.0;
  std::vector<int> sizes;
  std::vector<double> tracked_eigenvalues;
  std::vector<double> tracked_ipr;
};

// Finite-size exponent beta^(q): least-squares slope of ln IPR vs ln(1/L)
// over the family, tracking one state by eigenvalue proximity. The anchor is
// the eigenvalue nearest `target` at the largest size; at every other size
// the nearest eigenvalue must lie within `window_spacings` mean level
// spacings of the anchor.
BetaFit beta_exponent(const std::vector<SizePoint>& family, double target,
                      double window_spacings = 3.0);

const char* classify_beta(double beta);

struct LyapunovValue {
  double raw = 0.0;
  double value = 0.0;  // raw clamped at 0 for reporting
};

// Inverse localization length from the spectrum:
// (1/(L-1)) sum_{n != l} log|e_n - e_l| - (1/(L-1)) sum_n log|hopping_n|.
// Requires the L-1 off-diagonal entries of an Open-boundary matrix, all
// nonzero; eigenvalues within 1e-14 of e_l are excluded from the first sum.
LyapunovValue lyapunov_exponent(const Eigen::Ref<const Eigen::VectorXd>& eigenvalues,
                                const Eigen::Ref<const Eigen::VectorXd>& hoppings,
                                Eigen::Index l);
Eigen::VectorXd lyapunov_all(const Eigen::Ref<const Eigen::VectorXd>& eigenvalues,
                             const Eigen::Ref<const Eigen::VectorXd>& hoppings);

// Partition an ascending spectrum into three bands split at the two largest
// gaps; returns inclusive index ranges, band 0 the most negative.
std::array<std::pair<Eigen::Index, Eigen::Index>, 3>
identify_bands(const Eigen::Ref<const Eigen::VectorXd>& eigenvalues);

struct LevelStatistics {
  double window_lo = 0.0, window_hi = 0.0;
  int count = 0;            // levels inside the window
  double s0 = 0.0;          // lower cutoff
  Eigen::VectorXd spacings;         // normalized, spectral order
  Eigen::VectorXd sorted_spacings;  // ascending
  LineFit fit;              // log-log ILSD slope over [s0, 1e-2]

  // Integrated level-spacing distribution #{s_i > s} / #{s_i > s0}.
  double ilsd(double s) const;
  double mean_spacing() const;
};

// Spacing statistics of the levels inside [window_lo, window_hi], normalized
// by (window width)/(level count). Requires >= 50 levels in the window.
LevelStatistics level_statistics(const Eigen::Ref<const Eigen::VectorXd>& eigenvalues,
                                 double window_lo, double window_hi, double s0 = 1e-6);

struct MobilityEdgeReport {
  std::optional<double> edge;
  std::string localized_side = "none";  // "above" | "below" | "none"
  double ipr_min = 0.0, ipr_max = 0.0;
  int localized = 0, extended = 0, critical = 0;
  bool clean = true;
  double offending_lo = 0.0, offending_hi = 0.0;  // set when !clean
  std::string note;
};

// Classify states by IPR^(2) thresholds and report the edge as the midpoint
// of the gap between the highest localized and lowest extended eigenvalue
// (direction inferred from the data). Up to 2% interleaving exceptions near
// the edge are tolerated; beyond that no clean edge is reported and the
// offending interval is recorded.
MobilityEdgeReport detect_mobility_edge(const Eigen::Ref<const Eigen::VectorXd>& eigenvalues,
                                        const Eigen::Ref<const Eigen::VectorXd>& ipr2);

}  // namespace qcme
