#include "qcme/spectra.hpp"

#include <lapacke.h>

#include <algorithm>
#include <limits>
#include <numeric>

namespace qcme {

namespace {

void require_square(const Eigen::Ref<const Eigen::MatrixXd>& M, const char* who) {
  if (M.rows() != M.cols() || M.rows() < 1)
    throw std::invalid_argument(std::string(who) + ": matrix must be square and nonempty");
}

void require_symmetric(const Eigen::Ref<const Eigen::MatrixXd>& M, const char* who) {
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw std::invalid_argument(std::string(who) + ": matrix is not symmetric within tolerance");
}

// Deterministic sign convention: the largest-magnitude component (first such
// on ties) of every eigenvector is made positive.
void fix_signs(Eigen::MatrixXd& vectors) {
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
    Eigen::Index imax = 0;
    double vmax = -1.0;
    for (Eigen::Index r = 0; r < vectors.rows(); ++r) {
      const double a = std::abs(vectors(r, c));
      if (a > vmax) {
        vmax = a;
        imax = r;
      }
    }
    if (vectors(imax, c) < 0.0) vectors.col(c) = -vectors.col(c);
  }
}

}  // namespace

SpectralResult eigendecompose_symmetric(const Eigen::Ref<const Eigen::MatrixXd>& M) {
  require_square(M, "eigendecompose_symmetric");
  require_symmetric(M, "eigendecompose_symmetric");
  const auto n = static_cast<lapack_int>(M.rows());
  SpectralResult result;
  result.eigenvectors = M;
  result.eigenvalues.resize(n);
  const lapack_int info =
      LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, result.eigenvectors.data(), n,
                     result.eigenvalues.data());
  if (info != 0)
    throw std::runtime_error("eigendecompose_symmetric: LAPACKE_dsyevd failed with info " +
                             std::to_string(info));
  fix_signs(result.eigenvectors);
  return result;
}

Eigen::VectorXd eigenvalues_symmetric(const Eigen::Ref<const Eigen::MatrixXd>& M) {
  require_square(M, "eigenvalues_symmetric");
  require_symmetric(M, "eigenvalues_symmetric");
  const auto n = static_cast<lapack_int>(M.rows());
  Eigen::MatrixXd A = M;
  Eigen::VectorXd w(n);
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'N', 'L', n, A.data(), n, w.data());
  if (info != 0)
    throw std::runtime_error("eigenvalues_symmetric: LAPACKE_dsyevd failed with info " +
                             std::to_string(info));
  return w;
}

ComplexSpectrum eigendecompose_general(const Eigen::Ref<const Eigen::MatrixXd>& M) {
  require_square(M, "eigendecompose_general");
  const auto n = static_cast<lapack_int>(M.rows());
  Eigen::MatrixXd A = M;
  Eigen::MatrixXd VR(n, n);
  Eigen::VectorXd wr(n), wi(n);
  const lapack_int info = LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', 'V', n, A.data(), n, wr.data(),
                                        wi.data(), nullptr, n, VR.data(), n);
  if (info != 0)
    throw std::runtime_error("eigendecompose_general: LAPACKE_dgeev failed with info " +
                             std::to_string(info));

  ComplexSpectrum spectrum;
  spectrum.eigenvalues.resize(n);
  spectrum.eigenvectors.resize(n, n);
  for (lapack_int j = 0; j < n; ++j) {
    if (wi[j] == 0.0) {
      spectrum.eigenvalues[j] = std::complex<double>(wr[j], 0.0);
      spectrum.eigenvectors.col(j) = VR.col(j).cast<std::complex<double>>();
    } else {
      // conjugate pair packed as (real part, imaginary part) columns
      spectrum.eigenvalues[j] = std::complex<double>(wr[j], wi[j]);
      spectrum.eigenvalues[j + 1] = std::complex<double>(wr[j + 1], wi[j + 1]);
      spectrum.eigenvectors.col(j) =
          VR.col(j).cast<std::complex<double>>() +
          std::complex<double>(0.0, 1.0) * VR.col(j + 1).cast<std::complex<double>>();
      spectrum.eigenvectors.col(j + 1) = spectrum.eigenvectors.col(j).conjugate();
      ++j;
    }
  }

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    const auto &la = spectrum.eigenvalues[a], &lb = spectrum.eigenvalues[b];
    if (la.real() != lb.real()) return la.real() > lb.real();
    return la.imag() < lb.imag();
  });
  ComplexSpectrum sorted;
  sorted.eigenvalues.resize(n);
  sorted.eigenvectors.resize(n, n);
  for (lapack_int j = 0; j < n; ++j) {
    sorted.eigenvalues[j] = spectrum.eigenvalues[order[j]];
    sorted.eigenvectors.col(j) = spectrum.eigenvectors.col(order[j]);
  }
  return sorted;
}

Eigen::VectorXd ipr2_columns(const Eigen::Ref<const Eigen::MatrixXd>& vectors) {
  Eigen::VectorXd out(vectors.cols());
  for (Eigen::Index c = 0; c < vectors.cols(); ++c)
    out[c] = vectors.col(c).array().square().square().sum();
  return out;
}

const char* classify_ipr(double ipr2, Eigen::Index L) {
  if (ipr2 > kLocalizedIpr) return "localized";
  if (ipr2 < extended_ipr_threshold(L)) return "extended";
  return "critical";
}

LineFit fit_line(const Eigen::Ref<const Eigen::VectorXd>& x,
                 const Eigen::Ref<const Eigen::VectorXd>& y) {
  const auto n = x.size();
  if (n != y.size()) throw std::invalid_argument("fit_line: x and y length mismatch");
  if (n < 2) throw std::invalid_argument("fit_line: at least 2 points required");
  const double xbar = x.mean(), ybar = y.mean();
  const double sxx = (x.array() - xbar).square().sum();
  if (sxx <= 0.0) throw std::invalid_argument("fit_line: degenerate abscissa");
  const double sxy = ((x.array() - xbar) * (y.array() - ybar)).sum();
  LineFit fit;
  fit.n = static_cast<int>(n);
  fit.slope = sxy / sxx;
  fit.intercept = ybar - fit.slope * xbar;
  if (n > 2) {
    const double ssr = (y.array() - fit.intercept - fit.slope * x.array()).square().sum();
    fit.slope_stderr = std::sqrt(ssr / double(n - 2) / sxx);
  }
  return fit;
}

BetaFit beta_exponent(const std::vector<SizePoint>& family, double target,
                      double window_spacings) {
  if (family.size() < 4)
    throw std::invalid_argument("beta_exponent: at least 4 sizes required");
  std::size_t anchor_at = 0;
  for (std::size_t i = 1; i < family.size(); ++i)
    if (family[i].L > family[anchor_at].L) anchor_at = i;

  auto nearest = [](const Eigen::VectorXd& values, double to) {
    Eigen::Index best = 0;
    (values.array() - to).abs().minCoeff(&best);
    return best;
  };

  BetaFit out;
  const auto& anchor_evals = family[anchor_at].eigenvalues;
  if (anchor_evals.size() < 2)
    throw std::invalid_argument("beta_exponent: spectra must have at least 2 levels");
  out.anchor = anchor_evals[nearest(anchor_evals, target)];

  Eigen::VectorXd xs(family.size()), ys(family.size());
  for (std::size_t i = 0; i < family.size(); ++i) {
    const auto& point = family[i];
    const Eigen::Index idx = nearest(point.eigenvalues, out.anchor);
    const double lambda = point.eigenvalues[idx];
    const auto N = point.eigenvalues.size();
    const double spacing = (point.eigenvalues[N - 1] - point.eigenvalues[0]) / double(N - 1);
    if (i != anchor_at && std::abs(lambda - out.anchor) > window_spacings * spacing)
      throw std::runtime_error("beta_exponent: no eigenvalue within tracking window at L=" +
                               std::to_string(point.L));
    const double value = point.ipr[idx];
    if (!(value > 0.0))
      throw std::runtime_error("beta_exponent: nonpositive IPR at L=" + std::to_string(point.L));
    xs[i] = std::log(1.0 / double(point.L));
    ys[i] = std::log(value);
    out.sizes.push_back(point.L);
    out.tracked_eigenvalues.push_back(lambda);
    out.tracked_ipr.push_back(value);
  }
  out.fit = fit_line(xs, ys);
  return out;
}

const char* classify_beta(double beta) {
  if (beta < 0.15) return "localized";
  if (beta > 0.85) return "ergodic";
  return "critical";
}

namespace {

double mean_log_hopping(const Eigen::Ref<const Eigen::VectorXd>& hoppings) {
  double sum = 0.0;
  for (Eigen::Index n = 0; n < hoppings.size(); ++n) {
    if (hoppings[n] == 0.0)
      throw std::invalid_argument("lyapunov_exponent: zero hopping entry");
    sum += std::log(std::abs(hoppings[n]));
  }
  return sum / double(hoppings.size());
}

LyapunovValue lyapunov_at(const Eigen::Ref<const Eigen::VectorXd>& eigenvalues,
                          double logoff, Eigen::Index l) {
  const auto L = eigenvalues.size();
  double sum = 0.0;
  for (Eigen::Index n = 0; n < L; ++n) {
    if (n == l) continue;
    const double d = std::abs(eigenvalues[n] - eigenvalues[l]);
    if (d <= 1e-14) continue;  // coincident levels excluded
    sum += std::log(d);
  }
  LyapunovValue out;
  out.raw = sum / double(L - 1) - logoff;
  out.value = std::max(out.raw, 0.0);
  return out;
}

}  // namespace

LyapunovValue lyapunov_exponent(const Eigen::Ref<const Eigen::VectorXd>& eigenvalues,
                                const Eigen::Ref<const Eigen::VectorXd>& hoppings,
                                Eigen::Index l) {
  const auto L = eigenvalues.size();
  if (L < 2) throw std::invalid_argument("lyapunov_exponent: need at least 2 levels");
  if (hoppings.size() != L - 1)
    throw std::invalid_argument(
        "lyapunov_exponent: hoppings must have length L-1 (Open boundary)");
  if (l < 0 || l >= L) throw std::invalid_argument("lyapunov_exponent: state index out of range");
  return lyapunov_at(eigenvalues, mean_log_hopping(hoppings), l);
}

Eigen::VectorXd lyapunov_all(const Eigen::Ref<const Eigen::VectorXd>& eigenvalues,
                             const Eigen::Ref<const Eigen::VectorXd>& hoppings) {
  const auto L = eigenvalues.size();
  if (hoppings.size() != L - 1)
    throw std::invalid_argument("lyapunov_all: hoppings must have length L-1 (Open boundary)");
  const double logoff = mean_log_hopping(hoppings);
  Eigen::VectorXd out(L);
  for (Eigen::Index l = 0; l < L; ++l) out[l] = lyapunov_at(eigenvalues, logoff, l).value;
  return out;
}

std::array<std::pair<Eigen::Index, Eigen::Index>, 3>
identify_bands(const Eigen::Ref<const Eigen::VectorXd>& eigenvalues) {
  const auto N = eigenvalues.size();
  if (N < 3) throw std::invalid_argument("identify_bands: need at least 3 levels");
  Eigen::Index g1 = -1, g2 = -1;  // indices of the two largest gaps, g1 the larger
  double v1 = -1.0, v2 = -1.0;
  for (Eigen::Index i = 0; i + 1 < N; ++i) {
    const double gap = eigenvalues[i + 1] - eigenvalues[i];
    if (gap > v1) {
      v2 = v1; g2 = g1;
      v1 = gap; g1 = i;
    } else if (gap > v2) {
      v2 = gap; g2 = i;
    }
  }
  const Eigen::Index lo = std::min(g1, g2), hi = std::max(g1, g2);
  return {std::make_pair(Eigen::Index(0), lo), std::make_pair(lo + 1, hi),
          std::make_pair(hi + 1, N - 1)};
}

double LevelStatistics::ilsd(double s) const {
  const auto* begin = sorted_spacings.data();
  const auto* end = begin + sorted_spacings.size();
  const auto above = [&](double threshold) {
    return static_cast<double>(end - std::upper_bound(begin, end, threshold));
  };
  const double denom = above(s0);
  return above(s) / denom;
}

double LevelStatistics::mean_spacing() const { return spacings.mean(); }

LevelStatistics level_statistics(const Eigen::Ref<const Eigen::VectorXd>& eigenvalues,
                                 double window_lo, double window_hi, double s0) {
  if (!(window_hi > window_lo))
    throw std::invalid_argument("level_statistics: empty window");
  if (!(s0 > 0.0)) throw std::invalid_argument("level_statistics: s0 must be positive");
  std::vector<double> levels;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i)
    if (eigenvalues[i] >= window_lo && eigenvalues[i] <= window_hi)
      levels.push_back(eigenvalues[i]);
  std::sort(levels.begin(), levels.end());
  const int N = static_cast<int>(levels.size());
  if (N < 50) throw std::invalid_argument("level_statistics: fewer than 50 levels in window");

  LevelStatistics stats;
  stats.window_lo = window_lo;
  stats.window_hi = window_hi;
  stats.count = N;
  stats.s0 = s0;
  const double unit = (window_hi - window_lo) / double(N);
  stats.spacings.resize(N - 1);
  for (int i = 0; i + 1 < N; ++i) stats.spacings[i] = (levels[i + 1] - levels[i]) / unit;
  stats.sorted_spacings = stats.spacings;
  std::sort(stats.sorted_spacings.data(), stats.sorted_spacings.data() + N - 1);
  if ((stats.sorted_spacings.array() > s0).count() == 0)
    throw std::runtime_error("level_statistics: no spacings above the cutoff");

  // Near-zero exponent: log-log slope of the ILSD over [s0, 1e-2], sampled on
  // a 48-point log-uniform grid (zero-ILSD points dropped).
  constexpr double kFitMax = 1e-2;
  constexpr int kFitPoints = 48;
  stats.fit.slope = std::numeric_limits<double>::quiet_NaN();
  if (s0 < kFitMax) {
    std::vector<double> xs, ys;
    for (int k = 0; k < kFitPoints; ++k) {
      const double s = std::exp(std::log(s0) +
                                (std::log(kFitMax) - std::log(s0)) * double(k) /
                                    double(kFitPoints - 1));
      const double value = stats.ilsd(s);
      if (value > 0.0) {
        xs.push_back(std::log(s));
        ys.push_back(std::log(value));
      }
    }
    if (xs.size() >= 3) {
      stats.fit = fit_line(Eigen::Map<const Eigen::VectorXd>(xs.data(), xs.size()),
                           Eigen::Map<const Eigen::VectorXd>(ys.data(), ys.size()));
    }
  }
  return stats;
}

MobilityEdgeReport detect_mobility_edge(const Eigen::Ref<const Eigen::VectorXd>& eigenvalues,
                                        const Eigen::Ref<const Eigen::VectorXd>& ipr2) {
  const auto N = eigenvalues.size();
  if (N < 2 || ipr2.size() != N)
    throw std::invalid_argument("detect_mobility_edge: need paired eigenvalues and IPR values");

  MobilityEdgeReport report;
  report.ipr_min = ipr2.minCoeff();
  report.ipr_max = ipr2.maxCoeff();

  // Classification depends only on the (eigenvalue, IPR) pairs.
  std::vector<std::pair<double, int>> classified;  // (lambda, +1 localized / -1 extended)
  const double ext_threshold = extended_ipr_threshold(N);
  for (Eigen::Index i = 0; i < N; ++i) {
    if (ipr2[i] > kLocalizedIpr) {
      classified.emplace_back(eigenvalues[i], +1);
      ++report.localized;
    } else if (ipr2[i] < ext_threshold) {
      classified.emplace_back(eigenvalues[i], -1);
      ++report.extended;
    } else {
      ++report.critical;
    }
  }
  if (report.localized == 0 || report.extended == 0) {
    report.note = report.localized == 0 ? "no localized states" : "no extended states";
    return report;
  }
  std::sort(classified.begin(), classified.end());

  double mean_loc = 0.0, mean_ext = 0.0;
  for (const auto& [lambda, cls] : classified)
    (cls > 0 ? mean_loc : mean_ext) += lambda;
  mean_loc /= report.localized;
  mean_ext /= report.extended;
  const bool localized_below = mean_loc < mean_ext;
  report.localized_side = localized_below ? "below" : "above";

  // Optimal cut: position k splits the lambda-sorted classified states into
  // [0,k) expected localized and [k,M) expected extended (mirrored when the
  // localized side is above). Violations at the best cut are the interleaving
  // exceptions.
  const int M = static_cast<int>(classified.size());
  const auto expects_first = localized_below ? +1 : -1;
  std::vector<int> prefix_other(M + 1, 0);  // states of the second kind among the first k
  for (int k = 0; k < M; ++k)
    prefix_other[k + 1] = prefix_other[k] + (classified[k].second != expects_first ? 1 : 0);
  int best_k = 0, best_violations = std::numeric_limits<int>::max();
  const int total_other = prefix_other[M];
  for (int k = 0; k <= M; ++k) {
    // second-kind states before the cut + first-kind states after it
    const int violations = prefix_other[k] + ((M - k) - (total_other - prefix_other[k]));
    if (violations < best_violations) {
      best_violations = violations;
      best_k = k;
    }
  }
  report.clean = best_violations == 0;
  const double fraction = double(best_violations) / double(M);
  if (fraction > 0.02) {
    double lo = 0.0, hi = 0.0;  // overlap of the two phases
    double max_first = -std::numeric_limits<double>::infinity();
    double min_second = std::numeric_limits<double>::infinity();
    for (const auto& [lambda, cls] : classified) {
      if (cls == expects_first) max_first = std::max(max_first, lambda);
      else min_second = std::min(min_second, lambda);
    }
    lo = std::min(min_second, max_first);
    hi = std::max(min_second, max_first);
    report.offending_lo = lo;
    report.offending_hi = hi;
    report.note = "no clean edge: mixed classification over [" + std::to_string(lo) + ", " +
                  std::to_string(hi) + "]";
    return report;
  }

  // Edge: midpoint between the last conforming first-kind state below the cut
  // and the first conforming second-kind state above it.
  double below = -std::numeric_limits<double>::infinity();
  double above = std::numeric_limits<double>::infinity();
  bool have_below = false, have_above = false;
  for (int k = best_k - 1; k >= 0; --k)
    if (classified[k].second == expects_first) {
      below = classified[k].first;
      have_below = true;
      break;
    }
  for (int k = best_k; k < M; ++k)
    if (classified[k].second != expects_first) {
      above = classified[k].first;
      have_above = true;
      break;
    }
  if (!have_below || !have_above) {
    report.note = "one phase below the exception tolerance";
    return report;
  }
  report.edge = 0.5 * (below + above);
  if (best_violations > 0)
    report.note = std::to_string(best_violations) + " interleaving exceptions near the edge";
  return report;
}

}  // namespace qcme
