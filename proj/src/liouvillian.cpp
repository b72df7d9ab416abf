#include "qcme/liouvillian.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace qcme {

namespace {

using Complex = std::complex<double>;
constexpr Complex kI{0.0, 1.0};

void require_hamiltonian(const Eigen::Ref<const Eigen::MatrixXd>& H, double gamma,
                         const char* who) {
  if (H.rows() != H.cols() || H.rows() < 1)
    throw std::invalid_argument(std::string(who) + ": Hamiltonian must be square and nonempty");
  const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
  if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw std::invalid_argument(std::string(who) + ": Hamiltonian must be symmetric");
  if (!(gamma >= 0.0))
    throw std::invalid_argument(std::string(who) + ": dephasing rate must be >= 0");
  if (H.rows() > kMaxLiouvillianSites)
    throw std::invalid_argument(
        std::string(who) + ": dense superoperators are capped at " +
        std::to_string(kMaxLiouvillianSites) +
        " sites; use the classical generator from build_markov for larger lattices");
}

// Enumerates the basis pairs (n, m), n < m, in row-major order.
std::vector<std::pair<int, int>> basis_pairs(int L) {
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(std::size_t(L) * (L - 1) / 2);
  for (int n = 0; n < L; ++n)
    for (int m = n + 1; m < L; ++m) pairs.emplace_back(n, m);
  return pairs;
}

// out += action of the generator on c |n><m|, exploiting that H c e_n e_m^T
// touches one column and c e_n e_m^T H one row.
void accumulate_action(const Eigen::Ref<const Eigen::MatrixXd>& H, double gamma, int n, int m,
                       Complex c, Eigen::MatrixXcd& out) {
  out.col(m) -= (kI * c) * H.col(n).cast<Complex>();
  out.row(n) += (kI * c) * H.col(m).transpose().cast<Complex>();
  if (n != m) out(n, m) -= gamma * c;
}

struct PackedSpectrum {
  Eigen::VectorXd wr, wi;  // eigenvalues wr + i*wi
  Eigen::MatrixXd vectors; // real column for wi == 0; (u, w) columns for u +- i w
};

PackedSpectrum packed_eigendecompose(Eigen::MatrixXd A) {
  const auto n = static_cast<lapack_int>(A.rows());
  PackedSpectrum packed;
  packed.wr.resize(n);
  packed.wi.resize(n);
  packed.vectors.resize(n, n);
  const lapack_int info =
      LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', 'V', n, A.data(), n, packed.wr.data(),
                    packed.wi.data(), nullptr, n, packed.vectors.data(), n);
  if (info != 0)
    throw std::runtime_error("evolve_lindblad: LAPACKE_dgeev failed with info " +
                             std::to_string(info));
  return packed;
}

}  // namespace

int liouvillian_dimension(int sites) {
  if (sites < 1) throw std::invalid_argument("liouvillian_dimension: sites must be >= 1");
  return sites * sites;
}

int pair_index(int n, int m, int sites) {
  if (!(0 <= n && n < m && m < sites))
    throw std::invalid_argument("pair_index: require 0 <= n < m < sites");
  return n * (2 * sites - n - 1) / 2 + (m - n - 1);
}

void validate_density_matrix(const Eigen::Ref<const Eigen::MatrixXcd>& rho) {
  if (rho.rows() != rho.cols() || rho.rows() < 1)
    throw std::invalid_argument("density matrix must be square and nonempty");
  const double scale = std::max(1.0, rho.cwiseAbs().maxCoeff());
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw std::invalid_argument("density matrix must be Hermitian");
  if (std::abs(rho.trace() - Complex(1.0)) > 1e-10)
    throw std::invalid_argument("density matrix must have unit trace");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(rho, Eigen::EigenvaluesOnly);
  if (solver.eigenvalues().minCoeff() < -1e-10 * scale)
    throw std::invalid_argument("density matrix must be positive semidefinite");
}

Eigen::MatrixXcd site_density_matrix(int sites, int n) {
  if (sites < 1 || n < 0 || n >= sites)
    throw std::invalid_argument("site_density_matrix: site index out of range");
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(sites, sites);
  rho(n, n) = 1.0;
  return rho;
}

LiouvillianMatrix build_liouvillian(const Eigen::Ref<const Eigen::MatrixXd>& H, double gamma) {
  require_hamiltonian(H, gamma, "build_liouvillian");
  const int L = static_cast<int>(H.rows());
  const int D = L * L;
  LiouvillianMatrix out;
  out.hamiltonian = H;
  out.gamma = gamma;
  out.mat = Eigen::MatrixXcd::Zero(D, D);
  for (int m = 0; m < L; ++m) {
    for (int n = 0; n < L; ++n) {
      const int row = n + m * L;
      for (int a = 0; a < L; ++a) {
        if (H(n, a) != 0.0) out.mat(row, a + m * L) -= kI * H(n, a);
        if (H(a, m) != 0.0) out.mat(row, n + a * L) += kI * H(a, m);
      }
      if (n != m) out.mat(row, row) -= gamma;
    }
  }
  return out;
}

Eigen::MatrixXcd apply_liouvillian(const Eigen::Ref<const Eigen::MatrixXd>& H, double gamma,
                                   const Eigen::Ref<const Eigen::MatrixXcd>& rho) {
  if (H.rows() != H.cols() || H.rows() != rho.rows() || rho.rows() != rho.cols())
    throw std::invalid_argument("apply_liouvillian: dimension mismatch");
  // Split into real GEMMs: -i[H, rho] with rho = R + iS gives
  // (HS - SH) - i(HR - RH).
  const Eigen::MatrixXd R = rho.real(), S = rho.imag();
  const Eigen::MatrixXd commR = H * R - R * H;
  const Eigen::MatrixXd commS = H * S - S * H;
  Eigen::MatrixXcd out = commS.cast<Complex>() - kI * commR.cast<Complex>();
  out -= gamma * rho;
  out.diagonal() += gamma * rho.diagonal();
  return out;
}

Eigen::MatrixXd real_representation(const Eigen::Ref<const Eigen::MatrixXd>& H, double gamma) {
  require_hamiltonian(H, gamma, "real_representation");
  const int L = static_cast<int>(H.rows());
  const auto pairs = basis_pairs(L);
  const int D = L + 2 * static_cast<int>(pairs.size());
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  const double sqrt2 = std::sqrt(2.0);

  Eigen::MatrixXd rep(D, D);
  Eigen::MatrixXcd out(L, L);
  auto write_column = [&](int col) {
    for (int a = 0; a < L; ++a) rep(a, col) = out(a, a).real();
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto [a, b] = pairs[k];
      rep(L + 2 * int(k), col) = sqrt2 * out(a, b).real();
      rep(L + 2 * int(k) + 1, col) = sqrt2 * out(a, b).imag();
    }
  };

  for (int j = 0; j < L; ++j) {
    out.setZero();
    accumulate_action(H, gamma, j, j, 1.0, out);
    write_column(j);
  }
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [a, b] = pairs[k];
    out.setZero();
    accumulate_action(H, gamma, a, b, inv_sqrt2, out);
    accumulate_action(H, gamma, b, a, inv_sqrt2, out);
    write_column(L + 2 * int(k));
    out.setZero();
    accumulate_action(H, gamma, a, b, kI * inv_sqrt2, out);
    accumulate_action(H, gamma, b, a, -kI * inv_sqrt2, out);
    write_column(L + 2 * int(k) + 1);
  }
  return rep;
}

Eigen::VectorXd hermitian_coordinates(const Eigen::Ref<const Eigen::MatrixXcd>& rho) {
  if (rho.rows() != rho.cols() || rho.rows() < 1)
    throw std::invalid_argument("hermitian_coordinates: matrix must be square and nonempty");
  const int L = static_cast<int>(rho.rows());
  const double sqrt2 = std::sqrt(2.0);
  Eigen::VectorXd x(L * L);
  for (int n = 0; n < L; ++n) x[n] = rho(n, n).real();
  int idx = L;
  for (int n = 0; n < L; ++n) {
    for (int m = n + 1; m < L; ++m) {
      x[idx++] = sqrt2 * rho(n, m).real();
      x[idx++] = sqrt2 * rho(n, m).imag();
    }
  }
  return x;
}

Eigen::MatrixXcd matrix_from_coordinates(const Eigen::Ref<const Eigen::VectorXd>& x) {
  const int L = static_cast<int>(std::lround(std::sqrt(double(x.size()))));
  if (L < 1 || L * L != x.size())
    throw std::invalid_argument("matrix_from_coordinates: length must be a perfect square");
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  Eigen::MatrixXcd rho(L, L);
  for (int n = 0; n < L; ++n) rho(n, n) = x[n];
  int idx = L;
  for (int n = 0; n < L; ++n) {
    for (int m = n + 1; m < L; ++m) {
      const Complex v = Complex(x[idx], x[idx + 1]) * inv_sqrt2;
      idx += 2;
      rho(n, m) = v;
      rho(m, n) = std::conj(v);
    }
  }
  return rho;
}

LiouvillianSpectrum eigendecompose_liouvillian(const Eigen::Ref<const Eigen::MatrixXd>& H,
                                               double gamma) {
  require_hamiltonian(H, gamma, "eigendecompose_liouvillian");
  const int L = static_cast<int>(H.rows());
  const Eigen::MatrixXd rep = real_representation(H, gamma);
  const int D = static_cast<int>(rep.rows());
  const ComplexSpectrum eig = eigendecompose_general(rep);

  LiouvillianSpectrum spectrum;
  spectrum.eigenvalues = eig.eigenvalues;
  spectrum.operator_norm = rep.norm();
  spectrum.diagonals.resize(L, D);
  spectrum.population_ipr.resize(D);
  spectrum.diagonal_weight.resize(D);

  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  Eigen::MatrixXcd mode(L, L);
  for (int j = 0; j < D; ++j) {
    Eigen::VectorXcd c = eig.eigenvectors.col(j);
    c /= c.norm();
    // Orthonormal expansion: unit coordinate norm gives unit Frobenius norm.
    for (int n = 0; n < L; ++n) mode(n, n) = c[n];
    int idx = L;
    for (int n = 0; n < L; ++n) {
      for (int m = n + 1; m < L; ++m) {
        mode(n, m) = (c[idx] + kI * c[idx + 1]) * inv_sqrt2;
        mode(m, n) = (c[idx] - kI * c[idx + 1]) * inv_sqrt2;
        idx += 2;
      }
    }
    spectrum.diagonals.col(j) = mode.diagonal();
    const Eigen::VectorXd absdiag = mode.diagonal().cwiseAbs();
    const double mass = absdiag.sum();
    spectrum.diagonal_weight[j] = absdiag.squaredNorm();
    spectrum.population_ipr[j] =
        mass > 0.0 ? (absdiag / mass).squaredNorm() : std::numeric_limits<double>::quiet_NaN();
    const double residual =
        (apply_liouvillian(H, gamma, mode) - eig.eigenvalues[j] * mode).norm();
    spectrum.max_residual = std::max(spectrum.max_residual, residual);
  }

  int best = 0;
  for (int j = 1; j < D; ++j)
    if (std::abs(spectrum.eigenvalues[j]) < std::abs(spectrum.eigenvalues[best])) best = j;
  spectrum.stationary_index = best;
  {
    Eigen::VectorXcd c = eig.eigenvectors.col(best);
    c /= c.norm();
    const Complex trace = c.head(L).sum();
    if (std::abs(trace) > 1e-8) {
      for (int n = 0; n < L; ++n) mode(n, n) = c[n];
      int idx = L;
      for (int n = 0; n < L; ++n) {
        for (int m = n + 1; m < L; ++m) {
          mode(n, m) = (c[idx] + kI * c[idx + 1]) * inv_sqrt2;
          mode(m, n) = (c[idx] - kI * c[idx + 1]) * inv_sqrt2;
          idx += 2;
        }
      }
      Eigen::MatrixXcd st = mode / trace;
      spectrum.stationary = 0.5 * (st + st.adjoint().eval());
    }
  }
  return spectrum;
}

SlowBranchSummary slow_branch_populations(const LiouvillianSpectrum& spectrum, double gamma,
                                          double weight_floor) {
  if (!(gamma > 0.0))
    throw std::invalid_argument("slow_branch_populations: gamma must be positive");
  SlowBranchSummary summary;
  summary.ipr_min = std::numeric_limits<double>::quiet_NaN();
  summary.ipr_max = std::numeric_limits<double>::quiet_NaN();
  for (Eigen::Index j = 0; j < spectrum.eigenvalues.size(); ++j) {
    if (std::abs(spectrum.eigenvalues[j].real()) >= gamma / 2.0) continue;
    if (!(spectrum.diagonal_weight[j] >= weight_floor)) continue;
    const double value = spectrum.population_ipr[j];
    if (!std::isfinite(value)) continue;
    if (summary.mode_count == 0) {
      summary.ipr_min = summary.ipr_max = value;
    } else {
      summary.ipr_min = std::min(summary.ipr_min, value);
      summary.ipr_max = std::max(summary.ipr_max, value);
    }
    ++summary.mode_count;
    summary.modes.push_back(
        {spectrum.eigenvalues[j].real(), spectrum.eigenvalues[j].imag(), value});
  }
  return summary;
}

LindbladTrajectory evolve_lindblad(const Eigen::Ref<const Eigen::MatrixXd>& H, double gamma,
                                   const Eigen::Ref<const Eigen::MatrixXcd>& rho0,
                                   const Eigen::Ref<const Eigen::VectorXd>& times) {
  require_hamiltonian(H, gamma, "evolve_lindblad");
  validate_density_matrix(rho0);
  if (rho0.rows() != H.rows())
    throw std::invalid_argument("evolve_lindblad: state and Hamiltonian sizes differ");
  if (times.size() == 0) throw std::invalid_argument("evolve_lindblad: time grid is empty");
  if ((times.array() < 0.0).any())
    throw std::invalid_argument("evolve_lindblad: times must be >= 0");

  const int L = static_cast<int>(H.rows());
  const PackedSpectrum packed = packed_eigendecompose(real_representation(H, gamma));
  const int D = static_cast<int>(packed.wr.size());

  const Eigen::VectorXd x0 = hermitian_coordinates(rho0);
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(packed.vectors);
  const Eigen::VectorXd coeff = lu.solve(x0);
  if ((packed.vectors * coeff - x0).norm() > 1e-8 * std::max(1.0, x0.norm()))
    throw std::runtime_error("evolve_lindblad: eigenbasis too ill-conditioned to expand state");

  LindbladTrajectory traj;
  traj.times = times;
  traj.populations.resize(times.size(), L);
  traj.trace_record.resize(times.size());
  traj.states.reserve(times.size());

  Eigen::VectorXd x(D);
  for (Eigen::Index i = 0; i < times.size(); ++i) {
    const double t = times[i];
    x.setZero();
    for (int j = 0; j < D; ++j) {
      const double decay = std::exp(packed.wr[j] * t);
      if (packed.wi[j] == 0.0) {
        x += (coeff[j] * decay) * packed.vectors.col(j);
      } else {
        // Conjugate pair u +- i w with complex amplitude (c_j - i c_{j+1})/2;
        // twice the real part of amplitude * e^{lambda t} * (u + i w).
        const Complex amp = 0.5 * Complex(coeff[j], -coeff[j + 1]);
        const Complex rot = amp * std::exp(kI * (packed.wi[j] * t));
        x += (2.0 * decay * rot.real()) * packed.vectors.col(j);
        x -= (2.0 * decay * rot.imag()) * packed.vectors.col(j + 1);
        ++j;
      }
    }
    const double trace = x.head(L).sum();
    if (std::abs(trace - 1.0) > 1e-6)
      throw std::runtime_error("evolve_lindblad: trace drifted to " + std::to_string(trace) +
                               " at t = " + std::to_string(t));
    traj.trace_record[i] = trace;
    for (int n = 0; n < L; ++n) {
      double p = x[n];
      if (p < 0.0) {
        traj.worst_negative = std::min(traj.worst_negative, p);
        if (p < -1e-10) ++traj.clamp_warnings;
        p = 0.0;
      }
      traj.populations(i, n) = p;
    }
    traj.states.push_back(matrix_from_coordinates(x));
  }
  return traj;
}

}  // namespace qcme
