#include "qcme/dynamics.hpp"

#include <cmath>
#include <complex>
#include <vector>

#include "qcme/parallel.hpp"
#include "qcme/rng.hpp"

namespace qcme {

namespace {

using Complex = std::complex<double>;

int resolve_origin(const Eigen::Ref<const Eigen::VectorXd>& p0, int origin) {
  if (origin >= 0) {
    if (origin >= p0.size()) throw std::invalid_argument("evolution: origin out of range");
    return origin;
  }
  Eigen::Index imax = 0;
  p0.maxCoeff(&imax);
  return static_cast<int>(imax);
}

void require_times(const Eigen::Ref<const Eigen::VectorXd>& times) {
  if (times.size() == 0) throw std::invalid_argument("evolution: time grid is empty");
}

void check_mass(double mass, const char* who) {
  if (std::abs(mass - 1.0) > 1e-6)
    throw std::runtime_error(std::string(who) + ": conservation violated, total mass " +
                             std::to_string(mass));
}

}  // namespace

double second_moment(const Eigen::Ref<const Eigen::VectorXd>& distribution, int origin,
                     Boundary boundary) {
  const auto L = distribution.size();
  if (origin < 0 || origin >= L)
    throw std::invalid_argument("second_moment: origin out of range");
  if (std::abs(distribution.sum() - 1.0) > 1e-8)
    throw std::invalid_argument("second_moment: distribution must sum to 1");
  double out = 0.0;
  for (Eigen::Index n = 0; n < L; ++n) {
    double d = std::abs(double(n - origin));
    if (boundary == Boundary::Periodic) d = std::min(d, double(L) - d);
    out += d * d * distribution[n];
  }
  return out;
}

Eigen::VectorXcd coherent_state_at(const SpectralResult& eig,
                                   const Eigen::Ref<const Eigen::VectorXcd>& psi0, double t) {
  const Eigen::VectorXcd c0 = eig.eigenvectors.transpose() * psi0;
  Eigen::VectorXcd phases(c0.size());
  for (Eigen::Index k = 0; k < c0.size(); ++k)
    phases[k] = std::exp(Complex(0.0, -eig.eigenvalues[k] * t));
  return eig.eigenvectors * phases.cwiseProduct(c0);
}

Trajectory evolve_coherent(const Eigen::Ref<const Eigen::MatrixXd>& H,
                           const Eigen::Ref<const Eigen::VectorXcd>& psi0,
                           const Eigen::Ref<const Eigen::VectorXd>& times, Boundary boundary,
                           int origin) {
  require_times(times);
  if (std::abs(psi0.norm() - 1.0) > 1e-10)
    throw std::invalid_argument("evolve_coherent: initial state must be normalized");
  const SpectralResult eig = eigendecompose_symmetric(H);
  const auto L = H.rows();
  const auto T = times.size();
  Trajectory traj;
  traj.times = times;
  traj.boundary = boundary;
  traj.origin = resolve_origin(psi0.cwiseAbs2(), origin);
  traj.distributions.resize(T, L);
  traj.second_moment.resize(T);
  traj.norm_record.resize(T);
  for (Eigen::Index i = 0; i < T; ++i) {
    const Eigen::VectorXd p = coherent_state_at(eig, psi0, times[i]).cwiseAbs2();
    check_mass(p.sum(), "evolve_coherent");
    traj.distributions.row(i) = p.transpose();
    traj.norm_record[i] = p.sum();
    traj.second_moment[i] = second_moment(p / p.sum(), traj.origin, boundary);
  }
  return traj;
}

Eigen::VectorXd markov_state_at(const SpectralResult& eig,
                                const Eigen::Ref<const Eigen::VectorXd>& P0, double t) {
  const Eigen::VectorXd c0 = eig.eigenvectors.transpose() * P0;
  return eig.eigenvectors * (eig.eigenvalues.array() * t).exp().matrix().cwiseProduct(c0);
}

Trajectory evolve_markov(const Eigen::Ref<const Eigen::MatrixXd>& W,
                         const Eigen::Ref<const Eigen::VectorXd>& P0,
                         const Eigen::Ref<const Eigen::VectorXd>& times, Boundary boundary,
                         int origin) {
  require_times(times);
  if ((P0.array() < 0.0).any())
    throw std::invalid_argument("evolve_markov: initial distribution has negative entries");
  if (std::abs(P0.sum() - 1.0) > 1e-10)
    throw std::invalid_argument("evolve_markov: initial distribution must sum to 1");
  const SpectralResult eig = eigendecompose_symmetric(W);
  const auto L = W.rows();
  const auto T = times.size();
  Trajectory traj;
  traj.times = times;
  traj.boundary = boundary;
  traj.origin = resolve_origin(P0, origin);
  traj.distributions.resize(T, L);
  traj.second_moment.resize(T);
  traj.norm_record.resize(T);
  for (Eigen::Index i = 0; i < T; ++i) {
    Eigen::VectorXd p = markov_state_at(eig, P0, times[i]);
    for (Eigen::Index n = 0; n < L; ++n) {
      if (p[n] < 0.0) {
        traj.worst_negative = std::min(traj.worst_negative, p[n]);
        if (p[n] < -1e-10) ++traj.clamp_warnings;
        p[n] = 0.0;
      }
    }
    check_mass(p.sum(), "evolve_markov");
    traj.distributions.row(i) = p.transpose();
    traj.norm_record[i] = p.sum();
    traj.second_moment[i] = second_moment(p / p.sum(), traj.origin, boundary);
  }
  return traj;
}

void StochasticEvolutionSpec::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("StochasticEvolutionSpec: dt must be positive");
  if (realizations < 1)
    throw std::invalid_argument("StochasticEvolutionSpec: at least 1 realization required");
}

Eigen::MatrixXd incoherent_map(const Eigen::Ref<const Eigen::MatrixXd>& H, double dt) {
  const SpectralResult eig = eigendecompose_symmetric(H);
  const auto L = H.rows();
  Eigen::VectorXcd phases(L);
  for (Eigen::Index k = 0; k < L; ++k) phases[k] = std::exp(Complex(0.0, -eig.eigenvalues[k] * dt));
  const Eigen::MatrixXcd U =
      eig.eigenvectors.cast<Complex>() * phases.asDiagonal() *
      eig.eigenvectors.transpose().cast<Complex>();
  return U.cwiseAbs2();
}

Trajectory evolve_phase_randomized(const Eigen::Ref<const Eigen::MatrixXd>& H,
                                   const Eigen::Ref<const Eigen::VectorXcd>& psi0,
                                   const StochasticEvolutionSpec& spec,
                                   const Eigen::Ref<const Eigen::VectorXd>& times,
                                   Boundary boundary, int origin, int threads) {
  require_times(times);
  spec.validate();
  if (std::abs(psi0.norm() - 1.0) > 1e-10)
    throw std::invalid_argument("evolve_phase_randomized: initial state must be normalized");
  const auto L = H.rows();
  const auto T = times.size();

  std::vector<long> steps(T);
  for (Eigen::Index i = 0; i < T; ++i) {
    steps[i] = std::lround(times[i] / spec.dt);
    if (std::abs(double(steps[i]) * spec.dt - times[i]) > 1e-9 * std::max(1.0, times[i]))
      throw std::invalid_argument(
          "evolve_phase_randomized: recorded times must be multiples of dt");
  }
  for (Eigen::Index i = 1; i < T; ++i)
    if (steps[i] <= steps[i - 1])
      throw std::invalid_argument("evolve_phase_randomized: times must be strictly increasing");

  const SpectralResult eig = eigendecompose_symmetric(H);
  Eigen::VectorXcd phases(L);
  for (Eigen::Index k = 0; k < L; ++k)
    phases[k] = std::exp(Complex(0.0, -eig.eigenvalues[k] * spec.dt));
  const Eigen::MatrixXcd U = eig.eigenvectors.cast<Complex>() * phases.asDiagonal() *
                             eig.eigenvectors.transpose().cast<Complex>();

  // Accumulation over a fixed number of contiguous realization blocks,
  // reduced in block order, so the result is byte-identical for every
  // thread count.
  const int R = spec.realizations;
  threads = std::max(1, std::min(threads, R));
  const int blocks = std::min(R, 64);
  std::vector<Eigen::MatrixXd> block_sum(blocks, Eigen::MatrixXd::Zero(T, L));
  std::vector<Eigen::MatrixXd> block_sumsq(blocks, Eigen::MatrixXd::Zero(T, L));

  parallel_for(blocks, threads, [&](int b) {
    const int r0 = static_cast<int>(std::int64_t(R) * b / blocks);
    const int r1 = static_cast<int>(std::int64_t(R) * (b + 1) / blocks);
    Eigen::VectorXcd psi(L), next(L);
    for (int r = r0; r < r1; ++r) {
      SplitMix stream(derive_stream(spec.seed, std::uint64_t(r)));
      psi = psi0;
      long step = 0;
      for (Eigen::Index i = 0; i < T; ++i) {
        for (; step < steps[i]; ++step) {
          next.noalias() = U * psi;
          if (spec.phase_scale != 0.0) {
            for (Eigen::Index n = 0; n < L; ++n)
              next[n] *= std::exp(Complex(0.0, spec.phase_scale * stream.phase()));
          } else {
            for (Eigen::Index n = 0; n < L; ++n) stream.phase();  // keep streams aligned
          }
          psi.swap(next);
        }
        const Eigen::VectorXd p = psi.cwiseAbs2();
        block_sum[b].row(i) += p.transpose();
        block_sumsq[b].row(i) += p.cwiseAbs2().transpose();
      }
    }
  });

  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(T, L), sumsq = Eigen::MatrixXd::Zero(T, L);
  for (int b = 0; b < blocks; ++b) {
    sum += block_sum[b];
    sumsq += block_sumsq[b];
  }

  Trajectory traj;
  traj.times = times;
  traj.boundary = boundary;
  traj.origin = resolve_origin(psi0.cwiseAbs2(), origin);
  traj.distributions = sum / double(R);
  traj.second_moment.resize(T);
  traj.norm_record.resize(T);
  for (Eigen::Index i = 0; i < T; ++i) {
    const Eigen::VectorXd mean = traj.distributions.row(i).transpose();
    check_mass(mean.sum(), "evolve_phase_randomized");
    traj.norm_record[i] = mean.sum();
    traj.second_moment[i] = second_moment(mean / mean.sum(), traj.origin, boundary);
    if (R > 1) {
      const Eigen::VectorXd var =
          (sumsq.row(i).transpose() - double(R) * mean.cwiseAbs2()) / double(R - 1);
      const double max_se = (var.cwiseMax(0.0) / double(R)).cwiseSqrt().maxCoeff();
      if (max_se > 0.1 * mean.maxCoeff()) traj.low_statistics_warning = true;
    }
  }
  return traj;
}

LineFit fit_spreading_exponent(const Trajectory& trajectory, double t_min, double t_max) {
  const auto L = trajectory.distributions.cols();
  const double guard = (double(L) / 4.0) * (double(L) / 4.0);
  std::vector<double> xs, ys;
  for (Eigen::Index i = 0; i < trajectory.times.size(); ++i) {
    const double t = trajectory.times[i];
    if (t < t_min || t > t_max) continue;
    if (!(t > 0.0))
      throw std::invalid_argument("fit_spreading_exponent: window must have t > 0");
    const double s2 = trajectory.second_moment[i];
    if (!(s2 > 0.0))
      throw std::invalid_argument("fit_spreading_exponent: sigma^2 must be positive on window");
    if (s2 >= guard)
      throw std::invalid_argument(
          "fit_spreading_exponent: window extends past boundary reflection (sigma^2 >= (L/4)^2)");
    xs.push_back(std::log(t));
    ys.push_back(std::log(s2));
  }
  if (xs.size() < 10)
    throw std::invalid_argument("fit_spreading_exponent: window too short (fewer than 10 samples)");
  return fit_line(Eigen::Map<const Eigen::VectorXd>(xs.data(), xs.size()),
                  Eigen::Map<const Eigen::VectorXd>(ys.data(), ys.size()));
}

DiffusionFit fit_diffusion(const Trajectory& trajectory, double t_min, double t_max) {
  std::vector<double> xs, ys;
  for (Eigen::Index i = 0; i < trajectory.times.size(); ++i) {
    const double t = trajectory.times[i];
    if (t < t_min || t > t_max) continue;
    xs.push_back(t);
    ys.push_back(trajectory.second_moment[i]);
  }
  if (xs.size() < 2)
    throw std::invalid_argument("fit_diffusion: at least 2 samples required in window");
  DiffusionFit fit;
  fit.line = fit_line(Eigen::Map<const Eigen::VectorXd>(xs.data(), xs.size()),
                      Eigen::Map<const Eigen::VectorXd>(ys.data(), ys.size()));
  fit.D = fit.line.slope / 2.0;
  fit.D_stderr = fit.line.slope_stderr / 2.0;
  return fit;
}

}  // namespace qcme
