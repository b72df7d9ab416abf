#include "qcme/walk.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "qcme/dynamics.hpp"
#include "qcme/parallel.hpp"
#include "qcme/rng.hpp"

namespace qcme {

namespace {

using Complex = std::complex<double>;
constexpr Complex kI{0.0, 1.0};

// Fixed reduction width so ensemble sums are byte-identical for every
// thread count.
constexpr int kReductionBlocks = 64;

void require_record(const std::vector<int>& record) {
  if (record.empty()) throw std::invalid_argument("walk: record list is empty");
  if (record.front() < 0) throw std::invalid_argument("walk: recorded steps must be >= 0");
  for (std::size_t i = 1; i < record.size(); ++i)
    if (record[i] <= record[i - 1])
      throw std::invalid_argument("walk: recorded steps must be strictly increasing");
}

void require_origin(int sites, int origin) {
  if (origin < 0 || origin >= sites)
    throw std::invalid_argument("walk: origin out of range");
}

WalkTrajectory make_trajectory(const WalkSpec& spec, int origin, const std::vector<int>& record,
                               const Eigen::MatrixXd& occupation_rows) {
  const int L = spec.sites();
  const auto T = static_cast<Eigen::Index>(record.size());
  WalkTrajectory traj;
  traj.origin = origin;
  traj.steps.resize(T);
  traj.distributions.resize(T, L);
  traj.second_moment.resize(T);
  for (Eigen::Index i = 0; i < T; ++i) {
    traj.steps[i] = record[std::size_t(i)];
    const Eigen::VectorXd dist = site_distribution(occupation_rows.row(i).transpose());
    traj.distributions.row(i) = dist.transpose();
    traj.second_moment[i] = second_moment(dist / dist.sum(), origin, Boundary::Periodic);
  }
  return traj;
}

}  // namespace

void WalkSpec::validate() const {
  if (beta.size() < 2) throw std::invalid_argument("WalkSpec: at least 2 sites required");
  for (Eigen::Index n = 0; n < beta.size(); ++n)
    if (!(beta[n] > 0.0 && beta[n] <= std::numbers::pi / 2.0))
      throw std::invalid_argument("WalkSpec: coupling angles must lie in (0, pi/2]");
}

WalkState initial_walk_state(int sites, int origin) {
  require_origin(sites, origin);
  WalkState state;
  state.u = Eigen::VectorXcd::Zero(sites);
  state.v = Eigen::VectorXcd::Zero(sites);
  state.u[origin] = 1.0;
  return state;
}

WalkState step_coherent(const WalkSpec& spec, const WalkState& state,
                        const Eigen::Ref<const Eigen::VectorXd>& phases) {
  const int L = spec.sites();
  if (state.u.size() != L || state.v.size() != L)
    throw std::invalid_argument("step_coherent: state size mismatch");
  if (phases.size() != L)
    throw std::invalid_argument("step_coherent: one phase per site required");
  WalkState next;
  next.u.resize(L);
  next.v.resize(L);
  for (int n = 0; n < L; ++n) {
    const int up = (n + 1) % L;
    const int dn = (n + L - 1) % L;
    next.u[n] = (std::cos(spec.beta[up]) * state.u[up] + kI * std::sin(spec.beta[up]) * state.v[up]) *
                std::exp(kI * phases[n]);
    next.v[n] = kI * std::sin(spec.beta[dn]) * state.u[dn] + std::cos(spec.beta[dn]) * state.v[dn];
  }
  return next;
}

Eigen::VectorXd occupations(const WalkState& state) {
  const auto L = state.u.size();
  Eigen::VectorXd xy(2 * L);
  for (Eigen::Index n = 0; n < L; ++n) {
    xy[n] = std::norm(state.u[n]);
    xy[L + n] = std::norm(state.v[(n + 1) % L]);
  }
  return xy;
}

Eigen::VectorXd step_incoherent(const WalkSpec& spec,
                                const Eigen::Ref<const Eigen::VectorXd>& xy) {
  const int L = spec.sites();
  if (xy.size() != 2 * L) throw std::invalid_argument("step_incoherent: occupation size mismatch");
  Eigen::VectorXd next(2 * L);
  for (int m = 0; m < L; ++m) {
    const int up = (m + 1) % L;
    const int dn = (m + L - 1) % L;
    const double cc_up = std::cos(spec.beta[up]) * std::cos(spec.beta[up]);
    const double cc_m = std::cos(spec.beta[m]) * std::cos(spec.beta[m]);
    next[m] = cc_up * xy[up] + (1.0 - cc_up) * xy[L + m];
    next[L + m] = (1.0 - cc_m) * xy[m] + cc_m * xy[L + dn];
  }
  return next;
}

Eigen::MatrixXd build_incoherent_propagator(const WalkSpec& spec) {
  spec.validate();
  const int L = spec.sites();
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(2 * L, 2 * L);
  for (int m = 0; m < L; ++m) {
    const int up = (m + 1) % L;
    const int dn = (m + L - 1) % L;
    const double cc_up = std::cos(spec.beta[up]) * std::cos(spec.beta[up]);
    const double cc_m = std::cos(spec.beta[m]) * std::cos(spec.beta[m]);
    P(m, up) = cc_up;
    P(m, L + m) = 1.0 - cc_up;
    P(L + m, m) = 1.0 - cc_m;
    P(L + m, L + dn) = cc_m;
  }
  return P;
}

Eigen::VectorXd site_distribution(const Eigen::Ref<const Eigen::VectorXd>& xy) {
  const auto L = xy.size() / 2;
  if (2 * L != xy.size()) throw std::invalid_argument("site_distribution: odd occupation length");
  return xy.head(L) + xy.tail(L);
}

Eigen::VectorXd site_marginal(const Eigen::Ref<const Eigen::VectorXcd>& mode) {
  const auto L = mode.size() / 2;
  if (2 * L != mode.size()) throw std::invalid_argument("site_marginal: odd mode length");
  Eigen::VectorXd q(L);
  for (Eigen::Index n = 0; n < L; ++n)
    q[n] = std::norm(mode[n]) + std::norm(mode[L + n]);
  return q;
}

double site_marginal_ipr(const Eigen::Ref<const Eigen::VectorXcd>& mode) {
  const Eigen::VectorXd q = site_marginal(mode);
  const double mass = q.sum();
  if (!(mass > 0.0)) throw std::invalid_argument("site_marginal_ipr: zero mode");
  return q.squaredNorm() / (mass * mass);
}

PropagatorSpectrum eigendecompose_propagator(
    const Eigen::Ref<const Eigen::MatrixXd>& propagator) {
  const ComplexSpectrum eig = eigendecompose_general(propagator);
  const auto n = eig.eigenvalues.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    const double ma = std::abs(eig.eigenvalues[a]), mb = std::abs(eig.eigenvalues[b]);
    if (ma != mb) return ma > mb;
    const auto &la = eig.eigenvalues[a], &lb = eig.eigenvalues[b];
    if (la.real() != lb.real()) return la.real() > lb.real();
    return la.imag() < lb.imag();
  });
  PropagatorSpectrum spectrum;
  spectrum.eigenvalues.resize(n);
  spectrum.eigenvectors.resize(n, n);
  spectrum.site_ipr.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    spectrum.eigenvalues[j] = eig.eigenvalues[order[std::size_t(j)]];
    spectrum.eigenvectors.col(j) = eig.eigenvectors.col(order[std::size_t(j)]);
    spectrum.site_ipr[j] = site_marginal_ipr(spectrum.eigenvectors.col(j));
  }
  return spectrum;
}

void WalkEnsembleSpec::validate() const {
  if (realizations < 1)
    throw std::invalid_argument("WalkEnsembleSpec: at least 1 realization required");
}

WalkTrajectory run_incoherent_walk(const WalkSpec& spec, int origin,
                                   const std::vector<int>& record) {
  spec.validate();
  require_origin(spec.sites(), origin);
  require_record(record);
  const int L = spec.sites();
  Eigen::VectorXd xy = Eigen::VectorXd::Zero(2 * L);
  xy[origin] = 1.0;
  Eigen::MatrixXd rows(record.size(), 2 * L);
  int step = 0;
  for (std::size_t i = 0; i < record.size(); ++i) {
    for (; step < record[i]; ++step) xy = step_incoherent(spec, xy);
    rows.row(Eigen::Index(i)) = xy.transpose();
  }
  return make_trajectory(spec, origin, record, rows);
}

WalkTrajectory run_walk_ensemble(const WalkSpec& spec, int origin,
                                 const std::vector<int>& record,
                                 const WalkEnsembleSpec& ensemble, int threads) {
  spec.validate();
  require_origin(spec.sites(), origin);
  require_record(record);
  ensemble.validate();
  const int L = spec.sites();
  const auto T = static_cast<Eigen::Index>(record.size());

  if (ensemble.dephasing == Dephasing::None) {
    const Eigen::VectorXd zero_phases = Eigen::VectorXd::Zero(L);
    WalkState state = initial_walk_state(L, origin);
    Eigen::MatrixXd rows(T, 2 * L);
    int step = 0;
    for (Eigen::Index i = 0; i < T; ++i) {
      for (; step < record[std::size_t(i)]; ++step)
        state = step_coherent(spec, state, zero_phases);
      rows.row(i) = occupations(state).transpose();
    }
    return make_trajectory(spec, origin, record, rows);
  }

  const int R = ensemble.realizations;
  const int blocks = std::min(R, kReductionBlocks);
  std::vector<Eigen::MatrixXd> block_sum(std::size_t(blocks), Eigen::MatrixXd::Zero(T, 2 * L));
  parallel_for(blocks, std::max(1, threads), [&](int b) {
    const int r0 = static_cast<int>(std::int64_t(R) * b / blocks);
    const int r1 = static_cast<int>(std::int64_t(R) * (b + 1) / blocks);
    Eigen::VectorXd phases(L);
    for (int r = r0; r < r1; ++r) {
      WalkState state = initial_walk_state(L, origin);
      int step = 0;
      for (Eigen::Index i = 0; i < T; ++i) {
        for (; step < record[std::size_t(i)]; ++step) {
          for (int n = 0; n < L; ++n)
            phases[n] = counter_phase(ensemble.seed, std::uint64_t(n), std::uint64_t(step + 1),
                                      std::uint64_t(r));
          state = step_coherent(spec, state, phases);
        }
        block_sum[std::size_t(b)].row(i) += occupations(state).transpose();
      }
    }
  });
  Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(T, 2 * L);
  for (int b = 0; b < blocks; ++b) rows += block_sum[std::size_t(b)];
  rows /= double(R);
  return make_trajectory(spec, origin, record, rows);
}

ReductionCheck verify_master_equation_reduction(const WalkSpec& spec, int horizon) {
  spec.validate();
  if (horizon < 4)
    throw std::invalid_argument("verify_master_equation_reduction: horizon must be >= 4");
  const int L = spec.sites();
  const double max_theta = (std::numbers::pi / 2.0 - spec.beta.array()).maxCoeff();
  if (max_theta > 0.25)
    throw std::invalid_argument(
        "verify_master_equation_reduction: angles too far from pi/2 (max deviation > 0.25)");

  std::vector<int> record(static_cast<std::size_t>(horizon));
  std::iota(record.begin(), record.end(), 1);
  const int origin = L / 2;
  const WalkTrajectory walk = run_incoherent_walk(spec, origin, record);

  HoppingProfile profile;
  profile.hopping.resize(L);
  profile.onsite = Eigen::VectorXd::Zero(L);
  for (int n = 0; n < L; ++n) profile.hopping[n] = 0.5 * std::cos(spec.beta[(n + 1) % L]);
  const Eigen::MatrixXd W = build_markov(profile, 1.0, Boundary::Periodic);
  Eigen::VectorXd P0 = Eigen::VectorXd::Zero(L);
  P0[origin] = 1.0;
  Eigen::VectorXd times(horizon);
  for (int m = 0; m < horizon; ++m) times[m] = double(m + 1);
  const Trajectory markov = evolve_markov(W, P0, times, Boundary::Periodic, origin);

  ReductionCheck check;
  check.steps.resize(horizon);
  for (int m = 0; m < horizon; ++m) check.steps[m] = m + 1;
  check.walk_sigma2 = walk.second_moment;
  check.markov_sigma2 = markov.second_moment;
  check.final_ratio = check.walk_sigma2[horizon - 1] / check.markov_sigma2[horizon - 1];
  for (int m = horizon / 2; m < horizon; ++m) {
    const double gap =
        std::abs(check.walk_sigma2[m] - check.markov_sigma2[m]) / check.markov_sigma2[m];
    check.max_tail_deviation = std::max(check.max_tail_deviation, gap);
  }
  return check;
}

}  // namespace qcme
