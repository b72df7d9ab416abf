#include "qcme/harness.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <stdexcept>
#include <utility>

namespace qcme {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Json vector_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Eigen::VectorXd vector_from_json(const Json& j) {
  Eigen::VectorXd out(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) out[Eigen::Index(i)] = j[i].get<double>();
  return out;
}

// Short fingerprint of the sweep parameters, embedded in cache labels so a
// changed configuration never reuses stale points.
std::string cache_token(const Json& params) {
  char buffer[24];
  std::snprintf(buffer, sizeof buffer, "%016zx", std::hash<std::string>{}(params.dump()));
  return buffer;
}

void require_kappas(const std::vector<double>& kappas, const char* who) {
  if (kappas.empty()) throw std::invalid_argument(std::string(who) + ": kappa grid is empty");
  for (const double kappa : kappas)
    if (!(kappa > 0.0 && kappa <= 1.0))
      throw std::invalid_argument(std::string(who) + ": every kappa must lie in (0, 1]");
}

LatticeSpec with_kappa(const LatticeSpec& base, double kappa) {
  LatticeSpec spec = base;
  spec.B = kappa * spec.A;
  spec.validate();
  return spec;
}

FibonacciApproximant approximant_for_size(int size) {
  for (int l = 2;; ++l) {
    const FibonacciApproximant alpha = fibonacci_approximant(l);
    if (alpha.denominator == size) return alpha;
    if (alpha.denominator > size)
      throw std::invalid_argument("lattice size " + std::to_string(size) +
                                  " is not a Fibonacci denominator");
  }
}

std::optional<double> first_crossing(const std::vector<SweepRow>& rows) {
  for (const SweepRow& row : rows)
    if (row.ok && row.ipr_max > kLocalizedIpr) return row.kappa;
  return std::nullopt;
}

}  // namespace

Json lattice_json(const LatticeSpec& spec) {
  Json j;
  j["model"] = to_string(spec.model);
  if (spec.model == Model::DiagonalGAA) j["J"] = spec.J;
  j["A"] = spec.A;
  j["B"] = spec.B;
  j["theta"] = spec.theta;
  j["alpha_index"] = spec.alpha.index;
  j["alpha_numerator"] = spec.alpha.numerator;
  j["alpha_denominator"] = spec.alpha.denominator;
  j["L"] = spec.L;
  j["boundary"] = to_string(spec.boundary);
  return j;
}

Json fit_json(const LineFit& fit) {
  return Json{{"slope", fit.slope},
              {"intercept", fit.intercept},
              {"slope_stderr", fit.slope_stderr},
              {"points", fit.n}};
}

Json edge_json(const MobilityEdgeReport& report) {
  Json j;
  j["edge"] = report.edge ? Json(*report.edge) : Json(nullptr);
  j["localized_side"] = report.localized_side;
  j["ipr_min"] = report.ipr_min;
  j["ipr_max"] = report.ipr_max;
  j["localized"] = report.localized;
  j["extended"] = report.extended;
  j["critical"] = report.critical;
  j["clean"] = report.clean;
  if (!report.clean) j["offending_interval"] = {report.offending_lo, report.offending_hi};
  if (!report.note.empty()) j["note"] = report.note;
  return j;
}

Json beta_json(const BetaFit& fit) {
  Json j;
  j["beta"] = fit.fit.slope;
  j["stderr"] = fit.fit.slope_stderr;
  j["anchor"] = fit.anchor;
  j["classification"] = classify_beta(fit.fit.slope);
  j["sizes"] = fit.sizes;
  j["eigenvalues"] = fit.tracked_eigenvalues;
  j["ipr"] = fit.tracked_ipr;
  return j;
}

void write_json(const std::filesystem::path& path, const Json& value) {
  atomic_write(path, value.dump(2) + "\n");
}

std::vector<double> linear_grid(double lo, double hi, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("linear_grid: step must be positive");
  if (!(hi >= lo)) throw std::invalid_argument("linear_grid: empty range");
  std::vector<double> out;
  for (int i = 0;; ++i) {
    double v = lo + i * step;
    if (v > hi + 1e-12) break;
    out.push_back(std::round(v * 1e12) / 1e12);
  }
  return out;
}

Eigen::MatrixXd trajectory_rows(const Trajectory& trajectory) {
  const auto T = trajectory.times.size();
  const auto L = trajectory.distributions.cols();
  Eigen::MatrixXd rows(T, 2 + L);
  rows.col(0) = trajectory.times;
  rows.col(1) = trajectory.second_moment;
  rows.rightCols(L) = trajectory.distributions;
  return rows;
}

Eigen::MatrixXd trajectory_rows(const WalkTrajectory& trajectory) {
  const auto T = trajectory.steps.size();
  const auto L = trajectory.distributions.cols();
  Eigen::MatrixXd rows(T, 2 + L);
  rows.col(0) = trajectory.steps.cast<double>();
  rows.col(1) = trajectory.second_moment;
  rows.rightCols(L) = trajectory.distributions;
  return rows;
}

std::vector<std::string> trajectory_header(const std::string& time_label,
                                           const std::string& site_prefix, Eigen::Index sites) {
  std::vector<std::string> header{time_label, "sigma2"};
  for (Eigen::Index n = 0; n < sites; ++n) header.push_back(site_prefix + std::to_string(n));
  return header;
}

PointCache::PointCache(const std::filesystem::path& dir) : dir_(dir) {
  std::filesystem::create_directories(dir_);
}

std::optional<Json> PointCache::load(const std::string& label) const {
  std::ifstream in(dir_ / (label + ".json"));
  if (!in) return std::nullopt;
  try {
    return Json::parse(in);
  } catch (const std::exception&) {
    return std::nullopt;  // partial or corrupted point: recompute
  }
}

void PointCache::store(const std::string& label, const Json& value) const {
  atomic_write(dir_ / (label + ".json"), value.dump(2) + "\n");
}

Eigen::MatrixXd SweepTable::csv(std::optional<double> gamma) const {
  const Eigen::Index cols = gamma ? 4 : 3;
  Eigen::MatrixXd out(Eigen::Index(rows.size()), cols);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const SweepRow& row = rows[std::size_t(i)];
    Eigen::Index c = 0;
    if (gamma) out(i, c++) = *gamma;
    out(i, c++) = row.kappa;
    out(i, c++) = row.ok ? row.ipr_min : kNaN;
    out(i, c++) = row.ok ? row.ipr_max : kNaN;
  }
  return out;
}

Json SweepTable::json() const {
  Json j;
  j["kappa_c"] = kappa_c ? Json(*kappa_c) : Json(nullptr);
  j["rows"] = Json::array();
  for (const SweepRow& row : rows) {
    Json r{{"kappa", row.kappa}, {"ok", row.ok}};
    if (row.ok) {
      r["ipr_min"] = row.ipr_min;
      r["ipr_max"] = row.ipr_max;
    } else {
      r["error"] = row.error;
    }
    j["rows"].push_back(std::move(r));
  }
  return j;
}

SweepTable run_kappa_sweep(const LatticeSpec& base, double gamma,
                           const std::vector<double>& kappas, const PointCache* cache) {
  if (base.model != Model::OffDiagonalAA)
    throw std::invalid_argument("run_kappa_sweep: the off-diagonal model is required");
  if (!(gamma > 0.0)) throw std::invalid_argument("run_kappa_sweep: gamma must be positive");
  require_kappas(kappas, "run_kappa_sweep");
  std::string token;
  if (cache) {
    Json params = lattice_json(base);
    params.erase("B");
    params["gamma"] = gamma;
    params["sweep"] = "markov";
    token = cache_token(params);
  }
  SweepTable table;
  for (const double kappa : kappas) {
    SweepRow row;
    row.kappa = kappa;
    const std::string label = "markov_" + token + "_k" + format_double(kappa);
    if (cache) {
      if (const auto hit = cache->load(label)) {
        row.ipr_min = (*hit)["ipr_min"].get<double>();
        row.ipr_max = (*hit)["ipr_max"].get<double>();
        row.ok = true;
        table.rows.push_back(std::move(row));
        continue;
      }
    }
    try {
      const LatticeSpec spec = with_kappa(base, kappa);
      const Eigen::MatrixXd W = build_markov(build_profile(spec), gamma, spec.boundary);
      const SpectralResult eig = eigendecompose_symmetric(W);
      const Eigen::VectorXd ipr = ipr2_columns(eig.eigenvectors);
      row.ipr_min = ipr.minCoeff();
      row.ipr_max = ipr.maxCoeff();
      row.ok = true;
      if (cache)
        cache->store(label, Json{{"kappa", kappa},
                                 {"ipr_min", row.ipr_min},
                                 {"ipr_max", row.ipr_max}});
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    table.rows.push_back(std::move(row));
  }
  table.kappa_c = first_crossing(table.rows);
  return table;
}

SweepTable run_walk_kappa_sweep(const LatticeSpec& base, const std::vector<double>& kappas,
                                const PointCache* cache) {
  if (base.model != Model::OffDiagonalAA)
    throw std::invalid_argument("run_walk_kappa_sweep: the off-diagonal model is required");
  require_kappas(kappas, "run_walk_kappa_sweep");
  std::string token;
  if (cache) {
    Json params = lattice_json(base);
    params.erase("B");
    params["sweep"] = "walk";
    token = cache_token(params);
  }
  SweepTable table;
  for (const double kappa : kappas) {
    SweepRow row;
    row.kappa = kappa;
    const std::string label = "walk_" + token + "_k" + format_double(kappa);
    if (cache) {
      if (const auto hit = cache->load(label)) {
        row.ipr_min = (*hit)["ipr_min"].get<double>();
        row.ipr_max = (*hit)["ipr_max"].get<double>();
        row.ok = true;
        table.rows.push_back(std::move(row));
        continue;
      }
    }
    try {
      const LatticeSpec spec = with_kappa(base, kappa);
      WalkSpec walk;
      walk.beta = coupling_angles(spec.A, spec.B, spec.alpha, spec.L, spec.theta);
      const PropagatorSpectrum spectrum =
          eigendecompose_propagator(build_incoherent_propagator(walk));
      row.ipr_min = spectrum.site_ipr.minCoeff();
      row.ipr_max = spectrum.site_ipr.maxCoeff();
      row.ok = true;
      if (cache)
        cache->store(label, Json{{"kappa", kappa},
                                 {"ipr_min", row.ipr_min},
                                 {"ipr_max", row.ipr_max}});
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    table.rows.push_back(std::move(row));
  }
  table.kappa_c = first_crossing(table.rows);
  return table;
}

Eigen::MatrixXd LiouvillianSweepTable::csv() const {
  Eigen::MatrixXd out(Eigen::Index(rows.size()), 4);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const LiouvillianSweepRow& row = rows[std::size_t(i)];
    out(i, 0) = row.gamma;
    out(i, 1) = row.kappa;
    out(i, 2) = row.ok ? row.ipr_min : kNaN;
    out(i, 3) = row.ok ? row.ipr_max : kNaN;
  }
  return out;
}

Json LiouvillianSweepTable::json() const {
  Json j;
  j["kappa_c"] = Json::array();
  for (const auto& [gamma, crossing] : kappa_c)
    j["kappa_c"].push_back(
        Json{{"gamma", gamma}, {"kappa_c", crossing ? Json(*crossing) : Json(nullptr)}});
  j["rows"] = Json::array();
  for (const LiouvillianSweepRow& row : rows) {
    Json r{{"gamma", row.gamma}, {"kappa", row.kappa}, {"ok", row.ok}};
    if (row.ok) {
      r["ipr_min"] = row.ipr_min;
      r["ipr_max"] = row.ipr_max;
      r["modes"] = row.mode_count;
    } else {
      r["error"] = row.error;
    }
    j["rows"].push_back(std::move(r));
  }
  return j;
}

LiouvillianSweepTable run_liouvillian_sweep(const LatticeSpec& base,
                                            const std::vector<double>& gammas,
                                            const std::vector<double>& kappas,
                                            const PointCache* cache) {
  if (base.model != Model::OffDiagonalAA)
    throw std::invalid_argument("run_liouvillian_sweep: the off-diagonal model is required");
  if (gammas.empty()) throw std::invalid_argument("run_liouvillian_sweep: gamma list is empty");
  for (const double gamma : gammas)
    if (!(gamma > 0.0))
      throw std::invalid_argument("run_liouvillian_sweep: every gamma must be positive");
  require_kappas(kappas, "run_liouvillian_sweep");
  std::string token;
  if (cache) {
    Json params = lattice_json(base);
    params.erase("B");
    params["sweep"] = "liouvillian";
    token = cache_token(params);
  }
  LiouvillianSweepTable table;
  for (const double gamma : gammas) {
    std::vector<SweepRow> for_crossing;
    for (const double kappa : kappas) {
      LiouvillianSweepRow row;
      row.gamma = gamma;
      row.kappa = kappa;
      const std::string label =
          "liouville_" + token + "_g" + format_double(gamma) + "_k" + format_double(kappa);
      bool loaded = false;
      if (cache) {
        if (const auto hit = cache->load(label)) {
          row.ipr_min = (*hit)["ipr_min"].get<double>();
          row.ipr_max = (*hit)["ipr_max"].get<double>();
          row.mode_count = (*hit)["modes"].get<int>();
          row.ok = true;
          loaded = true;
        }
      }
      if (!loaded) {
        try {
          const LatticeSpec spec = with_kappa(base, kappa);
          const Eigen::MatrixXd H = build_hamiltonian(build_profile(spec), spec.boundary);
          const LiouvillianSpectrum spectrum = eigendecompose_liouvillian(H, gamma);
          const SlowBranchSummary slow = slow_branch_populations(spectrum, gamma);
          if (slow.mode_count == 0)
            throw std::runtime_error("no slow-branch mode carries population weight");
          row.ipr_min = slow.ipr_min;
          row.ipr_max = slow.ipr_max;
          row.mode_count = slow.mode_count;
          row.ok = true;
          if (cache)
            cache->store(label, Json{{"gamma", gamma},
                                     {"kappa", kappa},
                                     {"ipr_min", row.ipr_min},
                                     {"ipr_max", row.ipr_max},
                                     {"modes", row.mode_count}});
        } catch (const std::exception& e) {
          row.error = e.what();
        }
      }
      for_crossing.push_back({row.kappa, row.ipr_min, row.ipr_max, row.ok, row.error});
      table.rows.push_back(std::move(row));
    }
    table.kappa_c.emplace_back(gamma, first_crossing(for_crossing));
  }
  return table;
}

void ScalingSpec::validate() const {
  if (!(A > 0.0)) throw std::invalid_argument("ScalingSpec: A must be positive");
  if (!(kappa > 0.0 && kappa <= 1.0))
    throw std::invalid_argument("ScalingSpec: kappa must lie in (0, 1]");
  if (!(gamma > 0.0)) throw std::invalid_argument("ScalingSpec: gamma must be positive");
  if (!(q > 0.0)) throw std::invalid_argument("ScalingSpec: q must be positive");
  if (sizes.size() < 4)
    throw std::invalid_argument("ScalingSpec: at least 4 lattice sizes required");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    approximant_for_size(sizes[i]);  // throws for non-Fibonacci sizes
    if (i > 0 && sizes[i] <= sizes[i - 1])
      throw std::invalid_argument("ScalingSpec: sizes must be strictly increasing");
  }
  if (targets.empty()) throw std::invalid_argument("ScalingSpec: no tracking targets");
  if (!(window_spacings > 0.0))
    throw std::invalid_argument("ScalingSpec: tracking window must be positive");
}

ScalingCampaign run_scaling_campaign(const ScalingSpec& spec, const PointCache* cache) {
  spec.validate();
  std::string token;
  if (cache) {
    const Json params{{"sweep", "scaling"}, {"A", spec.A},     {"kappa", spec.kappa},
                      {"gamma", spec.gamma}, {"theta", spec.theta}, {"q", spec.q}};
    token = cache_token(params);
  }
  ScalingCampaign campaign;
  campaign.spec = spec;
  for (const int size : spec.sizes) {
    const std::string label = "scaling_" + token + "_L" + std::to_string(size);
    if (cache) {
      if (const auto hit = cache->load(label)) {
        SizePoint point;
        point.L = size;
        point.eigenvalues = vector_from_json((*hit)["eigenvalues"]);
        point.ipr = vector_from_json((*hit)["ipr"]);
        campaign.family.push_back(std::move(point));
        continue;
      }
    }
    LatticeSpec lattice;
    lattice.model = Model::OffDiagonalAA;
    lattice.A = spec.A;
    lattice.B = spec.kappa * spec.A;
    lattice.theta = spec.theta;
    lattice.alpha = approximant_for_size(size);
    lattice.L = size;
    lattice.boundary = Boundary::Open;
    lattice.validate();
    const Eigen::MatrixXd W = build_markov(build_profile(lattice), spec.gamma, lattice.boundary);
    const SpectralResult eig = eigendecompose_symmetric(W);
    SizePoint point;
    point.L = size;
    point.eigenvalues = eig.eigenvalues;
    if (spec.q == 2.0) {
      point.ipr = ipr2_columns(eig.eigenvectors);
    } else {
      point.ipr.resize(eig.eigenvalues.size());
      for (Eigen::Index c = 0; c < eig.eigenvalues.size(); ++c)
        point.ipr[c] = ipr(eig.eigenvectors.col(c), spec.q);
    }
    if (cache)
      cache->store(label, Json{{"L", size},
                               {"eigenvalues", vector_json(point.eigenvalues)},
                               {"ipr", vector_json(point.ipr)}});
    campaign.family.push_back(std::move(point));
  }
  for (const double target : spec.targets)
    campaign.fits.push_back(beta_exponent(campaign.family, target, spec.window_spacings));
  return campaign;
}

// ----------------------------------------------------------------------------
// Figure presets

namespace {

struct FigureContext {
  std::filesystem::path out;
  PointCache cache;
  Json manifest;
  std::vector<std::string> artifacts;

  explicit FigureContext(const std::filesystem::path& dir) : out(dir), cache(dir / "points") {}

  void add_csv(const std::string& name, const std::vector<std::string>& header,
               const Eigen::Ref<const Eigen::MatrixXd>& rows) {
    write_csv(out / name, header, rows);
    artifacts.push_back(name);
  }
};

LatticeSpec figure_lattice(Config& config, Model model, double J, double A, double B,
                           int default_L, Boundary boundary) {
  LatticeSpec spec;
  spec.model = model;
  spec.J = J;
  spec.A = A;
  spec.B = B;
  spec.theta = config.get_double("theta", 0.0);
  spec.L = config.get_int("L", default_L);
  spec.alpha = approximant_for_size(spec.L);
  spec.boundary = boundary;
  spec.validate();
  return spec;
}

Eigen::VectorXd time_grid(double lo, double hi, double step) {
  const std::vector<double> values = linear_grid(lo, hi, step);
  return Eigen::Map<const Eigen::VectorXd>(values.data(), Eigen::Index(values.size()));
}

void hamiltonian_modes_figure(FigureContext& ctx, const LatticeSpec& spec,
                              const std::string& stem) {
  const Eigen::MatrixXd H = build_hamiltonian(build_profile(spec), spec.boundary);
  const SpectralResult eig = eigendecompose_symmetric(H);
  const Eigen::VectorXd ipr = ipr2_columns(eig.eigenvectors);
  Eigen::MatrixXd rows(eig.eigenvalues.size(), 2);
  rows.col(0) = eig.eigenvalues;
  rows.col(1) = ipr;
  ctx.add_csv(stem + "_modes.csv", {"eigenvalue", "ipr"}, rows);
  ctx.manifest["lattice"] = lattice_json(spec);
  ctx.manifest["edge"] = edge_json(detect_mobility_edge(eig.eigenvalues, ipr));
}

void coherent_spreading_figure(FigureContext& ctx, const LatticeSpec& spec,
                               const std::string& stem) {
  const Eigen::MatrixXd H = build_hamiltonian(build_profile(spec), spec.boundary);
  const int origin = center_site(spec.L);
  Eigen::VectorXcd psi0 = Eigen::VectorXcd::Zero(spec.L);
  psi0[origin] = 1.0;
  const Eigen::VectorXd times = time_grid(0.0, 80.0, 2.0);
  const Trajectory traj = evolve_coherent(H, psi0, times, spec.boundary, origin);
  ctx.add_csv(stem + "_trajectory.csv", trajectory_header("t", "p_", spec.L),
              trajectory_rows(traj));
  ctx.manifest["lattice"] = lattice_json(spec);
  ctx.manifest["origin"] = origin;
  ctx.manifest["spreading_fit"] = fit_json(fit_spreading_exponent(traj, 8.0, 80.0));
}

void fig1a(FigureContext& ctx, Config& config, std::uint64_t, int) {
  hamiltonian_modes_figure(
      ctx, figure_lattice(config, Model::DiagonalGAA, 1.0, 0.6, 0.4, 987, Boundary::Periodic),
      "fig1a");
}

void fig1b(FigureContext& ctx, Config& config, std::uint64_t, int) {
  coherent_spreading_figure(
      ctx, figure_lattice(config, Model::DiagonalGAA, 1.0, 0.6, 0.4, 987, Boundary::Periodic),
      "fig1b");
}

void fig1c(FigureContext& ctx, Config& config, std::uint64_t, int) {
  hamiltonian_modes_figure(
      ctx, figure_lattice(config, Model::OffDiagonalAA, 1.0, 1.0, 0.9, 987, Boundary::Periodic),
      "fig1c");
}

void fig1d(FigureContext& ctx, Config& config, std::uint64_t, int) {
  coherent_spreading_figure(
      ctx, figure_lattice(config, Model::OffDiagonalAA, 1.0, 1.0, 0.9, 987, Boundary::Periodic),
      "fig1d");
}

void fig2(FigureContext& ctx, Config& config, std::uint64_t, int) {
  const LatticeSpec spec =
      figure_lattice(config, Model::DiagonalGAA, 1.0, 0.6, 0.4, 987, Boundary::Periodic);
  const double gamma = config.get_double("gamma", 100.0);
  const Eigen::MatrixXd W = build_markov(build_profile(spec), gamma, spec.boundary);
  const SpectralResult eig = eigendecompose_symmetric(W);
  const Eigen::VectorXd ipr = ipr2_columns(eig.eigenvectors);
  Eigen::MatrixXd modes(eig.eigenvalues.size(), 2);
  modes.col(0) = eig.eigenvalues;
  modes.col(1) = ipr;
  ctx.add_csv("fig2a_modes.csv", {"eigenvalue", "ipr"}, modes);

  const int origin = center_site(spec.L);
  Eigen::VectorXd P0 = Eigen::VectorXd::Zero(spec.L);
  P0[origin] = 1.0;
  const Eigen::VectorXd times = time_grid(0.0, 2000.0, 20.0);
  const Trajectory traj = evolve_markov(W, P0, times, spec.boundary, origin);
  ctx.add_csv("fig2bc_trajectory.csv", trajectory_header("t", "p_", spec.L),
              trajectory_rows(traj));
  const DiffusionFit fit = fit_diffusion(traj, 50.0, 2000.0);
  ctx.manifest["lattice"] = lattice_json(spec);
  ctx.manifest["gamma"] = gamma;
  ctx.manifest["origin"] = origin;
  ctx.manifest["diffusion"] = Json{{"D", fit.D},
                                   {"D_stderr", fit.D_stderr},
                                   {"expected", 2.0 * spec.J * spec.J / gamma}};
}

void fig3a(FigureContext& ctx, Config& config, std::uint64_t, int) {
  const LatticeSpec base =
      figure_lattice(config, Model::OffDiagonalAA, 1.0, 1.0, 0.0, 987, Boundary::Periodic);
  const double gamma = config.get_double("gamma", 100.0);
  const std::vector<double> kappas =
      linear_grid(config.get_double("kappa_min", 0.05), config.get_double("kappa_max", 1.0),
                  config.get_double("kappa_step", 0.05));
  const SweepTable table = run_kappa_sweep(base, gamma, kappas, &ctx.cache);
  ctx.add_csv("fig3a_sweep.csv", {"gamma", "kappa", "ipr_min", "ipr_max"}, table.csv(gamma));
  ctx.manifest["lattice"] = lattice_json(base);
  ctx.manifest["gamma"] = gamma;
  ctx.manifest["sweep"] = table.json();
}

void fig3b(FigureContext& ctx, Config& config, std::uint64_t, int) {
  const LatticeSpec base =
      figure_lattice(config, Model::OffDiagonalAA, 1.0, 1.0, 0.0, 987, Boundary::Periodic);
  const double gamma = config.get_double("gamma", 100.0);
  const std::vector<double> kappas = config.get_list("kappa_list", {0.5, 0.7, 0.9});
  ctx.manifest["lattice"] = lattice_json(base);
  ctx.manifest["gamma"] = gamma;
  ctx.manifest["edges"] = Json::object();
  for (const double kappa : kappas) {
    const LatticeSpec spec = with_kappa(base, kappa);
    const Eigen::MatrixXd W = build_markov(build_profile(spec), gamma, spec.boundary);
    const SpectralResult eig = eigendecompose_symmetric(W);
    const Eigen::VectorXd ipr = ipr2_columns(eig.eigenvectors);
    Eigen::MatrixXd rows(eig.eigenvalues.size(), 2);
    rows.col(0) = eig.eigenvalues;
    rows.col(1) = ipr;
    ctx.add_csv("fig3b_kappa_" + format_double(kappa) + ".csv", {"eigenvalue", "ipr"}, rows);
    ctx.manifest["edges"][format_double(kappa)] =
        edge_json(detect_mobility_edge(eig.eigenvalues, ipr));
  }
}

void fig3cd(FigureContext& ctx, Config& config, std::uint64_t, int) {
  const LatticeSpec base =
      figure_lattice(config, Model::OffDiagonalAA, 1.0, 1.0, 0.0, 987, Boundary::Periodic);
  const double gamma = config.get_double("gamma", 100.0);
  const LatticeSpec spec = with_kappa(base, config.get_double("kappa", 0.5));
  const Eigen::MatrixXd W = build_markov(build_profile(spec), gamma, spec.boundary);
  const int origin = center_site(spec.L);
  Eigen::VectorXd P0 = Eigen::VectorXd::Zero(spec.L);
  P0[origin] = 1.0;
  const Eigen::VectorXd times = time_grid(0.0, 2000.0, 20.0);
  const Trajectory traj = evolve_markov(W, P0, times, spec.boundary, origin);
  ctx.add_csv("fig3cd_trajectory.csv", trajectory_header("t", "p_", spec.L),
              trajectory_rows(traj));
  ctx.manifest["lattice"] = lattice_json(spec);
  ctx.manifest["gamma"] = gamma;
  ctx.manifest["origin"] = origin;
  ctx.manifest["diffusion"] = fit_json(fit_diffusion(traj, 200.0, 2000.0).line);
}

void fig4a(FigureContext& ctx, Config& config, std::uint64_t, int) {
  const LatticeSpec base =
      figure_lattice(config, Model::OffDiagonalAA, 1.0, 0.1, 0.0, 377, Boundary::Periodic);
  const std::vector<double> kappas =
      linear_grid(config.get_double("kappa_min", 0.05), config.get_double("kappa_max", 1.0),
                  config.get_double("kappa_step", 0.05));
  const SweepTable table = run_walk_kappa_sweep(base, kappas, &ctx.cache);
  ctx.add_csv("fig4a_sweep.csv", {"kappa", "ipr_min", "ipr_max"}, table.csv());
  ctx.manifest["lattice"] = lattice_json(base);
  ctx.manifest["sweep"] = table.json();
}

void fig4b(FigureContext& ctx, Config& config, std::uint64_t, int) {
  const LatticeSpec base =
      figure_lattice(config, Model::OffDiagonalAA, 1.0, 0.1, 0.0, 377, Boundary::Periodic);
  const std::vector<double> kappas = config.get_list("kappa_list", {0.5, 0.7, 0.95});
  ctx.manifest["lattice"] = lattice_json(base);
  for (const double kappa : kappas) {
    const LatticeSpec spec = with_kappa(base, kappa);
    WalkSpec walk;
    walk.beta = coupling_angles(spec.A, spec.B, spec.alpha, spec.L, spec.theta);
    const PropagatorSpectrum spectrum =
        eigendecompose_propagator(build_incoherent_propagator(walk));
    Eigen::MatrixXd rows(spectrum.eigenvalues.size(), 3);
    for (Eigen::Index j = 0; j < spectrum.eigenvalues.size(); ++j) {
      rows(j, 0) = std::abs(spectrum.eigenvalues[j]);
      rows(j, 1) = std::arg(spectrum.eigenvalues[j]);
      rows(j, 2) = spectrum.site_ipr[j];
    }
    ctx.add_csv("fig4b_kappa_" + format_double(kappa) + ".csv", {"mu_abs", "mu_arg", "ipr"},
                rows);
  }
}

void fig4cd(FigureContext& ctx, Config& config, std::uint64_t, int) {
  const LatticeSpec base =
      figure_lattice(config, Model::OffDiagonalAA, 1.0, 0.1, 0.0, 377, Boundary::Periodic);
  const std::vector<double> kappas = config.get_list("kappa_list", {0.5, 0.95});
  std::vector<int> record;
  for (int m = 0; m <= 400; m += 8) record.push_back(m);
  const int origin = center_site(base.L);
  ctx.manifest["lattice"] = lattice_json(base);
  ctx.manifest["origin"] = origin;
  ctx.manifest["sigma2_final"] = Json::object();
  for (const double kappa : kappas) {
    const LatticeSpec spec = with_kappa(base, kappa);
    WalkSpec walk;
    walk.beta = coupling_angles(spec.A, spec.B, spec.alpha, spec.L, spec.theta);
    const WalkTrajectory traj = run_incoherent_walk(walk, origin, record);
    ctx.add_csv("fig4cd_kappa_" + format_double(kappa) + ".csv",
                trajectory_header("m", "P_", spec.L), trajectory_rows(traj));
    ctx.manifest["sigma2_final"][format_double(kappa)] =
        traj.second_moment[traj.second_moment.size() - 1];
  }
}

void figS1(FigureContext& ctx, Config& config, std::uint64_t, int) {
  const LatticeSpec base =
      figure_lattice(config, Model::OffDiagonalAA, 1.0, 1.0, 0.0, 987, Boundary::Open);
  const double gamma = config.get_double("gamma", 100.0);
  const std::vector<double> kappas =
      linear_grid(config.get_double("kappa_min", 0.1), config.get_double("kappa_max", 1.0),
                  config.get_double("kappa_step", 0.1));
  Json params = lattice_json(base);
  params.erase("B");
  params["gamma"] = gamma;
  params["sweep"] = "bands";
  const std::string token = cache_token(params);
  std::vector<Eigen::MatrixXd> blocks;
  Eigen::Index total = 0;
  for (const double kappa : kappas) {
    const std::string label = "bands_" + token + "_k" + format_double(kappa);
    Eigen::VectorXd eigenvalues, ipr;
    if (const auto hit = ctx.cache.load(label)) {
      eigenvalues = vector_from_json((*hit)["eigenvalues"]);
      ipr = vector_from_json((*hit)["ipr"]);
    } else {
      const LatticeSpec spec = with_kappa(base, kappa);
      const Eigen::MatrixXd W = build_markov(build_profile(spec), gamma, spec.boundary);
      const SpectralResult eig = eigendecompose_symmetric(W);
      eigenvalues = eig.eigenvalues;
      ipr = ipr2_columns(eig.eigenvectors);
      ctx.cache.store(label, Json{{"kappa", kappa},
                                  {"eigenvalues", vector_json(eigenvalues)},
                                  {"ipr", vector_json(ipr)}});
    }
    Eigen::MatrixXd block(eigenvalues.size(), 3);
    block.col(0).setConstant(kappa);
    block.col(1) = eigenvalues;
    block.col(2) = ipr;
    total += block.rows();
    blocks.push_back(std::move(block));
  }
  Eigen::MatrixXd rows(total, 3);
  Eigen::Index at = 0;
  for (const Eigen::MatrixXd& block : blocks) {
    rows.middleRows(at, block.rows()) = block;
    at += block.rows();
  }
  ctx.add_csv("figS1_bands.csv", {"kappa", "eigenvalue", "ipr"}, rows);
  ctx.manifest["lattice"] = lattice_json(base);
  ctx.manifest["gamma"] = gamma;
  ctx.manifest["kappas"] = kappas;
}

// Shared body of the two deep-dive panels: spectrum, localization length,
// mode profiles, spacing statistics, and finite-size scaling at one kappa.
void spectral_deep_dive(FigureContext& ctx, Config& config, const std::string& stem,
                        double default_kappa, const std::vector<double>& default_targets,
                        int default_ilsd_L) {
  const double A = config.get_double("A", 1.0);
  const double kappa = config.get_double("kappa", default_kappa);
  const double gamma = config.get_double("gamma", 100.0);
  const double theta = config.get_double("theta", 0.0);

  LatticeSpec spec;
  spec.model = Model::OffDiagonalAA;
  spec.A = A;
  spec.B = kappa * A;
  spec.theta = theta;
  spec.L = config.get_int("L", 2584);
  spec.alpha = approximant_for_size(spec.L);
  spec.boundary = Boundary::Open;
  spec.validate();
  ctx.manifest["lattice"] = lattice_json(spec);
  ctx.manifest["gamma"] = gamma;

  const Eigen::MatrixXd W = build_markov(build_profile(spec), gamma, spec.boundary);
  const SpectralResult eig = eigendecompose_symmetric(W);
  const Eigen::VectorXd ipr = ipr2_columns(eig.eigenvectors);
  const Eigen::VectorXd hoppings = W.diagonal(1);
  const Eigen::VectorXd lyapunov = lyapunov_all(eig.eigenvalues, hoppings);
  Eigen::MatrixXd rows(eig.eigenvalues.size(), 3);
  rows.col(0) = eig.eigenvalues;
  rows.col(1) = ipr;
  rows.col(2) = lyapunov;
  ctx.add_csv(stem + "_spectrum.csv", {"eigenvalue", "ipr", "lyapunov"}, rows);

  const auto bands = identify_bands(eig.eigenvalues);
  ctx.manifest["bands"] = Json::array();
  for (std::size_t b = 0; b < bands.size(); ++b) {
    const auto [lo, hi] = bands[b];
    const double mean_lyapunov =
        lyapunov.segment(lo, hi - lo + 1).mean();
    ctx.manifest["bands"].push_back(Json{{"region", int(b) + 1},
                                         {"eigenvalue_lo", eig.eigenvalues[lo]},
                                         {"eigenvalue_hi", eig.eigenvalues[hi]},
                                         {"levels", int(hi - lo + 1)},
                                         {"mean_lyapunov", mean_lyapunov}});
  }

  const std::vector<double> targets = config.get_list("targets", default_targets);
  Eigen::MatrixXd profiles(spec.L, Eigen::Index(targets.size()) + 1);
  std::vector<std::string> profile_header{"site"};
  for (Eigen::Index n = 0; n < spec.L; ++n) profiles(n, 0) = double(n);
  ctx.manifest["profiles"] = Json::array();
  for (std::size_t t = 0; t < targets.size(); ++t) {
    Eigen::Index nearest = 0;
    (eig.eigenvalues.array() - targets[t]).abs().minCoeff(&nearest);
    profiles.col(Eigen::Index(t) + 1) = eig.eigenvectors.col(nearest).cwiseAbs2();
    profile_header.push_back("p" + std::to_string(t + 1));
    ctx.manifest["profiles"].push_back(Json{{"target", targets[t]},
                                            {"eigenvalue", eig.eigenvalues[nearest]},
                                            {"ipr", ipr[nearest]},
                                            {"lyapunov", lyapunov[nearest]}});
  }
  ctx.add_csv(stem + "_profiles.csv", profile_header, profiles);

  // Spacing statistics per band, on the spectrum of the (possibly larger)
  // dedicated lattice.
  const int ilsd_L = config.get_int("ilsd_L", default_ilsd_L);
  Eigen::VectorXd ilsd_eigenvalues;
  if (ilsd_L == spec.L) {
    ilsd_eigenvalues = eig.eigenvalues;
  } else {
    LatticeSpec big = spec;
    big.L = ilsd_L;
    big.alpha = approximant_for_size(ilsd_L);
    big.validate();
    ilsd_eigenvalues =
        eigenvalues_symmetric(build_markov(build_profile(big), gamma, big.boundary));
  }
  const auto ilsd_bands = identify_bands(ilsd_eigenvalues);
  const std::vector<double> sgrid = [] {
    std::vector<double> out;
    for (int i = 0; i < 64; ++i)
      out.push_back(std::pow(10.0, -6.0 + 7.0 * double(i) / 63.0));
    return out;
  }();
  Eigen::MatrixXd ilsd_rows(Eigen::Index(3 * sgrid.size()), 3);
  ctx.manifest["ilsd"] = Json::array();
  ctx.manifest["ilsd_L"] = ilsd_L;
  Eigen::Index at = 0;
  for (std::size_t b = 0; b < ilsd_bands.size(); ++b) {
    const auto [lo, hi] = ilsd_bands[b];
    const LevelStatistics stats =
        level_statistics(ilsd_eigenvalues, ilsd_eigenvalues[lo], ilsd_eigenvalues[hi]);
    for (const double s : sgrid) {
      ilsd_rows(at, 0) = double(b + 1);
      ilsd_rows(at, 1) = s;
      ilsd_rows(at, 2) = stats.ilsd(s);
      ++at;
    }
    ctx.manifest["ilsd"].push_back(Json{{"region", int(b) + 1},
                                        {"levels", stats.count},
                                        {"s0", stats.s0},
                                        {"fit", fit_json(stats.fit)}});
  }
  ctx.add_csv(stem + "_ilsd.csv", {"region", "s", "ilsd"}, ilsd_rows);

  // Finite-size scaling of the tracked modes.
  ScalingSpec scaling;
  scaling.A = A;
  scaling.kappa = kappa;
  scaling.gamma = gamma;
  scaling.theta = theta;
  scaling.q = config.get_double("q", 2.0);
  const std::vector<double> size_list =
      config.get_list("sizes", {34, 55, 89, 144, 233, 377, 610, 987});
  for (const double size : size_list) scaling.sizes.push_back(int(std::lround(size)));
  scaling.targets = targets;
  const ScalingCampaign campaign = run_scaling_campaign(scaling, &ctx.cache);
  Eigen::MatrixXd scaling_rows(
      Eigen::Index(campaign.fits.size()) * Eigen::Index(scaling.sizes.size()), 4);
  at = 0;
  ctx.manifest["scaling"] = Json::array();
  for (const BetaFit& fit : campaign.fits) {
    for (std::size_t i = 0; i < fit.sizes.size(); ++i) {
      scaling_rows(at, 0) = fit.anchor;
      scaling_rows(at, 1) = double(fit.sizes[i]);
      scaling_rows(at, 2) = fit.tracked_eigenvalues[i];
      scaling_rows(at, 3) = fit.tracked_ipr[i];
      ++at;
    }
    ctx.manifest["scaling"].push_back(beta_json(fit));
  }
  ctx.add_csv(stem + "_scaling.csv", {"anchor", "L", "eigenvalue", "ipr"},
              scaling_rows.topRows(at));
}

void figS2(FigureContext& ctx, Config& config, std::uint64_t, int) {
  spectral_deep_dive(ctx, config, "figS2", 0.5, {-0.093, -0.0329, -0.004, -0.0002}, 2584);
}

void figS3(FigureContext& ctx, Config& config, std::uint64_t, int) {
  spectral_deep_dive(ctx, config, "figS3", 0.407,
                     {-0.09168, -0.09157, -0.09105, -0.0868, -0.08107}, 4181);
}

void figS4(FigureContext& ctx, Config& config, std::uint64_t, int) {
  LatticeSpec spec;
  spec.model = Model::OffDiagonalAA;
  spec.A = config.get_double("A", 1.0);
  spec.B = config.get_double("B", 0.7);
  spec.theta = config.get_double("theta", 0.0);
  spec.L = config.get_int("L", 55);
  spec.alpha = approximant_for_size(spec.L);
  spec.boundary = Boundary::Periodic;
  spec.validate();
  const double gamma = config.get_double("gamma", 1.0);
  const Eigen::MatrixXd H = build_hamiltonian(build_profile(spec), spec.boundary);
  const LiouvillianSpectrum spectrum = eigendecompose_liouvillian(H, gamma);
  Eigen::MatrixXd rows(spectrum.eigenvalues.size(), 3);
  for (Eigen::Index j = 0; j < spectrum.eigenvalues.size(); ++j) {
    rows(j, 0) = spectrum.eigenvalues[j].real();
    rows(j, 1) = spectrum.eigenvalues[j].imag();
    rows(j, 2) = spectrum.population_ipr[j];
  }
  ctx.add_csv("figS4_modes.csv", {"re", "im", "ipr"}, rows);
  const double uniform_dev =
      (spectrum.stationary - Eigen::MatrixXcd::Identity(spec.L, spec.L) / double(spec.L))
          .cwiseAbs()
          .maxCoeff();
  ctx.manifest["lattice"] = lattice_json(spec);
  ctx.manifest["gamma"] = gamma;
  ctx.manifest["operator_norm"] = spectrum.operator_norm;
  ctx.manifest["max_residual"] = spectrum.max_residual;
  ctx.manifest["stationary"] =
      Json{{"eigenvalue_re", spectrum.eigenvalues[spectrum.stationary_index].real()},
           {"eigenvalue_im", spectrum.eigenvalues[spectrum.stationary_index].imag()},
           {"max_deviation_from_uniform", uniform_dev}};
}

void figS5(FigureContext& ctx, Config& config, std::uint64_t, int) {
  LatticeSpec base;
  base.model = Model::OffDiagonalAA;
  base.A = config.get_double("A", 1.0);
  base.B = 0.0;
  base.theta = config.get_double("theta", 0.0);
  base.L = config.get_int("L", 55);
  base.alpha = approximant_for_size(base.L);
  base.boundary = Boundary::Periodic;
  base.validate();
  const std::vector<double> gammas = config.get_list("gamma_list", {0.1, 1.0, 100.0});
  const std::vector<double> kappas =
      linear_grid(config.get_double("kappa_min", 0.1), config.get_double("kappa_max", 1.0),
                  config.get_double("kappa_step", 0.1));
  const LiouvillianSweepTable table = run_liouvillian_sweep(base, gammas, kappas, &ctx.cache);
  ctx.add_csv("figS5_sweep.csv", {"gamma", "kappa", "ipr_min", "ipr_max"}, table.csv());
  ctx.manifest["lattice"] = lattice_json(base);
  ctx.manifest["sweep"] = table.json();
}

using FigureFn = void (*)(FigureContext&, Config&, std::uint64_t, int);

const std::vector<std::pair<std::string, FigureFn>>& figure_registry() {
  static const std::vector<std::pair<std::string, FigureFn>> registry{
      {"fig1a", fig1a},   {"fig1b", fig1b}, {"fig1c", fig1c},   {"fig1d", fig1d},
      {"fig2", fig2},     {"fig3a", fig3a}, {"fig3b", fig3b},   {"fig3cd", fig3cd},
      {"fig4a", fig4a},   {"fig4b", fig4b}, {"fig4cd", fig4cd}, {"figS1", figS1},
      {"figS2", figS2},   {"figS3", figS3}, {"figS4", figS4},   {"figS5", figS5}};
  return registry;
}

}  // namespace

const std::vector<std::string>& figure_ids() {
  static const std::vector<std::string> ids = [] {
    std::vector<std::string> out;
    for (const auto& [id, fn] : figure_registry()) out.push_back(id);
    return out;
  }();
  return ids;
}

FigureResult reproduce_figure(const std::string& id, const std::filesystem::path& out_dir,
                              Config& config, std::uint64_t seed, int threads) {
  FigureFn fn = nullptr;
  for (const auto& [name, candidate] : figure_registry())
    if (name == id) fn = candidate;
  if (!fn) {
    std::string valid;
    for (const std::string& name : figure_ids()) {
      if (!valid.empty()) valid += ", ";
      valid += name;
    }
    throw std::invalid_argument("unknown figure id '" + id + "'; valid ids: " + valid);
  }
  std::filesystem::create_directories(out_dir);
  FigureContext ctx(out_dir);
  ctx.manifest["figure"] = id;
  ctx.manifest["seed"] = seed;
  fn(ctx, config, seed, threads);
  ctx.manifest["artifacts"] = ctx.artifacts;
  ctx.manifest["complete"] = true;
  write_json(out_dir / "manifest.json", ctx.manifest);
  FigureResult result;
  result.id = id;
  result.artifacts = ctx.artifacts;
  result.artifacts.push_back("manifest.json");
  result.manifest = ctx.manifest;
  return result;
}

}  // namespace qcme
