#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "qcme/harness.hpp"

namespace fs = std::filesystem;
using qcme::Json;

namespace {

struct Options {
  std::string config_path;
  std::string out = "out";
  std::uint64_t seed = 1;
  int threads = 1;
  std::string figure_id;
};

qcme::Config load_config(const Options& opts) {
  if (opts.config_path.empty()) return qcme::Config();
  return qcme::Config::load(opts.config_path);
}

Json finish(const std::string& command, const fs::path& out, Json summary,
            std::vector<std::string> artifacts) {
  summary["artifacts"] = artifacts;
  qcme::write_json(out / "summary.json", summary);
  artifacts.push_back("summary.json");
  Json reply;
  reply["ok"] = true;
  reply["command"] = command;
  reply["out"] = out.string();
  reply["artifacts"] = artifacts;
  return reply;
}

Eigen::VectorXd delta_distribution(int L, int origin) {
  Eigen::VectorXd P0 = Eigen::VectorXd::Zero(L);
  P0[origin] = 1.0;
  return P0;
}

Json cmd_spectrum(const Options& opts, const fs::path& out) {
  qcme::Config config = load_config(opts);
  const qcme::LatticeSpec spec = qcme::lattice_from_config(config);
  config.require_all_used();
  const Eigen::MatrixXd H = qcme::build_hamiltonian(qcme::build_profile(spec), spec.boundary);
  const qcme::SpectralResult eig = qcme::eigendecompose_symmetric(H);
  const Eigen::VectorXd ipr = qcme::ipr2_columns(eig.eigenvectors);
  Eigen::MatrixXd rows(eig.eigenvalues.size(), 2);
  rows.col(0) = eig.eigenvalues;
  rows.col(1) = ipr;
  qcme::write_csv(out / "spectrum.csv", {"eigenvalue", "ipr"}, rows);
  Json summary;
  summary["lattice"] = qcme::lattice_json(spec);
  summary["edge"] = qcme::edge_json(qcme::detect_mobility_edge(eig.eigenvalues, ipr));
  if (spec.model == qcme::Model::DiagonalGAA) {
    const auto predicted = qcme::mobility_edge_energy(spec);
    summary["predicted_edge"] = predicted ? Json(*predicted) : Json(nullptr);
  }
  std::cerr << "spectrum: L=" << spec.L << ", " << eig.eigenvalues.size() << " modes\n";
  return finish("spectrum", out, std::move(summary), {"spectrum.csv"});
}

Json cmd_dynamics(const Options& opts, const fs::path& out) {
  qcme::Config config = load_config(opts);
  const qcme::LatticeSpec spec = qcme::lattice_from_config(config);
  const std::string regime = config.get_string("regime", "coherent");
  const int origin = config.get_int("origin", qcme::center_site(spec.L));
  Json summary;
  summary["lattice"] = qcme::lattice_json(spec);
  summary["regime"] = regime;
  summary["origin"] = origin;
  const Eigen::MatrixXd H = qcme::build_hamiltonian(qcme::build_profile(spec), spec.boundary);
  Eigen::VectorXcd psi0 = Eigen::VectorXcd::Zero(spec.L);
  psi0[origin] = 1.0;
  qcme::Trajectory traj;
  if (regime == "coherent") {
    const double t_max = config.get_double("t_max", 80.0);
    const double t_step = config.get_double("t_step", 2.0);
    const double fit_min = config.get_double("fit_min", t_max / 10.0);
    const double fit_max = config.get_double("fit_max", t_max);
    config.require_all_used();
    const std::vector<double> grid = qcme::linear_grid(0.0, t_max, t_step);
    const Eigen::VectorXd times =
        Eigen::Map<const Eigen::VectorXd>(grid.data(), Eigen::Index(grid.size()));
    traj = qcme::evolve_coherent(H, psi0, times, spec.boundary, origin);
    summary["spreading_fit"] =
        qcme::fit_json(qcme::fit_spreading_exponent(traj, fit_min, fit_max));
  } else if (regime == "stochastic") {
    qcme::StochasticEvolutionSpec stochastic;
    stochastic.dt = config.get_double("dt", 0.02);
    stochastic.realizations = config.get_int("realizations", 200);
    stochastic.seed = opts.seed;
    stochastic.phase_scale = config.get_double("phase_scale", 1.0);
    const double t_max = config.get_double("t_max", 1.0);
    const int record_every = config.get_int("record_every", 1);
    const double fit_min = config.get_double("fit_min", t_max / 10.0);
    const double fit_max = config.get_double("fit_max", t_max);
    config.require_all_used();
    if (record_every < 1) throw std::invalid_argument("record_every must be >= 1");
    const int steps = int(std::lround(t_max / stochastic.dt));
    std::vector<double> grid;
    for (int s = 0; s <= steps; s += record_every) grid.push_back(s * stochastic.dt);
    const Eigen::VectorXd times =
        Eigen::Map<const Eigen::VectorXd>(grid.data(), Eigen::Index(grid.size()));
    traj = qcme::evolve_phase_randomized(H, psi0, stochastic, times, spec.boundary, origin,
                                         opts.threads);
    summary["realizations"] = stochastic.realizations;
    summary["seed"] = opts.seed;
    summary["low_statistics_warning"] = traj.low_statistics_warning;
    summary["spreading_fit"] =
        qcme::fit_json(qcme::fit_spreading_exponent(traj, fit_min, fit_max));
  } else {
    throw std::invalid_argument("regime must be 'coherent' or 'stochastic', got '" + regime +
                                "'");
  }
  qcme::write_csv(out / "trajectory.csv", qcme::trajectory_header("t", "p_", spec.L),
                  qcme::trajectory_rows(traj));
  summary["sigma2_final"] = traj.second_moment[traj.second_moment.size() - 1];
  std::cerr << "dynamics: " << regime << ", " << traj.times.size() << " snapshots\n";
  return finish("dynamics", out, std::move(summary), {"trajectory.csv"});
}

Json cmd_markov(const Options& opts, const fs::path& out) {
  qcme::Config config = load_config(opts);
  const qcme::LatticeSpec spec = qcme::lattice_from_config(config);
  const double gamma = config.get_double("gamma", 100.0);
  const double t_max = config.get_double("t_max", 2000.0);
  const double t_step = config.get_double("t_step", 20.0);
  const double fit_min = config.get_double("fit_min", 0.025 * t_max);
  const double fit_max = config.get_double("fit_max", t_max);
  const int origin = config.get_int("origin", qcme::center_site(spec.L));
  config.require_all_used();
  const Eigen::MatrixXd W = qcme::build_markov(qcme::build_profile(spec), gamma, spec.boundary);
  const qcme::SpectralResult eig = qcme::eigendecompose_symmetric(W);
  const Eigen::VectorXd ipr = qcme::ipr2_columns(eig.eigenvectors);
  Eigen::MatrixXd modes(eig.eigenvalues.size(), 2);
  modes.col(0) = eig.eigenvalues;
  modes.col(1) = ipr;
  qcme::write_csv(out / "modes.csv", {"eigenvalue", "ipr"}, modes);
  const std::vector<double> grid = qcme::linear_grid(0.0, t_max, t_step);
  const Eigen::VectorXd times =
      Eigen::Map<const Eigen::VectorXd>(grid.data(), Eigen::Index(grid.size()));
  const qcme::Trajectory traj =
      qcme::evolve_markov(W, delta_distribution(spec.L, origin), times, spec.boundary, origin);
  qcme::write_csv(out / "trajectory.csv", qcme::trajectory_header("t", "p_", spec.L),
                  qcme::trajectory_rows(traj));
  const qcme::DiffusionFit fit = qcme::fit_diffusion(traj, fit_min, fit_max);
  Json summary;
  summary["lattice"] = qcme::lattice_json(spec);
  summary["gamma"] = gamma;
  summary["origin"] = origin;
  summary["ipr_min"] = ipr.minCoeff();
  summary["ipr_max"] = ipr.maxCoeff();
  summary["diffusion"] = Json{{"D", fit.D}, {"D_stderr", fit.D_stderr}, {"fit", qcme::fit_json(fit.line)}};
  std::cerr << "markov: gamma=" << gamma << ", D=" << fit.D << "\n";
  return finish("markov", out, std::move(summary), {"modes.csv", "trajectory.csv"});
}

Json cmd_liouvillian(const Options& opts, const fs::path& out) {
  qcme::Config config = load_config(opts);
  const qcme::LatticeSpec spec = qcme::lattice_from_config(config);
  const double gamma = config.get_double("gamma", 1.0);
  config.require_all_used();
  const Eigen::MatrixXd H = qcme::build_hamiltonian(qcme::build_profile(spec), spec.boundary);
  const qcme::LiouvillianSpectrum spectrum = qcme::eigendecompose_liouvillian(H, gamma);
  Eigen::MatrixXd rows(spectrum.eigenvalues.size(), 3);
  for (Eigen::Index j = 0; j < spectrum.eigenvalues.size(); ++j) {
    rows(j, 0) = spectrum.eigenvalues[j].real();
    rows(j, 1) = spectrum.eigenvalues[j].imag();
    rows(j, 2) = spectrum.population_ipr[j];
  }
  qcme::write_csv(out / "modes.csv", {"re", "im", "ipr"}, rows);
  const qcme::SlowBranchSummary slow = qcme::slow_branch_populations(spectrum, gamma);
  Json summary;
  summary["lattice"] = qcme::lattice_json(spec);
  summary["gamma"] = gamma;
  summary["operator_norm"] = spectrum.operator_norm;
  summary["max_residual"] = spectrum.max_residual;
  summary["stationary_eigenvalue"] =
      Json{{"re", spectrum.eigenvalues[spectrum.stationary_index].real()},
           {"im", spectrum.eigenvalues[spectrum.stationary_index].imag()}};
  summary["slow_branch"] = Json{{"modes", slow.mode_count},
                                {"ipr_min", slow.ipr_min},
                                {"ipr_max", slow.ipr_max}};
  std::cerr << "liouvillian: L=" << spec.L << ", " << spectrum.eigenvalues.size() << " modes\n";
  return finish("liouvillian", out, std::move(summary), {"modes.csv"});
}

Json cmd_walk(const Options& opts, const fs::path& out) {
  qcme::Config config = load_config(opts);
  const qcme::LatticeSpec spec = qcme::lattice_from_config(config);
  const std::string mode = config.get_string("walk_mode", "incoherent");
  const int steps = config.get_int("steps", 400);
  const int record_every = config.get_int("record_every", 8);
  const int origin = config.get_int("origin", qcme::center_site(spec.L));
  const int realizations = config.get_int("realizations", 200);
  config.require_all_used();
  if (steps < 1) throw std::invalid_argument("steps must be >= 1");
  if (record_every < 1) throw std::invalid_argument("record_every must be >= 1");
  qcme::WalkSpec walk;
  walk.beta = qcme::coupling_angles(spec.A, spec.B, spec.alpha, spec.L, spec.theta);
  std::vector<int> record;
  for (int m = 0; m <= steps; m += record_every) record.push_back(m);
  qcme::WalkTrajectory traj;
  if (mode == "incoherent") {
    traj = qcme::run_incoherent_walk(walk, origin, record);
  } else if (mode == "ensemble" || mode == "coherent") {
    qcme::WalkEnsembleSpec ensemble;
    ensemble.realizations = realizations;
    ensemble.seed = opts.seed;
    ensemble.dephasing = mode == "ensemble" ? qcme::Dephasing::Full : qcme::Dephasing::None;
    traj = qcme::run_walk_ensemble(walk, origin, record, ensemble, opts.threads);
  } else {
    throw std::invalid_argument(
        "walk_mode must be 'incoherent', 'ensemble', or 'coherent', got '" + mode + "'");
  }
  qcme::write_csv(out / "trajectory.csv", qcme::trajectory_header("m", "P_", spec.L),
                  qcme::trajectory_rows(traj));
  const qcme::PropagatorSpectrum spectrum =
      qcme::eigendecompose_propagator(qcme::build_incoherent_propagator(walk));
  Eigen::MatrixXd modes(spectrum.eigenvalues.size(), 3);
  for (Eigen::Index j = 0; j < spectrum.eigenvalues.size(); ++j) {
    modes(j, 0) = std::abs(spectrum.eigenvalues[j]);
    modes(j, 1) = std::arg(spectrum.eigenvalues[j]);
    modes(j, 2) = spectrum.site_ipr[j];
  }
  qcme::write_csv(out / "modes.csv", {"mu_abs", "mu_arg", "ipr"}, modes);
  Json summary;
  summary["lattice"] = qcme::lattice_json(spec);
  summary["walk_mode"] = mode;
  summary["steps"] = steps;
  summary["origin"] = origin;
  if (mode != "incoherent") {
    summary["realizations"] = realizations;
    summary["seed"] = opts.seed;
  }
  summary["sigma2_final"] = traj.second_moment[traj.second_moment.size() - 1];
  summary["ipr_min"] = spectrum.site_ipr.minCoeff();
  summary["ipr_max"] = spectrum.site_ipr.maxCoeff();
  std::cerr << "walk: " << mode << ", " << steps << " steps\n";
  return finish("walk", out, std::move(summary), {"trajectory.csv", "modes.csv"});
}

Json cmd_sweep(const Options& opts, const fs::path& out) {
  qcme::Config config = load_config(opts);
  const std::string type = config.get_string("sweep_type", "markov");
  const qcme::LatticeSpec base = qcme::lattice_from_config(config);
  const std::vector<double> kappas = qcme::linear_grid(config.get_double("kappa_min", 0.05),
                                                       config.get_double("kappa_max", 1.0),
                                                       config.get_double("kappa_step", 0.05));
  const qcme::PointCache cache(out / "points");
  Json summary;
  summary["lattice"] = qcme::lattice_json(base);
  summary["sweep_type"] = type;
  if (type == "markov") {
    const double gamma = config.get_double("gamma", 100.0);
    config.require_all_used();
    const qcme::SweepTable table = qcme::run_kappa_sweep(base, gamma, kappas, &cache);
    qcme::write_csv(out / "sweep.csv", {"gamma", "kappa", "ipr_min", "ipr_max"},
                    table.csv(gamma));
    summary["gamma"] = gamma;
    summary["sweep"] = table.json();
  } else if (type == "walk") {
    config.require_all_used();
    const qcme::SweepTable table = qcme::run_walk_kappa_sweep(base, kappas, &cache);
    qcme::write_csv(out / "sweep.csv", {"kappa", "ipr_min", "ipr_max"}, table.csv());
    summary["sweep"] = table.json();
  } else if (type == "liouvillian") {
    const std::vector<double> gammas = config.get_list("gamma_list", {0.1, 1.0, 100.0});
    config.require_all_used();
    const qcme::LiouvillianSweepTable table =
        qcme::run_liouvillian_sweep(base, gammas, kappas, &cache);
    qcme::write_csv(out / "sweep.csv", {"gamma", "kappa", "ipr_min", "ipr_max"}, table.csv());
    summary["sweep"] = table.json();
  } else {
    throw std::invalid_argument(
        "sweep_type must be 'markov', 'walk', or 'liouvillian', got '" + type + "'");
  }
  std::cerr << "sweep: " << type << ", " << kappas.size() << " kappa points\n";
  return finish("sweep", out, std::move(summary), {"sweep.csv"});
}

Json cmd_scaling(const Options& opts, const fs::path& out) {
  qcme::Config config = load_config(opts);
  qcme::ScalingSpec spec;
  spec.A = config.get_double("A", 1.0);
  spec.kappa = config.get_double("kappa", 0.5);
  spec.gamma = config.get_double("gamma", 100.0);
  spec.theta = config.get_double("theta", 0.0);
  spec.q = config.get_double("q", 2.0);
  const std::vector<double> sizes =
      config.get_list("sizes", {34, 55, 89, 144, 233, 377, 610, 987});
  for (const double size : sizes) spec.sizes.push_back(int(std::lround(size)));
  spec.targets = config.get_list("targets", {-0.093, -0.0329, -0.004, -0.0002});
  spec.window_spacings = config.get_double("window", 3.0);
  config.require_all_used();
  const qcme::PointCache cache(out / "points");
  const qcme::ScalingCampaign campaign = qcme::run_scaling_campaign(spec, &cache);
  Eigen::Index total = 0;
  for (const qcme::BetaFit& fit : campaign.fits) total += Eigen::Index(fit.sizes.size());
  Eigen::MatrixXd rows(total, 4);
  Eigen::Index at = 0;
  Json summary;
  summary["kappa"] = spec.kappa;
  summary["gamma"] = spec.gamma;
  summary["q"] = spec.q;
  summary["fits"] = Json::array();
  for (const qcme::BetaFit& fit : campaign.fits) {
    for (std::size_t i = 0; i < fit.sizes.size(); ++i) {
      rows(at, 0) = fit.anchor;
      rows(at, 1) = double(fit.sizes[i]);
      rows(at, 2) = fit.tracked_eigenvalues[i];
      rows(at, 3) = fit.tracked_ipr[i];
      ++at;
    }
    summary["fits"].push_back(qcme::beta_json(fit));
  }
  qcme::write_csv(out / "scaling.csv", {"anchor", "L", "eigenvalue", "ipr"}, rows);
  std::cerr << "scaling: " << spec.sizes.size() << " sizes, " << spec.targets.size()
            << " targets\n";
  return finish("scaling", out, std::move(summary), {"scaling.csv"});
}

Json cmd_figure(const Options& opts, const fs::path& out) {
  qcme::Config config = load_config(opts);
  const qcme::FigureResult result =
      qcme::reproduce_figure(opts.figure_id, out, config, opts.seed, opts.threads);
  config.require_all_used();
  Json reply;
  reply["ok"] = true;
  reply["command"] = "figure";
  reply["figure"] = result.id;
  reply["out"] = out.string();
  reply["artifacts"] = result.artifacts;
  std::cerr << "figure: " << result.id << ", " << result.artifacts.size() << " artifacts\n";
  return reply;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dephasing-induced mobility edges in quasiperiodic lattices"};
  app.require_subcommand(1);
  Options opts;

  const auto add_common = [&opts](CLI::App* cmd) {
    cmd->add_option("--config", opts.config_path, "INI configuration file");
    cmd->add_option("--out", opts.out, "output directory (default: out)");
    cmd->add_option("--seed", opts.seed, "RNG seed for stochastic commands");
    cmd->add_option("--threads", opts.threads, "worker threads for ensemble averages")
        ->check(CLI::PositiveNumber);
  };

  CLI::App* spectrum = app.add_subcommand("spectrum", "Hamiltonian eigenvalues and mode IPRs");
  CLI::App* dynamics =
      app.add_subcommand("dynamics", "coherent or phase-randomized wave-packet spreading");
  CLI::App* markov = app.add_subcommand("markov", "classical generator spectrum and diffusion");
  CLI::App* liouvillian =
      app.add_subcommand("liouvillian", "Lindblad generator spectrum and slow modes");
  CLI::App* walk = app.add_subcommand("walk", "split-step photonic walk with dephasing");
  CLI::App* sweep = app.add_subcommand("sweep", "localization onset across a kappa grid");
  CLI::App* scaling = app.add_subcommand("scaling", "finite-size scaling of tracked modes");
  CLI::App* figure = app.add_subcommand("figure", "rebuild a preset figure dataset");
  figure->add_option("id", opts.figure_id, "figure identifier (e.g. fig1a)")->required();
  for (CLI::App* cmd : {spectrum, dynamics, markov, liouvillian, walk, sweep, scaling, figure})
    add_common(cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cout << qcme::error_json("usage", e.what()) << "\n";
    const int code = app.exit(e, std::cerr, std::cerr);
    return code == 0 ? 1 : code;
  }

  try {
    const fs::path out(opts.out);
    std::filesystem::create_directories(out);
    Json reply;
    if (spectrum->parsed()) reply = cmd_spectrum(opts, out);
    else if (dynamics->parsed()) reply = cmd_dynamics(opts, out);
    else if (markov->parsed()) reply = cmd_markov(opts, out);
    else if (liouvillian->parsed()) reply = cmd_liouvillian(opts, out);
    else if (walk->parsed()) reply = cmd_walk(opts, out);
    else if (sweep->parsed()) reply = cmd_sweep(opts, out);
    else if (scaling->parsed()) reply = cmd_scaling(opts, out);
    else reply = cmd_figure(opts, out);
    std::cout << reply.dump(2) << "\n";
    return 0;
  } catch (const std::invalid_argument& e) {
    std::cout << qcme::error_json("invalid_argument", e.what()) << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cout << qcme::error_json("runtime_error", e.what()) << "\n";
    return 1;
  }
}
