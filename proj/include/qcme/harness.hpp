#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qcme/dynamics.hpp"
#include "qcme/io.hpp"
#include "qcme/lattice.hpp"
#include "qcme/liouvillian.hpp"
#include "qcme/spectra.hpp"
#include "qcme/walk.hpp"

namespace qcme {

using Json = nlohmann::ordered_json;

Json lattice_json(const LatticeSpec& spec);
Json fit_json(const LineFit& fit);
Json edge_json(const MobilityEdgeReport& report);
Json beta_json(const BetaFit& fit);
void write_json(const std::filesystem::path& path, const Json& value);

// lo, lo + step, ... up to hi, snapped to 12 decimals so grid labels stay
// clean.
std::vector<double> linear_grid(double lo, double hi, double step);

// CSV layouts shared by the figure harness and the command-line tool:
// (t, sigma2, p_0..p_{L-1}) for continuous-time runs and
// (m, sigma2, P_0..P_{L-1}) for walks.
Eigen::MatrixXd trajectory_rows(const Trajectory& trajectory);
Eigen::MatrixXd trajectory_rows(const WalkTrajectory& trajectory);
std::vector<std::string> trajectory_header(const std::string& time_label,
                                           const std::string& site_prefix, Eigen::Index sites);

// One completed value per label, cached as a JSON file under dir. Corrupt or
// unreadable cache files are treated as absent and recomputed, never trusted.
class PointCache {
 public:
  explicit PointCache(const std::filesystem::path& dir);

  std::optional<Json> load(const std::string& label) const;
  void store(const std::string& label, const Json& value) const;
  const std::filesystem::path& directory() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

struct SweepRow {
  double kappa = 0.0;
  double ipr_min = 0.0;
  double ipr_max = 0.0;
  bool ok = false;
  std::string error;  // failed points carry their message; no silent gaps
};

struct SweepTable {
  std::vector<SweepRow> rows;
  std::optional<double> kappa_c;  // first kappa whose ipr_max exceeds the localized threshold

  // (kappa, ipr_min, ipr_max) rows, led by a gamma column when one is given;
  // failed points emit NaN values.
  Eigen::MatrixXd csv(std::optional<double> gamma = std::nullopt) const;
  Json json() const;
};

// Sweeps kappa = B/A for the strong-dephasing generator of base (an
// off-diagonal lattice whose B is overridden point by point). Every kappa
// must lie in (0, 1].
SweepTable run_kappa_sweep(const LatticeSpec& base, double gamma,
                           const std::vector<double>& kappas, const PointCache* cache = nullptr);

// Same sweep over the site-marginal participation of the dephased walk
// propagator modes.
SweepTable run_walk_kappa_sweep(const LatticeSpec& base, const std::vector<double>& kappas,
                                const PointCache* cache = nullptr);

struct LiouvillianSweepRow {
  double gamma = 0.0;
  double kappa = 0.0;
  double ipr_min = 0.0;
  double ipr_max = 0.0;
  int mode_count = 0;
  bool ok = false;
  std::string error;
};

struct LiouvillianSweepTable {
  std::vector<LiouvillianSweepRow> rows;
  // kappa_c per gamma, in input gamma order.
  std::vector<std::pair<double, std::optional<double>>> kappa_c;

  Eigen::MatrixXd csv() const;  // (gamma, kappa, ipr_min, ipr_max)
  Json json() const;
};

// Population participation of the slow Liouvillian branch across a
// (gamma, kappa) grid; the lattice L is capped by the dense superoperator.
LiouvillianSweepTable run_liouvillian_sweep(const LatticeSpec& base,
                                            const std::vector<double>& gammas,
                                            const std::vector<double>& kappas,
                                            const PointCache* cache = nullptr);

struct ScalingSpec {
  double A = 1.0;
  double kappa = 0.5;
  double gamma = 100.0;
  double theta = 0.0;
  double q = 2.0;
  std::vector<int> sizes;      // Fibonacci denominators, ascending
  std::vector<double> targets; // eigenvalues to track across sizes
  double window_spacings = 3.0;

  void validate() const;
};

struct ScalingCampaign {
  ScalingSpec spec;
  std::vector<SizePoint> family;  // one entry per size, shared by all targets
  std::vector<BetaFit> fits;      // one per target
};

// Finite-size scaling of generator eigenvectors on Open lattices, each size
// using its own rational approximant.
ScalingCampaign run_scaling_campaign(const ScalingSpec& spec, const PointCache* cache = nullptr);

const std::vector<std::string>& figure_ids();

struct FigureResult {
  std::string id;
  std::vector<std::string> artifacts;  // paths relative to the output directory
  Json manifest;
};

// Recomputes the data behind one published panel into out_dir: CSV artifacts,
// a JSON manifest with every parameter, and cached per-point results under
// out_dir/points so interrupted runs resume. Unknown ids raise
// std::invalid_argument listing the valid ids.
FigureResult reproduce_figure(const std::string& id, const std::filesystem::path& out_dir,
                              Config& config, std::uint64_t seed, int threads);

}  // namespace qcme
