#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qcme/lattice.hpp"

namespace qcme {

// Shortest round-trip decimal form of a double (printf %.17g trimmed to the
// shortest representation that parses back exactly).
std::string format_double(double value);

// Flat INI configuration: `key = value` lines, '#'/';' comments. Keys read
// through the getters are marked used; require_all_used() rejects leftovers
// so misspelled keys fail loudly instead of being ignored.
class Config {
 public:
  Config() = default;

  static Config parse(const std::string& text);
  static Config load(const std::filesystem::path& path);

  bool has(const std::string& key) const;

  std::string get_string(const std::string& key);
  std::string get_string(const std::string& key, const std::string& fallback);
  double get_double(const std::string& key);
  double get_double(const std::string& key, double fallback);
  int get_int(const std::string& key);
  int get_int(const std::string& key, int fallback);
  // Comma-separated list of reals.
  std::vector<double> get_list(const std::string& key, const std::vector<double>& fallback);

  void require_all_used() const;
  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
  mutable std::map<std::string, bool> used_;
};

std::string to_ini(const std::vector<std::pair<std::string, std::string>>& entries);

const char* to_string(Model model);
const char* to_string(Boundary boundary);
Model model_from_string(const std::string& name);
Boundary boundary_from_string(const std::string& name);

// Lattice keys: model, J, A, B, theta, alpha_index, L, boundary. L defaults
// to the approximant denominator.
LatticeSpec lattice_from_config(Config& config);
std::vector<std::pair<std::string, std::string>> lattice_to_config(const LatticeSpec& spec);

// Writes via a temporary sibling file and an atomic rename, so readers never
// observe a partial file.
void atomic_write(const std::filesystem::path& path, const std::string& content);

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const Eigen::Ref<const Eigen::MatrixXd>& rows);

std::string csv_text(const std::vector<std::string>& header,
                     const Eigen::Ref<const Eigen::MatrixXd>& rows);

// Machine-readable failure report: {"error": {"code": ..., "message": ...}}.
std::string error_json(const std::string& code, const std::string& message);

}  // namespace qcme
