#include "qcme/io.hpp"

#include <climits>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace qcme {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& key, const std::string& text) {
  try {
    std::size_t consumed = 0;
    const double value = std::stod(text, &consumed);
    if (consumed != text.size()) throw std::invalid_argument("trailing characters");
    return value;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': '" + text + "' is not a number");
  }
}

int parse_int(const std::string& key, const std::string& text) {
  try {
    std::size_t consumed = 0;
    const long value = std::stol(text, &consumed);
    if (consumed != text.size()) throw std::invalid_argument("trailing characters");
    if (value < INT_MIN || value > INT_MAX) throw std::out_of_range("int range");
    return static_cast<int>(value);
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': '" + text + "' is not an integer");
  }
}

}  // namespace

std::string format_double(double value) {
  char buffer[40];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buffer, sizeof buffer, "%.*g", precision, value);
    if (std::strtod(buffer, nullptr) == value) break;
  }
  return buffer;
}

Config Config::parse(const std::string& text) {
  Config config;
  std::istringstream stream(text);
  std::string line;
  int lineno = 0;
  while (std::getline(stream, line)) {
    ++lineno;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#' || stripped[0] == ';') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected 'key = value'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
    if (!config.values_.emplace(key, value).second)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": duplicate key '" +
                                  key + "'");
  }
  return config;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

bool Config::has(const std::string& key) const { return values_.count(key) != 0; }

std::string Config::get_string(const std::string& key) {
  const auto it = values_.find(key);
  if (it == values_.end())
    throw std::invalid_argument("config is missing required key '" + key + "'");
  used_[key] = true;
  return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) {
  if (!has(key)) return fallback;
  return get_string(key);
}

double Config::get_double(const std::string& key) { return parse_double(key, get_string(key)); }

double Config::get_double(const std::string& key, double fallback) {
  if (!has(key)) return fallback;
  return get_double(key);
}

int Config::get_int(const std::string& key) { return parse_int(key, get_string(key)); }

int Config::get_int(const std::string& key, int fallback) {
  if (!has(key)) return fallback;
  return get_int(key);
}

std::vector<double> Config::get_list(const std::string& key,
                                     const std::vector<double>& fallback) {
  if (!has(key)) return fallback;
  const std::string text = get_string(key);
  std::vector<double> out;
  std::size_t begin = 0;
  while (begin <= text.size()) {
    const auto comma = text.find(',', begin);
    const std::string item =
        trim(comma == std::string::npos ? text.substr(begin) : text.substr(begin, comma - begin));
    if (item.empty())
      throw std::invalid_argument("config key '" + key + "': empty list entry");
    out.push_back(parse_double(key, item));
    if (comma == std::string::npos) break;
    begin = comma + 1;
  }
  return out;
}

void Config::require_all_used() const {
  std::string unknown;
  for (const auto& [key, value] : values_) {
    if (used_.count(key)) continue;
    if (!unknown.empty()) unknown += ", ";
    unknown += key;
  }
  if (!unknown.empty())
    throw std::invalid_argument("config has unrecognized keys: " + unknown);
}

std::string to_ini(const std::vector<std::pair<std::string, std::string>>& entries) {
  std::string out;
  for (const auto& [key, value] : entries) out += key + " = " + value + "\n";
  return out;
}

const char* to_string(Model model) {
  return model == Model::DiagonalGAA ? "DiagonalGAA" : "OffDiagonalAA";
}

const char* to_string(Boundary boundary) {
  return boundary == Boundary::Periodic ? "Periodic" : "Open";
}

Model model_from_string(const std::string& name) {
  if (name == "DiagonalGAA") return Model::DiagonalGAA;
  if (name == "OffDiagonalAA") return Model::OffDiagonalAA;
  throw std::invalid_argument("unknown model '" + name +
                              "' (expected DiagonalGAA or OffDiagonalAA)");
}

Boundary boundary_from_string(const std::string& name) {
  if (name == "Periodic") return Boundary::Periodic;
  if (name == "Open") return Boundary::Open;
  throw std::invalid_argument("unknown boundary '" + name + "' (expected Periodic or Open)");
}

LatticeSpec lattice_from_config(Config& config) {
  LatticeSpec spec;
  spec.model = model_from_string(config.get_string("model", "OffDiagonalAA"));
  spec.alpha = fibonacci_approximant(config.get_int("alpha_index", 15));
  spec.J = config.get_double("J", 1.0);
  spec.A = config.get_double("A", 1.0);
  spec.B = config.get_double("B", 0.0);
  spec.theta = config.get_double("theta", 0.0);
  spec.L = config.get_int("L", static_cast<int>(spec.alpha.denominator));
  spec.boundary = boundary_from_string(config.get_string("boundary", "Periodic"));
  spec.validate();
  return spec;
}

std::vector<std::pair<std::string, std::string>> lattice_to_config(const LatticeSpec& spec) {
  std::vector<std::pair<std::string, std::string>> entries;
  entries.emplace_back("model", to_string(spec.model));
  if (spec.model == Model::DiagonalGAA) entries.emplace_back("J", format_double(spec.J));
  entries.emplace_back("A", format_double(spec.A));
  entries.emplace_back("B", format_double(spec.B));
  entries.emplace_back("theta", format_double(spec.theta));
  entries.emplace_back("alpha_index", std::to_string(spec.alpha.index));
  entries.emplace_back("L", std::to_string(spec.L));
  entries.emplace_back("boundary", to_string(spec.boundary));
  return entries;
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string csv_text(const std::vector<std::string>& header,
                     const Eigen::Ref<const Eigen::MatrixXd>& rows) {
  if (static_cast<Eigen::Index>(header.size()) != rows.cols())
    throw std::invalid_argument("csv_text: header width does not match data");
  std::string out;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c) out += ',';
    out += header[c];
  }
  out += '\n';
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    for (Eigen::Index c = 0; c < rows.cols(); ++c) {
      if (c) out += ',';
      out += format_double(rows(r, c));
    }
    out += '\n';
  }
  return out;
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const Eigen::Ref<const Eigen::MatrixXd>& rows) {
  atomic_write(path, csv_text(header, rows));
}

std::string error_json(const std::string& code, const std::string& message) {
  nlohmann::ordered_json j;
  j["error"]["code"] = code;
  j["error"]["message"] = message;
  return j.dump();
}

}  // namespace qcme
