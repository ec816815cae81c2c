#pragma once

// Run configuration in flat dotted-key text:
//
//   # comment
//   model.rank = 2
//   solver.method = ID
//   landscape.1.axes = alpha_1,phi_1
//
// Unknown or repeated keys are errors reported with their line number.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "aion/errors.hpp"
#include "aion/harness.hpp"
#include "aion/io.hpp"
#include "aion/model.hpp"
#include "aion/solvers.hpp"

namespace aion {

struct InitConfig {
  std::optional<std::vector<double>> values;  // canonical ParamVector order
  std::optional<std::uint64_t> seed;
  std::pair<double, double> amplitude_range{0.5, 1.5};
  std::pair<double, double> growth_range{-0.5, 0.5};
  std::pair<double, double> frequency_range{0.0, 2.0 * std::numbers::pi};
  std::pair<double, double> phase_range{-std::numbers::pi, std::numbers::pi};

  bool operator==(const InitConfig&) const = default;
};

enum class DataKind { kGrid, kCsvFile };

struct DataConfig {
  DataKind kind = DataKind::kGrid;
  int points_per_axis = 25;
  std::pair<double, double> domain{0.0, 1.0};
  std::string target = "cos_pi_diff";
  std::string path;

  bool operator==(const DataConfig&) const = default;
};

enum class LandscapeReference { kFit, kInit };

struct LandscapeConfig {
  std::string axis1;
  std::string axis2;
  GridRange grid1;
  GridRange grid2;

  bool operator==(const LandscapeConfig&) const = default;
};

struct OutputConfig {
  std::string dir = "out";
  bool emit_trajectory = true;
  bool emit_landscape = false;
  LandscapeReference landscape_reference = LandscapeReference::kFit;
  std::vector<LandscapeConfig> landscapes;

  bool operator==(const OutputConfig&) const = default;
};

struct RunConfig {
  Layout model{2, 2, 1, true};
  InitConfig init;
  DataConfig data;
  SolverConfig solver;
  OutputConfig output;

  /// Structural checks; file existence is checked when the run starts.
  void validate() const {
    if (model.rank < 1) throw ConfigError("model.rank", "must be >= 1");
    if (model.dim < 1) throw ConfigError("model.dim", "must be >= 1");
    if (model.terms < 1) throw ConfigError("model.terms", "must be >= 1");
    if (init.values.has_value() == init.seed.has_value()) {
      throw ConfigError("init", "exactly one of init.values or init.seed is required");
    }
    if (init.values && static_cast<int>(init.values->size()) != model.size()) {
      throw ConfigError("init.values", "expected " + std::to_string(model.size()) + " values, got " +
                                           std::to_string(init.values->size()));
    }
    if (data.kind == DataKind::kGrid) {
      if (data.points_per_axis < 2) throw ConfigError("data.points_per_axis", "must be >= 2");
      if (!(data.domain.first < data.domain.second)) throw ConfigError("data.domain", "need lo < hi");
      target_by_name(data.target);
    } else if (data.path.empty()) {
      throw ConfigError("data.path", "required when data.kind = csv_file");
    }
    solver.validate();
    for (std::size_t k = 0; k < output.landscapes.size(); ++k) {
      const auto& ls = output.landscapes[k];
      const std::string key = "landscape." + std::to_string(k + 1) + ".axes";
      if (!param_index(model, ls.axis1)) throw ConfigError(key, "unknown axis '" + ls.axis1 + "'");
      if (!param_index(model, ls.axis2)) throw ConfigError(key, "unknown axis '" + ls.axis2 + "'");
      if (ls.axis1 == ls.axis2) throw ConfigError(key, "axes must differ");
      if (ls.grid1.count < 1 || ls.grid2.count < 1) {
        throw ConfigError("landscape." + std::to_string(k + 1), "grid count must be >= 1");
      }
    }
  }

  bool operator==(const RunConfig&) const = default;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

class ConfigReader {
 public:
  ConfigReader(std::string key, std::string value, int line)
      : key_(std::move(key)), value_(std::move(value)), line_(line) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError(key_, "line " + std::to_string(line_) + ": " + what);
  }

  double real() const {
    try {
      return io::parse_real(value_);
    } catch (const Error&) {
      fail("expected a number, got '" + value_ + "'");
    }
  }

  int integer() const {
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(value_, &used);
    } catch (const std::exception&) {
      fail("expected an integer, got '" + value_ + "'");
    }
    if (used != value_.size() || v < INT32_MIN || v > INT32_MAX) {
      fail("expected an integer, got '" + value_ + "'");
    }
    return static_cast<int>(v);
  }

  std::uint64_t unsigned64() const {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(value_, &used);
    } catch (const std::exception&) {
      fail("expected an unsigned integer, got '" + value_ + "'");
    }
    if (used != value_.size() || value_.front() == '-') fail("expected an unsigned integer");
    return v;
  }

  bool boolean() const {
    if (value_ == "true" || value_ == "1") return true;
    if (value_ == "false" || value_ == "0") return false;
    fail("expected true or false, got '" + value_ + "'");
  }

  std::vector<double> reals() const {
    std::vector<double> out;
    for (const auto& f : io::split(value_)) {
      try {
        out.push_back(io::parse_real(trim(f)));
      } catch (const Error&) {
        fail("bad number '" + f + "' in list");
      }
    }
    return out;
  }

  std::pair<double, double> range() const {
    const auto v = reals();
    if (v.size() != 2) fail("expected lo,hi");
    return {v[0], v[1]};
  }

  GridRange grid() const {
    const auto f = io::split(value_);
    if (f.size() != 3) fail("expected lo,hi,count");
    ConfigReader count(key_, trim(f[2]), line_);
    try {
      return GridRange{io::parse_real(trim(f[0])), io::parse_real(trim(f[1])), count.integer()};
    } catch (const io::IoError&) {
      fail("expected lo,hi,count");
    }
  }

  const std::string& text() const { return value_; }

 private:
  std::string key_;
  std::string value_;
  int line_;
};

inline std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) out += ',';
    out += io::format_real(v[k]);
  }
  return out;
}

}  // namespace detail

inline RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::map<std::string, int> seen;
  std::map<int, LandscapeConfig> landscapes;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("", "line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    const detail::ConfigReader r(key, value, line_no);
    if (auto [it, fresh] = seen.emplace(key, line_no); !fresh) {
      r.fail("duplicate key (first set on line " + std::to_string(it->second) + ")");
    }

    if (key == "model.rank") cfg.model.rank = r.integer();
    else if (key == "model.dim") cfg.model.dim = r.integer();
    else if (key == "model.terms") cfg.model.terms = r.integer();
    else if (key == "model.tied") cfg.model.tied = r.boolean();
    else if (key == "init.values") cfg.init.values = r.reals();
    else if (key == "init.seed") cfg.init.seed = r.unsigned64();
    else if (key == "init.A_range") cfg.init.amplitude_range = r.range();
    else if (key == "init.alpha_range") cfg.init.growth_range = r.range();
    else if (key == "init.omega_range") cfg.init.frequency_range = r.range();
    else if (key == "init.phi_range") cfg.init.phase_range = r.range();
    else if (key == "data.kind") {
      if (value == "grid") cfg.data.kind = DataKind::kGrid;
      else if (value == "csv_file") cfg.data.kind = DataKind::kCsvFile;
      else r.fail("expected grid or csv_file");
    }
    else if (key == "data.points_per_axis") cfg.data.points_per_axis = r.integer();
    else if (key == "data.domain") cfg.data.domain = r.range();
    else if (key == "data.target") cfg.data.target = value;
    else if (key == "data.path") cfg.data.path = value;
    else if (key == "solver.method") {
      if (value == "ID") cfg.solver.method = Method::kInfiniteDescent;
      else if (value == "SD") cfg.solver.method = Method::kSteepestDescent;
      else if (value == "NCG") cfg.solver.method = Method::kNewtonCG;
      else r.fail("expected ID, SD or NCG");
    }
    else if (key == "solver.id_inner_tol") cfg.solver.id_inner_tol = r.real();
    else if (key == "solver.id_max_inner") cfg.solver.id_max_inner = r.integer();
    else if (key == "solver.id_max_outer") cfg.solver.id_max_outer = r.integer();
    else if (key == "solver.id_jacobian") {
      if (value == "full") cfg.solver.id_jacobian = JacobianMode::kFull;
      else if (value == "block") cfg.solver.id_jacobian = JacobianMode::kBlock;
      else r.fail("expected full or block");
    }
    else if (key == "solver.id_lambda0") cfg.solver.id_lambda0 = r.real();
    else if (key == "solver.id_lambda_up") cfg.solver.id_lambda_up = r.real();
    else if (key == "solver.id_lambda_down") cfg.solver.id_lambda_down = r.real();
    else if (key == "solver.id_backtrack_factor") cfg.solver.id_backtrack_factor = r.real();
    else if (key == "solver.id_max_halvings") cfg.solver.id_max_halvings = r.integer();
    else if (key == "solver.sd_max_iters") cfg.solver.sd_max_iters = r.integer();
    else if (key == "solver.sd_c1") cfg.solver.sd_c1 = r.real();
    else if (key == "solver.sd_rho") cfg.solver.sd_rho = r.real();
    else if (key == "solver.sd_step0") cfg.solver.sd_step0 = r.real();
    else if (key == "solver.ncg_max_iters") cfg.solver.ncg_max_iters = r.integer();
    else if (key == "solver.ncg_loss_tol") cfg.solver.ncg_loss_tol = r.real();
    else if (key == "solver.ncg_forcing_cap") cfg.solver.ncg_forcing_cap = r.real();
    else if (key == "output.dir") cfg.output.dir = value;
    else if (key == "output.emit_trajectory") cfg.output.emit_trajectory = r.boolean();
    else if (key == "output.emit_landscape") cfg.output.emit_landscape = r.boolean();
    else if (key == "output.landscape_reference") {
      if (value == "fit") cfg.output.landscape_reference = LandscapeReference::kFit;
      else if (value == "init") cfg.output.landscape_reference = LandscapeReference::kInit;
      else r.fail("expected fit or init");
    }
    else if (key.rfind("landscape.", 0) == 0) {
      const auto dot = key.find('.', 10);
      if (dot == std::string::npos) r.fail("expected landscape.<n>.<field>");
      const detail::ConfigReader idx(key, key.substr(10, dot - 10), line_no);
      const int n = idx.integer();
      if (n < 1) r.fail("landscape index must be >= 1");
      const std::string field = key.substr(dot + 1);
      LandscapeConfig& ls = landscapes[n];
      if (field == "axes") {
        const auto names = io::split(value);
        if (names.size() != 2) r.fail("expected two axis names");
        ls.axis1 = detail::trim(names[0]);
        ls.axis2 = detail::trim(names[1]);
      } else if (field == "grid1") {
        ls.grid1 = r.grid();
      } else if (field == "grid2") {
        ls.grid2 = r.grid();
      } else {
        r.fail("unknown landscape field '" + field + "'");
      }
    }
    else r.fail("unknown key");
  }
  int expected = 1;
  for (auto& [n, ls] : landscapes) {
    if (n != expected++) throw ConfigError("landscape." + std::to_string(n), "indices must be 1, 2, ...");
    if (ls.axis1.empty()) throw ConfigError("landscape." + std::to_string(n) + ".axes", "missing");
    cfg.output.landscapes.push_back(std::move(ls));
  }
  cfg.validate();
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read config '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

inline std::string serialize_config(const RunConfig& cfg) {
  using io::format_real;
  auto range = [](const std::pair<double, double>& r) {
    return format_real(r.first) + "," + format_real(r.second);
  };
  auto grid = [](const GridRange& g) {
    return format_real(g.lo) + "," + format_real(g.hi) + "," + std::to_string(g.count);
  };
  auto flag = [](bool b) { return b ? "true" : "false"; };
  std::ostringstream o;
  o << "model.rank = " << cfg.model.rank << '\n'
    << "model.dim = " << cfg.model.dim << '\n'
    << "model.terms = " << cfg.model.terms << '\n'
    << "model.tied = " << flag(cfg.model.tied) << '\n';
  if (cfg.init.values) o << "init.values = " << detail::join(*cfg.init.values) << '\n';
  if (cfg.init.seed) o << "init.seed = " << *cfg.init.seed << '\n';
  o << "init.A_range = " << range(cfg.init.amplitude_range) << '\n'
    << "init.alpha_range = " << range(cfg.init.growth_range) << '\n'
    << "init.omega_range = " << range(cfg.init.frequency_range) << '\n'
    << "init.phi_range = " << range(cfg.init.phase_range) << '\n'
    << "data.kind = " << (cfg.data.kind == DataKind::kGrid ? "grid" : "csv_file") << '\n'
    << "data.points_per_axis = " << cfg.data.points_per_axis << '\n'
    << "data.domain = " << range(cfg.data.domain) << '\n'
    << "data.target = " << cfg.data.target << '\n';
  if (!cfg.data.path.empty()) o << "data.path = " << cfg.data.path << '\n';
  const SolverConfig& s = cfg.solver;
  o << "solver.method = " << method_name(s.method) << '\n'
    << "solver.id_inner_tol = " << format_real(s.id_inner_tol) << '\n'
    << "solver.id_max_inner = " << s.id_max_inner << '\n'
    << "solver.id_max_outer = " << s.id_max_outer << '\n'
    << "solver.id_jacobian = " << (s.id_jacobian == JacobianMode::kFull ? "full" : "block") << '\n'
    << "solver.id_lambda0 = " << format_real(s.id_lambda0) << '\n'
    << "solver.id_lambda_up = " << format_real(s.id_lambda_up) << '\n'
    << "solver.id_lambda_down = " << format_real(s.id_lambda_down) << '\n'
    << "solver.id_backtrack_factor = " << format_real(s.id_backtrack_factor) << '\n'
    << "solver.id_max_halvings = " << s.id_max_halvings << '\n'
    << "solver.sd_max_iters = " << s.sd_max_iters << '\n'
    << "solver.sd_c1 = " << format_real(s.sd_c1) << '\n'
    << "solver.sd_rho = " << format_real(s.sd_rho) << '\n'
    << "solver.sd_step0 = " << format_real(s.sd_step0) << '\n'
    << "solver.ncg_max_iters = " << s.ncg_max_iters << '\n'
    << "solver.ncg_loss_tol = " << format_real(s.ncg_loss_tol) << '\n'
    << "solver.ncg_forcing_cap = " << format_real(s.ncg_forcing_cap) << '\n'
    << "output.dir = " << cfg.output.dir << '\n'
    << "output.emit_trajectory = " << flag(cfg.output.emit_trajectory) << '\n'
    << "output.emit_landscape = " << flag(cfg.output.emit_landscape) << '\n'
    << "output.landscape_reference = "
    << (cfg.output.landscape_reference == LandscapeReference::kFit ? "fit" : "init") << '\n';
  for (std::size_t k = 0; k < cfg.output.landscapes.size(); ++k) {
    const auto& ls = cfg.output.landscapes[k];
    const std::string prefix = "landscape." + std::to_string(k + 1) + ".";
    o << prefix << "axes = " << ls.axis1 << ',' << ls.axis2 << '\n'
      << prefix << "grid1 = " << grid(ls.grid1) << '\n'
      << prefix << "grid2 = " << grid(ls.grid2) << '\n';
  }
  return o.str();
}

/// Explicit values, or uniform draws per parameter kind from the seed.
inline ModelParams initial_params(const RunConfig& cfg) {
  const Layout& l = cfg.model;
  if (cfg.init.values) {
    Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(
        cfg.init.values->data(), static_cast<Eigen::Index>(cfg.init.values->size()));
    return unflatten(ParamVector(l, std::move(v)));
  }
  std::mt19937_64 rng(*cfg.init.seed);
  const std::pair<double, double> ranges[] = {cfg.init.amplitude_range, cfg.init.growth_range,
                                              cfg.init.frequency_range, cfg.init.phase_range};
  Eigen::VectorXd v(l.size());
  for (int k = 0; k < l.size(); ++k) {
    const auto& [lo, hi] = ranges[k % kParamsPerTerm];
    v[k] = std::uniform_real_distribution<double>(lo, hi)(rng);
  }
  return unflatten(ParamVector(l, std::move(v)));
}

inline Dataset load_data(const RunConfig& cfg) {
  if (cfg.data.kind == DataKind::kCsvFile) {
    if (!std::filesystem::exists(cfg.data.path)) {
      throw ConfigError("data.path", "file '" + cfg.data.path + "' does not exist");
    }
    return io::read_dataset(cfg.data.path);
  }
  return make_grid_dataset(cfg.data.points_per_axis, cfg.model.dim, cfg.data.domain.first,
                           cfg.data.domain.second, cfg.data.target);
}

/// The built-in demo: tied rank-2 single-term model on the 25 x 25 grid,
/// with the two landscape slices alpha_1 x phi_1 and A_1 x omega_1.
inline RunConfig demo_config() {
  RunConfig cfg;
  const ParamVector init = flatten(demo_init());
  cfg.init.values = std::vector<double>(init.values.data(), init.values.data() + init.size());
  cfg.output.dir = "demo_out";
  cfg.output.emit_landscape = true;
  cfg.output.landscapes = {
      {"alpha_1", "phi_1", {-1.0, 1.0, 50}, {-std::numbers::pi, std::numbers::pi, 50}},
      {"A_1", "omega_1", {0.0, 2.0, 50}, {2.0, 4.5, 50}},
  };
  return cfg;
}

}  // namespace aion
