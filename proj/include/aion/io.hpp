#pragma once

// File formats. Reals are written with 17 significant digits so every CSV
// parses back to the identical double; landscape overflow cells are `inf`.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "aion/errors.hpp"
#include "aion/harness.hpp"
#include "aion/model.hpp"
#include "aion/solvers.hpp"

namespace aion::io {

class IoError : public Error {
 public:
  using Error::Error;
};

inline std::string format_real(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_scientific(double v) {
  if (!std::isfinite(v)) return format_real(v);
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

inline double parse_real(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw IoError("not a number: '" + s + "'");
  }
  if (used != s.size()) throw IoError("trailing characters in number: '" + s + "'");
  return v;
}

inline std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

inline std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

inline void close_checked(std::ofstream& out, const std::filesystem::path& path) {
  out.close();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

/// method,iterations,walltime_ms,final_loss
inline void write_table1(const std::filesystem::path& path, const std::vector<SolveReport>& rows) {
  auto out = open_for_write(path);
  out << "method,iterations,walltime_ms,final_loss\n";
  for (const auto& r : rows) {
    out << r.method << ',' << r.iterations() << ',' << format_real(r.walltime_ms) << ','
        << format_scientific(r.final_loss) << '\n';
  }
  close_checked(out, path);
}

/// iter,loss,grad_inf_norm,p0,...,p{K-1}
inline void write_trajectory(const std::filesystem::path& path, const SolveReport& report) {
  auto out = open_for_write(path);
  const Eigen::Index k = report.final_params.size();
  out << "iter,loss,grad_inf_norm";
  for (Eigen::Index p = 0; p < k; ++p) out << ",p" << p;
  out << '\n';
  for (std::size_t it = 0; it < report.trajectory.size(); ++it) {
    out << it << ',' << format_real(report.loss_trace[it]) << ','
        << format_real(report.grad_norm_trace[it]);
    for (Eigen::Index p = 0; p < k; ++p) out << ',' << format_real(report.trajectory[it][p]);
    out << '\n';
  }
  close_checked(out, path);
}

struct TrajectoryRow {
  int iter = 0;
  double loss = 0.0;
  double grad_inf_norm = 0.0;
  std::vector<double> params;
};

inline std::vector<TrajectoryRow> read_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  std::getline(in, line);
  const auto header = split(line);
  if (header.size() < 3 || header[0] != "iter" || header[1] != "loss" ||
      header[2] != "grad_inf_norm") {
    throw IoError("bad trajectory header in '" + path.string() + "'");
  }
  std::vector<TrajectoryRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != header.size()) throw IoError("ragged trajectory row");
    TrajectoryRow row{std::stoi(f[0]), parse_real(f[1]), parse_real(f[2]), {}};
    for (std::size_t c = 3; c < f.size(); ++c) row.params.push_back(parse_real(f[c]));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string landscape_filename(const LandscapeSlice& s) {
  return "landscape_" + s.axis1.name + "_" + s.axis2.name + ".csv";
}

/// <ax1>,<ax2>,loss; row-major over grid1 then grid2.
inline void write_landscape(const std::filesystem::path& path, const LandscapeSlice& s) {
  auto out = open_for_write(path);
  out << s.axis1.name << ',' << s.axis2.name << ",loss\n";
  for (std::size_t a = 0; a < s.grid1.size(); ++a) {
    for (std::size_t b = 0; b < s.grid2.size(); ++b) {
      const double v = s.overflow[a][b] ? std::numeric_limits<double>::infinity()
                                        : s.loss_values(static_cast<Eigen::Index>(a),
                                                        static_cast<Eigen::Index>(b));
      out << format_real(s.grid1[a]) << ',' << format_real(s.grid2[b]) << ',' << format_real(v)
          << '\n';
    }
  }
  close_checked(out, path);
}

/// x1,...,xd,y
inline void write_dataset(const std::filesystem::path& path, const Dataset& data) {
  auto out = open_for_write(path);
  for (Eigen::Index i = 0; i < data.dim(); ++i) out << 'x' << (i + 1) << ',';
  out << "y\n";
  for (Eigen::Index n = 0; n < data.size(); ++n) {
    for (Eigen::Index i = 0; i < data.dim(); ++i) out << format_real(data.points()(n, i)) << ',';
    out << format_real(data.targets()[n]) << '\n';
  }
  close_checked(out, path);
}

inline Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty dataset file");
  const auto header = split(line);
  const auto d = static_cast<Eigen::Index>(header.size()) - 1;
  if (d < 1 || header.back() != "y") throw IoError("dataset header must be x1,...,xd,y");
  for (Eigen::Index i = 0; i < d; ++i) {
    if (header[i] != "x" + std::to_string(i + 1)) throw IoError("dataset header must be x1,...,xd,y");
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line);
    if (static_cast<Eigen::Index>(f.size()) != d + 1) throw IoError("ragged dataset row");
    std::vector<double> row;
    for (const auto& s : f) row.push_back(parse_real(s));
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), d);
  Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t n = 0; n < rows.size(); ++n) {
    for (Eigen::Index i = 0; i < d; ++i) x(static_cast<Eigen::Index>(n), i) = rows[n][i];
    y[static_cast<Eigen::Index>(n)] = rows[n][d];
  }
  return Dataset(std::move(x), std::move(y));
}

inline nlohmann::json report_to_json(const SolveReport& r) {
  nlohmann::json j;
  j["method"] = r.method;
  j["outer_iterations"] = r.outer_iterations;
  j["inner_iterations"] = r.inner_iterations;
  j["termination"] = termination_name(r.termination);
  j["reason"] = r.reason;
  j["walltime_ms"] = r.walltime_ms;
  j["initial_loss"] = r.initial_loss;
  j["final_loss"] = r.final_loss;
  std::vector<double> params(r.final_params.values.data(),
                             r.final_params.values.data() + r.final_params.size());
  std::vector<std::string> names;
  for (int k = 0; k < r.final_params.layout.size(); ++k) {
    names.push_back(param_name(r.final_params.layout, k));
  }
  j["param_names"] = names;
  j["final_params"] = params;
  j["loss_trace"] = r.loss_trace;
  j["grad_norm_trace"] = r.grad_norm_trace;
  return j;
}

inline void write_report(const std::filesystem::path& path, const SolveReport& r) {
  auto out = open_for_write(path);
  out << report_to_json(r).dump(2) << '\n';
  close_checked(out, path);
}

}  // namespace aion::io
