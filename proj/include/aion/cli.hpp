#pragma once

// Subcommands behind the `aion` executable. Each returns the process exit
// code: 0 success, 1 error, 2 solver stopped without converging.

#include <cstdio>
#include <filesystem>
#include <ostream>
#include <string>

#include "aion/config.hpp"
#include "aion/demo.hpp"
#include "aion/harness.hpp"
#include "aion/io.hpp"
#include "aion/solvers.hpp"

namespace aion::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNotConverged = 2;

/// SD runs a fixed iteration budget, so finishing it is a normal outcome.
inline int exit_code(const SolveReport& r, Method method) {
  switch (r.termination) {
    case Termination::kConverged: return kExitOk;
    case Termination::kMaxIters:
      return method == Method::kSteepestDescent ? kExitOk : kExitNotConverged;
    case Termination::kStalled: return kExitNotConverged;
    case Termination::kError: return kExitError;
  }
  return kExitError;
}

inline void print_table(std::ostream& out, const std::vector<SolveReport>& rows) {
  char line[160];
  std::snprintf(line, sizeof line, "%-6s %10s %8s %14s %24s  %s\n", "Method", "Iterations", "Inner",
                "Walltime (ms)", "Final loss", "Termination");
  out << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-6s %10d %8d %14.1f %24.6e  %s\n", r.method.c_str(),
                  r.iterations(), r.inner_iterations, r.walltime_ms, r.final_loss,
                  termination_name(r.termination));
    out << line;
  }
}

inline int cmd_fit(const std::filesystem::path& config_path, std::ostream& out, std::ostream& err) {
  try {
    const RunConfig cfg = load_config(config_path);
    const Dataset data = load_data(cfg);
    const ModelParams init = initial_params(cfg);
    const SolveReport report = solve(init, data, cfg.solver);

    const std::filesystem::path dir = cfg.output.dir;
    std::filesystem::create_directories(dir);
    io::write_report(dir / "report.json", report);
    if (cfg.output.emit_trajectory) {
      io::write_trajectory(dir / ("trajectory_" + lowercase(report.method) + ".csv"), report);
    }
    if (cfg.output.emit_landscape) {
      const ModelParams ref = cfg.output.landscape_reference == LandscapeReference::kFit
                                  ? unflatten(report.final_params)
                                  : init;
      for (const auto& s : make_landscapes(cfg, ref, data, {{report.method, report.trajectory}})) {
        io::write_landscape(dir / io::landscape_filename(s), s);
      }
    }
    print_table(out, {report});
    if (!report.reason.empty()) out << "reason: " << report.reason << '\n';
    return exit_code(report, cfg.solver.method);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

inline int cmd_demo(const std::filesystem::path& out_dir, std::ostream& out, std::ostream& err) {
  try {
    const DemoResult result = run_demo(out_dir);
    print_table(out, result.reports);
    for (const auto& f : result.files) out << "wrote " << f.string() << '\n';
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

inline int cmd_verify(const VerifyOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    const VerifyReport report = verify_suite(opts);
    char line[200];
    for (const auto& p : report.properties) {
      std::snprintf(line, sizeof line, "%-4s %-38s max_err=%-12.3e tol=%-10.1e trials=%d\n",
                    p.passed ? "PASS" : "FAIL", p.name.c_str(), p.max_error, p.tolerance, p.trials);
      out << line;
    }
    return report.all_passed() ? kExitOk : kExitError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

inline int cmd_landscape(const std::filesystem::path& config_path, std::ostream& out,
                         std::ostream& err) {
  try {
    const RunConfig cfg = load_config(config_path);
    if (cfg.output.landscapes.empty()) throw ConfigError("landscape.1.axes", "no landscape configured");
    const Dataset data = load_data(cfg);
    const ModelParams init = initial_params(cfg);
    std::vector<NamedTrajectory> paths;
    ModelParams ref = init;
    if (cfg.output.landscape_reference == LandscapeReference::kFit) {
      const SolveReport report = solve(init, data, cfg.solver);
      ref = unflatten(report.final_params);
      paths.push_back({report.method, report.trajectory});
    }
    const std::filesystem::path dir = cfg.output.dir;
    std::filesystem::create_directories(dir);
    for (const auto& s : make_landscapes(cfg, ref, data, paths)) {
      const auto path = dir / io::landscape_filename(s);
      io::write_landscape(path, s);
      out << "wrote " << path.string() << '\n';
    }
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace aion::cli
