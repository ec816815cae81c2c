#pragma once

#include <cctype>
#include <filesystem>
#include <string>
#include <vector>

#include "aion/config.hpp"
#include "aion/harness.hpp"
#include "aion/io.hpp"
#include "aion/solvers.hpp"

namespace aion {

struct DemoResult {
  std::vector<SolveReport> reports;  // ID, SD, NCG
  std::vector<LandscapeSlice> landscapes;
  std::vector<std::filesystem::path> files;
};

inline std::vector<LandscapeSlice> make_landscapes(const RunConfig& cfg, const ModelParams& ref,
                                                   const Dataset& data,
                                                   const std::vector<NamedTrajectory>& paths) {
  std::vector<LandscapeSlice> out;
  for (const auto& ls : cfg.output.landscapes) {
    const auto a1 = param_index(cfg.model, ls.axis1);
    const auto a2 = param_index(cfg.model, ls.axis2);
    if (!a1 || !a2) throw ConfigError("landscape", "unknown axis");
    out.push_back(landscape_slice(ref, *a1, *a2, ls.grid1.points(), ls.grid2.points(), data, paths));
  }
  return out;
}

inline std::string lowercase(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

/// Runs ID, SD and NCG from the same start on the same data and writes
/// table1.csv, trajectory_<method>.csv and the landscape slices, frozen
/// at the ID optimum.
inline DemoResult run_demo(const std::filesystem::path& out_dir, const RunConfig& cfg = demo_config()) {
  std::filesystem::create_directories(out_dir);
  const Dataset data = load_data(cfg);
  const ModelParams init = initial_params(cfg);

  DemoResult result;
  for (Method m : {Method::kInfiniteDescent, Method::kSteepestDescent, Method::kNewtonCG}) {
    SolverConfig sc = cfg.solver;
    sc.method = m;
    SolveReport r;
    try {
      r = solve(init, data, sc);
    } catch (const Error& e) {
      r.method = method_name(m);
      r.termination = Termination::kError;
      r.reason = e.what();
      r.final_params = flatten(init);
    }
    const auto path = out_dir / ("trajectory_" + lowercase(r.method) + ".csv");
    io::write_trajectory(path, r);
    result.files.push_back(path);
    result.reports.push_back(std::move(r));
  }
  const auto table = out_dir / "table1.csv";
  io::write_table1(table, result.reports);
  result.files.push_back(table);

  std::vector<NamedTrajectory> paths;
  for (const auto& r : result.reports) paths.push_back({r.method, r.trajectory});
  const ModelParams ref = unflatten(result.reports.front().final_params);
  result.landscapes = make_landscapes(cfg, ref, data, paths);
  for (const auto& s : result.landscapes) {
    const auto path = out_dir / io::landscape_filename(s);
    io::write_landscape(path, s);
    result.files.push_back(path);
  }
  return result;
}

}  // namespace aion
