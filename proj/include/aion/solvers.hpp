#pragma once

// Infinite Descent (one-shot root-finding on F(delta) = 0 with a
// structured Newton-Raphson inner solve) and two classical baselines:
// steepest descent with Armijo backtracking and line-search Newton-CG.

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "aion/calculus.hpp"
#include "aion/errors.hpp"
#include "aion/model.hpp"

namespace aion {

enum class Method { kInfiniteDescent, kSteepestDescent, kNewtonCG };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::kInfiniteDescent: return "ID";
    case Method::kSteepestDescent: return "SD";
    case Method::kNewtonCG: return "NCG";
  }
  return "?";
}

struct SolverConfig {
  Method method = Method::kInfiniteDescent;

  double id_inner_tol = 1e-12;
  int id_max_inner = 100;
  int id_max_outer = 1;
  JacobianMode id_jacobian = JacobianMode::kFull;
  double id_lambda0 = 1e-8;
  double id_lambda_up = 10.0;
  double id_lambda_down = 10.0;
  double id_backtrack_factor = 0.5;
  int id_max_halvings = 40;

  int sd_max_iters = 1000;
  double sd_c1 = 1e-4;
  double sd_rho = 0.5;
  double sd_step0 = 1.0;

  int ncg_max_iters = 50;
  double ncg_loss_tol = 1e-8;
  /// Forcing term: CG stops when ||r|| <= min(cap, sqrt(||g||)) ||g||.
  double ncg_forcing_cap = 0.5;

  /// Throws ConfigError naming the first offending field.
  void validate() const {
    auto positive = [](const char* key, double v) {
      if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(key, "must be > 0");
    };
    positive("solver.id_inner_tol", id_inner_tol);
    positive("solver.id_lambda0", id_lambda0);
    positive("solver.ncg_loss_tol", ncg_loss_tol);
    positive("solver.ncg_forcing_cap", ncg_forcing_cap);
    positive("solver.sd_step0", sd_step0);
    if (!(id_lambda_up > 1.0)) throw ConfigError("solver.id_lambda_up", "must be > 1");
    if (!(id_lambda_down > 1.0)) throw ConfigError("solver.id_lambda_down", "must be > 1");
    if (!(id_backtrack_factor > 0.0 && id_backtrack_factor < 1.0)) {
      throw ConfigError("solver.id_backtrack_factor", "must lie in (0, 1)");
    }
    if (!(sd_rho > 0.0 && sd_rho < 1.0)) throw ConfigError("solver.sd_rho", "must lie in (0, 1)");
    if (!(sd_c1 > 0.0 && sd_c1 < 1.0)) throw ConfigError("solver.sd_c1", "must lie in (0, 1)");
    if (id_max_inner < 0) throw ConfigError("solver.id_max_inner", "must be >= 0");
    if (id_max_outer < 1) throw ConfigError("solver.id_max_outer", "must be >= 1");
    if (id_max_halvings < 0) throw ConfigError("solver.id_max_halvings", "must be >= 0");
    if (sd_max_iters < 0) throw ConfigError("solver.sd_max_iters", "must be >= 0");
    if (ncg_max_iters < 0) throw ConfigError("solver.ncg_max_iters", "must be >= 0");
  }

  bool operator==(const SolverConfig&) const = default;
};

enum class Termination { kConverged, kMaxIters, kStalled, kError };

inline const char* termination_name(Termination t) {
  switch (t) {
    case Termination::kConverged: return "Converged";
    case Termination::kMaxIters: return "MaxIters";
    case Termination::kStalled: return "Stalled";
    case Termination::kError: return "Error";
  }
  return "?";
}

struct SolveReport {
  std::string method;
  int outer_iterations = 0;
  int inner_iterations = 0;
  std::vector<double> loss_trace;
  std::vector<double> grad_norm_trace;
  std::vector<ParamVector> trajectory;
  double walltime_ms = 0.0;
  Termination termination = Termination::kError;
  std::string reason;
  ParamVector final_params;
  double final_loss = std::numeric_limits<double>::quiet_NaN();
  double initial_loss = std::numeric_limits<double>::quiet_NaN();

  /// Iteration count as tabulated: outer rounds for ID, steps otherwise.
  int iterations() const noexcept { return outer_iterations; }
};

namespace detail {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

inline double inf_norm(const Eigen::VectorXd& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

/// Loss at theta + t * direction; nullopt when the trial point overflows.
inline std::optional<double> trial_loss(const ModelParams& model, const Eigen::VectorXd& step,
                                        const Dataset& data) {
  try {
    const double phi = loss(shifted(model, step), data);
    if (!std::isfinite(phi)) return std::nullopt;
    return phi;
  } catch (const ExponentOverflow&) {
    return std::nullopt;
  } catch (const NonFiniteInput&) {
    return std::nullopt;
  }
}

inline void record(SolveReport& report, const ModelParams& model, double phi,
                   const GradientVector& g) {
  report.loss_trace.push_back(phi);
  report.grad_norm_trace.push_back(inf_norm(g));
  report.trajectory.push_back(flatten(model));
}

inline void finish(SolveReport& report, const ModelParams& model, const Dataset& data,
                   const Stopwatch& clock) {
  report.final_params = flatten(model);
  report.final_loss = loss(model, data);
  report.walltime_ms = clock.elapsed_ms();
}

}  // namespace detail

/// Largest t in {t0 rho^k : k = 0..60} with
/// Phi(theta + t d) <= Phi(theta) + c1 t <grad Phi, d>.
/// Trial points that overflow count as rejected.
inline double armijo_search(const ModelParams& model, const Eigen::VectorXd& direction,
                            const Dataset& data, double c1, double rho, double t0,
                            std::optional<double> phi0 = std::nullopt,
                            const GradientVector* grad = nullptr) {
  const GradientVector g_local = grad ? GradientVector() : gradient(model, data);
  const GradientVector& g = grad ? *grad : g_local;
  const double slope = g.dot(direction);
  if (!(slope < 0.0)) throw NotDescentDirection("directional derivative is not negative");
  const double phi = phi0 ? *phi0 : loss(model, data);
  double t = t0;
  for (int k = 0; k <= 60; ++k, t *= rho) {
    const auto trial = detail::trial_loss(model, t * direction, data);
    if (trial && *trial <= phi + c1 * t * slope) return t;
  }
  throw LineSearchFailed("no Armijo step after 60 reductions");
}

struct SnrResult {
  UpdateVector delta;
  int iterations = 0;
  Termination termination = Termination::kError;
  std::string reason;
  double residual_inf = std::numeric_limits<double>::infinity();
};

/// Structured Newton-Raphson on F(delta) = 0, starting from delta = 0.
/// F comes from the term ledger; J from eval_J in the configured mode.
/// `free_mask`, when non-empty, restricts the solve to the marked
/// coordinates; the rest of delta stays zero.
inline SnrResult snr_solve(const ModelParams& model, const Dataset& data, const SolverConfig& cfg,
                           const std::vector<bool>& free_mask = {}) {
  cfg.validate();
  const Layout& l = model.layout();
  const TermLedger ledger = build_ledger(model, data);

  std::vector<Eigen::Index> free;
  for (Eigen::Index k = 0; k < l.size(); ++k) {
    if (free_mask.empty() || free_mask.at(static_cast<std::size_t>(k))) free.push_back(k);
  }
  if (!free_mask.empty() && static_cast<int>(free_mask.size()) != l.size()) {
    throw LayoutMismatch("free mask length does not match layout");
  }
  const auto m = static_cast<Eigen::Index>(free.size());
  auto restrict_vec = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd out(m);
    for (Eigen::Index a = 0; a < m; ++a) out[a] = v[free[a]];
    return out;
  };

  // Residual restricted to the free coordinates; nullopt on overflow.
  auto residual = [&](const UpdateVector& delta) -> std::optional<Eigen::VectorXd> {
    try {
      Eigen::VectorXd f = restrict_vec(eval_F_ledger(ledger, delta));
      if (!f.allFinite()) return std::nullopt;
      return f;
    } catch (const ExponentOverflow&) {
      return std::nullopt;
    }
  };

  SnrResult out;
  out.delta = UpdateVector::Zero(l.size());
  auto f = residual(out.delta);
  if (!f) {
    out.reason = "F(0) is not finite";
    return out;
  }
  double merit = 0.5 * f->squaredNorm();
  double lambda = 0.0;  // plain Newton until a step is rejected

  for (int k = 0;; ++k) {
    out.iterations = k;
    out.residual_inf = detail::inf_norm(*f);
    if (out.residual_inf <= cfg.id_inner_tol) {
      out.termination = Termination::kConverged;
      return out;
    }
    if (k >= cfg.id_max_inner) {
      out.termination = Termination::kMaxIters;
      out.reason = "inner iteration budget exhausted";
      return out;
    }

    HessianMatrix j_full = eval_J(model, out.delta, data, cfg.id_jacobian);
    Eigen::MatrixXd jac(m, m);
    for (Eigen::Index a = 0; a < m; ++a) {
      for (Eigen::Index b = 0; b < m; ++b) jac(a, b) = j_full.values(free[a], free[b]);
    }

    // Escalate the Levenberg shift until some backtracked step lowers the
    // merit 0.5 ||F||^2, or give up.
    bool accepted = false;
    for (int attempt = 0; attempt < 16 && !accepted; ++attempt) {
      const Eigen::MatrixXd shifted_jac = jac + lambda * Eigen::MatrixXd::Identity(m, m);
      const Eigen::PartialPivLU<Eigen::MatrixXd> lu(shifted_jac);
      const Eigen::VectorXd step = lu.solve(-*f);
      const double rcond = lu.rcond();
      if (!step.allFinite() || !(rcond > 1e-14)) {
        lambda = lambda == 0.0 ? cfg.id_lambda0 : lambda * cfg.id_lambda_up;
        continue;
      }
      Eigen::VectorXd full_step = Eigen::VectorXd::Zero(l.size());
      for (Eigen::Index a = 0; a < m; ++a) full_step[free[a]] = step[a];

      double t = 1.0;
      for (int h = 0; h <= cfg.id_max_halvings; ++h, t *= cfg.id_backtrack_factor) {
        const UpdateVector trial = out.delta + t * full_step;
        const auto f_trial = residual(trial);
        if (!f_trial) continue;
        const double merit_trial = 0.5 * f_trial->squaredNorm();
        if (merit_trial < merit) {
          out.delta = trial;
          f = f_trial;
          merit = merit_trial;
          accepted = true;
          break;
        }
      }
      if (accepted) {
        lambda /= cfg.id_lambda_down;
        if (lambda < cfg.id_lambda0) lambda = 0.0;
      } else {
        lambda = lambda == 0.0 ? cfg.id_lambda0 : lambda * cfg.id_lambda_up;
      }
    }
    if (!accepted) {
      out.iterations = k + 1;
      out.residual_inf = detail::inf_norm(*f);
      out.termination = Termination::kStalled;
      out.reason = "merit not reduced after full backtracking budget";
      return out;
    }
  }
}

/// Outer loop: build the ledger at theta, solve F(delta) = 0, apply
/// theta <- theta + delta. Roots that do not lower the loss are reported
/// as Stalled.
inline SolveReport infinite_descent(const ModelParams& init, const Dataset& data,
                                    const SolverConfig& cfg) {
  cfg.validate();
  const detail::Stopwatch clock;
  SolveReport report;
  report.method = method_name(Method::kInfiniteDescent);
  ModelParams theta = init;
  try {
    const double phi0 = loss(theta, data);
    GradientVector g = gradient(theta, data);
    report.initial_loss = phi0;
    detail::record(report, theta, phi0, g);
    if (detail::inf_norm(g) <= cfg.id_inner_tol) {
      report.termination = Termination::kConverged;
      detail::finish(report, theta, data, clock);
      return report;
    }
    for (int outer = 0; outer < cfg.id_max_outer; ++outer) {
      const SnrResult snr = snr_solve(theta, data, cfg);
      report.outer_iterations = outer + 1;
      report.inner_iterations += snr.iterations;
      theta = shifted(theta, snr.delta);
      g = gradient(theta, data);
      detail::record(report, theta, loss(theta, data), g);
      report.termination = snr.termination;
      report.reason = snr.reason;
      if (snr.termination == Termination::kConverged) break;
    }
    detail::finish(report, theta, data, clock);
    if (report.final_loss > phi0) {
      report.termination = Termination::kStalled;
      report.reason = "stationary point does not decrease the loss (initial " +
                      std::to_string(phi0) + ", final " + std::to_string(report.final_loss) + ")";
    }
  } catch (const Error& e) {
    report.termination = Termination::kError;
    report.reason = e.what();
    detail::finish(report, theta, data, clock);
  }
  return report;
}

/// Gradient descent with Armijo backtracking for sd_max_iters steps, or
/// until ||grad||_inf < 1e-15.
inline SolveReport steepest_descent(const ModelParams& init, const Dataset& data,
                                    const SolverConfig& cfg) {
  cfg.validate();
  const detail::Stopwatch clock;
  SolveReport report;
  report.method = method_name(Method::kSteepestDescent);
  ModelParams theta = init;
  try {
    double phi = loss(theta, data);
    report.initial_loss = phi;
    GradientVector g = gradient(theta, data);
    detail::record(report, theta, phi, g);
    report.termination = Termination::kMaxIters;
    for (int it = 0; it < cfg.sd_max_iters; ++it) {
      if (detail::inf_norm(g) < 1e-15) {
        report.termination = Termination::kConverged;
        break;
      }
      const Eigen::VectorXd direction = -g;
      double t = 0.0;
      try {
        t = armijo_search(theta, direction, data, cfg.sd_c1, cfg.sd_rho, cfg.sd_step0, phi, &g);
      } catch (const LineSearchFailed& e) {
        report.termination = Termination::kStalled;
        report.reason = e.what();
        break;
      }
      theta = shifted(theta, t * direction);
      phi = loss(theta, data);
      g = gradient(theta, data);
      report.outer_iterations = it + 1;
      detail::record(report, theta, phi, g);
    }
  } catch (const Error& e) {
    report.termination = Termination::kError;
    report.reason = e.what();
  }
  detail::finish(report, theta, data, clock);
  return report;
}

struct CgResult {
  Eigen::VectorXd solution;
  int steps = 0;
  bool negative_curvature = false;
};

/// Truncated CG on H p = -g. Stops when ||r|| <= tol, on the step budget,
/// or at the first direction of non-positive curvature (returning -g if
/// that happens on the first step).
inline CgResult truncated_cg(const Eigen::MatrixXd& h, const Eigen::VectorXd& g, double tol,
                             int max_steps) {
  CgResult out;
  out.solution = Eigen::VectorXd::Zero(g.size());
  Eigen::VectorXd r = g;
  Eigen::VectorXd d = -r;
  double rr = r.squaredNorm();
  if (std::sqrt(rr) <= tol) {
    out.solution = -g;
    return out;
  }
  for (int k = 0; k < max_steps; ++k) {
    const Eigen::VectorXd hd = h * d;
    const double curvature = d.dot(hd);
    if (curvature <= 0.0) {
      out.negative_curvature = true;
      if (k == 0) out.solution = -g;
      return out;
    }
    const double alpha = rr / curvature;
    out.solution += alpha * d;
    r += alpha * hd;
    out.steps = k + 1;
    const double rr_next = r.squaredNorm();
    if (std::sqrt(rr_next) <= tol) return out;
    d = -r + (rr_next / rr) * d;
    rr = rr_next;
  }
  return out;
}

/// Line-search Newton-CG: truncated CG on the analytic Hessian, then an
/// Armijo step. Stops at ncg_max_iters or once loss < ncg_loss_tol.
inline SolveReport newton_cg(const ModelParams& init, const Dataset& data,
                             const SolverConfig& cfg) {
  cfg.validate();
  const detail::Stopwatch clock;
  SolveReport report;
  report.method = method_name(Method::kNewtonCG);
  ModelParams theta = init;
  try {
    double phi = loss(theta, data);
    report.initial_loss = phi;
    GradientVector g = gradient(theta, data);
    detail::record(report, theta, phi, g);
    report.termination = Termination::kMaxIters;
    for (int it = 0;; ++it) {
      if (phi < cfg.ncg_loss_tol) {
        report.termination = Termination::kConverged;
        break;
      }
      if (it >= cfg.ncg_max_iters) break;
      const double gnorm = g.norm();
      const double tol = std::min(cfg.ncg_forcing_cap, std::sqrt(gnorm)) * gnorm;
      const HessianMatrix h = hessian(theta, data);
      const CgResult cg = truncated_cg(h.values, g, tol, 20 * static_cast<int>(g.size()));
      Eigen::VectorXd direction = cg.solution;
      if (!(g.dot(direction) < 0.0)) direction = -g;
      double t = 0.0;
      try {
        t = armijo_search(theta, direction, data, cfg.sd_c1, cfg.sd_rho, 1.0, phi, &g);
      } catch (const Error& e) {
        report.termination = Termination::kStalled;
        report.reason = e.what();
        break;
      }
      theta = shifted(theta, t * direction);
      phi = loss(theta, data);
      g = gradient(theta, data);
      report.outer_iterations = it + 1;
      detail::record(report, theta, phi, g);
    }
  } catch (const Error& e) {
    report.termination = Termination::kError;
    report.reason = e.what();
  }
  detail::finish(report, theta, data, clock);
  return report;
}

inline SolveReport solve(const ModelParams& init, const Dataset& data, const SolverConfig& cfg) {
  switch (cfg.method) {
    case Method::kInfiniteDescent: return infinite_descent(init, data, cfg);
    case Method::kSteepestDescent: return steepest_descent(init, data, cfg);
    case Method::kNewtonCG: return newton_cg(init, data, cfg);
  }
  throw Error("unknown method");
}

}  // namespace aion
