#pragma once

// Toy-problem construction, loss-landscape slices and the property
// verification suite.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "aion/calculus.hpp"
#include "aion/errors.hpp"
#include "aion/model.hpp"
#include "aion/solvers.hpp"

namespace aion {

using TargetFn = std::function<double(std::span<const double>)>;

/// Named scalar targets for grid datasets.
inline TargetFn target_by_name(std::string_view name) {
  using std::numbers::pi;
  if (name == "cos_pi_diff") {
    return [](std::span<const double> x) {
      if (x.size() != 2) throw DimensionMismatch("cos_pi_diff needs d = 2");
      return std::cos(pi * (x[0] - x[1]));
    };
  }
  if (name == "cos_pi_sum") {
    return [](std::span<const double> x) {
      double s = 0.0;
      for (double v : x) s += v;
      return std::cos(pi * s);
    };
  }
  if (name == "one") return [](std::span<const double>) { return 1.0; };
  if (name == "zero") return [](std::span<const double>) { return 0.0; };
  throw UnknownTarget("unknown target '" + std::string(name) + "'");
}

/// Uniform inclusive grid with points_per_axis^dim rows in lexicographic
/// order (last axis fastest).
inline Dataset make_grid_dataset(int points_per_axis, int dim, double lo, double hi,
                                 std::string_view target) {
  if (points_per_axis < 2) throw DimensionMismatch("points_per_axis must be >= 2");
  if (dim < 1) throw DimensionMismatch("dim must be >= 1");
  const TargetFn fn = target_by_name(target);
  Eigen::Index n = 1;
  for (int i = 0; i < dim; ++i) n *= points_per_axis;
  Eigen::MatrixXd x(n, dim);
  Eigen::VectorXd y(n);
  std::vector<int> idx(dim, 0);
  std::vector<double> point(dim);
  const double step = (hi - lo) / (points_per_axis - 1);
  for (Eigen::Index row = 0; row < n; ++row) {
    for (int i = 0; i < dim; ++i) {
      // Endpoints land exactly on lo and hi.
      point[i] = idx[i] == points_per_axis - 1 ? hi : lo + idx[i] * step;
      x(row, i) = point[i];
    }
    y[row] = fn(point);
    for (int i = dim - 1; i >= 0; --i) {
      if (++idx[i] < points_per_axis) break;
      idx[i] = 0;
    }
  }
  return Dataset(std::move(x), std::move(y));
}

/// The 25 x 25 grid of cos(pi (x - y)) on [0, 1]^2.
inline Dataset demo_dataset() { return make_grid_dataset(25, 2, 0.0, 1.0, "cos_pi_diff"); }

inline constexpr Layout kDemoLayout{2, 2, 1, true};

/// Default start for the demo: inside the basin of the exact solution but
/// clearly unconverged.
inline ModelParams demo_init() {
  return ModelParams(kDemoLayout, {AtomParams::single(1.2, 0.1, 3.0, 0.2),
                                   AtomParams::single(0.8, -0.1, 3.3, -1.4)});
}

/// cos(pi x) cos(pi y) + sin(pi x) sin(pi y) = cos(pi (x - y)).
inline ModelParams demo_optimum() {
  using std::numbers::pi;
  return ModelParams(kDemoLayout, {AtomParams::single(1.0, 0.0, pi, 0.0),
                                   AtomParams::single(1.0, 0.0, pi, -pi / 2.0)});
}

// ---------------------------------------------------------------------------
// Landscape slices

struct GridRange {
  double lo = 0.0;
  double hi = 0.0;
  int count = 1;

  std::vector<double> points() const {
    std::vector<double> out(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
      out[k] = count == 1 ? lo : (k == count - 1 ? hi : lo + (hi - lo) * k / (count - 1));
    }
    return out;
  }

  bool operator==(const GridRange&) const = default;
};

struct SliceAxis {
  int index = 0;
  std::string name;
};

struct ProjectedPath {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

struct LandscapeSlice {
  SliceAxis axis1;
  SliceAxis axis2;
  std::vector<double> grid1;
  std::vector<double> grid2;
  /// grid1.size() x grid2.size(); +inf where `overflow` is set.
  Eigen::MatrixXd loss_values;
  std::vector<std::vector<bool>> overflow;
  std::vector<ProjectedPath> trajectories;
};

struct NamedTrajectory {
  std::string name;
  std::vector<ParamVector> points;
};

/// Loss over grid1 x grid2 on two coordinates, all others fixed at `ref`.
inline LandscapeSlice landscape_slice(const ModelParams& ref, int axis1, int axis2,
                                      const std::vector<double>& grid1,
                                      const std::vector<double>& grid2, const Dataset& data,
                                      const std::vector<NamedTrajectory>& trajectories = {}) {
  const Layout& l = ref.layout();
  if (axis1 < 0 || axis1 >= l.size() || axis2 < 0 || axis2 >= l.size()) {
    throw LayoutMismatch("landscape axis index out of range");
  }
  if (axis1 == axis2) throw LayoutMismatch("landscape axes must be distinct");
  check_compatible(ref, data);

  LandscapeSlice slice;
  slice.axis1 = {axis1, param_name(l, axis1)};
  slice.axis2 = {axis2, param_name(l, axis2)};
  slice.grid1 = grid1;
  slice.grid2 = grid2;
  const auto n1 = static_cast<Eigen::Index>(grid1.size());
  const auto n2 = static_cast<Eigen::Index>(grid2.size());
  slice.loss_values.resize(n1, n2);
  slice.overflow.assign(grid1.size(), std::vector<bool>(grid2.size(), false));

  ParamVector v = flatten(ref);
  for (Eigen::Index a = 0; a < n1; ++a) {
    for (Eigen::Index b = 0; b < n2; ++b) {
      v[axis1] = grid1[a];
      v[axis2] = grid2[b];
      double phi = std::numeric_limits<double>::infinity();
      try {
        phi = loss(unflatten(v), data);
      } catch (const ExponentOverflow&) {
      }
      if (!std::isfinite(phi)) {
        phi = std::numeric_limits<double>::infinity();
        slice.overflow[a][b] = true;
      }
      slice.loss_values(a, b) = phi;
    }
  }
  for (const auto& t : trajectories) {
    ProjectedPath path{t.name, {}};
    for (const auto& p : t.points) path.points.emplace_back(p[axis1], p[axis2]);
    slice.trajectories.push_back(std::move(path));
  }
  return slice;
}

// ---------------------------------------------------------------------------
// Verification suite

struct PropertyResult {
  std::string name;
  double max_error = 0.0;
  double tolerance = 0.0;
  int trials = 0;
  bool passed = false;
};

struct VerifyReport {
  std::vector<PropertyResult> properties;
  bool all_passed() const {
    for (const auto& p : properties) {
      if (!p.passed) return false;
    }
    return !properties.empty();
  }
};

struct VerifyOptions {
  std::uint64_t seed = 20251018;
  int trials = 100;
  /// Negative control: flips the sign of the largest gradient entry
  /// before comparing against finite differences.
  bool corrupt_gradient = false;
};

/// Random parameters and datasets for property checks.
class RandomProblems {
 public:
  explicit RandomProblems(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  Layout layout(int max_rank = 3, int max_dim = 3, int max_terms = 2) {
    return Layout{pick(1, max_rank), pick(1, max_dim), pick(1, max_terms), pick(0, 1) == 1};
  }

  AtomParams atom(int terms) {
    AtomParams a;
    for (int p = 0; p < terms; ++p) {
      a.amplitude.push_back(uniform(-1.5, 1.5));
      a.growth.push_back(uniform(-1.0, 1.0));
      a.frequency.push_back(uniform(-4.0, 4.0));
      a.phase.push_back(uniform(-std::numbers::pi, std::numbers::pi));
    }
    return a;
  }

  ModelParams params(const Layout& l) {
    std::vector<AtomParams> atoms;
    for (int k = 0; k < l.atom_count(); ++k) atoms.push_back(atom(l.terms));
    return ModelParams(l, std::move(atoms));
  }

  Dataset dataset(int dim, int points) {
    Eigen::MatrixXd x(points, dim);
    Eigen::VectorXd y(points);
    for (int n = 0; n < points; ++n) {
      for (int i = 0; i < dim; ++i) x(n, i) = uniform(-1.0, 1.0);
      y[n] = uniform(-1.0, 1.0);
    }
    return Dataset(std::move(x), std::move(y));
  }

  Eigen::VectorXd vector(Eigen::Index size, double half_width) {
    Eigen::VectorXd v(size);
    for (Eigen::Index k = 0; k < size; ++k) v[k] = uniform(-half_width, half_width);
    return v;
  }

 private:
  std::mt19937_64 rng_;
};

/// Central differences of a scalar function of the flat parameters.
inline Eigen::VectorXd fd_gradient(const std::function<double(const ModelParams&)>& fn,
                                   const ModelParams& at, double step) {
  const ParamVector base = flatten(at);
  Eigen::VectorXd out(base.size());
  for (Eigen::Index k = 0; k < base.size(); ++k) {
    ParamVector plus = base, minus = base;
    plus[k] += step;
    minus[k] -= step;
    out[k] = (fn(unflatten(plus)) - fn(unflatten(minus))) / (2.0 * step);
  }
  return out;
}

/// Central differences of a vector function; column k is d fn / d theta_k.
inline Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const ModelParams&)>& fn,
                                   const ModelParams& at, double step) {
  const ParamVector base = flatten(at);
  Eigen::MatrixXd out(base.size(), base.size());
  for (Eigen::Index k = 0; k < base.size(); ++k) {
    ParamVector plus = base, minus = base;
    plus[k] += step;
    minus[k] -= step;
    out.col(k) = (fn(unflatten(plus)) - fn(unflatten(minus))) / (2.0 * step);
  }
  return out;
}

namespace detail {

inline double max_abs(const Eigen::MatrixXd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

inline double cross_rank_max(const Eigen::MatrixXd& m, const Layout& l) {
  double worst = 0.0;
  for (Eigen::Index a = 0; a < m.rows(); ++a) {
    for (Eigen::Index b = 0; b < m.cols(); ++b) {
      if (l.rank_of(static_cast<int>(a)) != l.rank_of(static_cast<int>(b))) {
        worst = std::max(worst, std::abs(m(a, b)));
      }
    }
  }
  return worst;
}

}  // namespace detail

/// Runs every model/calculus property `trials` times and reports the
/// worst error seen against its tolerance.
inline VerifyReport verify_suite(const VerifyOptions& opts) {
  if (opts.trials < 1) throw Error("trials must be >= 1");
  RandomProblems gen(opts.seed);
  const Dataset demo = demo_dataset();
  VerifyReport report;

  auto run = [&](std::string name, double tol, auto&& one_trial) {
    PropertyResult r{std::move(name), 0.0, tol, 0, false};
    for (int t = 0; t < opts.trials; ++t) {
      const double err = one_trial();
      r.max_error = std::isnan(err) ? std::numeric_limits<double>::infinity()
                                    : std::max(r.max_error, err);
      ++r.trials;
    }
    r.passed = r.max_error <= tol;
    report.properties.push_back(std::move(r));
  };

  run("gradient_vs_finite_differences", 1e-6, [&] {
    const Layout l = gen.layout();
    const ModelParams theta = gen.params(l);
    const Dataset data = gen.dataset(l.dim, 6);
    GradientVector g = gradient(theta, data);
    if (opts.corrupt_gradient) {
      Eigen::Index k = 0;
      g.cwiseAbs().maxCoeff(&k);
      g[k] = -g[k];
    }
    const Eigen::VectorXd fd =
        fd_gradient([&](const ModelParams& m) { return loss(m, data); }, theta, 1e-6);
    return detail::inf_norm(g - fd) / (1.0 + detail::inf_norm(g));
  });

  run("hessian_vs_finite_differences", 1e-5, [&] {
    const Layout l = gen.layout();
    const ModelParams theta = gen.params(l);
    const Dataset data = gen.dataset(l.dim, 5);
    const HessianMatrix h = hessian(theta, data);
    const Eigen::MatrixXd fd =
        fd_jacobian([&](const ModelParams& m) { return gradient(m, data); }, theta, 1e-5);
    return detail::max_abs(h.values - fd) / (1.0 + detail::max_abs(h.values));
  });

  run("hessian_exact_symmetry", 0.0, [&] {
    const Layout l = gen.layout();
    const HessianMatrix h = hessian(gen.params(l), gen.dataset(l.dim, 5));
    return detail::max_abs(h.values - h.values.transpose());
  });

  run("resummation_ledger_vs_direct", 1e-10, [&] {
    const Layout l = gen.layout(3, 2, 2);
    const Layout demo_layout{l.rank, 2, l.terms, l.tied};
    const ModelParams theta = gen.params(demo_layout);
    const UpdateVector delta = gen.vector(demo_layout.size(), 0.5);
    const TermLedger ledger = build_ledger(theta, demo);
    const GradientVector direct = eval_F_direct(theta, delta, demo);
    const GradientVector resummed = eval_F_ledger(ledger, delta);
    return detail::inf_norm(resummed - direct) / (1.0 + detail::inf_norm(direct));
  });

  run("model_hessian_cross_rank_structural", 0.0, [&] {
    const Layout l = gen.layout();
    const ModelParams theta = gen.params(l);
    const Eigen::VectorXd x = gen.vector(l.dim, 1.0);
    return detail::cross_rank_max(model_jet(theta, x).hess, l);
  });

  run("model_hessian_cross_rank_fd", 1e-5, [&] {
    const Layout l = gen.layout();
    const ModelParams theta = gen.params(l);
    const Eigen::VectorXd x = gen.vector(l.dim, 1.0);
    const Eigen::MatrixXd fd = fd_jacobian(
        [&](const ModelParams& m) { return model_jet(m, x, false).grad; }, theta, 1e-5);
    const ModelJet jet = model_jet(theta, x);
    return detail::cross_rank_max(fd, l) / (1.0 + detail::max_abs(jet.hess));
  });

  run("atom_differentiation_closure", 1e-6, [&] {
    const AtomParams a = gen.atom(1);
    const double amp = a.amplitude[0], alpha = a.growth[0], omega = a.frequency[0];
    const AtomParams deriv = AtomParams::single(amp * std::hypot(alpha, omega), alpha, omega,
                                                a.phase[0] + std::atan2(omega, alpha));
    const double x = gen.uniform(-1.0, 1.0);
    const double h = 1e-6;
    const double fd = (eval_atom(a, x + h) - eval_atom(a, x - h)) / (2.0 * h);
    const double closed = eval_atom(deriv, x);
    return std::abs(fd - closed) / (1.0 + std::abs(closed));
  });

  run("atom_phase_periodicity", 1e-12, [&] {
    AtomParams a = gen.atom(gen.pick(1, 2));
    const double x = gen.uniform(-1.0, 1.0);
    const double before = eval_atom(a, x);
    double scale = 0.0;
    for (std::size_t p = 0; p < a.terms(); ++p) {
      scale += std::abs(a.amplitude[p]) * std::exp(a.growth[p] * x);
      a.phase[p] += 2.0 * std::numbers::pi;
    }
    return std::abs(eval_atom(a, x) - before) / std::max(scale, 1e-300);
  });

  run("rank_additivity", 1e-14, [&] {
    const Layout l = gen.layout();
    const ModelParams theta = gen.params(l);
    const Eigen::VectorXd x = gen.vector(l.dim, 1.0);
    double sum = 0.0, scale = 0.0;
    for (int j = 0; j < l.rank; ++j) {
      std::vector<AtomParams> atoms;
      for (int i = 0; i < l.atoms_per_rank(); ++i) atoms.push_back(theta.atom(j, i));
      const double fj = eval_model(ModelParams(Layout{1, l.dim, l.terms, l.tied}, atoms), x);
      sum += fj;
      scale += std::abs(fj);
    }
    return std::abs(eval_model(theta, x) - sum) / std::max(scale, 1e-300);
  });

  run("ledger_reconstructs_model", 1e-13, [&] {
    const Layout l = gen.layout();
    const ModelParams theta = gen.params(l);
    const Dataset data = gen.dataset(l.dim, 4);
    const TermLedger ledger = build_ledger(theta, data);
    double worst = 0.0;
    for (Eigen::Index n = 0; n < data.size(); ++n) {
      const Eigen::VectorXd x = data.points().row(n).transpose();
      const double f = eval_model(theta, x);
      for (int i = 0; i < l.dim; ++i) {
        double scale = 0.0;
        for (int j = 0; j < l.rank; ++j) {
          scale += std::abs(ledger.atom_value(j, n, i) * ledger.partner(j, n, i));
        }
        worst = std::max(worst, std::abs(ledger.reconstruct(n, i) - f) / std::max(scale, 1e-300));
      }
    }
    return worst;
  });

  run("carrier_modulus", 1e-12, [&] {
    const AtomParams a = gen.atom(1);
    const double x = gen.uniform(-1.0, 1.0);
    const auto u = carrier(a.growth[0], a.frequency[0], a.phase[0], x);
    const double expected = std::exp(a.growth[0] * x);
    return std::abs(std::abs(u) - expected) / expected;
  });

  run("flatten_roundtrip_exact", 0.0, [&] {
    const Layout l = gen.layout();
    const ModelParams theta = gen.params(l);
    const ParamVector v = flatten(theta);
    const bool exact = unflatten(v) == theta && flatten(unflatten(v)) == v;
    return exact ? 0.0 : 1.0;
  });

  return report;
}

}  // namespace aion
