#pragma once

// Separable exponential-trigonometric model:
//
//   f(x) = sum_j prod_i psi_{j,i}(x_i),
//   psi(x) = sum_p A_p exp(alpha_p x) cos(omega_p x + phi_p).
//
// Each atom is real-valued; the complex carrier
// u_p(x) = exp(alpha_p x + i (omega_p x + phi_p)) is its unit-amplitude
// building block and psi = sum_p A_p Re u_p.

#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "aion/errors.hpp"

namespace aion {

/// |alpha * x| above this is rejected rather than overflowing exp().
inline constexpr double kExponentGuard = 700.0;

enum class ParamKind : int { kAmplitude = 0, kGrowth = 1, kFrequency = 2, kPhase = 3 };
inline constexpr int kParamsPerTerm = 4;

struct AtomParams {
  std::vector<double> amplitude;
  std::vector<double> growth;
  std::vector<double> frequency;
  std::vector<double> phase;

  /// Single-term atom.
  static AtomParams single(double a, double alpha, double omega, double phi) {
    return AtomParams{{a}, {alpha}, {omega}, {phi}};
  }

  std::size_t terms() const noexcept { return amplitude.size(); }

  /// Throws LayoutMismatch or NonFiniteInput when an invariant fails.
  void validate() const {
    const std::size_t p = amplitude.size();
    if (p == 0 || growth.size() != p || frequency.size() != p || phase.size() != p) {
      throw LayoutMismatch("atom parameter arrays must share a length >= 1");
    }
    for (std::size_t k = 0; k < p; ++k) {
      if (!std::isfinite(amplitude[k]) || !std::isfinite(growth[k]) ||
          !std::isfinite(frequency[k]) || !std::isfinite(phase[k])) {
        throw NonFiniteInput("atom parameter is not finite");
      }
    }
  }

  bool operator==(const AtomParams&) const = default;
};

/// Shape of a parameter dictionary: rank r, input dimension d, terms per
/// atom P, and whether a rank shares one atom across all dimensions.
struct Layout {
  int rank = 1;
  int dim = 1;
  int terms = 1;
  bool tied = false;

  void validate() const {
    if (rank < 1) throw LayoutMismatch("rank must be >= 1");
    if (dim < 1) throw LayoutMismatch("dim must be >= 1");
    if (terms < 1) throw LayoutMismatch("terms must be >= 1");
  }

  int atoms_per_rank() const noexcept { return tied ? 1 : dim; }
  int atom_count() const noexcept { return rank * atoms_per_rank(); }
  /// Scalar parameters belonging to one rank.
  int rank_block() const noexcept { return kParamsPerTerm * terms * atoms_per_rank(); }
  /// Total scalar parameter count K.
  int size() const noexcept { return rank * rank_block(); }

  /// Storage slot of the atom used by rank j at coordinate i.
  int atom_slot(int j, int i) const noexcept { return j * atoms_per_rank() + (tied ? 0 : i); }

  /// Flat index of one scalar: rank-major, then dimension (untied only),
  /// then term, then (A, alpha, omega, phi).
  int index(int j, int i, int p, ParamKind kind) const noexcept {
    return j * rank_block() + (tied ? 0 : i) * kParamsPerTerm * terms + p * kParamsPerTerm +
           static_cast<int>(kind);
  }

  int rank_of(int k) const noexcept { return k / rank_block(); }

  bool operator==(const Layout&) const = default;
};

class ModelParams;

/// Canonical flat view of a parameter dictionary or of an update.
struct ParamVector {
  Layout layout;
  Eigen::VectorXd values;

  ParamVector() = default;
  ParamVector(Layout l, Eigen::VectorXd v) : layout(l), values(std::move(v)) {
    if (values.size() != layout.size()) {
      throw LayoutMismatch("vector length " + std::to_string(values.size()) +
                           " does not match layout size " + std::to_string(layout.size()));
    }
  }

  Eigen::Index size() const noexcept { return values.size(); }
  double operator[](Eigen::Index k) const { return values[k]; }
  double& operator[](Eigen::Index k) { return values[k]; }

  bool operator==(const ParamVector& o) const {
    return layout == o.layout && values.size() == o.values.size() && values == o.values;
  }
};

class ModelParams {
 public:
  ModelParams() = default;

  /// Atoms ordered by Layout::atom_slot.
  ModelParams(Layout layout, std::vector<AtomParams> atoms)
      : layout_(layout), atoms_(std::move(atoms)) {
    layout_.validate();
    if (static_cast<int>(atoms_.size()) != layout_.atom_count()) {
      throw LayoutMismatch("expected " + std::to_string(layout_.atom_count()) + " atoms, got " +
                           std::to_string(atoms_.size()));
    }
    for (const auto& a : atoms_) {
      a.validate();
      if (static_cast<int>(a.terms()) != layout_.terms) {
        throw LayoutMismatch("atom term count does not match layout");
      }
    }
  }

  /// All amplitudes, growth rates, frequencies and phases zero.
  static ModelParams zeros(Layout layout) {
    layout.validate();
    const auto p = static_cast<std::size_t>(layout.terms);
    AtomParams a{std::vector<double>(p, 0.0), std::vector<double>(p, 0.0),
                 std::vector<double>(p, 0.0), std::vector<double>(p, 0.0)};
    return ModelParams(layout, std::vector<AtomParams>(layout.atom_count(), a));
  }

  const Layout& layout() const noexcept { return layout_; }
  const AtomParams& atom(int j, int i) const { return atoms_[layout_.atom_slot(j, i)]; }
  const std::vector<AtomParams>& atoms() const noexcept { return atoms_; }

  bool operator==(const ModelParams&) const = default;

 private:
  Layout layout_;
  std::vector<AtomParams> atoms_;
};

class Dataset {
 public:
  Dataset() = default;

  /// points: N x d, targets: N.
  Dataset(Eigen::MatrixXd points, Eigen::VectorXd targets)
      : points_(std::move(points)), targets_(std::move(targets)) {
    if (points_.rows() < 1 || points_.cols() < 1) {
      throw DimensionMismatch("dataset needs at least one point and one dimension");
    }
    if (points_.rows() != targets_.size()) {
      throw DimensionMismatch("point count and target count differ");
    }
    if (!points_.allFinite() || !targets_.allFinite()) {
      throw NonFiniteInput("dataset contains non-finite values");
    }
  }

  Eigen::Index size() const noexcept { return points_.rows(); }
  Eigen::Index dim() const noexcept { return points_.cols(); }
  const Eigen::MatrixXd& points() const noexcept { return points_; }
  const Eigen::VectorXd& targets() const noexcept { return targets_; }

  bool operator==(const Dataset& o) const {
    return points_.rows() == o.points_.rows() && points_.cols() == o.points_.cols() &&
           points_ == o.points_ && targets_ == o.targets_;
  }

 private:
  Eigen::MatrixXd points_;
  Eigen::VectorXd targets_;
};

namespace detail {

inline void check_exponent(double growth, double x) {
  if (!std::isfinite(growth) || !std::isfinite(x)) {
    throw NonFiniteInput("non-finite atom input");
  }
  if (std::abs(growth * x) > kExponentGuard) {
    throw ExponentOverflow("|alpha*x| = " + std::to_string(std::abs(growth * x)) +
                           " exceeds guard " + std::to_string(kExponentGuard));
  }
}

}  // namespace detail

/// Unit-amplitude complex carrier exp(alpha x + i (omega x + phi)).
inline std::complex<double> carrier(double growth, double frequency, double phase, double x) {
  detail::check_exponent(growth, x);
  return std::polar(std::exp(growth * x), frequency * x + phase);
}

inline double eval_atom(const AtomParams& atom, double x) {
  double sum = 0.0;
  for (std::size_t p = 0; p < atom.terms(); ++p) {
    if (!std::isfinite(atom.amplitude[p]) || !std::isfinite(atom.frequency[p]) ||
        !std::isfinite(atom.phase[p])) {
      throw NonFiniteInput("non-finite atom parameter");
    }
    detail::check_exponent(atom.growth[p], x);
    sum += atom.amplitude[p] * std::exp(atom.growth[p] * x) *
           std::cos(atom.frequency[p] * x + atom.phase[p]);
  }
  return sum;
}

inline double eval_model(const ModelParams& model, std::span<const double> x) {
  const Layout& l = model.layout();
  if (static_cast<int>(x.size()) != l.dim) {
    throw DimensionMismatch("point has dimension " + std::to_string(x.size()) +
                            ", model expects " + std::to_string(l.dim));
  }
  double f = 0.0;
  for (int j = 0; j < l.rank; ++j) {
    double prod = 1.0;
    for (int i = 0; i < l.dim; ++i) prod *= eval_atom(model.atom(j, i), x[i]);
    f += prod;
  }
  return f;
}

inline double eval_model(const ModelParams& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  return eval_model(model, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

inline ParamVector flatten(const ModelParams& model) {
  const Layout& l = model.layout();
  Eigen::VectorXd v(l.size());
  for (int j = 0; j < l.rank; ++j) {
    for (int i = 0; i < l.atoms_per_rank(); ++i) {
      const AtomParams& a = model.atom(j, i);
      for (int p = 0; p < l.terms; ++p) {
        v[l.index(j, i, p, ParamKind::kAmplitude)] = a.amplitude[p];
        v[l.index(j, i, p, ParamKind::kGrowth)] = a.growth[p];
        v[l.index(j, i, p, ParamKind::kFrequency)] = a.frequency[p];
        v[l.index(j, i, p, ParamKind::kPhase)] = a.phase[p];
      }
    }
  }
  return ParamVector(l, std::move(v));
}

inline ModelParams unflatten(const ParamVector& v) {
  const Layout& l = v.layout;
  l.validate();
  if (v.values.size() != l.size()) throw LayoutMismatch("vector length does not match layout");
  std::vector<AtomParams> atoms;
  atoms.reserve(l.atom_count());
  const auto p_count = static_cast<std::size_t>(l.terms);
  for (int j = 0; j < l.rank; ++j) {
    for (int i = 0; i < l.atoms_per_rank(); ++i) {
      AtomParams a{std::vector<double>(p_count), std::vector<double>(p_count),
                   std::vector<double>(p_count), std::vector<double>(p_count)};
      for (int p = 0; p < l.terms; ++p) {
        a.amplitude[p] = v[l.index(j, i, p, ParamKind::kAmplitude)];
        a.growth[p] = v[l.index(j, i, p, ParamKind::kGrowth)];
        a.frequency[p] = v[l.index(j, i, p, ParamKind::kFrequency)];
        a.phase[p] = v[l.index(j, i, p, ParamKind::kPhase)];
      }
      atoms.push_back(std::move(a));
    }
  }
  return ModelParams(l, std::move(atoms));
}

/// Theta + delta in flat coordinates.
inline ModelParams shifted(const ModelParams& model, const Eigen::VectorXd& delta) {
  ParamVector v = flatten(model);
  if (delta.size() != v.size()) throw LayoutMismatch("update length does not match layout");
  v.values += delta;
  return unflatten(v);
}

inline void check_compatible(const ModelParams& model, const Dataset& data) {
  if (data.dim() != model.layout().dim) {
    throw DimensionMismatch("dataset dimension " + std::to_string(data.dim()) +
                            " does not match model dimension " +
                            std::to_string(model.layout().dim));
  }
}

/// Least-squares objective sum_n (f(x_n) - y_n)^2.
inline double loss(const ModelParams& model, const Dataset& data) {
  check_compatible(model, data);
  double phi = 0.0;
  for (Eigen::Index n = 0; n < data.size(); ++n) {
    const Eigen::VectorXd x = data.points().row(n).transpose();
    const double r = eval_model(model, x) - data.targets()[n];
    phi += r * r;
  }
  return phi;
}

// Parameter names: A_j, alpha_j, omega_j, phi_j (1-based rank); untied
// models append _i for the dimension, P > 1 appends [p].

inline std::string param_name(const Layout& l, int k) {
  static constexpr const char* kKinds[] = {"A", "alpha", "omega", "phi"};
  const int j = l.rank_of(k);
  int rem = k - j * l.rank_block();
  const int per_atom = kParamsPerTerm * l.terms;
  const int i = rem / per_atom;
  rem -= i * per_atom;
  const int p = rem / kParamsPerTerm;
  const int kind = rem % kParamsPerTerm;
  std::string name = std::string(kKinds[kind]) + "_" + std::to_string(j + 1);
  if (!l.tied) name += "_" + std::to_string(i + 1);
  if (l.terms > 1) name += "[" + std::to_string(p + 1) + "]";
  return name;
}

inline std::optional<int> param_index(const Layout& l, std::string_view name) {
  for (int k = 0; k < l.size(); ++k) {
    if (param_name(l, k) == name) return k;
  }
  return std::nullopt;
}

}  // namespace aion
