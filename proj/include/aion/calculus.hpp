#pragma once

// Exact first and second derivatives of the least-squares objective, the
// term ledger of complex carriers, and the resummed root function
// F(delta) = grad Phi(theta + delta) evaluated from that ledger.

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "aion/errors.hpp"
#include "aion/model.hpp"

namespace aion {

using GradientVector = Eigen::VectorXd;
using UpdateVector = Eigen::VectorXd;

/// Dense K x K matrix plus the coordinate range owned by each rank.
struct HessianMatrix {
  Eigen::MatrixXd values;
  std::vector<std::pair<int, int>> rank_blocks;  // (offset, size) per rank

  Eigen::Index size() const noexcept { return values.rows(); }
};

enum class JacobianMode { kFull, kBlock };

namespace detail {

/// Value, gradient and (optionally) Hessian of one atom with respect to
/// its own 4P parameters, in (A, alpha, omega, phi) order per term.
struct AtomJet {
  double value = 0.0;
  Eigen::VectorXd d1;
  Eigen::MatrixXd d2;
};

/// Adds one term given its amplitude and the real/imaginary parts of its
/// carrier, c = exp(alpha x) cos(omega x + phi), s = exp(alpha x) sin(...).
inline void add_term(AtomJet& jet, int p, double amp, double c, double s, double x,
                     bool second) {
  const int o = p * kParamsPerTerm;
  jet.value += amp * c;
  jet.d1[o + 0] = c;
  jet.d1[o + 1] = amp * x * c;
  jet.d1[o + 2] = -amp * x * s;
  jet.d1[o + 3] = -amp * s;
  if (!second) return;
  const double x2 = x * x;
  // Upper triangle of the 4x4 term block; d2 A^2 = 0.
  const double h[4][4] = {
      {0.0, x * c, -x * s, -s},
      {0.0, amp * x2 * c, -amp * x2 * s, -amp * x * s},
      {0.0, 0.0, -amp * x2 * c, -amp * x * c},
      {0.0, 0.0, 0.0, -amp * c},
  };
  for (int a = 0; a < 4; ++a) {
    for (int b = a; b < 4; ++b) {
      jet.d2(o + a, o + b) = h[a][b];
      jet.d2(o + b, o + a) = h[a][b];
    }
  }
}

inline AtomJet make_jet(int terms, bool second) {
  AtomJet jet;
  jet.d1 = Eigen::VectorXd::Zero(kParamsPerTerm * terms);
  if (second) jet.d2 = Eigen::MatrixXd::Zero(kParamsPerTerm * terms, kParamsPerTerm * terms);
  return jet;
}

/// Direct route: real exp/cos/sin of the current parameters.
inline AtomJet atom_jet(const AtomParams& atom, double x, bool second) {
  const int terms = static_cast<int>(atom.terms());
  AtomJet jet = make_jet(terms, second);
  for (int p = 0; p < terms; ++p) {
    check_exponent(atom.growth[p], x);
    const double e = std::exp(atom.growth[p] * x);
    const double arg = atom.frequency[p] * x + atom.phase[p];
    add_term(jet, p, atom.amplitude[p], e * std::cos(arg), e * std::sin(arg), x, second);
  }
  return jet;
}

/// Value, gradient and Hessian of one separable product term
/// prod_i psi_i(x_i), with respect to its rank's parameter block.
struct RankJet {
  double value = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
};

inline RankJet assemble_rank(std::span<const AtomJet> jets, const Layout& l, bool second) {
  const int d = static_cast<int>(jets.size());
  const int m = kParamsPerTerm * l.terms;
  const auto offset = [&](int i) { return l.tied ? 0 : i * m; };

  // partner[i] = prod_{s != i} psi_s, built from prefix/suffix products.
  std::vector<double> prefix(d + 1, 1.0), suffix(d + 1, 1.0);
  for (int i = 0; i < d; ++i) prefix[i + 1] = prefix[i] * jets[i].value;
  for (int i = d - 1; i >= 0; --i) suffix[i] = suffix[i + 1] * jets[i].value;

  RankJet out;
  out.value = prefix[d];
  out.grad = Eigen::VectorXd::Zero(l.rank_block());
  for (int i = 0; i < d; ++i) {
    out.grad.segment(offset(i), m) += jets[i].d1 * (prefix[i] * suffix[i + 1]);
  }
  if (!second) return out;

  out.hess = Eigen::MatrixXd::Zero(l.rank_block(), l.rank_block());
  for (int i = 0; i < d; ++i) {
    out.hess.block(offset(i), offset(i), m, m) += jets[i].d2 * (prefix[i] * suffix[i + 1]);
    for (int s = 0; s < d; ++s) {
      if (s == i) continue;
      double partner = 1.0;
      for (int t = 0; t < d; ++t) {
        if (t != i && t != s) partner *= jets[t].value;
      }
      out.hess.block(offset(i), offset(s), m, m) +=
          partner * (jets[i].d1 * jets[s].d1.transpose());
    }
  }
  return out;
}

inline std::vector<std::pair<int, int>> rank_blocks(const Layout& l) {
  std::vector<std::pair<int, int>> blocks;
  for (int j = 0; j < l.rank; ++j) blocks.emplace_back(j * l.rank_block(), l.rank_block());
  return blocks;
}

inline void mirror_upper(Eigen::MatrixXd& h) {
  for (Eigen::Index a = 0; a < h.rows(); ++a) {
    for (Eigen::Index b = a + 1; b < h.cols(); ++b) h(b, a) = h(a, b);
  }
}

}  // namespace detail

/// f, grad f and grad^2 f of the model at one point. Only within-rank
/// blocks of the Hessian are ever written.
struct ModelJet {
  double value = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
};

inline ModelJet model_jet(const ModelParams& model, std::span<const double> x, bool second = true) {
  const Layout& l = model.layout();
  if (static_cast<int>(x.size()) != l.dim) throw DimensionMismatch("point dimension mismatch");
  ModelJet out;
  out.grad = Eigen::VectorXd::Zero(l.size());
  if (second) out.hess = Eigen::MatrixXd::Zero(l.size(), l.size());
  std::vector<detail::AtomJet> jets(l.dim);
  for (int j = 0; j < l.rank; ++j) {
    for (int i = 0; i < l.dim; ++i) jets[i] = detail::atom_jet(model.atom(j, i), x[i], second);
    const detail::RankJet rj = detail::assemble_rank(jets, l, second);
    const int off = j * l.rank_block();
    out.value += rj.value;
    out.grad.segment(off, l.rank_block()) = rj.grad;
    if (second) out.hess.block(off, off, l.rank_block(), l.rank_block()) = rj.hess;
  }
  return out;
}

inline ModelJet model_jet(const ModelParams& model, const Eigen::Ref<const Eigen::VectorXd>& x,
                          bool second = true) {
  return model_jet(model, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
                   second);
}

/// grad Phi = sum_n 2 (f(x_n) - y_n) grad f(x_n), summed in ascending n.
inline GradientVector gradient(const ModelParams& model, const Dataset& data) {
  check_compatible(model, data);
  GradientVector g = GradientVector::Zero(model.layout().size());
  for (Eigen::Index n = 0; n < data.size(); ++n) {
    const Eigen::VectorXd x = data.points().row(n).transpose();
    const ModelJet jet = model_jet(model, x, false);
    g += (2.0 * (jet.value - data.targets()[n])) * jet.grad;
  }
  return g;
}

/// grad^2 Phi = sum_n 2 [grad f grad f^T + (f - y) grad^2 f].
inline HessianMatrix hessian(const ModelParams& model, const Dataset& data) {
  check_compatible(model, data);
  const Layout& l = model.layout();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(l.size(), l.size());
  for (Eigen::Index n = 0; n < data.size(); ++n) {
    const Eigen::VectorXd x = data.points().row(n).transpose();
    const ModelJet jet = model_jet(model, x, true);
    const double r = jet.value - data.targets()[n];
    h.triangularView<Eigen::Upper>() +=
        2.0 * (jet.grad * jet.grad.transpose() + r * jet.hess);
  }
  detail::mirror_upper(h);
  return HessianMatrix{std::move(h), detail::rank_blocks(l)};
}

/// Carriers, atom values and partner products of every
/// (rank j, point n, dimension i, term p) at a base point.
class TermLedger {
 public:
  const ModelParams& base() const noexcept { return base_; }
  const Layout& layout() const noexcept { return base_.layout(); }
  Eigen::Index points() const noexcept { return coords_.rows(); }
  const Eigen::MatrixXd& coords() const noexcept { return coords_; }
  const Eigen::VectorXd& targets() const noexcept { return targets_; }

  std::complex<double> carrier(int j, Eigen::Index n, int i, int p) const {
    return carriers_[atom_entry(j, n, i) * layout().terms + p];
  }
  double atom_value(int j, Eigen::Index n, int i) const { return atom_values_[atom_entry(j, n, i)]; }
  double partner(int j, Eigen::Index n, int i) const { return partners_[atom_entry(j, n, i)]; }

  /// sum_j psi_i * partner_i for a fixed coordinate i.
  double reconstruct(Eigen::Index n, int i) const {
    double f = 0.0;
    for (int j = 0; j < layout().rank; ++j) f += atom_value(j, n, i) * partner(j, n, i);
    return f;
  }

  friend TermLedger build_ledger(const ModelParams& model, const Dataset& data);

 private:
  std::size_t atom_entry(int j, Eigen::Index n, int i) const {
    return (static_cast<std::size_t>(j) * static_cast<std::size_t>(points()) +
            static_cast<std::size_t>(n)) *
               static_cast<std::size_t>(layout().dim) +
           static_cast<std::size_t>(i);
  }

  ModelParams base_;
  Eigen::MatrixXd coords_;
  Eigen::VectorXd targets_;
  std::vector<std::complex<double>> carriers_;
  std::vector<double> atom_values_;
  std::vector<double> partners_;
};

inline TermLedger build_ledger(const ModelParams& model, const Dataset& data) {
  check_compatible(model, data);
  const Layout& l = model.layout();
  TermLedger ledger;
  ledger.base_ = model;
  ledger.coords_ = data.points();
  ledger.targets_ = data.targets();
  const auto entries = static_cast<std::size_t>(l.rank) * static_cast<std::size_t>(data.size()) *
                       static_cast<std::size_t>(l.dim);
  ledger.carriers_.resize(entries * static_cast<std::size_t>(l.terms));
  ledger.atom_values_.resize(entries);
  ledger.partners_.resize(entries);

  std::vector<double> prefix(l.dim + 1), suffix(l.dim + 1);
  for (int j = 0; j < l.rank; ++j) {
    for (Eigen::Index n = 0; n < data.size(); ++n) {
      for (int i = 0; i < l.dim; ++i) {
        const AtomParams& a = model.atom(j, i);
        const double x = data.points()(n, i);
        const std::size_t e = ledger.atom_entry(j, n, i);
        double psi = 0.0;
        for (int p = 0; p < l.terms; ++p) {
          const auto u = carrier(a.growth[p], a.frequency[p], a.phase[p], x);
          ledger.carriers_[e * l.terms + p] = u;
          psi += a.amplitude[p] * u.real();
        }
        ledger.atom_values_[e] = psi;
      }
      prefix[0] = 1.0;
      for (int i = 0; i < l.dim; ++i) prefix[i + 1] = prefix[i] * ledger.atom_value(j, n, i);
      suffix[l.dim] = 1.0;
      for (int i = l.dim - 1; i >= 0; --i) suffix[i] = suffix[i + 1] * ledger.atom_value(j, n, i);
      for (int i = 0; i < l.dim; ++i) {
        ledger.partners_[ledger.atom_entry(j, n, i)] = prefix[i] * suffix[i + 1];
      }
    }
  }
  return ledger;
}

/// F(delta) by re-evaluating the gradient at theta + delta.
inline GradientVector eval_F_direct(const ModelParams& model, const UpdateVector& delta,
                                    const Dataset& data) {
  return gradient(shifted(model, delta), data);
}

/// F(delta) from the ledger alone: every stored carrier is multiplied by
/// exp(d_alpha x + i (d_omega x + d_phi)), amplitudes become A + d_A, and
/// the per-parameter derivative rules are re-applied with the shifted
/// values. The raw dataset is not consulted.
inline GradientVector eval_F_ledger(const TermLedger& ledger, const UpdateVector& delta) {
  const Layout& l = ledger.layout();
  if (delta.size() != l.size()) throw LayoutMismatch("update length does not match ledger");
  if (!delta.allFinite()) throw NonFiniteInput("non-finite update");
  const ModelParams& base = ledger.base();

  GradientVector g = GradientVector::Zero(l.size());
  std::vector<detail::AtomJet> jets(l.dim);
  std::vector<Eigen::VectorXd> rank_grads(l.rank);
  for (Eigen::Index n = 0; n < ledger.points(); ++n) {
    double f = 0.0;
    for (int j = 0; j < l.rank; ++j) {
      for (int i = 0; i < l.dim; ++i) {
        const AtomParams& a = base.atom(j, i);
        const double x = ledger.coords()(n, i);
        detail::AtomJet& jet = jets[i];
        jet = detail::make_jet(l.terms, false);
        for (int p = 0; p < l.terms; ++p) {
          const double d_amp = delta[l.index(j, i, p, ParamKind::kAmplitude)];
          const double d_growth = delta[l.index(j, i, p, ParamKind::kGrowth)];
          const double d_freq = delta[l.index(j, i, p, ParamKind::kFrequency)];
          const double d_phase = delta[l.index(j, i, p, ParamKind::kPhase)];
          detail::check_exponent(a.growth[p] + d_growth, x);
          const std::complex<double> u =
              ledger.carrier(j, n, i, p) * std::polar(std::exp(d_growth * x), d_freq * x + d_phase);
          detail::add_term(jet, p, a.amplitude[p] + d_amp, u.real(), u.imag(), x, false);
        }
      }
      detail::RankJet rj = detail::assemble_rank(jets, l, false);
      f += rj.value;
      rank_grads[j] = std::move(rj.grad);
    }
    const double twice_residual = 2.0 * (f - ledger.targets()[n]);
    for (int j = 0; j < l.rank; ++j) {
      g.segment(j * l.rank_block(), l.rank_block()) += twice_residual * rank_grads[j];
    }
  }
  return g;
}

/// Jacobian of F at delta. kFull is grad^2 Phi(theta + delta); kBlock
/// keeps only the within-rank blocks.
inline HessianMatrix eval_J(const ModelParams& model, const UpdateVector& delta,
                            const Dataset& data, JacobianMode mode = JacobianMode::kFull) {
  HessianMatrix j = hessian(shifted(model, delta), data);
  if (mode == JacobianMode::kBlock) {
    for (const auto& [row_off, row_size] : j.rank_blocks) {
      for (const auto& [col_off, col_size] : j.rank_blocks) {
        if (row_off != col_off) j.values.block(row_off, col_off, row_size, col_size).setZero();
      }
    }
  }
  return j;
}

}  // namespace aion
