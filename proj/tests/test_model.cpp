#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "aion/harness.hpp"
#include "aion/model.hpp"

namespace aion {
namespace {

using std::numbers::pi;

// Direct transcription of the model formula with its own loops; shares no
// code with eval_model.
double naive_model(const ModelParams& m, const std::vector<double>& x) {
  const Layout& l = m.layout();
  double total = 0.0;
  for (int j = 0; j < l.rank; ++j) {
    double prod = 1.0;
    for (int i = 0; i < l.dim; ++i) {
      const AtomParams& a = m.atoms()[l.tied ? j : j * l.dim + i];
      double psi = 0.0;
      for (std::size_t p = 0; p < a.terms(); ++p) {
        psi += a.amplitude[p] * std::exp(a.growth[p] * x[i]) *
               std::cos(a.frequency[p] * x[i] + a.phase[p]);
      }
      prod *= psi;
    }
    total += prod;
  }
  return total;
}

TEST(EvalAtom, ZeroOfCosine) {
  EXPECT_NEAR(eval_atom(AtomParams::single(1, 0, pi, 0), 0.5), 0.0, 1e-16);
}

TEST(EvalAtom, IdentityCase) {
  for (double x : {-3.0, 0.0, 0.7, 12.5}) {
    EXPECT_EQ(eval_atom(AtomParams::single(1, 0, 0, 0), x), 1.0);
  }
}

TEST(EvalAtom, GrowthClosedForm) {
  EXPECT_NEAR(eval_atom(AtomParams::single(2, 1, 0, 0), 1.0), 5.436563656918090, 1e-14);
}

TEST(EvalAtom, OverflowGuard) {
  EXPECT_THROW(eval_atom(AtomParams::single(1, 800, 0, 0), 1.0), ExponentOverflow);
  EXPECT_NO_THROW(eval_atom(AtomParams::single(1, 700, 0, 0), 1.0));
  EXPECT_THROW(eval_atom(AtomParams::single(1, 1, 0, 0), 700.5), ExponentOverflow);
}

TEST(EvalAtom, NonFinite) {
  EXPECT_THROW(eval_atom(AtomParams::single(1, 0, 0, 0), std::nan("")), NonFiniteInput);
  EXPECT_THROW(eval_atom(AtomParams::single(INFINITY, 0, 0, 0), 1.0), NonFiniteInput);
  EXPECT_THROW(AtomParams::single(1, NAN, 0, 0).validate(), NonFiniteInput);
}

TEST(AtomParamsTest, RaggedArraysRejected) {
  AtomParams a{{1.0, 2.0}, {0.0}, {0.0, 1.0}, {0.0, 0.0}};
  EXPECT_THROW(a.validate(), LayoutMismatch);
  EXPECT_THROW((AtomParams{{}, {}, {}, {}}.validate()), LayoutMismatch);
}

TEST(EvalModel, ExactDemoParameters) {
  const ModelParams star = demo_optimum();
  const std::vector<double> a{0.25, 0.75}, b{0.3, 0.3};
  EXPECT_NEAR(eval_model(star, a), 0.0, 1e-15);
  EXPECT_NEAR(eval_model(star, b), 1.0, 1e-15);
}

TEST(EvalModel, MatchesNaiveOracle) {
  RandomProblems gen(7);
  for (int trial = 0; trial < 50; ++trial) {
    const Layout l{2, 2, 1, trial % 2 == 0};
    const ModelParams m = gen.params(l);
    const std::vector<double> x{gen.uniform(-1, 1), gen.uniform(-1, 1)};
    const double expected = naive_model(m, x);
    EXPECT_LE(std::abs(eval_model(m, x) - expected), 1e-14 * std::max(1.0, std::abs(expected)));
  }
}

TEST(EvalModel, DimensionMismatch) {
  const std::vector<double> x{0.1, 0.2, 0.3};
  EXPECT_THROW(eval_model(demo_optimum(), x), DimensionMismatch);
}

TEST(EvalModel, RankAdditivity) {
  RandomProblems gen(11);
  for (int trial = 0; trial < 40; ++trial) {
    const Layout l{3, 2, 2, trial % 2 == 1};
    const ModelParams m = gen.params(l);
    const std::vector<double> x{gen.uniform(-1, 1), gen.uniform(-1, 1)};
    double sum = 0.0;
    for (int j = 0; j < l.rank; ++j) {
      std::vector<AtomParams> atoms;
      for (int i = 0; i < l.atoms_per_rank(); ++i) atoms.push_back(m.atom(j, i));
      sum += eval_model(ModelParams(Layout{1, l.dim, l.terms, l.tied}, atoms), x);
    }
    EXPECT_NEAR(eval_model(m, x), sum, 1e-14 * std::max(1.0, std::abs(sum)));
  }
}

TEST(Layout, Sizes) {
  EXPECT_EQ((Layout{2, 2, 1, true}.size()), 8);
  EXPECT_EQ((Layout{1, 2, 1, false}.size()), 8);
  EXPECT_EQ((Layout{3, 4, 2, false}.size()), 4 * 2 * 3 * 4);
  EXPECT_EQ((Layout{3, 4, 2, true}.size()), 4 * 2 * 3);
}

TEST(ModelParamsTest, WrongAtomCount) {
  EXPECT_THROW(ModelParams(Layout{2, 2, 1, false}, {AtomParams::single(1, 0, 0, 0)}), LayoutMismatch);
  EXPECT_THROW(ModelParams(Layout{0, 2, 1, true}, {}), LayoutMismatch);
  EXPECT_THROW(ModelParams(Layout{1, 1, 2, true}, {AtomParams::single(1, 0, 0, 0)}), LayoutMismatch);
}

TEST(Flatten, TiedCanonicalOrder) {
  const ParamVector v = flatten(demo_init());
  ASSERT_EQ(v.size(), 8);
  const std::vector<double> expected{1.2, 0.1, 3.0, 0.2, 0.8, -0.1, 3.3, -1.4};
  for (int k = 0; k < 8; ++k) EXPECT_EQ(v[k], expected[k]);
}

TEST(Flatten, UntiedOrderIsRankThenDimension) {
  const Layout l{1, 2, 1, false};
  const ModelParams m(l, {AtomParams::single(1, 2, 3, 4), AtomParams::single(5, 6, 7, 8)});
  const ParamVector v = flatten(m);
  ASSERT_EQ(v.size(), 8);
  for (int k = 0; k < 8; ++k) EXPECT_EQ(v[k], k + 1.0);
}

TEST(Flatten, RoundTripIsBitExact) {
  RandomProblems gen(3);
  for (int trial = 0; trial < 50; ++trial) {
    const ModelParams m = gen.params(gen.layout());
    const ParamVector v = flatten(m);
    EXPECT_EQ(unflatten(v), m);
    EXPECT_EQ(flatten(unflatten(v)), v);
  }
}

TEST(Flatten, LayoutMismatch) {
  EXPECT_THROW(ParamVector(Layout{2, 2, 1, true}, Eigen::VectorXd::Zero(7)), LayoutMismatch);
  EXPECT_THROW(shifted(demo_init(), Eigen::VectorXd::Zero(9)), LayoutMismatch);
}

TEST(ParamNames, TiedAndUntied) {
  EXPECT_EQ(param_name(Layout{2, 2, 1, true}, 0), "A_1");
  EXPECT_EQ(param_name(Layout{2, 2, 1, true}, 5), "alpha_2");
  EXPECT_EQ(param_name(Layout{2, 2, 1, false}, 6), "omega_1_2");
  EXPECT_EQ(param_name(Layout{1, 1, 2, true}, 7), "phi_1[2]");
  const Layout l{3, 2, 2, false};
  for (int k = 0; k < l.size(); ++k) EXPECT_EQ(param_index(l, param_name(l, k)), k);
  EXPECT_FALSE(param_index(l, "beta_1").has_value());
}

TEST(Loss, ExactRepresentation) {
  EXPECT_LE(loss(demo_optimum(), demo_dataset()), 1e-20);
}

TEST(Loss, ZeroAmplitudeModel) {
  const Dataset data = demo_dataset();
  const ModelParams zero = ModelParams::zeros(kDemoLayout);
  EXPECT_NEAR(loss(zero, data), data.targets().squaredNorm(), 1e-12);
}

TEST(Loss, MatchesSumOfSquaresOracle) {
  RandomProblems gen(5);
  const Layout l{2, 2, 1, false};
  const ModelParams m = gen.params(l);
  const Dataset data = gen.dataset(2, 3);
  double expected = 0.0;
  for (int n = 0; n < 3; ++n) {
    const double r = naive_model(m, {data.points()(n, 0), data.points()(n, 1)}) - data.targets()[n];
    expected += r * r;
  }
  EXPECT_NEAR(loss(m, data), expected, 1e-14 * expected);
}

TEST(Loss, NonNegativeAndDimensionChecked) {
  RandomProblems gen(9);
  for (int t = 0; t < 20; ++t) {
    const Layout l = gen.layout();
    EXPECT_GE(loss(gen.params(l), gen.dataset(l.dim, 4)), 0.0);
  }
  EXPECT_THROW(loss(demo_optimum(), gen.dataset(3, 4)), DimensionMismatch);
}

TEST(DatasetTest, Invariants) {
  EXPECT_THROW(Dataset(Eigen::MatrixXd(0, 2), Eigen::VectorXd(0)), DimensionMismatch);
  EXPECT_THROW(Dataset(Eigen::MatrixXd::Zero(3, 2), Eigen::VectorXd::Zero(2)), DimensionMismatch);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(2, 1);
  x(1, 0) = NAN;
  EXPECT_THROW(Dataset(x, Eigen::VectorXd::Zero(2)), NonFiniteInput);
}

// Property: d/dx of A e^{ax} cos(wx + p) is the atom
// (A sqrt(a^2 + w^2), a, w, p + atan2(w, a)).
TEST(Properties, DifferentiationClosure) {
  RandomProblems gen(13);
  for (int trial = 0; trial < 200; ++trial) {
    const AtomParams a = gen.atom(1);
    const double amp = a.amplitude[0], alpha = a.growth[0], omega = a.frequency[0];
    const AtomParams d = AtomParams::single(amp * std::hypot(alpha, omega), alpha, omega,
                                            a.phase[0] + std::atan2(omega, alpha));
    const double x = gen.uniform(-2, 2), h = 1e-6;
    const double fd = (eval_atom(a, x + h) - eval_atom(a, x - h)) / (2 * h);
    EXPECT_LE(std::abs(fd - eval_atom(d, x)), 1e-6 * (1.0 + std::abs(eval_atom(d, x))));
  }
}

TEST(Properties, PhasePeriodicity) {
  RandomProblems gen(17);
  for (int trial = 0; trial < 200; ++trial) {
    AtomParams a = gen.atom(2);
    const double x = gen.uniform(-2, 2);
    const double before = eval_atom(a, x);
    double scale = 0.0;
    for (std::size_t p = 0; p < 2; ++p) {
      scale += std::abs(a.amplitude[p]) * std::exp(a.growth[p] * x);
      a.phase[p] += 2 * pi;
    }
    EXPECT_LE(std::abs(eval_atom(a, x) - before), 1e-12 * scale);
  }
}

}  // namespace
}  // namespace aion
