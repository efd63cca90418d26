#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "fracorder/operator.hpp"

using fracorder::ErrorKind;
using fracorder::Expression;
using fracorder::Field;
using fracorder::ProblemSpec;

namespace {

constexpr double kPi = std::numbers::pi;

template <class F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const fracorder::Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an exception";
  return ErrorKind::IoError;
}

ProblemSpec laplacian_1d(int n, double length = 1.0) {
  ProblemSpec s;
  s.dim = 1;
  s.n = {n, 1};
  s.length = {length, 1.0};
  s.x0 = {0.5 * length, 0.0};
  return s;
}

ProblemSpec spec_2d(int n) {
  ProblemSpec s;
  s.dim = 2;
  s.n = {n, n};
  return s;
}

}  // namespace

TEST(Expression, ArithmeticAndPrecedence) {
  EXPECT_DOUBLE_EQ(Expression::parse("1 + 2*3")(0), 7.0);
  EXPECT_DOUBLE_EQ(Expression::parse("(1 + 2)*3")(0), 9.0);
  EXPECT_DOUBLE_EQ(Expression::parse("2^3^2")(0), 512.0);
  EXPECT_DOUBLE_EQ(Expression::parse("-2^2")(0), -4.0);
  EXPECT_DOUBLE_EQ(Expression::parse("8/4/2")(0), 1.0);
  EXPECT_DOUBLE_EQ(Expression::parse("1.5e2 - 50")(0), 100.0);
  EXPECT_DOUBLE_EQ(Expression::parse("2 + sin(pi*x)")(0.5), 3.0);
  EXPECT_DOUBLE_EQ(Expression::parse("x*y + exp(0) + cos(0) - e")(2.0, 3.0), 8.0 - std::numbers::e);
  EXPECT_TRUE(Expression::parse("3*pi - 1").is_constant());
  EXPECT_TRUE(Expression::parse("y").depends_on(1));
  EXPECT_FALSE(Expression::parse("y").depends_on(0));
}

TEST(Expression, RejectsOutsideLanguage) {
  for (const char* bad : {"log(x)", "x +", "z", "2**3", "sin x", "(1", "1)", "", "3..1", "abs(x)"})
    EXPECT_EQ(kind_of([&] { Expression::parse(bad); }), ErrorKind::SpecError) << bad;
}

TEST(Expression, SymbolicDerivativesMatchFiniteDifferences) {
  for (const char* text : {"x^3 - 2*x*y", "sin(pi*x)*cos(y)", "exp(-x*x)/(1 + y^2)", "2^x", "-25*x", "x/(2+y)"}) {
    const auto f = Expression::parse(text);
    for (int axis : {0, 1}) {
      const auto d = f.derivative(axis);
      for (double x : {0.1, 0.4, 0.9}) {
        const double y = 0.3;
        const double h = 1e-6;
        const double fd = axis == 0 ? (f(x + h, y) - f(x - h, y)) / (2 * h) : (f(x, y + h) - f(x, y - h)) / (2 * h);
        EXPECT_NEAR(d(x, y), fd, 1e-7 * (1 + std::abs(fd))) << text << " axis " << axis;
      }
    }
  }
  EXPECT_EQ(kind_of([] { Expression::parse("x^x").derivative(0); }), ErrorKind::SpecError);
}

TEST(GridField, BilinearIsExactOnBilinearData) {
  std::vector<double> v;
  for (int j = 0; j < 4; ++j)
    for (int i = 0; i < 5; ++i) v.push_back(1.0 + 2.0 * (i * 0.25) - (j / 3.0) + 0.5 * (i * 0.25) * (j / 3.0));
  const fracorder::GridField g({1.0, 1.0}, {5, 4}, v);
  EXPECT_NEAR(g(0.33, 0.71), 1.0 + 2.0 * 0.33 - 0.71 + 0.5 * 0.33 * 0.71, 1e-14);
  EXPECT_NEAR(g.derivative(0)(0.5, 1.0 / 3.0), 2.0 + 0.5 / 3.0, 1e-12);
  EXPECT_THROW(fracorder::GridField({1.0, 1.0}, {5, 4}, std::vector<double>(3)), fracorder::Error);
}

TEST(Discretize, LaplacianStencil) {
  const auto op = fracorder::discretize(laplacian_1d(3));
  const double h = 0.25;
  Eigen::MatrixXd want(3, 3);
  want << 2, -1, 0, -1, 2, -1, 0, -1, 2;
  want /= h * h;
  EXPECT_LE((op.matrix - want).cwiseAbs().maxCoeff(), 1e-12);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.matrix);
  for (int k = 1; k <= 3; ++k)
    EXPECT_NEAR(es.eigenvalues()(k - 1), 4.0 / (h * h) * std::pow(std::sin(k * kPi * h / 2.0), 2), 1e-10);
  EXPECT_GT(es.eigenvalues()(0), 0.0);
}

TEST(Discretize, AdvectionRowSums) {
  auto s = laplacian_1d(9);
  s.b[0] = Field::constant(1.0);
  const auto op = fracorder::discretize(s);
  const double h = s.h(0);
  for (int i = 1; i < 8; ++i) {
    EXPECT_NEAR(op.matrix.row(i).sum(), 0.0, 1e-10);
    EXPECT_NEAR(op.matrix(i, i + 1), -1.0 / (h * h) - 1.0 / (2 * h), 1e-10);
    EXPECT_NEAR(op.matrix(i, i - 1), -1.0 / (h * h) + 1.0 / (2 * h), 1e-10);
  }
}

TEST(Discretize, TwoDimensionalSpectrumInRightHalfPlane) {
  auto s = spec_2d(8);
  s.b[0] = Field::constant(1.0);
  s.c = Field::constant(-1.0);
  const auto op = fracorder::discretize(s);
  Eigen::EigenSolver<Eigen::MatrixXd> es(op.matrix, false);
  EXPECT_GT(es.eigenvalues().real().minCoeff(), 0.0);
}

TEST(Discretize, RejectsInvalidSpecs) {
  auto asym = spec_2d(4);
  asym.a[0][1] = Field::parse("0.1*x");
  EXPECT_EQ(kind_of([&] { fracorder::discretize(asym); }), ErrorKind::SpecError);
  auto positive_c = laplacian_1d(5);
  positive_c.c = Field::parse("x - 0.5");
  EXPECT_EQ(kind_of([&] { fracorder::discretize(positive_c); }), ErrorKind::SpecError);
  auto boundary = laplacian_1d(5);
  boundary.x0 = {1.0, 0.0};
  EXPECT_EQ(kind_of([&] { fracorder::discretize(boundary); }), ErrorKind::SpecError);
  EXPECT_EQ(kind_of([&] { fracorder::discretize(laplacian_1d(2)); }), ErrorKind::SpecError);
  auto bad_alpha = laplacian_1d(5);
  bad_alpha.alpha = 1.0;
  EXPECT_EQ(kind_of([&] { fracorder::discretize(bad_alpha); }), ErrorKind::SpecError);
}

TEST(Discretize, PecletWarning) {
  auto s = laplacian_1d(9);
  s.b[0] = Field::constant(30.0);
  EXPECT_FALSE(fracorder::discretize(s).warnings.empty());
  s.b[0] = Field::constant(3.0);
  EXPECT_TRUE(fracorder::discretize(s).warnings.empty());
}

TEST(Ellipticity, Examples) {
  EXPECT_DOUBLE_EQ(fracorder::check_ellipticity(laplacian_1d(5), 11), 1.0);
  EXPECT_DOUBLE_EQ(fracorder::check_ellipticity(spec_2d(5), 11), 1.0);

  // 2 + sin(pi x) reaches 1 at x = 3/2, so that minimum needs a box of length 2.
  auto s = laplacian_1d(5, 2.0);
  s.a[0][0] = Field::parse("2 + sin(pi*x)");
  EXPECT_NEAR(fracorder::check_ellipticity(s, 101), 1.0, 1e-12);
  s.length = {1.0, 1.0};
  s.x0 = {0.5, 0.0};
  EXPECT_NEAR(fracorder::check_ellipticity(s, 101), 2.0, 1e-12);

  auto m = spec_2d(5);
  m.a = {{{Field::constant(2.0), Field::constant(0.5)}, {Field::constant(0.5), Field::constant(1.0)}}};
  EXPECT_NEAR(fracorder::check_ellipticity(m, 5), (3.0 - std::sqrt(2.0)) / 2.0, 1e-14);
  EXPECT_NEAR((3.0 - std::sqrt(2.0)) / 2.0, 0.7928932188134524, 1e-15);

  auto degenerate = laplacian_1d(5);
  degenerate.a[0][0] = Field::parse("x - 0.5");
  EXPECT_EQ(kind_of([&] { fracorder::check_ellipticity(degenerate, 11); }), ErrorKind::EllipticityError);
}

TEST(Poincare, BoxConstants) {
  EXPECT_NEAR(fracorder::poincare_constant(laplacian_1d(5)), 9.8696044010893586, 1e-14);
  EXPECT_NEAR(fracorder::poincare_constant(spec_2d(5)), 2 * kPi * kPi, 1e-13);
  EXPECT_NEAR(fracorder::poincare_constant(laplacian_1d(5, 2.0)), kPi * kPi / 4, 1e-14);
}

TEST(PositivityCondition, Examples) {
  EXPECT_NEAR(fracorder::check_positivity_condition(laplacian_1d(5)), kPi * kPi, 1e-12);
  auto s = laplacian_1d(5);
  s.b[0] = Field::parse("x");
  EXPECT_NEAR(fracorder::check_positivity_condition(s), 0.5 + kPi * kPi, 1e-12);
  s.b[0] = Field::parse("-25*x");
  EXPECT_NEAR(fracorder::check_positivity_condition(s), -12.5 + kPi * kPi, 1e-12);
  EXPECT_LT(fracorder::check_positivity_condition(s), 0.0);
  EXPECT_EQ(kind_of([&] { fracorder::require_positivity_condition(s); }), ErrorKind::ConditionViolated);
  // Forward discretization is still allowed.
  EXPECT_NO_THROW(fracorder::discretize(s));
}

// w^T sym(A) w >= 0 when the positivity condition holds.
TEST(Discretize, EnergyPositivity) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  std::vector<ProblemSpec> specs;
  {
    auto s = laplacian_1d(40);
    s.b[0] = Field::parse("4*sin(3*x)");
    s.c = Field::parse("-1 - x");
    specs.push_back(s);
  }
  {
    auto s = spec_2d(12);
    s.a = {{{Field::parse("1 + 0.5*x"), Field::parse("0.2*sin(x*y)")},
            {Field::parse("0.2*sin(x*y)"), Field::parse("2 - y")}}};
    s.b = {Field::parse("3*y"), Field::parse("-2*x")};
    specs.push_back(s);
  }
  for (const auto& s : specs) {
    ASSERT_GT(fracorder::check_positivity_condition(s), 0.0);
    const auto op = fracorder::discretize(s);
    const Eigen::MatrixXd sym = 0.5 * (op.matrix + op.matrix.transpose());
    for (int trial = 0; trial < 50; ++trial) {
      Eigen::VectorXd w(op.size());
      for (int k = 0; k < w.size(); ++k) w(k) = g(rng);
      EXPECT_GE(w.dot(sym * w), 0.0);
    }
    EXPECT_GT(fracorder::discrete_energy_constant(op), 0.0);
  }
}

// Manufactured solution: the discrete operator converges to -(...) at second order.
TEST(Discretize, SecondOrderConsistency) {
  const auto u = Expression::parse("sin(pi*x)*sin(pi*y)*exp(x)");
  const auto ux = u.derivative(0);
  const auto uy = u.derivative(1);
  const auto uxx = ux.derivative(0);
  const auto uyy = uy.derivative(1);
  const auto uxy = ux.derivative(1);
  auto make = [](int n) {
    auto s = spec_2d(n);
    s.a = {{{Field::parse("1 + 0.3*x*y"), Field::parse("0.2*cos(x)")},
            {Field::parse("0.2*cos(x)"), Field::parse("1.5 + 0.2*sin(pi*y)")}}};
    s.b = {Field::parse("2 - y"), Field::parse("x")};
    s.c = Field::parse("-1 - x*y");
    return s;
  };
  auto error = [&](int n) {
    const auto s = make(n);
    const auto op = fracorder::discretize(s);
    Eigen::VectorXd uh(op.size());
    Eigen::VectorXd exact(op.size());
    for (int k = 0; k < op.size(); ++k) {
      const double x = op.nodes[k][0];
      const double y = op.nodes[k][1];
      uh(k) = u(x, y);
      const double a11 = s.a[0][0](x, y), a12 = s.a[0][1](x, y), a22 = s.a[1][1](x, y);
      const double d1a11 = s.a[0][0].derivative(0)(x, y), d1a12 = s.a[0][1].derivative(0)(x, y);
      const double d2a12 = s.a[1][0].derivative(1)(x, y), d2a22 = s.a[1][1].derivative(1)(x, y);
      const double div = d1a11 * ux(x, y) + a11 * uxx(x, y) + d1a12 * uy(x, y) + a12 * uxy(x, y) +
                         d2a12 * ux(x, y) + a12 * uxy(x, y) + d2a22 * uy(x, y) + a22 * uyy(x, y);
      const double minus_au = div + s.b[0](x, y) * ux(x, y) + s.b[1](x, y) * uy(x, y) + s.c(x, y) * u(x, y);
      exact(k) = -minus_au;
    }
    return (op.matrix * uh - exact).cwiseAbs().maxCoeff();
  };
  const double e1 = error(15);
  const double e2 = error(31);
  EXPECT_GE(std::log2(e1 / e2), 1.9) << e1 << " " << e2;
}

TEST(Discretize, EigenvaluesHavePositiveRealPartUnderCondition) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    auto s = spec_2d(10);
    std::ostringstream b0, b1;
    b0 << 4 * u(rng) << " + " << 3 * u(rng) << "*y";
    b1 << 4 * u(rng) << " + " << 3 * u(rng) << "*x";
    s.b = {Field::parse(b0.str()), Field::parse(b1.str())};
    s.c = Field::constant(-std::abs(u(rng)));
    ASSERT_GT(fracorder::check_positivity_condition(s), 0.0);
    Eigen::EigenSolver<Eigen::MatrixXd> es(fracorder::discretize(s).matrix, false);
    EXPECT_GT(es.eigenvalues().real().minCoeff(), 0.0);
  }
}

TEST(MMatrix, LaplacianYesStrongAdvectionNo) {
  EXPECT_TRUE(fracorder::is_m_matrix(fracorder::discretize(laplacian_1d(20))));
  EXPECT_TRUE(fracorder::is_m_matrix(fracorder::discretize(spec_2d(6))));
  auto s = laplacian_1d(9);
  s.b[0] = Field::constant(50.0);
  EXPECT_FALSE(fracorder::is_m_matrix(fracorder::discretize(s)));
  Eigen::MatrixXd singular(2, 2);
  singular << 1, -1, -1, 1;
  EXPECT_FALSE(fracorder::is_m_matrix(singular));
}

TEST(Initial, SignDefiniteness) {
  auto s = laplacian_1d(9);
  s.initial = Field::parse("sin(pi*x)");
  EXPECT_TRUE(fracorder::initial_sign_definite(s));
  s.initial = Field::parse("sin(2*pi*x)");
  EXPECT_FALSE(fracorder::initial_sign_definite(s));
  s.initial = Field::constant(0.0);
  EXPECT_FALSE(fracorder::initial_sign_definite(s));
}
