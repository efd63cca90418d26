#include <cmath>
#include <complex>
#include <numbers>
#include <thread>
#include <vector>

#include <gtest/gtest.h>

#include "fracorder/mlf.hpp"
#include "oracle/mp_mittag_leffler.hpp"

using fracorder::Complex;
using fracorder::Error;
using fracorder::ErrorKind;
using fracorder::MlfParams;
using fracorder::mlf_eval;
using fracorder::mlf_eval_real;

namespace {

double rel_err(Complex got, Complex want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

template <class F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an exception";
  return ErrorKind::IoError;
}

}  // namespace

// The oracle itself: closed forms at alpha = 1/2 and alpha = 1, and agreement of its
// two routes where both apply.
TEST(MlfOracle, ClosedForms) {
  EXPECT_NEAR(oracle::ml_series(1, 2, 1.0, {-1.0, 0.0}).real(), std::exp(1.0) * std::erfc(1.0), 1e-16);
  EXPECT_NEAR(oracle::ml_series(1, 1, 1.0, {2.5, 0.0}).real(), std::exp(2.5), 1e-14);
  EXPECT_NEAR(oracle::ml_series(1, 1, 0.0, {-3.0, 0.0}).real(), -3.0 * std::exp(-3.0), 1e-16);
  EXPECT_NEAR(oracle::ml_asymptotic_neg(1, 2, 1.0, 100.0), 0.0056416137829894329, 1e-18);
}

TEST(MlfOracle, RoutesAgreeOnOverlap) {
  for (long p : {3L, 5L, 7L}) {
    const double alpha = p / 10.0;
    for (double beta : {1.0, 0.0, -1.0}) {
      const double x = std::pow(200.0, alpha);  // |z|^(1/alpha) = 200
      const double s = oracle::ml_series(p, 10, beta, {-x, 0.0}).real();
      const double a = oracle::ml_asymptotic_neg(p, 10, beta, x);
      EXPECT_NEAR(s, a, 1e-15 * std::abs(a)) << "alpha=" << alpha << " beta=" << beta;
    }
  }
}

TEST(MlfParams, RejectsOrdersOutsideUnitInterval) {
  EXPECT_EQ(kind_of([] { MlfParams(0.0, 1.0); }), ErrorKind::DomainError);
  EXPECT_EQ(kind_of([] { MlfParams(1.2, 1.0); }), ErrorKind::DomainError);
  EXPECT_EQ(kind_of([] { MlfParams(std::nan(""), 1.0); }), ErrorKind::DomainError);
  EXPECT_EQ(kind_of([] { MlfParams(0.5, INFINITY); }), ErrorKind::DomainError);
  EXPECT_NO_THROW(MlfParams(1.0, -3.0));
  EXPECT_EQ(kind_of([] { mlf_eval(MlfParams(0.5, 1.0), Complex(std::nan(""), 0.0)); }), ErrorKind::DomainError);
}

TEST(MlfSeries, Examples) {
  EXPECT_EQ(fracorder::mlf_series(MlfParams(0.7, 1.0), 0.0, 1e-12).real(), 1.0);
  EXPECT_NEAR(fracorder::mlf_series(MlfParams(1.0, 1.0), 1.0, 1e-14).real(), 2.718281828459045, 1e-12);
  const double want = oracle::ml_series(1, 2, 1.0, {-1.0, 0.0}).real();
  EXPECT_NEAR(want, 0.4275835761558070, 1e-15);
  EXPECT_NEAR(fracorder::mlf_series(MlfParams(0.5, 1.0), -1.0, 1e-14).real(), want, 1e-10);
}

TEST(MlfSeries, PolesOfGammaContributeZero) {
  // E_{1,0}(z) = z e^z: the k = 0 term 1/Gamma(0) vanishes.
  const Complex z(0.7, -0.2);
  EXPECT_LT(rel_err(fracorder::mlf_series(MlfParams(1.0, 0.0), z, 1e-15), z * std::exp(z)), 1e-14);
}

TEST(MlfSeries, DivergesBeyondItsRegime) {
  EXPECT_EQ(kind_of([] { fracorder::mlf_series(MlfParams(0.2, 1.0), -40.0, 1e-12, 10000); }),
            ErrorKind::NonConvergence);
  EXPECT_EQ(kind_of([] { fracorder::mlf_series(MlfParams(0.5, 1.0), -1.0, 0.0); }), ErrorKind::DomainError);
}

TEST(MlfAsymptotic, LeadingTermExamples) {
  const MlfParams half(0.5, 1.0);
  EXPECT_NEAR(fracorder::mlf_asymptotic(half, 1e6, 1), 5.641895835477563e-7, 1e-12 * 5.641895835477563e-7);
  const double want = oracle::rgamma_reference(-0.3) * 1e-6;
  EXPECT_NEAR(want, -2.31114955159969794e-7, 1e-20);
  EXPECT_NEAR(fracorder::mlf_asymptotic(MlfParams(0.3, 0.0), 1e6, 1), want, 1e-13 * std::abs(want));
}

TEST(MlfAsymptotic, ThreeTermRemainderScalesLikeXToMinusFour) {
  // For alpha = 1/2, beta = 1 the k = 2 and k = 4 coefficients vanish, so three terms
  // leave a relative error of order x^-4.
  const MlfParams half(0.5, 1.0);
  std::vector<double> lx;
  std::vector<double> le;
  double c_fit = 0.0;
  for (double x = 50.0; x <= 500.0; x *= 1.2) {
    const double exact = oracle::ml_asymptotic_neg(1, 2, 1.0, x);
    const double err = std::abs(fracorder::mlf_asymptotic(half, x, 3) - exact) / exact;
    c_fit = std::max(c_fit, err * std::pow(x, 4));
    if (x <= 200.0) {
      lx.push_back(std::log(x));
      le.push_back(std::log(err));
    }
  }
  const double n = static_cast<double>(lx.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += le[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * le[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  EXPECT_NEAR(slope, -4.0, 0.1);
  // Fitted constant against the analytic next coefficient |1/Gamma(-1.5)| / (1/Gamma(0.5)).
  EXPECT_NEAR(c_fit, std::abs(oracle::rgamma_reference(-1.5)) * std::sqrt(std::numbers::pi), 0.05);

  const double x = 50.0;
  const double e50 = mlf_eval_real(half, -x);
  EXPECT_LE(std::abs(fracorder::mlf_asymptotic(half, x, 3) - e50) / e50, c_fit / std::pow(x, 4));
}

TEST(MlfAsymptotic, RejectsSmallArguments) {
  const MlfParams p(0.5, 1.0);
  EXPECT_EQ(kind_of([&] { fracorder::mlf_asymptotic(p, 5.0, 2); }), ErrorKind::DomainError);
  EXPECT_EQ(kind_of([&] { fracorder::mlf_asymptotic(p, -50.0, 2); }), ErrorKind::DomainError);
  EXPECT_EQ(kind_of([&] { fracorder::mlf_asymptotic(p, 50.0, 0); }), ErrorKind::DomainError);
}

TEST(MlfEval, Examples) {
  EXPECT_EQ(mlf_eval_real(MlfParams(0.4, 1.0), 0.0), 1.0);
  // E_{1/2}(-100) = exp(10^4) erfc(100).
  EXPECT_NEAR(mlf_eval_real(MlfParams(0.5, 1.0), -100.0), 0.0056416137829894329, 1e-8);
  const MlfParams p(0.6, 1.0);
  const double e1 = mlf_eval_real(p, -1.0);
  const double e10 = mlf_eval_real(p, -10.0);
  const double e100 = mlf_eval_real(p, -100.0);
  EXPECT_GT(e1, e10);
  EXPECT_GT(e10, e100);
  EXPECT_GT(e100, 0.0);
}

TEST(MlfEval, ValueAtZeroIsOneForEveryOrder) {
  for (int i = 1; i < 100; ++i) EXPECT_EQ(mlf_eval_real(MlfParams(i / 100.0, 1.0), 0.0), 1.0);
}

TEST(MlfEval, MatchesOracleOnRealAxis) {
  for (long p = 2; p <= 9; ++p) {
    const double alpha = p / 10.0;
    for (double beta : {1.0, 0.5, 0.0, -1.0, -2.0}) {
      const MlfParams params(alpha, beta);
      for (double x = 0.01; x < 2e4; x *= 2.7) {
        const double w = std::pow(x, 1.0 / alpha);
        if (w > 400.0 && w < 1000.0) continue;  // neither oracle route is cheap and safe here
        const Complex want = oracle::ml_reference(p, 10, beta, {-x, 0.0});
        const Complex got = mlf_eval(params, {-x, 0.0});
        const double scale = std::max(std::abs(want), 1e-6 / x);  // near sign changes of E_{alpha,beta<1}
        EXPECT_LE(std::abs(got - want) / scale, 1e-10) << "alpha=" << alpha << " beta=" << beta << " x=" << x;
      }
    }
  }
}

TEST(MlfEval, MatchesOracleInComplexSector) {
  for (long p : {3L, 5L, 8L}) {
    const double alpha = p / 10.0;
    const MlfParams params(alpha, 1.0);
    for (double r : {0.5, 2.0, 6.0}) {
      if (std::pow(r, 1.0 / alpha) > 350.0) continue;
      for (double angle : {0.0, 0.4, 1.0, 1.5, 2.0}) {
        const Complex z = -std::polar(r, angle);
        const Complex want = oracle::ml_series(p, 10, 1.0, z);
        EXPECT_LE(rel_err(mlf_eval(params, z), want), 1e-9) << "alpha=" << alpha << " z=" << z;
        EXPECT_LE(rel_err(mlf_eval(params, std::conj(z)), std::conj(want)), 1e-9);
      }
    }
  }
}

TEST(MlfEval, ExponentialCaseAtAlphaOne) {
  for (double x : {-30.0, -1.0, 0.5, 3.0}) {
    EXPECT_NEAR(mlf_eval_real(MlfParams(1.0, 1.0), x), std::exp(x), 1e-14 * std::exp(x));
    EXPECT_NEAR(mlf_eval_real(MlfParams(1.0, -1.0), x), x * x * std::exp(x), 1e-14 * x * x * std::exp(x));
  }
}

// The non-asymptotic route and the auto-truncated expansion coincide on [R/2, 2R].
TEST(MlfEval, RegimesAgreeAroundSwitchRadius) {
  const fracorder::MlfConfig cfg;
  const double r = cfg.switch_radius;
  for (double alpha : {0.3, 0.5, 0.7, 0.9}) {
    for (double beta : {1.0, 0.0, -1.0}) {
      for (double x = r / 2.0; x <= 2.0 * r; x *= 1.1) {
        // Optimal truncation leaves ~ w^(1-beta) e^-w / alpha, w = x^(1/alpha).  That is
        // negligible from R on for every order; below R it only matters as alpha -> 1.
        const double w = std::pow(x, 1.0 / alpha);
        const double truncation = std::pow(w, 1.0 - beta) * std::exp(-w) / alpha;
        if (x >= r) {
          EXPECT_LT(truncation, 1e-15);
        } else if (truncation > 1e-13) {
          continue;
        }
        const Complex quad = fracorder::detail::contour_integral(alpha, beta, {-x, 0.0}, cfg.quadrature_tol);
        const Complex asym = fracorder::detail::asymptotic_auto(alpha, beta, {-x, 0.0});
        EXPECT_LE(std::abs(quad - asym), 10.0 * cfg.tol * std::max(std::abs(asym), 1.0 / x))
            << "alpha=" << alpha << " beta=" << beta << " x=" << x;
      }
      const double below = mlf_eval_real(MlfParams(alpha, beta), -r * (1 - 1e-12));
      const double above = mlf_eval_real(MlfParams(alpha, beta), -r * (1 + 1e-12));
      EXPECT_LE(std::abs(below - above), 10.0 * cfg.tol * std::abs(below) + 1e-14);
    }
  }
}

TEST(MlfEval, UnsupportedSectorIsReported) {
  const MlfParams p(0.5, 1.0);
  EXPECT_EQ(kind_of([&] { mlf_eval(p, {100.0, 0.0}); }), ErrorKind::NotImplemented);
  EXPECT_EQ(kind_of([&] { mlf_eval(p, std::polar(100.0, 0.3)); }), ErrorKind::NotImplemented);
  EXPECT_NO_THROW(mlf_eval(p, {0.0, 100.0}));
  EXPECT_NO_THROW(mlf_eval(p, {30.0, 0.0}));
}

// d/dt E_{alpha,1}(-t^alpha) = t^-1 E_{alpha,0}(-t^alpha).
TEST(MlfEval, DerivativeIdentity) {
  for (double alpha : {0.3, 0.5, 0.7}) {
    const MlfParams p1(alpha, 1.0);
    const MlfParams p0(alpha, 0.0);
    auto f = [&](double t) { return mlf_eval_real(p1, -std::pow(t, alpha)); };
    for (double t = 0.5; t <= 5.0; t += 0.25) {
      const double h = 1e-4 * t;
      const double fd = (f(t + h) - f(t - h)) / (2.0 * h);
      const double exact = mlf_eval_real(p0, -std::pow(t, alpha)) / t;
      EXPECT_LE(std::abs(fd - exact) / std::abs(exact), 1e-5) << "alpha=" << alpha << " t=" << t;
    }
  }
}

// eta^2 |E_{alpha,1-l}(-eta) - eta^-1/Gamma(1-l-alpha)| stays bounded and tends to
// |1/Gamma(1-l-2 alpha)|.
TEST(MlfEval, RemainderIsOrderEtaMinusTwo) {
  for (int l : {0, 1, 2}) {
    for (double alpha : {0.3, 0.5, 0.7}) {
      const double beta = 1.0 - l;
      const MlfParams p(alpha, beta);
      const double c1 = fracorder::detail::rgamma(1.0 - l - alpha);
      const double c2 = std::abs(fracorder::detail::rgamma(1.0 - l - 2.0 * alpha));
      double sup = 0.0;
      double last = 0.0;
      for (double eta = 1e2; eta <= 1e6 * 1.0001; eta *= std::pow(10.0, 0.25)) {
        last = eta * eta * std::abs(mlf_eval_real(p, -eta) - c1 / eta);
        sup = std::max(sup, last);
      }
      EXPECT_LE(sup, 2.0 * c2 + 1.0) << "l=" << l << " alpha=" << alpha;
      EXPECT_NEAR(last, c2, 1e-3 * (1.0 + c2)) << "l=" << l << " alpha=" << alpha;
    }
  }
}

TEST(MlfEval, PositiveAndStrictlyDecreasingOnNegativeAxis) {
  for (double alpha : {0.2, 0.45, 0.6, 0.95}) {
    const MlfParams p(alpha, 1.0);
    double prev = 1.0;
    for (double t = 0.01; t < 1e5; t *= 1.15) {
      const double v = mlf_eval_real(p, -t);
      EXPECT_GT(v, 0.0);
      EXPECT_LT(v, prev) << "alpha=" << alpha << " t=" << t;
      prev = v;
    }
  }
}

TEST(MlfEval, ConcurrentCallsAgree) {
  const MlfParams p(0.35, 0.0);
  std::vector<double> xs;
  for (double x = 0.5; x < 200.0; x *= 1.3) xs.push_back(x);
  std::vector<double> serial;
  for (double x : xs) serial.push_back(mlf_eval_real(p, -x));
  std::vector<std::vector<double>> results(4);
  std::vector<std::thread> threads;
  for (int i = 0; i < 4; ++i)
    threads.emplace_back([&, i] {
      for (double x : xs) results[i].push_back(mlf_eval_real(p, -x));
    });
  for (auto& t : threads) t.join();
  for (const auto& r : results) EXPECT_EQ(r, serial);
}

TEST(MlfDecayBound, Examples) {
  EXPECT_EQ(fracorder::mlf_decay_bound(0.5, 1.0, 0.0), fracorder::kDecayBoundConstant);
  EXPECT_NEAR(fracorder::mlf_decay_bound(0.5, 1.0, 1e-300), 1.0, 1e-140);
  EXPECT_DOUBLE_EQ(fracorder::mlf_decay_bound(0.3, 2.0, 1e4), 1.0 / (1.0 + 2.0 * std::pow(10.0, 1.2)));
  const MlfParams p(0.5, 1.0);
  for (double t : {1.0, 10.0, 100.0, 1000.0}) {
    const double e = mlf_eval_real(p, -std::sqrt(t));
    EXPECT_LE(e, fracorder::mlf_decay_bound(0.5, 1.0, t, 1.1));
    EXPECT_LE(e, fracorder::mlf_decay_bound(0.5, 1.0, t));
  }
  EXPECT_EQ(kind_of([] { fracorder::mlf_decay_bound(0.5, 0.0, 1.0); }), ErrorKind::DomainError);
}

TEST(MlfDecayBound, HoldsWithUnitConstantOnGrid) {
  for (double alpha = 0.1; alpha < 1.0; alpha += 0.1) {
    const MlfParams p(alpha, 1.0);
    for (double y = 1e-3; y < 1e5; y *= 1.7)
      EXPECT_LE(mlf_eval_real(p, -y), fracorder::mlf_decay_bound(alpha, y, 1.0) * (1 + 1e-12));
  }
}
