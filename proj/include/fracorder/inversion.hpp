#pragma once

// Recovering alpha from u(x0, t) at large t, where u ~ c t^-alpha.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/NonLinearOptimization>

#include "fracorder/errors.hpp"
#include "fracorder/mlf.hpp"
#include "fracorder/solver.hpp"

namespace fracorder {

inline constexpr double kAlphaFloor = 0.01;
inline constexpr double kAlphaCeil = 0.99;

struct RecoveryDiagnostics {
  double slope_stderr = 0.0;
  /// max |alpha_hat - alpha on either log-half of the window|
  double window_sensitivity = 0.0;
  int samples = 0;
  /// Two-term fit only: u ~ c1 t^-alpha + c2 t^-2alpha.
  double c1 = 0.0;
  double c2 = 0.0;
  double loglog_alpha = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  bool auto_window = false;
  std::string note;
};

struct RecoveryResult {
  double alpha_hat = 0.0;
  /// c Gamma(1 - alpha_hat) for u ~ c t^-alpha_hat: the (A^-1 a)(x0) normalization.
  double leading_coeff_hat = 0.0;
  std::array<double, 2> fit_window{0.0, 0.0};
  double residual_norm = 0.0;
  bool boundary_estimate = false;
  std::string method;
  RecoveryDiagnostics diagnostics;
};

namespace detail {

inline void require_nondegenerate(const ObservationSeries& s) {
  if (s.times.size() != s.u_at_x0.size()) throw Error(ErrorKind::DomainError, "series arrays differ in length");
  for (double u : s.u_at_x0)
    if (std::abs(u) >= 1e-300) return;
  throw Error(ErrorKind::UniquenessInconclusive,
              "observed series vanishes identically; the data determine nothing about alpha (u = 0 branch)");
}

inline double clamp_alpha(double a, bool& boundary) {
  boundary = !(a > kAlphaFloor && a < kAlphaCeil);
  return std::clamp(a, kAlphaFloor, kAlphaCeil);
}

/// Max minus min of the slopes fitted on consecutive quarter-decade pieces of [lo, hi].
inline double local_slope_variation(const ObservationSeries& s, double lo, double hi) {
  const double width = 0.25 * std::log(10.0);
  double smin = INFINITY;
  double smax = -INFINITY;
  for (double a = std::log(lo); a + width <= std::log(hi) * (1 + 1e-12); a += width) {
    const PowerFit f = loglog_fit(s, std::exp(a), std::exp(a + width) * (1 + 1e-12), 4);
    smin = std::min(smin, f.slope);
    smax = std::max(smax, f.slope);
  }
  return smax - smin;
}

}  // namespace detail

/// Automatic fit window: starting from [t_hi/100, t_hi] with t_hi the last sample, t_hi is
/// halved until the local log-log slope varies by < 0.02, then t_lo is halved while it still does.
inline std::array<double, 2> auto_window(const ObservationSeries& s, double max_variation = 0.02) {
  detail::require_nondegenerate(s);
  if (s.size() < 20) throw Error(ErrorKind::WindowTooNarrow, "automatic window needs at least 20 samples");
  const double t_first = s.times.front();
  auto fits = [&](double lo, double hi) {
    try {
      return detail::local_slope_variation(s, lo, hi) < max_variation;
    } catch (const Error&) {
      return false;
    }
  };
  for (double hi = s.times.back(); hi / 100.0 >= t_first * (1 - 1e-12); hi /= 2.0) {
    double lo = hi / 100.0;
    if (!fits(lo, hi)) continue;
    while (lo / 2.0 >= t_first * (1 - 1e-12) && fits(lo / 2.0, hi)) lo /= 2.0;
    return {lo, hi};
  }
  throw Error(ErrorKind::WindowTooNarrow,
              "no two-decade window has a local log-log slope steady to 0.02; the data are pre-asymptotic");
}

inline RecoveryResult recover_order_loglog(const ObservationSeries& series, std::array<double, 2> window) {
  detail::require_nondegenerate(series);
  if (!(window[0] < window[1])) throw Error(ErrorKind::WindowTooNarrow, "fit window needs t_lo < t_hi");
  const PowerFit f = detail::loglog_fit(series, window[0], window[1], 20);
  RecoveryResult r;
  r.method = "loglog";
  r.fit_window = window;
  r.alpha_hat = detail::clamp_alpha(-f.slope, r.boundary_estimate);
  r.leading_coeff_hat = f.constant * std::tgamma(1.0 - r.alpha_hat);
  r.residual_norm = f.residual_norm;
  r.diagnostics.slope_stderr = f.slope_stderr;
  r.diagnostics.samples = f.samples;
  r.diagnostics.loglog_alpha = -f.slope;
  r.diagnostics.c1 = f.constant;
  const double mid = std::sqrt(window[0] * window[1]);
  for (auto half : {std::array<double, 2>{window[0], mid}, std::array<double, 2>{mid, window[1]}}) {
    try {
      const PowerFit g = detail::loglog_fit(series, half[0], half[1], 5);
      r.diagnostics.window_sensitivity = std::max(r.diagnostics.window_sensitivity, std::abs(-g.slope + f.slope));
    } catch (const Error&) {
      r.diagnostics.window_sensitivity = std::numeric_limits<double>::infinity();
    }
  }
  if (r.boundary_estimate) r.diagnostics.note = "alpha_hat clamped to [0.01, 0.99]";
  return r;
}

inline RecoveryResult recover_order_loglog(const ObservationSeries& series) {
  RecoveryResult r = recover_order_loglog(series, auto_window(series));
  r.diagnostics.auto_window = true;
  return r;
}

namespace detail {

/// Relative residuals (c1 t^-a + c2 t^-2a - u)/|u| in p = (a, c1, c2).
struct TwoTermFunctor {
  using Scalar = double;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;

  std::vector<double> log_t;
  std::vector<double> u;

  int inputs() const { return 3; }
  int values() const { return static_cast<int>(u.size()); }

  int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& f) const {
    for (int k = 0; k < values(); ++k) {
      const double e1 = std::exp(-p(0) * log_t[k]);
      f(k) = (p(1) * e1 + p(2) * e1 * e1 - u[k]) / std::abs(u[k]);
    }
    return 0;
  }

  int df(const Eigen::VectorXd& p, Eigen::MatrixXd& J) const {
    for (int k = 0; k < values(); ++k) {
      const double e1 = std::exp(-p(0) * log_t[k]);
      const double w = 1.0 / std::abs(u[k]);
      J(k, 0) = -log_t[k] * (p(1) * e1 + 2.0 * p(2) * e1 * e1) * w;
      J(k, 1) = e1 * w;
      J(k, 2) = e1 * e1 * w;
    }
    return 0;
  }
};

}  // namespace detail

inline RecoveryResult recover_order_fit(const ObservationSeries& series, const RecoveryResult& init,
                                        int max_evaluations = 2000) {
  detail::require_nondegenerate(series);
  detail::TwoTermFunctor fn;
  for (std::size_t k = 0; k < series.size(); ++k) {
    const double t = series.times[k];
    if (t < init.fit_window[0] || t > init.fit_window[1] || !(std::abs(series.u_at_x0[k]) >= 1e-300)) continue;
    fn.log_t.push_back(std::log(t));
    fn.u.push_back(series.u_at_x0[k]);
  }
  if (fn.u.size() < 20) throw Error(ErrorKind::WindowTooNarrow, "two-term fit needs at least 20 samples in the window");

  const double a0 = init.diagnostics.loglog_alpha == init.diagnostics.loglog_alpha ? init.diagnostics.loglog_alpha
                                                                                   : init.alpha_hat;
  Eigen::VectorXd p(3);
  p << a0, init.leading_coeff_hat / std::tgamma(1.0 - init.alpha_hat), 0.0;
  Eigen::LevenbergMarquardt<detail::TwoTermFunctor> lm(fn);
  lm.parameters.maxfev = max_evaluations;
  lm.parameters.xtol = 1e-14;
  lm.parameters.ftol = 1e-14;
  const auto status = lm.minimize(p);
  using namespace Eigen::LevenbergMarquardtSpace;
  if (status == TooManyFunctionEvaluation || status == ImproperInputParameters || !p.allFinite()) {
    std::ostringstream os;
    os << "two-term fit did not converge (status " << static_cast<int>(status) << ", " << lm.nfev << " evaluations)";
    throw Error(ErrorKind::NoConvergence, os.str());
  }
  if (std::abs(p(0) - init.alpha_hat) > 0.05) {
    std::ostringstream os;
    os.precision(6);
    os << "two-term fit alpha = " << p(0) << " moved more than 0.05 from the log-log alpha = " << init.alpha_hat
       << "; both reported, window suspect";
    throw Error(ErrorKind::WindowSuspect, os.str());
  }

  RecoveryResult r = init;
  r.method = "two-term";
  r.alpha_hat = detail::clamp_alpha(p(0), r.boundary_estimate);
  r.leading_coeff_hat = p(1) * std::tgamma(1.0 - r.alpha_hat);
  Eigen::VectorXd res(fn.values());
  fn(p, res);
  r.residual_norm = res.norm();
  r.diagnostics.c1 = p(1);
  r.diagnostics.c2 = p(2);
  r.diagnostics.loglog_alpha = init.alpha_hat;
  r.diagnostics.iterations = static_cast<int>(lm.iter);
  r.diagnostics.samples = fn.values();
  if (r.boundary_estimate) r.diagnostics.note = "alpha_hat clamped to [0.01, 0.99]";
  return r;
}

/// Linear interpolation of s at t (clamped to the end values outside the range).
inline double resample(const ObservationSeries& s, double t) {
  const auto it = std::lower_bound(s.times.begin(), s.times.end(), t);
  if (it == s.times.begin()) return s.u_at_x0.front();
  if (it == s.times.end()) return s.u_at_x0.back();
  const std::size_t k = static_cast<std::size_t>(it - s.times.begin());
  if (*it == t) return s.u_at_x0[k];
  const double w = (t - s.times[k - 1]) / (s.times[k] - s.times[k - 1]);
  return (1 - w) * s.u_at_x0[k - 1] + w * s.u_at_x0[k];
}

/// max_t |u1 - u2| / max_t |u1| on the times of series1; series2 is resampled if its grid differs.
inline double uniqueness_gap(const ObservationSeries& series1, const ObservationSeries& series2) {
  if (series1.size() == 0 || series2.size() == 0) throw Error(ErrorKind::DomainError, "empty observation series");
  if (series1.times.size() != series1.u_at_x0.size() || series2.times.size() != series2.u_at_x0.size())
    throw Error(ErrorKind::DomainError, "series arrays differ in length");
  const bool same_grid = series1.times == series2.times;
  double diff = 0.0;
  double scale1 = 0.0;
  double scale2 = 0.0;
  for (std::size_t k = 0; k < series1.size(); ++k) {
    const double u1 = series1.u_at_x0[k];
    const double u2 = same_grid ? series2.u_at_x0[k] : resample(series2, series1.times[k]);
    diff = std::max(diff, std::abs(u1 - u2));
    scale1 = std::max(scale1, std::abs(u1));
    scale2 = std::max(scale2, std::abs(u2));
  }
  if (!(scale1 >= 1e-300) && !(scale2 >= 1e-300))
    throw Error(ErrorKind::UniquenessInconclusive,
                "both observed series vanish: either the orders agree or u = 0, the data cannot tell");
  if (!(scale1 >= 1e-300)) return std::numeric_limits<double>::infinity();
  return diff / scale1;
}

/// u_k + sigma |u_k| xi_k with xi_k standard normal.
inline ObservationSeries add_relative_noise(const ObservationSeries& s, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> xi(0.0, 1.0);
  ObservationSeries out = s;
  for (double& u : out.u_at_x0) u += sigma * std::abs(u) * xi(rng);
  return out;
}

struct NoiseStudy {
  std::vector<double> alpha_hat;  ///< NaN where the estimator failed
  std::vector<std::string> failures;

  int within(double alpha, double tol) const {
    int n = 0;
    for (double a : alpha_hat) n += std::abs(a - alpha) <= tol;
    return n;
  }
};

/// Log-log then two-term fit on `window`, once per seed base_seed + k.
inline NoiseStudy noise_study(const ObservationSeries& clean, std::array<double, 2> window, double sigma, int seeds,
                              std::uint64_t base_seed, int threads = 0) {
  NoiseStudy out;
  out.alpha_hat.assign(static_cast<std::size_t>(seeds), std::numeric_limits<double>::quiet_NaN());
  std::vector<std::string> failure(static_cast<std::size_t>(seeds));
  auto run = [&](int k) {
    std::mt19937_64 rng(base_seed + static_cast<std::uint64_t>(k));
    const ObservationSeries noisy = add_relative_noise(clean, sigma, rng);
    try {
      out.alpha_hat[k] = recover_order_fit(noisy, recover_order_loglog(noisy, window)).alpha_hat;
    } catch (const Error& e) {
      failure[k] = "seed " + std::to_string(base_seed + k) + ": " + e.what();
    }
  };
  // Seeds are independent; each worker writes only its own slots, so the result
  // does not depend on the thread count.
  const int wanted = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  const int workers = std::clamp(wanted, 1, std::max(seeds, 1));
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (int k = w; k < seeds; k += workers) run(k);
    });
  for (auto& t : pool) t.join();
  for (auto& f : failure)
    if (!f.empty()) out.failures.push_back(std::move(f));
  return out;
}

}  // namespace fracorder
