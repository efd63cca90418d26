#pragma once

// Forward solves of  d_t^alpha u + A u = 0,  u(0) = a.
//
// solve_spectral sums the cluster representation
//   u(t) = sum_n sum_{j < i_n} (-1)^j / (lambda_n^j j!)
//            (sum_l theta_{jl} E_{alpha,1-l}(-lambda_n t^alpha)) D_n^j P_n a,
// solve_l1 time-steps the L1 discretization of the Caputo derivative on a
// graded mesh.  The two share nothing beyond the matrix.

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fracorder/errors.hpp"
#include "fracorder/mlf.hpp"
#include "fracorder/operator.hpp"
#include "fracorder/spectral.hpp"
#include "fracorder/theta.hpp"

namespace fracorder {

enum class SolveMethod { Spectral, L1 };

inline std::string to_string(SolveMethod m) { return m == SolveMethod::Spectral ? "spectral" : "l1"; }

/// Geometry of the interior grid a solution lives on.
struct Grid {
  int dim = 1;
  std::array<int, 2> n{0, 1};
  std::array<double, 2> length{1.0, 1.0};

  static Grid of(const DiscreteOperator& op) { return Grid{op.dim, op.n, op.length}; }
  static Grid unit_interval(int nodes) { return Grid{1, {nodes, 1}, {1.0, 1.0}}; }

  double h(int axis) const { return length[axis] / (n[axis] + 1); }
  int size() const { return dim == 1 ? n[0] : n[0] * n[1]; }
  /// Quadrature weight of the discrete L2 norm.
  double cell() const { return dim == 1 ? h(0) : h(0) * h(1); }
};

struct SolutionField {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> values;
  SolveMethod method = SolveMethod::Spectral;
  Grid grid;
  std::vector<std::string> warnings;

  std::size_t size() const { return times.size(); }
};

struct ObservationSeries {
  std::vector<double> times;
  std::vector<double> u_at_x0;
  std::array<double, 2> x0{0.5, 0.5};

  std::size_t size() const { return times.size(); }
};

/// Discrete L2 norm on the grid.
inline double grid_norm(const Eigen::VectorXd& v, const Grid& grid) { return std::sqrt(grid.cell()) * v.norm(); }

/// round(per_decade * decades) logarithmically spaced points, t_lo and t_hi included.
inline std::vector<double> log_spaced_times(double t_lo, double t_hi, int per_decade = 64) {
  if (!(t_lo > 0.0) || !(t_hi > t_lo) || per_decade < 1)
    throw Error(ErrorKind::DomainError, "log-spaced times need 0 < t_lo < t_hi and per_decade >= 1");
  const double decades = std::log10(t_hi / t_lo);
  const int count = std::max(2, static_cast<int>(std::lround(decades * per_decade)));
  std::vector<double> t(count);
  for (int k = 0; k < count; ++k) t[k] = t_lo * std::pow(10.0, decades * k / (count - 1));
  t.front() = t_lo;
  t.back() = t_hi;
  return t;
}

namespace detail {

inline void require_times(const std::vector<double>& times) {
  if (times.empty()) throw Error(ErrorKind::DomainError, "no output times requested");
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!(times[k] > 0.0) || !std::isfinite(times[k]))
      throw Error(ErrorKind::DomainError, "output times must be positive and finite");
    if (k > 0 && !(times[k] > times[k - 1])) throw Error(ErrorKind::DomainError, "output times must increase strictly");
  }
}

inline void require_alpha(double alpha, bool allow_one) {
  if (!(alpha > 0.0) || alpha > 1.0 || (!allow_one && alpha == 1.0)) {
    std::ostringstream os;
    os << "alpha must lie in (0, 1" << (allow_one ? "]" : ")") << ", got " << alpha;
    throw Error(ErrorKind::DomainError, os.str());
  }
}

}  // namespace detail

inline SolutionField solve_spectral(const SpectralDecomposition& dec, const Eigen::VectorXd& a_vec, double alpha,
                                    const std::vector<double>& times, const Grid& grid = {},
                                    const MlfConfig& mlf = {}) {
  detail::require_alpha(alpha, true);
  detail::require_times(times);
  const int N = dec.size();
  if (a_vec.size() != N) throw Error(ErrorKind::DomainError, "initial vector length does not match the operator");
  if (dec.clusters.empty()) throw Error(ErrorKind::DomainError, "empty decomposition");

  int max_index = 1;
  for (const auto& c : dec.clusters) max_index = std::max(max_index, c.index);
  const ThetaTable theta(alpha, std::max(1, max_index - 1));

  // Per cluster: w_j = V (lambda - T)^j W a, the D^j P a vectors.
  std::vector<std::vector<CVector>> w(dec.clusters.size());
  for (std::size_t n = 0; n < dec.clusters.size(); ++n) {
    const auto& c = dec.clusters[n];
    const CMatrix D = c.nilpotent_small();
    CVector coords = c.W * a_vec.cast<Complex>();
    for (int j = 0; j < c.index; ++j) {
      w[n].push_back(c.V * coords);
      coords = D * coords;
    }
  }

  SolutionField out;
  out.method = SolveMethod::Spectral;
  out.grid = grid.n[0] > 0 ? grid : Grid::unit_interval(N);
  out.times = times;
  for (double t : times) {
    const double ta = std::pow(t, alpha);
    CVector u = CVector::Zero(N);
    for (std::size_t n = 0; n < dec.clusters.size(); ++n) {
      const Complex lambda = dec.clusters[n].lambda;
      const Complex z = lambda * ta;
      u += mlf_eval(MlfParams(alpha, 1.0), -z, mlf) * w[n][0];
      double factorial = 1.0;
      for (int j = 1; j < static_cast<int>(w[n].size()); ++j) {
        factorial *= j;
        Complex inner(0.0, 0.0);
        for (int l = 1; l <= j; ++l) inner += theta(j, l) * mlf_eval(MlfParams(alpha, 1.0 - l), -z, mlf);
        const Complex coef = (j % 2 == 0 ? 1.0 : -1.0) / (std::pow(lambda, j) * factorial) * inner;
        u += coef * w[n][j];
      }
    }
    const double re = u.real().norm();
    const double im = u.imag().norm();
    if (im > 1e-8 * std::max(re, a_vec.norm() * std::numeric_limits<double>::min())) {
      std::ostringstream os;
      os << "spectral solution has imaginary residue " << im << " against real norm " << re << " at t = " << t;
      throw Error(ErrorKind::ToleranceExceeded, os.str());
    }
    out.values.push_back(u.real());
  }
  return out;
}

inline SolutionField solve_spectral(const DiscreteOperator& op, const SpectralDecomposition& dec,
                                    const Eigen::VectorXd& a_vec, double alpha, const std::vector<double>& times,
                                    const MlfConfig& mlf = {}) {
  return solve_spectral(dec, a_vec, alpha, times, Grid::of(op), mlf);
}

/// max(1, (2 - alpha)/alpha): the grading that restores the O(K^-(2-alpha)) rate.
inline double default_grading(double alpha) { return std::max(1.0, (2.0 - alpha) / alpha); }

/// Graded mesh t_k = t_final (k/K)^r, k = 0..K.
inline std::vector<double> graded_mesh(double t_final, int n_steps, double grading) {
  std::vector<double> t(static_cast<std::size_t>(n_steps) + 1);
  for (int k = 0; k <= n_steps; ++k) t[k] = t_final * std::pow(static_cast<double>(k) / n_steps, grading);
  t.back() = t_final;
  return t;
}

/// Returns every mesh time t_1..t_K.
inline SolutionField solve_l1(const Eigen::MatrixXd& A, const Eigen::VectorXd& a_vec, double alpha, double t_final,
                              int n_steps, double grading, const Grid& grid = {}) {
  detail::require_alpha(alpha, true);
  const int N = static_cast<int>(A.rows());
  if (A.cols() != N || a_vec.size() != N)
    throw Error(ErrorKind::DomainError, "operator and initial vector sizes disagree");
  if (n_steps < 4) throw Error(ErrorKind::DomainError, "n_steps must be >= 4");
  if (!(grading >= 1.0)) throw Error(ErrorKind::DomainError, "grading must be >= 1");
  if (!(t_final > 0.0) || !std::isfinite(t_final)) throw Error(ErrorKind::DomainError, "t_final must be positive");

  const std::vector<double> t = graded_mesh(t_final, n_steps, grading);
  SolutionField out;
  out.method = SolveMethod::L1;
  out.grid = grid.n[0] > 0 ? grid : Grid::unit_interval(N);
  out.times.assign(t.begin() + 1, t.end());
  out.values.reserve(n_steps);

  const double g2a = std::tgamma(2.0 - alpha);
  const double e = 1.0 - alpha;
  // Increments u^k - u^{k-1}, kept whole: the history is not compressed.
  std::vector<Eigen::VectorXd> du;
  du.reserve(n_steps);
  Eigen::VectorXd prev = a_vec;
  const double norm0 = a_vec.norm();
  bool warned = false;
  double cached_diag = std::numeric_limits<double>::quiet_NaN();
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(N, N);

  for (int n = 1; n <= n_steps; ++n) {
    const double tau_n = t[n] - t[n - 1];
    double diag;
    Eigen::VectorXd rhs;
    if (alpha == 1.0) {
      diag = 1.0 / tau_n;
      rhs = prev * diag;
    } else {
      // d_{n,k} = [(t_n - t_{k-1})^(1-a) - (t_n - t_k)^(1-a)] / (tau_k Gamma(2-a))
      diag = std::pow(tau_n, e) / (tau_n * g2a);
      rhs = prev * diag;
      for (int k = 1; k < n; ++k) {
        const double tau = t[k] - t[k - 1];
        const double b = t[n] - t[k];
        const double d = std::pow(b, e) * std::expm1(e * std::log1p(tau / b)) / (tau * g2a);
        rhs.noalias() -= d * du[k - 1];
      }
    }
    if (diag != cached_diag) {
      lu.compute(diag * I + A);
      cached_diag = diag;
    }
    Eigen::VectorXd next = lu.solve(rhs);
    if (!next.allFinite() || (diag * next + A * next - rhs).norm() > 1e-8 * (rhs.norm() + diag * next.norm())) {
      std::ostringstream os;
      os << "L1 step " << n << " linear solve failed";
      throw Error(ErrorKind::LinearSolveFailure, os.str());
    }
    if (!warned && next.norm() > norm0 * (1.0 + 1e-8)) {
      std::ostringstream os;
      os << "StabilityWarning: solution norm grew above the initial norm at step " << n << " (t = " << t[n] << ")";
      out.warnings.push_back(os.str());
      warned = true;
    }
    du.push_back(next - prev);
    prev = next;
    out.values.push_back(next);
  }
  return out;
}

inline SolutionField solve_l1(const DiscreteOperator& op, const Eigen::VectorXd& a_vec, double alpha, double t_final,
                              int n_steps, double grading) {
  return solve_l1(op.matrix, a_vec, alpha, t_final, n_steps, grading, Grid::of(op));
}

/// Interpolated value of a grid vector at x0, zero on the boundary.
inline double interpolate(const Eigen::VectorXd& v, const Grid& grid, const std::array<double, 2>& x0) {
  auto locate = [&](int axis, int& lo, double& frac) {
    const double x = x0[axis];
    if (!(x > 0.0) || !(x < grid.length[axis])) {
      std::ostringstream os;
      os << "observation point coordinate " << x << " is outside (0, " << grid.length[axis] << ")";
      throw Error(ErrorKind::OutOfDomain, os.str());
    }
    // Node k sits at (k + 1) h; lo = -1 and lo = n are the boundary.
    const double s = x / grid.h(axis) - 1.0;
    lo = std::clamp(static_cast<int>(std::floor(s)), -1, grid.n[axis] - 1);
    frac = s - lo;
  };
  if (v.size() != grid.size()) throw Error(ErrorKind::DomainError, "vector does not match the grid");
  int i = 0;
  double fx = 0.0;
  locate(0, i, fx);
  if (grid.dim == 1) {
    auto at = [&](int k) { return k < 0 || k >= grid.n[0] ? 0.0 : v(k); };
    return (1.0 - fx) * at(i) + fx * at(i + 1);
  }
  int j = 0;
  double fy = 0.0;
  locate(1, j, fy);
  auto at = [&](int p, int q) {
    if (p < 0 || q < 0 || p >= grid.n[0] || q >= grid.n[1]) return 0.0;
    return v(p + grid.n[0] * q);
  };
  return (1.0 - fx) * (1.0 - fy) * at(i, j) + fx * (1.0 - fy) * at(i + 1, j) + (1.0 - fx) * fy * at(i, j + 1) +
         fx * fy * at(i + 1, j + 1);
}

inline ObservationSeries observe(const SolutionField& field, const std::array<double, 2>& x0) {
  ObservationSeries s;
  s.x0 = x0;
  s.times = field.times;
  s.u_at_x0.reserve(field.size());
  for (const auto& v : field.values) s.u_at_x0.push_back(interpolate(v, field.grid, x0));
  return s;
}

/// t -> ||u(t)||_2 as a series (x0 is meaningless and set to NaN).
inline ObservationSeries norm_series(const SolutionField& field) {
  ObservationSeries s;
  s.x0 = {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  s.times = field.times;
  for (const auto& v : field.values) s.u_at_x0.push_back(grid_norm(v, field.grid));
  return s;
}

struct PowerFit {
  double slope = 0.0;
  /// sign(u) exp(intercept): u ~ constant t^slope.
  double constant = 0.0;
  double slope_stderr = 0.0;
  double residual_norm = 0.0;
  int samples = 0;
};

namespace detail {

/// Least-squares line through (log t, log |u|) over t in [t_lo, t_hi].
inline PowerFit loglog_fit(const ObservationSeries& s, double t_lo, double t_hi, int min_samples) {
  if (s.times.size() != s.u_at_x0.size()) throw Error(ErrorKind::DomainError, "series arrays differ in length");
  std::vector<double> x;
  std::vector<double> y;
  int sign = 0;
  int tiny = 0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    const double t = s.times[k];
    if (t < t_lo || t > t_hi) continue;
    const double u = s.u_at_x0[k];
    if (!(std::abs(u) >= 1e-300)) {
      ++tiny;
      continue;
    }
    const int sg = u > 0 ? 1 : -1;
    if (sign != 0 && sg != sign) throw Error(ErrorKind::SignChangeInWindow, "observed values change sign in the fit window");
    sign = sg;
    x.push_back(std::log(t));
    y.push_back(std::log(std::abs(u)));
  }
  if (tiny > 0) {
    std::ostringstream os;
    os << tiny << " sample(s) in the window underflow |u| < 1e-300";
    throw Error(ErrorKind::DegenerateSeries, os.str());
  }
  const int m = static_cast<int>(x.size());
  if (m < min_samples) {
    std::ostringstream os;
    os << "fit window holds " << m << " samples, at least " << min_samples << " needed";
    throw Error(ErrorKind::WindowTooNarrow, os.str());
  }
  double mx = 0.0;
  double my = 0.0;
  for (int k = 0; k < m; ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0;
  double sxy = 0.0;
  for (int k = 0; k < m; ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
  }
  if (!(sxx > 0.0)) throw Error(ErrorKind::WindowTooNarrow, "fit window spans a single time");
  PowerFit f;
  f.samples = m;
  f.slope = sxy / sxx;
  const double intercept = my - f.slope * mx;
  f.constant = sign * std::exp(intercept);
  double ss = 0.0;
  for (int k = 0; k < m; ++k) {
    const double r = y[k] - intercept - f.slope * x[k];
    ss += r * r;
  }
  f.residual_norm = std::sqrt(ss);
  f.slope_stderr = m > 2 ? std::sqrt(ss / (m - 2) / sxx) : 0.0;
  return f;
}

}  // namespace detail

struct DecayFit {
  double slope = 0.0;
  double constant = 0.0;
  double slope_stderr = 0.0;
  int samples = 0;

  /// slope within [-alpha - tol, -alpha + tol]
  bool consistent(double alpha, double tol) const { return std::abs(slope + alpha) <= tol; }
};

inline DecayFit verify_decay(const ObservationSeries& series, double alpha, double t_min,
                             double t_max = std::numeric_limits<double>::infinity()) {
  detail::require_alpha(alpha, true);
  bool any = false;
  for (std::size_t k = 0; k < series.size(); ++k)
    if (series.times[k] >= t_min && series.times[k] <= t_max && std::abs(series.u_at_x0[k]) >= 1e-300) any = true;
  if (!any) throw Error(ErrorKind::DegenerateSeries, "all observed values beyond t_min are below 1e-300");
  const PowerFit f = detail::loglog_fit(series, t_min, t_max, 10);
  return DecayFit{f.slope, f.constant, f.slope_stderr, f.samples};
}

}  // namespace fracorder
