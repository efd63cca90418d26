#pragma once

// Long-time behaviour
//   u(x0, t) = (A^-1 a)(x0) / (Gamma(1 - alpha) t^alpha) + R(t),  |R| <= C t^(-2 alpha).

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "fracorder/errors.hpp"
#include "fracorder/solver.hpp"
#include "fracorder/spectral.hpp"

namespace fracorder {

struct AsymptoticModel {
  double leading_coeff = 0.0;
  double alpha = 0.5;
  double remainder_scale = 0.0;

  double leading(double t) const { return leading_coeff * std::pow(t, -alpha); }
};

namespace detail {

inline double interpolate_real(const CVector& v, const Grid& grid, const std::array<double, 2>& x0) {
  return interpolate(v.real(), grid, x0);
}

inline void require_keep(const SpectralDecomposition& dec, int n_keep) {
  if (n_keep < 1 || n_keep > dec.cluster_count()) {
    std::ostringstream os;
    os << "N_keep = " << n_keep << " outside 1.." << dec.cluster_count();
    throw Error(ErrorKind::DomainError, os.str());
  }
}

}  // namespace detail

/// (A^-1 P_n a)(x0) / Gamma(1 - alpha), one entry per cluster.
inline std::vector<double> leading_term_per_cluster(const SpectralDecomposition& dec, const Eigen::VectorXd& a_vec,
                                                    const Grid& grid, const std::array<double, 2>& x0,
                                                    double alpha) {
  detail::require_alpha(alpha, false);
  if (a_vec.size() != dec.size()) throw Error(ErrorKind::DomainError, "initial vector length does not match the operator");
  const double rg = detail::rgamma(1.0 - alpha);
  std::vector<double> out;
  out.reserve(dec.clusters.size());
  for (int n = 0; n < dec.cluster_count(); ++n) {
    const CVector pa = dec.clusters[n].apply_projector(a_vec);
    out.push_back(detail::interpolate_real(inverse_via_neumann(dec, pa, n).value, grid, x0) * rg);
  }
  return out;
}

/// Sum over the first n_keep clusters (ascending Re lambda) of (A^-1 P_n a)(x0) / Gamma(1 - alpha).
inline double leading_term(const SpectralDecomposition& dec, const Eigen::VectorXd& a_vec, const Grid& grid,
                           const std::array<double, 2>& x0, double alpha, int n_keep) {
  detail::require_alpha(alpha, false);
  detail::require_keep(dec, n_keep);
  if (a_vec.size() != dec.size()) throw Error(ErrorKind::DomainError, "initial vector length does not match the operator");
  CVector sum = CVector::Zero(dec.size());
  for (int n = 0; n < n_keep; ++n) sum += inverse_via_neumann(dec, dec.clusters[n].apply_projector(a_vec), n).value;
  return detail::interpolate_real(sum, grid, x0) * detail::rgamma(1.0 - alpha);
}

inline double leading_term(const SpectralDecomposition& dec, const Eigen::VectorXd& a_vec, const Grid& grid,
                           const std::array<double, 2>& x0, double alpha) {
  return leading_term(dec, a_vec, grid, x0, alpha, dec.cluster_count());
}

/// (A^-1 a)(x0) / Gamma(1 - alpha) from a dense LU solve.
inline double direct_leading_term(const Eigen::MatrixXd& A, const Eigen::VectorXd& a_vec, const Grid& grid,
                                  const std::array<double, 2>& x0, double alpha) {
  detail::require_alpha(alpha, false);
  const Eigen::VectorXd f = A.partialPivLu().solve(a_vec);
  if (!f.allFinite()) throw Error(ErrorKind::LinearSolveFailure, "A f = a has no finite solution");
  return interpolate(f, grid, x0) * detail::rgamma(1.0 - alpha);
}

struct RemainderFit {
  /// Slope of log|R| against log t; NaN when R is at roundoff level.
  double slope = std::numeric_limits<double>::quiet_NaN();
  /// max t^(2 alpha) |R(t)|
  double scale = 0.0;
  int samples = 0;

  bool resolved() const { return std::isfinite(slope); }
};

/// R(t) = u(x0,t) - model_leading t^-alpha over t >= t_min.
inline RemainderFit remainder_fit(const ObservationSeries& series, double model_leading, double alpha, double t_min,
                                  double t_max = std::numeric_limits<double>::infinity()) {
  detail::require_alpha(alpha, false);
  if (series.times.size() != series.u_at_x0.size()) throw Error(ErrorKind::DomainError, "series arrays differ in length");
  std::vector<double> lt;
  std::vector<double> lr;
  RemainderFit fit;
  double u_scale = 0.0;
  double last_t = 0.0;
  double last_r = 0.0;
  for (std::size_t k = 0; k < series.size(); ++k) {
    const double t = series.times[k];
    if (t < t_min || t > t_max) continue;
    const double u = series.u_at_x0[k];
    const double r = u - model_leading * std::pow(t, -alpha);
    ++fit.samples;
    fit.scale = std::max(fit.scale, std::pow(t, 2.0 * alpha) * std::abs(r));
    u_scale = std::max(u_scale, std::abs(u));
    last_t = t;
    last_r = r;
    if (std::abs(r) > 0.0) {
      lt.push_back(std::log(t));
      lr.push_back(std::log(std::abs(r)));
    }
  }
  if (fit.samples < 10) {
    std::ostringstream os;
    os << "remainder fit needs 10 samples beyond t_min, got " << fit.samples;
    throw Error(ErrorKind::WindowTooNarrow, os.str());
  }
  const double lead_last = std::abs(model_leading) * std::pow(last_t, -alpha);
  if (std::abs(last_r) > lead_last) {
    std::ostringstream os;
    os << "|R| = " << std::abs(last_r) << " exceeds the leading term " << lead_last << " at t = " << last_t
       << "; the asymptotic regime is not reached, increase t_min";
    throw Error(ErrorKind::RemainderDominates, os.str());
  }
  // A remainder at the rounding level of u carries no slope.
  bool resolved = lt.size() >= 10;
  for (std::size_t k = 0; resolved && k < series.size(); ++k) {
    const double t = series.times[k];
    if (t < t_min || t > t_max) continue;
    const double r = series.u_at_x0[k] - model_leading * std::pow(t, -alpha);
    if (std::abs(r) <= 1e-12 * std::abs(series.u_at_x0[k])) resolved = false;
  }
  if (!resolved) return fit;
  const double m = static_cast<double>(lt.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t k = 0; k < lt.size(); ++k) {
    mx += lt[k];
    my += lr[k];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t k = 0; k < lt.size(); ++k) {
    sxx += (lt[k] - mx) * (lt[k] - mx);
    sxy += (lt[k] - mx) * (lr[k] - my);
  }
  fit.slope = sxy / sxx;
  return fit;
}

/// Time after which mu0 t^alpha >= 50.
inline double asymptotic_t_min(double mu0, double alpha) {
  if (!(mu0 > 0.0)) throw Error(ErrorKind::ConditionViolated, "asymptotic onset needs mu0 > 0");
  return std::pow(50.0 / mu0, 1.0 / alpha);
}

inline AsymptoticModel build_model(const SpectralDecomposition& dec, const Eigen::VectorXd& a_vec, const Grid& grid,
                                   const std::array<double, 2>& x0, double alpha, const ObservationSeries& series,
                                   double t_min) {
  AsymptoticModel m;
  m.alpha = alpha;
  m.leading_coeff = leading_term(dec, a_vec, grid, x0, alpha);
  m.remainder_scale = remainder_fit(series, m.leading_coeff, alpha, t_min).scale;
  return m;
}

}  // namespace fracorder
