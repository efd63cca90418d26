#pragma once

// Mittag-Leffler functions E_{alpha,beta}(z) = sum_k z^k / Gamma(alpha k + beta)
// for 0 < alpha <= 1, real beta, and the arguments z = -lambda t^alpha that
// arise from operators whose spectrum lies in the right half plane.
//
// Three evaluation regimes:
//   * power series            |z|^(1/alpha) <= series_w
//   * Hankel contour integral |z| <= switch_radius
//   * asymptotic expansion    |z| >  switch_radius, |arg(-z)| <= pi/2 + sector_margin
//
// The power series cannot be used up to switch_radius in double precision:
// its largest term grows like exp(|z|^(1/alpha)) and the alternating sum
// cancels it down to O(1/|z|).

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "fracorder/errors.hpp"

namespace fracorder {

using Complex = std::complex<double>;

/// Order parameters of E_{alpha,beta}.  alpha is restricted to (0, 1];
/// alpha = 1 is admitted for the exponential special case.
class MlfParams {
 public:
  MlfParams(double alpha, double beta) : alpha_(alpha), beta_(beta) {
    if (!std::isfinite(alpha) || !(alpha > 0.0) || alpha > 1.0) {
      std::ostringstream os;
      os << "Mittag-Leffler order alpha must lie in (0, 1], got " << alpha;
      throw Error(ErrorKind::DomainError, os.str());
    }
    if (!std::isfinite(beta)) throw Error(ErrorKind::DomainError, "Mittag-Leffler beta must be finite");
  }

  double alpha() const noexcept { return alpha_; }
  double beta() const noexcept { return beta_; }

 private:
  double alpha_;
  double beta_;
};

struct MlfConfig {
  /// Crossover from the non-asymptotic regimes to the asymptotic expansion, in |z|.
  double switch_radius = 40.0;
  /// Smallest x accepted by mlf_asymptotic.
  double asymptotic_min = 20.0;
  /// The power series is used while |z|^(1/alpha) <= series_w (max term ~ e^series_w).
  double series_w = 3.0;
  /// Supported sector beyond switch_radius: |arg(-z)| <= pi/2 + sector_margin.
  double sector_margin = std::numbers::pi / 8.0;
  double tol = 1e-12;
  int max_terms = 10000;
  /// Relative tolerance handed to the quadrature routines.
  double quadrature_tol = 1e-14;
};

namespace detail {

/// sin(pi x) with exact argument reduction.
inline double sinpi(double x) {
  double r = std::fmod(x, 2.0);  // exact
  if (r > 1.0) r -= 2.0;
  if (r < -1.0) r += 2.0;
  if (r > 0.5) return std::sin(std::numbers::pi * (1.0 - r));
  if (r < -0.5) return -std::sin(std::numbers::pi * (1.0 + r));
  return std::sin(std::numbers::pi * r);
}

inline bool is_nonpositive_integer(double x) { return x <= 0.0 && x == std::floor(x); }

/// 1/Gamma(x), an entire function: exactly zero at the poles 0, -1, -2, ...
inline double rgamma(double x) {
  if (is_nonpositive_integer(x)) return 0.0;
  if (x >= 0.5) {
    if (x > 171.0) return std::exp(-std::lgamma(x));
    return 1.0 / std::tgamma(x);
  }
  // Reflection: 1/Gamma(x) = Gamma(1 - x) sin(pi x) / pi.
  const double s = sinpi(x) / std::numbers::pi;
  if (1.0 - x > 171.0) return s * std::exp(std::lgamma(1.0 - x));
  return s * std::tgamma(1.0 - x);
}

/// log|1/Gamma(x)| and its sign; sign = 0 at the poles.
inline double log_abs_rgamma(double x, int& sign) {
  if (is_nonpositive_integer(x)) {
    sign = 0;
    return -std::numeric_limits<double>::infinity();
  }
  if (x > 0.0) {
    sign = 1;
    return -std::lgamma(x);
  }
  const double s = sinpi(x);
  sign = s > 0.0 ? 1 : -1;
  return std::log(std::abs(s) / std::numbers::pi) + std::lgamma(1.0 - x);
}

inline void require_finite(Complex z) {
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
    throw Error(ErrorKind::DomainError, "Mittag-Leffler argument must be finite");
}

inline Complex principal_pow(Complex z, double p) {
  if (z == Complex(0.0, 0.0)) return p == 0.0 ? Complex(1.0, 0.0) : Complex(0.0, 0.0);
  return std::exp(p * std::log(z));
}

/// (1/alpha) z^((1-beta)/alpha) exp(z^(1/alpha)): residue of the Laplace-domain
/// integrand at its principal-sheet pole s = z^(1/alpha).
inline Complex pole_term(double alpha, double beta, Complex z) {
  const Complex s = principal_pow(z, 1.0 / alpha);
  return principal_pow(s, 1.0 - beta) * std::exp(s) / alpha;
}

inline bool pole_on_principal_sheet(double alpha, Complex z) {
  return std::abs(std::arg(z)) <= alpha * std::numbers::pi * (1.0 + 1e-15);
}

// One integrator per thread: Boost refines its abscissa tables lazily inside integrate().
inline boost::math::quadrature::tanh_sinh<double>& finite_integrator() {
  thread_local boost::math::quadrature::tanh_sinh<double> integrator;
  return integrator;
}

inline boost::math::quadrature::exp_sinh<double>& halfline_integrator() {
  thread_local boost::math::quadrature::exp_sinh<double> integrator;
  return integrator;
}

/// E_{alpha,beta}(z) from the inverse Laplace transform of s^(alpha-beta)/(s^alpha - z),
/// with the Bromwich line folded onto the two rays arg s = +-phi (pi/2 < phi <= pi).
/// phi = pi (the branch cut itself) unless the pole direction |arg z|/alpha is close
/// to pi, in which case the rays are rotated away from it.  The pole contributes its
/// residue whenever it lies inside |arg s| < phi.
inline Complex contour_integral(double alpha, double beta, Complex z, double tol) {
  constexpr double pi = std::numbers::pi;
  const double pole_dir = std::abs(std::arg(z)) / alpha;
  double phi = pi;
  if (std::abs(pole_dir - pi) < 0.2) phi = pole_dir - 0.25;

  const double cphi = std::cos(phi);
  const double sphi = std::sin(phi);
  const double ab = alpha - beta;

  // G(r) = e^{i phi} F(r e^{i phi}) with F(s) = e^s s^(alpha-beta) / (s^alpha - z).
  auto ray = [&](double r, double sign) -> Complex {
    if (r <= 0.0 || r * cphi < -745.0) return Complex(0.0, 0.0);
    const double theta = sign * phi;
    const Complex es = std::polar(std::exp(r * cphi), sign * r * sphi);
    const Complex power = std::polar(std::pow(r, ab), theta * ab);
    const Complex denom = std::polar(std::pow(r, alpha), theta * alpha) - z;
    return std::polar(1.0, theta) * es * power / denom;
  };

  const double split = std::pow(std::abs(z), 1.0 / alpha);
  auto& finite = finite_integrator();
  auto& halfline = halfline_integrator();

  Complex value;
  if (z.imag() == 0.0) {
    // Conjugate symmetry: the two rays combine into (1/pi) Im G(r).
    auto f = [&](double r) { return ray(r, 1.0).imag() / pi; };
    double head = split > 0.0 ? finite.integrate(f, 0.0, split, tol) : 0.0;
    double tail = halfline.integrate([&](double r) { return f(r + split); }, tol);
    value = Complex(head + tail, 0.0);
  } else {
    auto f = [&](double r) { return (ray(r, 1.0) - ray(r, -1.0)) / Complex(0.0, 2.0 * pi); };
    Complex head = split > 0.0 ? finite.integrate(f, 0.0, split, tol) : Complex(0.0, 0.0);
    Complex tail = halfline.integrate([&](double r) { return f(r + split); }, tol);
    value = head + tail;
  }
  if (pole_dir < phi) value += pole_term(alpha, beta, z);
  return value;
}

/// Auto-truncated algebraic expansion -sum_k z^{-k}/Gamma(beta - alpha k), plus the
/// exponential contribution when the pole sits on the principal sheet.
///
/// Truncation follows the envelope Gamma(1 - beta + alpha k)/(pi |z|^k), which bounds
/// |1/Gamma(beta - alpha k)| |z|^-k once beta - alpha k < 0.  The individual terms are
/// useless for this: they dip to zero near every pole of Gamma.
inline Complex asymptotic_auto(double alpha, double beta, Complex z) {
  const double logr = std::log(std::abs(z));
  const double argz = std::arg(z);
  Complex sum(0.0, 0.0);
  double previous = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= 1000; ++k) {
    const double y = beta - alpha * k;
    const double envelope = y < 0.0 ? std::lgamma(1.0 - y) - k * logr - std::log(std::numbers::pi) : -k * logr;
    if (y < 0.0 && envelope > previous) break;  // past the smallest term
    previous = envelope;
    int sign = 0;
    const double lg = log_abs_rgamma(y, sign);
    if (sign != 0) sum -= static_cast<double>(sign) * std::polar(std::exp(lg - k * logr), -k * argz);
    if (std::exp(envelope) <= 1e-18 * std::abs(sum)) break;
  }
  if (pole_on_principal_sheet(alpha, z)) sum += pole_term(alpha, beta, z);
  return sum;
}

}  // namespace detail

/// Power series of E_{alpha,beta}(z), truncated once the next term falls below
/// tol * (1 + |partial sum|) in the region where the terms decay geometrically.
inline Complex mlf_series(const MlfParams& params, Complex z, double tol = 1e-12, int max_terms = 10000) {
  detail::require_finite(z);
  if (!(tol > 0.0)) throw Error(ErrorKind::DomainError, "series tolerance must be positive");
  const double alpha = params.alpha();
  const double beta = params.beta();
  const double rz = std::abs(z);

  Complex sum(0.0, 0.0);
  Complex power(1.0, 0.0);
  for (int k = 0; k < max_terms; ++k) {
    const double arg = alpha * k + beta;
    const Complex term = power * detail::rgamma(arg);
    sum += term;
    if (!std::isfinite(sum.real()) || !std::isfinite(sum.imag())) break;
    if (arg > 1.0 && rz * std::pow(arg, -alpha) < 0.5 && std::abs(term) < tol * (1.0 + std::abs(sum)))
      return sum;
    power *= z;
  }
  std::ostringstream os;
  os << "power series of E_{" << alpha << "," << beta << "} did not converge within " << max_terms
     << " terms at |z| = " << rz;
  throw Error(ErrorKind::NonConvergence, os.str());
}

/// Algebraic asymptotic expansion of E_{alpha,beta}(-x) for large x > 0 with
/// `terms` terms: sum_{k=1..terms} (-1)^{k+1} x^{-k} / Gamma(beta - alpha k).
/// For beta = 1 - l the leading term is x^{-1}/Gamma(1 - l - alpha).
inline double mlf_asymptotic(const MlfParams& params, double x, int terms, const MlfConfig& config = {}) {
  if (!std::isfinite(x) || !(x > 0.0)) throw Error(ErrorKind::DomainError, "asymptotic expansion needs x > 0");
  if (terms < 1) throw Error(ErrorKind::DomainError, "asymptotic expansion needs at least one term");
  if (x < config.asymptotic_min) {
    std::ostringstream os;
    os << "x = " << x << " is below the asymptotic regime threshold " << config.asymptotic_min;
    throw Error(ErrorKind::DomainError, os.str());
  }
  const double logx = std::log(x);
  double sum = 0.0;
  for (int k = 1; k <= terms; ++k) {
    int sign = 0;
    const double lg = detail::log_abs_rgamma(params.beta() - params.alpha() * k, sign);
    if (sign == 0) continue;
    const double term = sign * std::exp(lg - k * logx);
    sum += (k % 2 == 1) ? term : -term;
  }
  return sum;
}

/// E_{alpha,beta}(z).  Supported: every z with |z| <= switch_radius, and
/// |z| > switch_radius with |arg(-z)| <= pi/2 + sector_margin.  Accuracy is
/// reduced in a thin band around |arg z| = alpha*pi where the Laplace-domain
/// pole crosses the branch cut.
inline Complex mlf_eval(const MlfParams& params, Complex z, const MlfConfig& config = {}) {
  detail::require_finite(z);
  const double alpha = params.alpha();
  const double beta = params.beta();
  const double rz = std::abs(z);

  if (alpha == 1.0) {
    // E_{1,1-l}(z) = z^l e^z for integer l >= 0.
    if (beta <= 1.0 && beta == std::floor(beta)) {
      const int l = static_cast<int>(1.0 - beta);
      Complex zl(1.0, 0.0);
      for (int i = 0; i < l; ++i) zl *= z;
      return zl * std::exp(z);
    }
    if (rz <= config.series_w) return mlf_series(params, z, config.tol, config.max_terms);
    throw Error(ErrorKind::NotImplemented, "alpha = 1 with non-integer beta is only supported for small |z|");
  }

  if (rz == 0.0) return Complex(detail::rgamma(beta), 0.0);
  if (std::pow(rz, 1.0 / alpha) <= config.series_w) return mlf_series(params, z, config.tol, config.max_terms);
  if (rz <= config.switch_radius) return detail::contour_integral(alpha, beta, z, config.quadrature_tol);

  const double angle = std::abs(std::arg(-z));
  if (angle > std::numbers::pi / 2.0 + config.sector_margin) {
    std::ostringstream os;
    os << "|z| = " << rz << " > " << config.switch_radius << " with |arg(-z)| = " << angle
       << " outside the supported sector |arg(-z)| <= pi/2 + " << config.sector_margin;
    throw Error(ErrorKind::NotImplemented, os.str());
  }
  return detail::asymptotic_auto(alpha, beta, z);
}

inline double mlf_eval_real(const MlfParams& params, double x, const MlfConfig& config = {}) {
  return mlf_eval(params, Complex(x, 0.0), config).real();
}

/// Default constant of mlf_decay_bound.  E_{alpha,1}(-y) <= 1/(1 + y/Gamma(1+alpha))
/// and Gamma(1+alpha) <= 1 on (0,1], so C = 1 suffices.
inline constexpr double kDecayBoundConstant = 1.0;

/// C / (1 + mu0 t^alpha): upper envelope for E_{alpha,1}(-mu0 t^alpha).
inline double mlf_decay_bound(double alpha, double mu0, double t, double constant = kDecayBoundConstant) {
  if (!(mu0 > 0.0)) throw Error(ErrorKind::DomainError, "decay bound needs mu0 > 0");
  if (!(t >= 0.0)) throw Error(ErrorKind::DomainError, "decay bound needs t >= 0");
  return constant / (1.0 + mu0 * std::pow(t, alpha));
}

}  // namespace fracorder
