#pragma once

// Coefficients theta_{jl} of
//   (d/dt^alpha)^j = sum_{l=1..j} theta_{jl} t^(l - j alpha) (d/dt)^l,
// generated by
//   theta_11 = 1/alpha,
//   theta_{j+1,l} = theta_{jl} (l - alpha j)/alpha + theta_{j,l-1}/alpha
// with theta_{j0} = theta_{j,j+1} = 0, so the first and last rows of the
// recurrence are the same formula with one term missing.
//
// Written in u = 1/alpha every theta_{jl} is a polynomial with integer
// coefficients:  theta_{j+1,l} = theta_{jl} (l u - j) + theta_{j,l-1} u.
// Tables up to j = 12 are kept in that exact form.

#include <cmath>
#include <cstdint>
#include <sstream>
#include <vector>

#include "fracorder/errors.hpp"
#include "fracorder/mlf.hpp"

namespace fracorder {

/// Integer polynomial in u = 1/alpha, coefficient of u^k at index k.
using ThetaPolynomial = std::vector<std::int64_t>;

inline constexpr int kThetaExactMaxJ = 12;

class ThetaTable {
 public:
  ThetaTable(double alpha, int max_j) : alpha_(alpha), max_j_(max_j) {
    if (!std::isfinite(alpha) || !(alpha > 0.0) || alpha > 1.0) {
      std::ostringstream os;
      os << "theta table needs alpha in (0, 1], got " << alpha;
      throw Error(ErrorKind::DomainError, os.str());
    }
    if (max_j < 1) throw Error(ErrorKind::DomainError, "theta table needs max_j >= 1");
    exact_ = max_j <= kThetaExactMaxJ && build_exact();
    if (!exact_) build_float();
  }

  double alpha() const noexcept { return alpha_; }
  int max_j() const noexcept { return max_j_; }
  /// True when the entries are held as exact integer polynomials in 1/alpha.
  bool exact() const noexcept { return exact_; }

  long double value(int j, int l) const {
    check(j, l);
    return values_[offset(j, l)];
  }
  double operator()(int j, int l) const { return static_cast<double>(value(j, l)); }

  /// Exact form of theta_{jl}; throws NotImplemented for float-only tables.
  const ThetaPolynomial& polynomial(int j, int l) const {
    check(j, l);
    if (!exact_) throw Error(ErrorKind::NotImplemented, "theta table beyond j = 12 is floating point only");
    return polys_[offset(j, l)];
  }

 private:
  static std::size_t offset(int j, int l) { return static_cast<std::size_t>(j * (j - 1) / 2 + (l - 1)); }

  void check(int j, int l) const {
    if (j < 1 || j > max_j_ || l < 1 || l > j) {
      std::ostringstream os;
      os << "theta_{" << j << "," << l << "} is outside the table (max_j = " << max_j_ << ")";
      throw Error(ErrorKind::DomainError, os.str());
    }
  }

  bool build_exact() {
    const std::size_t n = offset(max_j_, max_j_) + 1;
    polys_.assign(n, {});
    polys_[offset(1, 1)] = {0, 1};
    for (int j = 1; j < max_j_; ++j) {
      for (int l = 1; l <= j + 1; ++l) {
        ThetaPolynomial next(static_cast<std::size_t>(j + 2), 0);
        if (l <= j) {
          // theta_{jl} (l u - j)
          const auto& p = polys_[offset(j, l)];
          for (std::size_t k = 0; k < p.size(); ++k) {
            if (!mul_add(next[k], p[k], -j) || !mul_add(next[k + 1], p[k], l)) return false;
          }
        }
        if (l >= 2) {
          // theta_{j,l-1} u
          const auto& p = polys_[offset(j, l - 1)];
          for (std::size_t k = 0; k < p.size(); ++k)
            if (!mul_add(next[k + 1], p[k], 1)) return false;
        }
        polys_[offset(j + 1, l)] = std::move(next);
      }
    }
    values_.resize(n);
    const long double u = 1.0L / alpha_;
    for (std::size_t i = 0; i < n; ++i) {
      long double v = 0.0L;
      for (auto c = polys_[i].rbegin(); c != polys_[i].rend(); ++c) v = v * u + static_cast<long double>(*c);
      values_[i] = v;
    }
    return true;
  }

  void build_float() {
    polys_.clear();
    values_.assign(offset(max_j_, max_j_) + 1, 0.0L);
    const long double a = alpha_;
    values_[offset(1, 1)] = 1.0L / a;
    for (int j = 1; j < max_j_; ++j) {
      for (int l = 1; l <= j + 1; ++l) {
        long double v = 0.0L;
        if (l <= j) v += values_[offset(j, l)] * (l - a * j) / a;
        if (l >= 2) v += values_[offset(j, l - 1)] / a;
        values_[offset(j + 1, l)] = v;
      }
    }
  }

  static bool mul_add(std::int64_t& acc, std::int64_t a, std::int64_t b) {
    std::int64_t prod = 0;
    if (__builtin_mul_overflow(a, b, &prod)) return false;
    return !__builtin_add_overflow(acc, prod, &acc);
  }

  double alpha_;
  int max_j_;
  bool exact_ = false;
  std::vector<ThetaPolynomial> polys_;
  std::vector<long double> values_;
};

inline ThetaTable build_theta(double alpha, int max_j = 10) { return ThetaTable(alpha, max_j); }

struct PhiSequence {
  double alpha = 0.0;
  /// values[j - 1] = Phi_j.
  std::vector<double> values;
};

/// Phi_j = ((-1)^j / j!) sum_l theta_{jl} / Gamma(1 - l - alpha), j = 1..max_j.
inline PhiSequence phi_sequence(const ThetaTable& table) {
  PhiSequence out;
  out.alpha = table.alpha();
  const long double a = table.alpha();
  long double factorial = 1.0L;
  for (int j = 1; j <= table.max_j(); ++j) {
    factorial *= j;
    long double sum = 0.0L;
    for (int l = 1; l <= j; ++l) {
      const long double x = 1.0L - l - a;
      long double rg = 0.0L;
      if (!(x <= 0.0L && x == std::floor(x))) rg = 1.0L / std::tgamma(x);
      sum += table.value(j, l) * rg;
    }
    out.values.push_back(static_cast<double>((j % 2 == 0 ? sum : -sum) / factorial));
  }
  return out;
}

/// (d/dz)^j E_{alpha,1}(-z) = z^-j sum_l theta_{jl} E_{alpha,1-l}(-z), Re z > 0.
inline Complex mlf_derivative_via_theta(double alpha, int j, Complex z, const MlfConfig& config = {}) {
  if (j < 1) throw Error(ErrorKind::DomainError, "derivative order j must be >= 1");
  if (!(z.real() > 0.0)) throw Error(ErrorKind::DomainError, "derivative formula needs Re z > 0");
  const ThetaTable table(alpha, j);
  Complex sum(0.0, 0.0);
  for (int l = 1; l <= j; ++l) sum += table(j, l) * mlf_eval(MlfParams(alpha, 1.0 - l), -z, config);
  return sum * std::pow(z, -j);
}

}  // namespace fracorder
