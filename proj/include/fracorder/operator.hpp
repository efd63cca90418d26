#pragma once

// -A u = sum_ij d_i(a_ij d_j u) + sum_j b_j d_j u + c u on a box, zero Dirichlet data,
// discretized by second-order finite differences on a uniform interior grid.
// The matrix realizes A itself, so the Laplacian becomes tridiag(-1, 2, -1)/h^2.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "fracorder/errors.hpp"
#include "fracorder/expression.hpp"

namespace fracorder {

/// Samples on a uniform grid over the closed box (boundary included), bilinear in between.
class GridField {
 public:
  GridField() = default;
  GridField(std::array<double, 2> length, std::array<int, 2> count, std::vector<double> values)
      : length_(length), count_(count), values_(std::move(values)) {
    if (count_[0] < 2 || count_[1] < 1)
      throw Error(ErrorKind::SpecError, "grid field needs at least two samples along x");
    if (values_.size() != static_cast<std::size_t>(count_[0]) * static_cast<std::size_t>(count_[1]))
      throw Error(ErrorKind::SpecError, "grid field sample count does not match its shape");
    for (double v : values_)
      if (!std::isfinite(v)) throw Error(ErrorKind::SpecError, "grid field contains a non-finite sample");
  }

  double operator()(double x, double y = 0.0) const {
    const auto [i, fx] = locate(x, 0);
    if (count_[1] == 1) return lerp(at(i, 0), at(i + 1, 0), fx);
    const auto [j, fy] = locate(y, 1);
    return lerp(lerp(at(i, j), at(i + 1, j), fx), lerp(at(i, j + 1), at(i + 1, j + 1), fx), fy);
  }

  /// Node-wise central differences (one-sided at the edges), again as a grid field.
  GridField derivative(int axis) const {
    if (axis == 1 && count_[1] == 1) return GridField(length_, count_, std::vector<double>(values_.size(), 0.0));
    std::vector<double> d(values_.size());
    const int n = count_[axis];
    const double h = length_[axis] / (n - 1);
    for (int j = 0; j < count_[1]; ++j) {
      for (int i = 0; i < count_[0]; ++i) {
        auto v = [&](int k) { return axis == 0 ? at(k, j) : at(i, k); };
        const int k = axis == 0 ? i : j;
        double g;
        if (k == 0) g = (v(1) - v(0)) / h;
        else if (k == n - 1) g = (v(n - 1) - v(n - 2)) / h;
        else g = (v(k + 1) - v(k - 1)) / (2.0 * h);
        d[static_cast<std::size_t>(i + count_[0] * j)] = g;
      }
    }
    return GridField(length_, count_, std::move(d));
  }

  std::array<double, 2> length() const noexcept { return length_; }
  std::array<int, 2> count() const noexcept { return count_; }
  const std::vector<double>& values() const noexcept { return values_; }

 private:
  double at(int i, int j) const { return values_[static_cast<std::size_t>(i + count_[0] * j)]; }
  static double lerp(double a, double b, double f) { return a + (b - a) * f; }

  std::pair<int, double> locate(double x, int axis) const {
    const int n = count_[axis];
    const double h = length_[axis] / (n - 1);
    double s = std::clamp(x / h, 0.0, static_cast<double>(n - 1));
    int i = std::min(static_cast<int>(std::floor(s)), n - 2);
    return {i, s - i};
  }

  std::array<double, 2> length_{1.0, 1.0};
  std::array<int, 2> count_{2, 1};
  std::vector<double> values_{0.0, 0.0};
};

/// A coefficient given either in closed form or by samples.
class Field {
 public:
  Field() = default;
  Field(Expression e) : rep_(std::move(e)) {}  // NOLINT: implicit by design
  Field(GridField g) : rep_(std::move(g)) {}   // NOLINT
  static Field parse(std::string_view text) { return Field(Expression::parse(text)); }
  static Field constant(double v) { return Field(Expression::constant(v)); }

  double operator()(double x, double y = 0.0) const {
    return std::visit([&](const auto& f) { return f(x, y); }, rep_);
  }

  Field derivative(int axis) const {
    return std::visit([&](const auto& f) { return Field(f.derivative(axis)); }, rep_);
  }

  bool is_expression() const { return std::holds_alternative<Expression>(rep_); }
  const Expression& expression() const { return std::get<Expression>(rep_); }
  const GridField& grid() const { return std::get<GridField>(rep_); }

 private:
  std::variant<Expression, GridField> rep_;
};

struct ProblemSpec {
  int dim = 1;
  std::array<double, 2> length{1.0, 1.0};
  /// Interior nodes per axis; the second entry is ignored in 1D.
  std::array<int, 2> n{31, 1};
  std::array<std::array<Field, 2>, 2> a{{{Field::constant(1.0), Field::constant(0.0)},
                                        {Field::constant(0.0), Field::constant(1.0)}}};
  std::array<Field, 2> b{};
  Field c{};
  Field initial = Field::constant(1.0);
  std::array<double, 2> x0{0.5, 0.5};
  double alpha = 0.5;

  double h(int axis) const { return length[axis] / (n[axis] + 1); }
  int nodes() const { return dim == 1 ? n[0] : n[0] * n[1]; }
};

namespace detail {

/// Sample points over the closed box: `samples` per axis, endpoints included.
inline std::vector<std::array<double, 2>> sample_points(const ProblemSpec& spec, int samples) {
  std::vector<std::array<double, 2>> pts;
  const int m = std::max(samples, 2);
  const int my = spec.dim == 2 ? m : 1;
  for (int j = 0; j < my; ++j) {
    for (int i = 0; i < m; ++i) {
      const double x = spec.length[0] * i / (m - 1);
      const double y = spec.dim == 2 ? spec.length[1] * j / (m - 1) : 0.0;
      pts.push_back({x, y});
    }
  }
  return pts;
}

/// Smallest eigenvalue of the symmetric d x d coefficient matrix at one point.
inline double min_eig_a(const ProblemSpec& spec, double x, double y) {
  const double a11 = spec.a[0][0](x, y);
  if (spec.dim == 1) return a11;
  const double a22 = spec.a[1][1](x, y);
  const double a12 = spec.a[0][1](x, y);
  const double mean = 0.5 * (a11 + a22);
  const double diff = 0.5 * (a11 - a22);
  return mean - std::hypot(diff, a12);
}

}  // namespace detail

/// Checks the structural invariants of a problem; throws SpecError naming the first violation.
inline void validate(const ProblemSpec& spec, int samples = 41) {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::SpecError, what); };
  if (spec.dim != 1 && spec.dim != 2) fail("dim must be 1 or 2");
  for (int i = 0; i < spec.dim; ++i) {
    if (!(spec.length[i] > 0.0) || !std::isfinite(spec.length[i])) fail("box lengths must be positive");
    if (spec.n[i] < 3) fail("n_per_axis must be at least 3");
  }
  if (!(spec.alpha > 0.0 && spec.alpha < 1.0)) fail("alpha must lie in (0, 1)");
  for (int i = 0; i < spec.dim; ++i) {
    if (!(spec.x0[i] > 0.0 && spec.x0[i] < spec.length[i])) fail("x0 must lie strictly inside the box");
  }
  for (const auto& p : detail::sample_points(spec, samples)) {
    if (spec.dim == 2) {
      const double a12 = spec.a[0][1](p[0], p[1]);
      const double a21 = spec.a[1][0](p[0], p[1]);
      if (std::abs(a12 - a21) > 1e-12 * (1.0 + std::abs(a12))) fail("a_ij must be symmetric (a_12 = a_21)");
    }
    const double cv = spec.c(p[0], p[1]);
    if (!std::isfinite(cv)) fail("c is not finite on the box");
    if (cv > 0.0) {
      std::ostringstream os;
      os << "c(x) <= 0 is required on the closed box, found c = " << cv << " at x = (" << p[0] << ", " << p[1] << ")";
      fail(os.str());
    }
  }
}

/// Whether the initial value keeps one sign on the interior grid (and is not identically zero).
inline bool initial_sign_definite(const ProblemSpec& spec) {
  bool pos = false;
  bool neg = false;
  const int ny = spec.dim == 2 ? spec.n[1] : 1;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < spec.n[0]; ++i) {
      const double x = (i + 1) * spec.h(0);
      const double y = spec.dim == 2 ? (j + 1) * spec.h(1) : 0.0;
      const double v = spec.initial(x, y);
      pos = pos || v > 0.0;
      neg = neg || v < 0.0;
    }
  }
  return pos != neg;
}

/// sigma(a_ij): minimum over sampled points of the smallest eigenvalue of [a_ij(x)].
inline double check_ellipticity(const ProblemSpec& spec, int samples = 101) {
  if (samples < 1) throw Error(ErrorKind::DomainError, "ellipticity check needs samples >= 1");
  double sigma = std::numeric_limits<double>::infinity();
  for (const auto& p : detail::sample_points(spec, samples)) sigma = std::min(sigma, detail::min_eig_a(spec, p[0], p[1]));
  if (!(sigma > 0.0)) {
    std::ostringstream os;
    os << "a_ij is not uniformly elliptic: sampled minimum eigenvalue " << sigma;
    throw Error(ErrorKind::EllipticityError, os.str());
  }
  return sigma;
}

/// C(Omega) = sum_i (pi/L_i)^2, the first Dirichlet eigenvalue of -Laplace on the box.
inline double poincare_constant(const ProblemSpec& spec) {
  double c = 0.0;
  for (int i = 0; i < spec.dim; ++i) c += std::pow(std::numbers::pi / spec.length[i], 2);
  return c;
}

/// inf_x (div b / 2 - c) + C(Omega) sigma over the sampled points; > 0 is the
/// positivity hypothesis.  Also the constant mu0 of the comparison bound.
inline double check_positivity_condition(const ProblemSpec& spec, int samples = 101) {
  const double cs = poincare_constant(spec) * check_ellipticity(spec, samples);
  std::array<Field, 2> db;
  for (int j = 0; j < spec.dim; ++j) db[j] = spec.b[j].derivative(j);
  double inf = std::numeric_limits<double>::infinity();
  for (const auto& p : detail::sample_points(spec, samples)) {
    double div = 0.0;
    for (int j = 0; j < spec.dim; ++j) div += db[j](p[0], p[1]);
    inf = std::min(inf, 0.5 * div - spec.c(p[0], p[1]));
  }
  return inf + cs;
}

inline double require_positivity_condition(const ProblemSpec& spec, int samples = 101) {
  const double v = check_positivity_condition(spec, samples);
  if (!(v > 0.0)) {
    std::ostringstream os;
    os << "positivity condition inf(div b/2 - c) + C(Omega) sigma > 0 fails: value " << v;
    throw Error(ErrorKind::ConditionViolated, os.str());
  }
  return v;
}

struct DiscreteOperator {
  Eigen::MatrixXd matrix;
  /// Interior node coordinates, x fastest.
  std::vector<std::array<double, 2>> nodes;
  int dim = 1;
  std::array<int, 2> n{0, 1};
  std::array<double, 2> h{0.0, 0.0};
  std::array<double, 2> length{1.0, 1.0};
  double sigma_est = 0.0;
  double poincare_const = 0.0;
  std::vector<std::string> warnings;

  int size() const { return static_cast<int>(matrix.rows()); }
  int index(int i, int j) const { return i + n[0] * j; }
};

inline DiscreteOperator discretize(const ProblemSpec& spec) {
  validate(spec);
  DiscreteOperator op;
  op.dim = spec.dim;
  op.n = {spec.n[0], spec.dim == 2 ? spec.n[1] : 1};
  op.length = spec.length;
  op.h = {spec.h(0), spec.dim == 2 ? spec.h(1) : 0.0};
  op.sigma_est = check_ellipticity(spec);
  op.poincare_const = poincare_constant(spec);

  const int nx = op.n[0];
  const int ny = op.n[1];
  const int N = nx * ny;
  op.matrix = Eigen::MatrixXd::Zero(N, N);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) op.nodes.push_back({(i + 1) * op.h[0], spec.dim == 2 ? (j + 1) * op.h[1] : 0.0});

  // -A u accumulated row by row; A = -(that).
  auto add = [&](int row, int i, int j, double v) {
    if (i < 0 || i >= nx || j < 0 || j >= ny) return;  // Dirichlet node
    op.matrix(row, op.index(i, j)) -= v;
  };

  const double hx = op.h[0];
  const double hy = op.h[1];
  double peclet = 0.0;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int row = op.index(i, j);
      const double x = op.nodes[row][0];
      const double y = op.nodes[row][1];

      const double ae = spec.a[0][0](x + 0.5 * hx, y);
      const double aw = spec.a[0][0](x - 0.5 * hx, y);
      add(row, i + 1, j, ae / (hx * hx));
      add(row, i - 1, j, aw / (hx * hx));
      add(row, i, j, -(ae + aw) / (hx * hx));
      const double b0 = spec.b[0](x, y);
      add(row, i + 1, j, b0 / (2.0 * hx));
      add(row, i - 1, j, -b0 / (2.0 * hx));
      double bnorm2 = b0 * b0;

      if (spec.dim == 2) {
        const double an = spec.a[1][1](x, y + 0.5 * hy);
        const double as = spec.a[1][1](x, y - 0.5 * hy);
        add(row, i, j + 1, an / (hy * hy));
        add(row, i, j - 1, as / (hy * hy));
        add(row, i, j, -(an + as) / (hy * hy));
        const double b1 = spec.b[1](x, y);
        add(row, i, j + 1, b1 / (2.0 * hy));
        add(row, i, j - 1, -b1 / (2.0 * hy));
        bnorm2 += b1 * b1;

        // d_x(a_12 d_y u) + d_y(a_21 d_x u) on the 4 diagonal neighbours.
        const double q = 1.0 / (4.0 * hx * hy);
        const double a12e = spec.a[0][1](x + hx, y);
        const double a12w = spec.a[0][1](x - hx, y);
        const double a21n = spec.a[1][0](x, y + hy);
        const double a21s = spec.a[1][0](x, y - hy);
        add(row, i + 1, j + 1, q * (a12e + a21n));
        add(row, i + 1, j - 1, -q * (a12e + a21s));
        add(row, i - 1, j + 1, -q * (a12w + a21n));
        add(row, i - 1, j - 1, q * (a12w + a21s));
      }
      add(row, i, j, spec.c(x, y));
      const double hmax = spec.dim == 2 ? std::max(hx, hy) : hx;
      peclet = std::max(peclet, std::sqrt(bnorm2) * hmax / (2.0 * op.sigma_est));
    }
  }
  if (peclet >= 1.0) {
    std::ostringstream os;
    os << "cell Peclet number |b| h / (2 sigma) = " << peclet << " >= 1: central differences may oscillate";
    op.warnings.push_back(os.str());
  }
  return op;
}

/// Z-matrix with positive diagonal, non-negative row sums, and every node connected to a
/// strictly dominant row: sufficient for a non-singular M-matrix (A^-1 >= 0 entrywise).
inline bool is_m_matrix(const Eigen::MatrixXd& m, double tol = 1e-12) {
  const Eigen::Index n = m.rows();
  const double scale = m.cwiseAbs().maxCoeff();
  std::vector<char> reached(static_cast<std::size_t>(n), 0);
  std::queue<Eigen::Index> frontier;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(m(i, i) > 0.0)) return false;
    double sum = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k != i && m(i, k) > tol * scale) return false;
      sum += m(i, k);
    }
    if (sum < -tol * scale) return false;
    if (sum > tol * scale) {
      reached[static_cast<std::size_t>(i)] = 1;
      frontier.push(i);
    }
  }
  // Strict dominance must propagate along the coupling graph.
  while (!frontier.empty()) {
    const Eigen::Index r = frontier.front();
    frontier.pop();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!reached[static_cast<std::size_t>(i)] && m(i, r) < -tol * scale) {
        reached[static_cast<std::size_t>(i)] = 1;
        frontier.push(i);
      }
    }
  }
  return std::all_of(reached.begin(), reached.end(), [](char c) { return c != 0; });
}

inline bool is_m_matrix(const DiscreteOperator& op) { return is_m_matrix(op.matrix); }

/// Smallest eigenvalue of (A + A^T)/2: the exact energy constant of the discrete problem.
inline double discrete_energy_constant(const DiscreteOperator& op) {
  const Eigen::MatrixXd s = 0.5 * (op.matrix + op.matrix.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

/// Initial value sampled at the interior nodes.
inline Eigen::VectorXd sample_initial(const ProblemSpec& spec, const DiscreteOperator& op) {
  Eigen::VectorXd v(op.size());
  for (int k = 0; k < op.size(); ++k) v(k) = spec.initial(op.nodes[k][0], op.nodes[k][1]);
  return v;
}

}  // namespace fracorder
