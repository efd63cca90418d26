#pragma once

// Riesz projectors P_n and nilpotent parts D_n = (lambda_n - A) P_n of a dense real
// matrix, from its complex Schur form.
//
//   A = Q T Q^*                      (Eigen::ComplexSchur)
//   reorder T so every cluster is a contiguous diagonal block, ascending Re lambda
//   Y^-1 T Y = diag(T_11, ..., T_mm)  (Y unit upper triangular, block Sylvester sweep)
//   V = Q Y,  W = Y^-1 Q^*
//
// Cluster n keeps the columns V_n and rows W_n of its block, so P_n = V_n W_n and
// D_n = V_n (lambda_n - T_nn) W_n are never formed unless asked for.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "fracorder/errors.hpp"
#include "fracorder/mlf.hpp"
#include "fracorder/operator.hpp"

namespace fracorder {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

struct SpectralConfig {
  /// Eigenvalues closer than cluster_tol * max(|l_i|, |l_j|) share a cluster.
  double cluster_tol = 1e-6;
  /// D^k counts as zero once ||D^k|| <= nil_tol ||A||^k.
  double nil_tol = 1e-8;
};

struct SpectralCluster {
  Complex lambda;                    ///< centroid of the members
  std::vector<Complex> eigenvalues;  ///< computed members
  int dim = 0;
  int index = 1;                     ///< i_n: D^i_n = 0
  CMatrix V;                         ///< N x dim, spans P_n C^N
  CMatrix W;                         ///< dim x N, W V = I
  CMatrix T;                         ///< dim x dim upper triangular, W A V

  /// lambda - T: the nilpotent part in cluster coordinates.
  CMatrix nilpotent_small() const { return lambda * CMatrix::Identity(dim, dim) - T; }
  CMatrix projector() const { return V * W; }
  CMatrix nilpotent() const { return V * nilpotent_small() * W; }

  template <class Vec>
  CVector apply_projector(const Vec& v) const {
    return V * (W * v.template cast<Complex>());
  }
};

struct SpectralDecomposition {
  std::vector<SpectralCluster> clusters;  ///< ascending Re lambda
  Eigen::MatrixXd A;
  double norm_A = 0.0;  ///< Frobenius norm
  SpectralConfig config;
  /// Set when the merge pattern changes under +-10% of cluster_tol.
  bool cluster_ambiguity = false;
  std::string ambiguity_note;

  int size() const { return static_cast<int>(A.rows()); }
  int cluster_count() const { return static_cast<int>(clusters.size()); }
  double min_real_part() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& c : clusters)
      for (const auto& l : c.eigenvalues) m = std::min(m, l.real());
    return m;
  }
};

namespace detail {

/// Cluster label per eigenvalue (union-find over the relative distance rule).
inline std::vector<int> cluster_labels(const std::vector<Complex>& ev, double tol) {
  const int n = static_cast<int>(ev.size());
  std::vector<int> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::abs(ev[i] - ev[j]) <= tol * std::max(std::abs(ev[i]), std::abs(ev[j]))) parent[find(i)] = find(j);
  std::vector<int> label(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) label[i] = find(i);
  return label;
}

/// Same partition up to relabelling.
inline bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j)
      if ((a[i] == a[j]) != (b[i] == b[j])) return false;
  return true;
}

/// Swap T(k,k) and T(k+1,k+1) by a unitary similarity on rows/columns k, k+1.
inline void swap_schur(CMatrix& T, CMatrix& Q, Eigen::Index k) {
  const Complex t11 = T(k, k);
  const Complex t22 = T(k + 1, k + 1);
  // Eigenvector of the 2x2 block for t22.
  Complex v1 = T(k, k + 1);
  Complex v2 = t22 - t11;
  const double nv = std::hypot(std::abs(v1), std::abs(v2));
  if (nv == 0.0) return;  // equal diagonal and zero coupling: nothing to do
  v1 /= nv;
  v2 /= nv;
  Eigen::Matrix2cd Z;
  Z << v1, -std::conj(v2), v2, std::conj(v1);
  T.middleRows(k, 2) = Z.adjoint() * T.middleRows(k, 2);
  T.middleCols(k, 2) = T.middleCols(k, 2) * Z;
  Q.middleCols(k, 2) = Q.middleCols(k, 2) * Z;
  T(k + 1, k) = 0.0;
  T(k, k) = t22;
  T(k + 1, k + 1) = t11;
}

}  // namespace detail

inline SpectralDecomposition eigendecompose(const Eigen::MatrixXd& A, const SpectralConfig& config = {}) {
  if (A.rows() != A.cols() || A.rows() == 0) throw Error(ErrorKind::DomainError, "eigendecompose needs a square matrix");
  if (!(config.cluster_tol > 0.0)) throw Error(ErrorKind::DomainError, "cluster_tol must be positive");
  const Eigen::Index N = A.rows();

  Eigen::ComplexSchur<CMatrix> schur(A.cast<Complex>());
  if (schur.info() != Eigen::Success) throw Error(ErrorKind::EigensolverFailure, "complex Schur iteration did not converge");
  CMatrix T = schur.matrixT();
  CMatrix Q = schur.matrixU();

  SpectralDecomposition dec;
  dec.A = A;
  dec.norm_A = A.norm();
  dec.config = config;

  std::vector<Complex> ev(static_cast<std::size_t>(N));
  for (Eigen::Index i = 0; i < N; ++i) ev[i] = T(i, i);
  const auto labels = detail::cluster_labels(ev, config.cluster_tol);
  for (double f : {0.9, 1.1}) {
    if (!detail::same_partition(labels, detail::cluster_labels(ev, f * config.cluster_tol))) {
      dec.cluster_ambiguity = true;
      std::ostringstream os;
      os << "eigenvalue clusters change when cluster_tol is scaled by " << f;
      dec.ambiguity_note = os.str();
    }
  }

  // Cluster order: ascending real part of the centroid, then imaginary part.
  std::vector<int> roots;
  for (int l : labels)
    if (std::find(roots.begin(), roots.end(), l) == roots.end()) roots.push_back(l);
  std::vector<Complex> centroid(roots.size());
  std::vector<int> count(roots.size(), 0);
  for (Eigen::Index i = 0; i < N; ++i) {
    const auto r = static_cast<std::size_t>(std::find(roots.begin(), roots.end(), labels[i]) - roots.begin());
    centroid[r] += ev[i];
    ++count[r];
  }
  for (std::size_t r = 0; r < roots.size(); ++r) centroid[r] /= static_cast<double>(count[r]);
  std::vector<std::size_t> order(roots.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (centroid[a].real() != centroid[b].real()) return centroid[a].real() < centroid[b].real();
    return centroid[a].imag() < centroid[b].imag();
  });
  std::vector<int> rank_of_root(roots.size());
  for (std::size_t p = 0; p < order.size(); ++p) rank_of_root[order[p]] = static_cast<int>(p);
  std::vector<int> rank(static_cast<std::size_t>(N));
  for (Eigen::Index i = 0; i < N; ++i)
    rank[i] = rank_of_root[static_cast<std::size_t>(std::find(roots.begin(), roots.end(), labels[i]) - roots.begin())];

  // Bubble the diagonal into cluster order; equal ranks are never swapped.
  for (Eigen::Index pass = 0; pass < N; ++pass) {
    bool swapped = false;
    for (Eigen::Index k = 0; k + 1 < N; ++k) {
      if (rank[k] > rank[k + 1]) {
        detail::swap_schur(T, Q, k);
        std::swap(rank[k], rank[k + 1]);
        swapped = true;
      }
    }
    if (!swapped) break;
  }
  for (Eigen::Index i = 1; i < N; ++i) T.row(i).head(i).setZero();

  // Y with T Y = Y blockdiag(T):
  //   Y(p,q) (T(p,p) - T(q,q)) = sum_{r<q, same block as q} Y(p,r) T(r,q)
  //                            - sum_{s>p, block(s) < block(q)} T(p,s) Y(s,q) - T(p,q)
  CMatrix Y = CMatrix::Identity(N, N);
  for (Eigen::Index q = 0; q < N; ++q) {
    Eigen::Index qstart = q;
    while (qstart > 0 && rank[qstart - 1] == rank[q]) --qstart;
    for (Eigen::Index p = qstart - 1; p >= 0; --p) {
      Complex acc = -T(p, q);
      for (Eigen::Index r = qstart; r < q; ++r) acc += Y(p, r) * T(r, q);
      for (Eigen::Index s = p + 1; s < qstart; ++s) acc -= T(p, s) * Y(s, q);
      const Complex gap = T(p, p) - T(q, q);
      if (std::abs(gap) == 0.0) throw Error(ErrorKind::EigensolverFailure, "clusters share an eigenvalue");
      Y(p, q) = acc / gap;
    }
  }
  const CMatrix V = Q * Y;
  const CMatrix Yinv = Y.triangularView<Eigen::UnitUpper>().solve(CMatrix::Identity(N, N));
  const CMatrix W = Yinv * Q.adjoint();

  for (Eigen::Index start = 0; start < N;) {
    Eigen::Index end = start;
    while (end < N && rank[end] == rank[start]) ++end;
    SpectralCluster c;
    c.dim = static_cast<int>(end - start);
    c.V = V.middleCols(start, c.dim);
    c.W = W.middleRows(start, c.dim);
    c.T = T.block(start, start, c.dim, c.dim);
    Complex sum(0.0, 0.0);
    for (Eigen::Index i = start; i < end; ++i) {
      c.eigenvalues.push_back(T(i, i));
      sum += T(i, i);
    }
    c.lambda = sum / static_cast<double>(c.dim);
    // Index: smallest k with ||D^k|| <= nil_tol ||A||^k.
    const CMatrix Ns = c.nilpotent_small();
    CMatrix power = CMatrix::Identity(c.dim, c.dim);
    c.index = c.dim;
    for (int k = 1; k <= c.dim; ++k) {
      power = power * Ns;
      const double norm = (c.V * power * c.W).norm();
      if (norm <= config.nil_tol * std::pow(dec.norm_A, k)) {
        c.index = k;
        break;
      }
    }
    dec.clusters.push_back(std::move(c));
    start = end;
  }
  return dec;
}

inline SpectralDecomposition eigendecompose(const DiscreteOperator& op, const SpectralConfig& config = {}) {
  return eigendecompose(op.matrix, config);
}

/// (1/2 pi i) \oint (z - A)^-1 dz over a circle, trapezoidal rule.  The circle may enclose
/// one whole cluster or nothing; crossing an eigenvalue, splitting a cluster or enclosing
/// a second one is a ContourError.
inline CMatrix resolvent_contour_projector(const SpectralDecomposition& dec, Complex center, double radius,
                                           int quad_points) {
  if (!(radius > 0.0)) throw Error(ErrorKind::ContourError, "contour radius must be positive");
  if (quad_points < 8) throw Error(ErrorKind::ContourError, "contour quadrature needs at least 8 points");
  int enclosed_cluster = -1;
  for (int n = 0; n < dec.cluster_count(); ++n) {
    int inside = 0;
    for (const auto& l : dec.clusters[n].eigenvalues) {
      const double d = std::abs(l - center);
      if (std::abs(d - radius) <= 1e-6 * (radius + std::abs(center))) {
        std::ostringstream os;
        os << "contour |z - " << center << "| = " << radius << " passes through eigenvalue " << l;
        throw Error(ErrorKind::ContourError, os.str());
      }
      inside += d < radius;
    }
    if (inside == 0) continue;
    if (inside != dec.clusters[n].dim) throw Error(ErrorKind::ContourError, "contour splits an eigenvalue cluster");
    if (enclosed_cluster >= 0) throw Error(ErrorKind::ContourError, "contour encloses more than one cluster");
    enclosed_cluster = n;
  }
  const Eigen::Index N = dec.size();
  const CMatrix A = dec.A.cast<Complex>();
  CMatrix P = CMatrix::Zero(N, N);
  for (int k = 0; k < quad_points; ++k) {
    const Complex e = std::polar(1.0, 2.0 * std::numbers::pi * k / quad_points);
    const Complex z = center + radius * e;
    CMatrix R = (z * CMatrix::Identity(N, N) - A).partialPivLu().inverse();
    P += (radius * e / static_cast<double>(quad_points)) * R;
  }
  return P;
}

struct NeumannResult {
  CVector value;
  /// ||phi - P_n phi|| / ||phi||: how far phi was from the cluster's range.
  double range_deviation = 0.0;
};

/// A^-1 on range(P_n): sum_{k < i_n} D_n^k / lambda_n^(k+1) P_n phi.
inline NeumannResult inverse_via_neumann(const SpectralDecomposition& dec, const CVector& phi, int cluster_id) {
  if (cluster_id < 0 || cluster_id >= dec.cluster_count())
    throw Error(ErrorKind::DomainError, "cluster id out of range");
  if (phi.size() != dec.size()) throw Error(ErrorKind::DomainError, "vector length does not match the operator");
  const auto& c = dec.clusters[static_cast<std::size_t>(cluster_id)];
  if (std::abs(c.lambda) <= 1e3 * std::numeric_limits<double>::epsilon() * std::max(dec.norm_A, 1e-300)) {
    std::ostringstream os;
    os << "cluster " << cluster_id << " has lambda = " << c.lambda << ", numerically zero";
    throw Error(ErrorKind::SingularCluster, os.str());
  }
  NeumannResult out;
  const CVector coords = c.W * phi;
  const CVector projected = c.V * coords;
  const double nphi = phi.norm();
  out.range_deviation = nphi > 0.0 ? (phi - projected).norm() / nphi : 0.0;
  const CMatrix Ns = c.nilpotent_small();
  CVector term = coords / c.lambda;
  CVector sum = term;
  for (int k = 1; k < c.index; ++k) {
    term = Ns * term / c.lambda;
    sum += term;
  }
  out.value = c.V * sum;
  return out;
}

inline NeumannResult inverse_via_neumann(const SpectralDecomposition& dec, const Eigen::VectorXd& phi, int cluster_id) {
  return inverse_via_neumann(dec, CVector(phi.cast<Complex>()), cluster_id);
}

/// ||a - sum_{n <= N_keep} P_n a|| / ||a||, clusters in ascending Re lambda.
inline double completeness_residual(const SpectralDecomposition& dec, const Eigen::VectorXd& a, int n_keep) {
  if (n_keep < 1 || n_keep > dec.cluster_count()) throw Error(ErrorKind::DomainError, "N_keep out of range");
  const double na = a.norm();
  if (na == 0.0) return 0.0;
  CVector r = a.cast<Complex>();
  for (int n = 0; n < n_keep; ++n) r -= dec.clusters[n].apply_projector(a);
  return r.norm() / na;
}

/// Algebraic residuals of the decomposition, all in spectral norm.
struct ProjectorResiduals {
  double idempotence = 0.0;    ///< max_n ||P_n^2 - P_n|| / ||P_n||
  double annihilation = 0.0;   ///< max_{n != m} ||P_n P_m||
  double completeness = 0.0;   ///< ||sum P_n - I||
  double commutation = 0.0;    ///< max_n ||A P_n - P_n A P_n|| / ||A||
  double nilpotency = 0.0;     ///< max_n ||(A - lambda_n)^i_n P_n|| / ||A||^i_n
};

namespace detail {

inline double spectral_norm(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMatrix> svd(m);
  return svd.singularValues()(0);
}

/// R of a thin QR: for M with orthonormal-column factor Q, ||Q R X|| = ||R X||.
inline CMatrix thin_r(const CMatrix& m) {
  Eigen::HouseholderQR<CMatrix> qr(m);
  return qr.matrixQR().topRows(m.cols()).triangularView<Eigen::Upper>();
}

}  // namespace detail

/// Every norm below is reduced to cluster-sized matrices through V_n = Q_n R_n and
/// W_n^* = Q'_n R'_n, so the check stays O(N^3) overall.
inline ProjectorResiduals projector_residuals(const SpectralDecomposition& dec) {
  ProjectorResiduals r;
  const Eigen::Index N = dec.size();
  const CMatrix A = dec.A.cast<Complex>();
  const double normA = detail::spectral_norm(A);
  const std::size_t m = dec.clusters.size();
  std::vector<CMatrix> rv(m);
  std::vector<CMatrix> rw(m);
  for (std::size_t n = 0; n < m; ++n) {
    rv[n] = detail::thin_r(dec.clusters[n].V);
    rw[n] = detail::thin_r(dec.clusters[n].W.adjoint());
  }
  CMatrix sum = CMatrix::Zero(N, N);
  for (std::size_t n = 0; n < m; ++n) {
    const auto& c = dec.clusters[n];
    const CMatrix WV = c.W * c.V;
    const double normP = detail::spectral_norm(rv[n] * rw[n].adjoint());
    // P^2 - P = V (W V - I) W
    r.idempotence = std::max(
        r.idempotence, detail::spectral_norm(rv[n] * (WV - CMatrix::Identity(c.dim, c.dim)) * rw[n].adjoint()) / normP);
    // A P - P A P = (A V - V (W A V)) W
    const CMatrix AV = A * c.V;
    r.commutation =
        std::max(r.commutation, detail::spectral_norm((AV - c.V * (c.W * AV)) * rw[n].adjoint()) / normA);
    // (A - lambda)^i P = [(A - lambda)^i V] W
    CMatrix M = c.V;
    for (int k = 0; k < c.index; ++k) M = A * M - c.lambda * M;
    r.nilpotency = std::max(r.nilpotency, detail::spectral_norm(M * rw[n].adjoint()) / std::pow(normA, c.index));
    for (std::size_t q = 0; q < m; ++q) {
      if (q == n) continue;
      const CMatrix X = c.W * dec.clusters[q].V;
      r.annihilation = std::max(r.annihilation, detail::spectral_norm(rv[n] * X * rw[q].adjoint()));
    }
    sum.noalias() += c.V * c.W;
  }
  r.completeness = detail::spectral_norm(sum - CMatrix::Identity(N, N));
  return r;
}

}  // namespace fracorder
