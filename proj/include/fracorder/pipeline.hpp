#pragma once

// Config-driven workflows shared by the command line front end and the tests.

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "fracorder/asymptote.hpp"
#include "fracorder/config.hpp"
#include "fracorder/inversion.hpp"
#include "fracorder/io.hpp"
#include "fracorder/operator.hpp"
#include "fracorder/solver.hpp"
#include "fracorder/spectral.hpp"

namespace fracorder {

/// Validated problem with its discretization.
struct Prepared {
  ProblemSpec spec;
  DiscreteOperator op;
  Eigen::VectorXd a;
  /// inf(div b / 2 - c) + C(Omega) sigma; the positivity condition holds when > 0.
  double condition = 0.0;
  std::vector<std::string> warnings;
};

inline Prepared prepare(const RunConfig& config) {
  validate(config);
  Prepared p;
  p.spec = to_problem(config);
  validate(p.spec);
  check_ellipticity(p.spec);
  p.condition = check_positivity_condition(p.spec);
  if (!(p.condition > 0.0)) {
    std::ostringstream os;
    os << "ConditionViolated: inf(div b/2 - c) + C(Omega) sigma = " << p.condition
       << " <= 0, positivity of the spectrum is not guaranteed";
    p.warnings.push_back(os.str());
  }
  p.op = discretize(p.spec);
  for (const auto& w : p.op.warnings) p.warnings.push_back(w);
  p.a = sample_initial(p.spec, p.op);
  return p;
}

inline std::vector<double> output_times(const RunConfig& c) {
  return log_spaced_times(c.solver.t_min, c.solver.t_max, c.solver.per_decade);
}

inline SolutionField run_solve(const RunConfig& c, const Prepared& p) {
  SolutionField f;
  if (c.solver.method == "l1") {
    const double r = c.solver.grading == 0.0 ? default_grading(c.problem.alpha) : c.solver.grading;
    f = solve_l1(p.op, p.a, c.problem.alpha, c.solver.t_max, c.solver.n_steps, r);
  } else {
    f = solve_spectral(p.op, eigendecompose(p.op), p.a, c.problem.alpha, output_times(c));
  }
  f.warnings.insert(f.warnings.begin(), p.warnings.begin(), p.warnings.end());
  return f;
}

struct RecoveryReport {
  RecoveryResult result;
  /// Filled when recovery.seeds > 1 and recovery.noise > 0.
  NoiseStudy noise;
  bool has_noise_study = false;
};

inline RecoveryReport run_recover(const RunConfig& c, const ObservationSeries& clean) {
  RecoveryReport rep;
  ObservationSeries data = clean;
  if (c.recovery.noise > 0.0) {
    std::mt19937_64 rng(c.seed);
    data = add_relative_noise(clean, c.recovery.noise, rng);
  }
  const bool auto_win = c.recovery.window_lo == 0.0;
  rep.result = auto_win ? recover_order_loglog(data)
                        : recover_order_loglog(data, {c.recovery.window_lo, c.recovery.window_hi});
  if (c.recovery.fit == "two-term") {
    RecoveryResult fit = recover_order_fit(data, rep.result);
    fit.diagnostics.auto_window = rep.result.diagnostics.auto_window;
    rep.result = fit;
  }
  if (c.recovery.noise > 0.0 && c.recovery.seeds > 1) {
    rep.noise = noise_study(clean, rep.result.fit_window, c.recovery.noise, c.recovery.seeds, c.seed);
    rep.has_noise_study = true;
  }
  return rep;
}

inline nlohmann::json to_json(const RecoveryReport& r) {
  nlohmann::json j = to_json(r.result);
  if (r.has_noise_study) {
    nlohmann::json alphas = nlohmann::json::array();
    for (double a : r.noise.alpha_hat) alphas.push_back(detail::number(a));
    j["noise_study"] = {{"alpha_hat", alphas}, {"failures", r.noise.failures}};
  }
  return j;
}

struct SpectrumReport {
  int nodes = 0;
  int clusters = 0;
  double min_re_lambda = 0.0;
  double condition = 0.0;
  ProjectorResiduals residuals;
  bool ambiguity = false;
  std::vector<std::string> warnings;

  /// The contract: a positive condition forces Re lambda > 0.
  bool contract_violated() const { return condition > 0.0 && !(min_re_lambda > 0.0); }
};

inline SpectrumReport run_verify_spectrum(const Prepared& p, const SpectralDecomposition& dec) {
  SpectrumReport r;
  r.nodes = dec.size();
  r.clusters = dec.cluster_count();
  r.min_re_lambda = dec.min_real_part();
  r.condition = p.condition;
  r.residuals = projector_residuals(dec);
  r.ambiguity = dec.cluster_ambiguity;
  r.warnings = p.warnings;
  if (dec.cluster_ambiguity) r.warnings.push_back("cluster ambiguity: " + dec.ambiguity_note);
  return r;
}

inline nlohmann::json to_json(const SpectrumReport& r) {
  return {{"nodes", r.nodes},
          {"clusters", r.clusters},
          {"min_re_lambda", r.min_re_lambda},
          {"condition", r.condition},
          {"projector_residuals", to_json(r.residuals)},
          {"cluster_ambiguity", r.ambiguity},
          {"warnings", r.warnings}};
}

struct AsymptoticsReport {
  double alpha = 0.0;
  double leading_coeff = 0.0;
  double direct_leading_coeff = 0.0;
  double relative_disagreement = 0.0;
  std::vector<double> per_cluster;
  std::array<double, 2> window{0.0, 0.0};
  RemainderFit remainder;
};

inline AsymptoticsReport run_asymptotics(const RunConfig& c, const Prepared& p) {
  const auto dec = eigendecompose(p.op);
  const Grid grid = Grid::of(p.op);
  const double alpha = c.problem.alpha;
  AsymptoticsReport r;
  r.alpha = alpha;
  r.leading_coeff = leading_term(dec, p.a, grid, p.spec.x0, alpha);
  r.direct_leading_coeff = direct_leading_term(p.op.matrix, p.a, grid, p.spec.x0, alpha);
  r.relative_disagreement =
      std::abs(r.leading_coeff - r.direct_leading_coeff) / std::max(std::abs(r.direct_leading_coeff), 1e-300);
  const auto per = leading_term_per_cluster(dec, p.a, grid, p.spec.x0, alpha);
  r.per_cluster.assign(per.begin(), per.begin() + std::min<std::size_t>(per.size(), 8));
  const double mu = p.condition > 0.0 ? p.condition : dec.min_real_part();
  const double onset = std::max(c.solver.t_min, asymptotic_t_min(mu, alpha));
  if (!(onset < c.solver.t_max)) {
    std::ostringstream os;
    os << "asymptotic onset t = " << onset << " is beyond solver.t_max = " << c.solver.t_max;
    throw Error(ErrorKind::RemainderDominates, os.str());
  }
  r.window = {onset, c.solver.t_max};
  const auto u =
      solve_spectral(p.op, dec, p.a, alpha, log_spaced_times(onset, c.solver.t_max, c.solver.per_decade));
  r.remainder = remainder_fit(observe(u, p.spec.x0), r.leading_coeff, alpha, onset);
  return r;
}

inline nlohmann::json to_json(const AsymptoticsReport& r) {
  return {{"alpha", r.alpha},
          {"leading_coeff", r.leading_coeff},
          {"direct_leading_coeff", r.direct_leading_coeff},
          {"relative_disagreement", r.relative_disagreement},
          {"leading_coeff_per_cluster", r.per_cluster},
          {"window", r.window},
          {"remainder_slope", detail::number(r.remainder.slope)},
          {"remainder_scale", r.remainder.scale},
          {"remainder_bound_slope", -2.0 * r.alpha},
          {"samples", r.remainder.samples}};
}

/// Which module's contract an error kind belongs to.
inline const char* module_of(ErrorKind k) {
  switch (k) {
    case ErrorKind::NonConvergence:
    case ErrorKind::NotImplemented: return "mlf";
    case ErrorKind::SpecError:
    case ErrorKind::EllipticityError:
    case ErrorKind::ConditionViolated: return "operator";
    case ErrorKind::EigensolverFailure:
    case ErrorKind::ContourError:
    case ErrorKind::SingularCluster: return "spectral";
    case ErrorKind::ToleranceExceeded:
    case ErrorKind::LinearSolveFailure:
    case ErrorKind::OutOfDomain:
    case ErrorKind::DegenerateSeries: return "solver";
    case ErrorKind::RemainderDominates: return "asymptote";
    case ErrorKind::SignChangeInWindow:
    case ErrorKind::WindowTooNarrow:
    case ErrorKind::NoConvergence:
    case ErrorKind::WindowSuspect:
    case ErrorKind::UniquenessInconclusive: return "inversion";
    case ErrorKind::ConfigError:
    case ErrorKind::IoError: return "cli";
    default: return "input";
  }
}

/// 2 for bad input, 3 for a numerical contract failure.
inline int exit_code_of(ErrorKind k) {
  switch (k) {
    case ErrorKind::ConfigError:
    case ErrorKind::IoError:
    case ErrorKind::SpecError:
    case ErrorKind::EllipticityError:
    case ErrorKind::DomainError: return 2;
    default: return 3;
  }
}

}  // namespace fracorder
