// fracorder: command line front end.
//
//   fracorder solve CONFIG [--out DIR]
//   fracorder recover CONFIG|CSV [--out FILE] [--window LO HI] [--fit loglog|two-term]
//   fracorder verify-spectrum CONFIG [--dump FILE]
//   fracorder mlf-eval --alpha A [--beta B] --z X [--z-imag Y]
//   fracorder asymptotics CONFIG [--out FILE]
//
// Exit status: 0 success, 2 bad input, 3 numerical contract failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fracorder/pipeline.hpp"

namespace {

using namespace fracorder;
namespace fs = std::filesystem;

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

std::string format_value(double v) { return detail::format_double(v); }

int cmd_solve(const std::string& config_path, const std::string& out_override) {
  const auto start = std::chrono::steady_clock::now();
  RunConfig config = load_config(config_path);
  if (!out_override.empty()) config.output.directory = out_override;
  const Prepared p = prepare(config);
  const SolutionField field = run_solve(config, p);
  const ObservationSeries series = observe(field, p.spec.x0);
  const fs::path dir(config.output.directory);
  if (config.wants("csv")) {
    write_file_atomic((dir / "solution.csv").string(), field_to_csv(field));
    write_file_atomic((dir / "observation.csv").string(), series_to_csv(series));
  }
  if (config.wants("json")) {
    write_file_atomic((dir / "solution.json").string(), dump(to_json(field)));
    write_file_atomic((dir / "observation.json").string(), dump(to_json(series)));
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  nlohmann::json manifest = {{"command", "solve"},
                             {"version", kVersion},
                             {"config_hash", config_hash(config)},
                             {"config", serialize(config)},
                             {"method", to_string(field.method)},
                             {"nodes", p.op.size()},
                             {"times", field.size()},
                             {"warnings", field.warnings},
                             {"timings", {{"total_seconds", seconds}}}};
  write_file_atomic((dir / "manifest.json").string(), dump(manifest));
  print_warnings(field.warnings);
  std::cout << "wrote " << field.size() << " times x " << p.op.size() << " nodes to " << dir.string() << "\n";
  return 0;
}

bool looks_like_csv(const std::string& path) {
  if (fs::path(path).extension() == ".csv") return true;
  const std::string text = read_text_file(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  return first != std::string::npos && text.compare(first, 2, "t,") == 0;
}

int cmd_recover(const std::string& input, const std::string& out, const std::vector<double>& window,
                const std::string& fit) {
  RunConfig config;
  ObservationSeries series;
  bool from_config = false;
  if (looks_like_csv(input)) {
    series = series_from_csv(read_text_file(input));
    config.recovery.fit = fit.empty() ? "two-term" : fit;
  } else {
    config = load_config(input);
    from_config = true;
    if (!fit.empty()) config.recovery.fit = fit;
    const Prepared p = prepare(config);
    print_warnings(p.warnings);
    series = observe(run_solve(config, p), p.spec.x0);
  }
  if (!window.empty()) {
    config.recovery.window_lo = window[0];
    config.recovery.window_hi = window[1];
  }
  validate(config);
  const RecoveryReport rep = run_recover(config, series);
  const std::string text = dump(to_json(rep));
  std::string target = out;
  if (target.empty() && from_config) target = (fs::path(config.output.directory) / "recovery.json").string();
  if (!target.empty()) write_file_atomic(target, text);
  std::cout << text;
  return 0;
}

int cmd_verify_spectrum(const std::string& config_path, const std::string& dump_path) {
  const RunConfig config = load_config(config_path);
  const Prepared p = prepare(config);
  const auto dec = eigendecompose(p.op);
  const SpectrumReport r = run_verify_spectrum(p, dec);
  std::cout << "nodes:            " << r.nodes << "\n"
            << "clusters:         " << r.clusters << "\n"
            << "min Re lambda:    " << format_value(r.min_re_lambda) << "\n"
            << "positivity value: " << format_value(r.condition)
            << (r.condition > 0.0 ? "  (holds)" : "  (ConditionViolated)") << "\n"
            << "idempotence:      " << format_value(r.residuals.idempotence) << "\n"
            << "annihilation:     " << format_value(r.residuals.annihilation) << "\n"
            << "completeness:     " << format_value(r.residuals.completeness) << "\n"
            << "commutation:      " << format_value(r.residuals.commutation) << "\n"
            << "nilpotency:       " << format_value(r.residuals.nilpotency) << "\n";
  print_warnings(r.warnings);
  if (!dump_path.empty()) {
    nlohmann::json j = to_json(r);
    j["decomposition"] = to_json(dec);
    write_file_atomic(dump_path, dump(j));
  }
  if (r.contract_violated()) {
    std::cerr << "error: ConditionViolated contract (spectral): positivity value " << format_value(r.condition)
              << " > 0 but min Re lambda = " << format_value(r.min_re_lambda) << " <= 0\n";
    return 3;
  }
  return 0;
}

int cmd_mlf_eval(double alpha, double beta, double x, double y) {
  const Complex v = mlf_eval(MlfParams(alpha, beta), Complex(x, y));
  if (y == 0.0 && std::abs(v.imag()) <= 1e-15 * std::abs(v.real())) {
    std::cout << format_value(v.real()) << "\n";
  } else {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.17g%+.17gi", v.real(), v.imag());
    std::cout << buf << "\n";
  }
  return 0;
}

int cmd_asymptotics(const std::string& config_path, const std::string& out) {
  const RunConfig config = load_config(config_path);
  const Prepared p = prepare(config);
  print_warnings(p.warnings);
  const AsymptoticsReport r = run_asymptotics(config, p);
  const std::string text = dump(to_json(r));
  write_file_atomic(out.empty() ? (fs::path(config.output.directory) / "asymptotics.json").string() : out, text);
  std::cout << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fractional-order diffusion: forward solves, spectral checks and order recovery"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out;
  std::string dump_path;
  std::string fit;
  std::vector<double> window;
  double alpha = 0.5;
  double beta = 1.0;
  double z = 0.0;
  double z_imag = 0.0;

  auto* solve = app.add_subcommand("solve", "Solve the forward problem and write CSV/JSON artifacts");
  solve->add_option("config", config_path, "Run configuration")->required();
  solve->add_option("--out", out, "Output directory (overrides output.directory)");

  auto* recover = app.add_subcommand("recover", "Recover alpha from a config pipeline or an observation CSV");
  recover->add_option("input", config_path, "Run configuration or t,value CSV")->required();
  recover->add_option("--out", out, "Write the JSON result here");
  recover->add_option("--window", window, "Fit window t_lo t_hi")->expected(2);
  recover->add_option("--fit", fit, "loglog or two-term")->check(CLI::IsMember({"loglog", "two-term"}));

  auto* spectrum = app.add_subcommand("verify-spectrum", "Check spectral positivity and projector algebra");
  spectrum->add_option("config", config_path, "Run configuration")->required();
  spectrum->add_option("--dump", dump_path, "Write eigenvalues and projectors as JSON");

  auto* mlf = app.add_subcommand("mlf-eval", "Evaluate E_{alpha,beta}(z)");
  mlf->add_option("--alpha", alpha, "alpha in (0, 1]")->required();
  mlf->add_option("--beta", beta, "beta (default 1)");
  mlf->add_option("--z", z, "Re z")->required();
  mlf->add_option("--z-imag", z_imag, "Im z (default 0)");

  auto* asym = app.add_subcommand("asymptotics", "Leading long-time term and remainder fit at x0");
  asym->add_option("config", config_path, "Run configuration")->required();
  asym->add_option("--out", out, "Write the JSON report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*solve) return cmd_solve(config_path, out);
    if (*recover) return cmd_recover(config_path, out, window, fit);
    if (*spectrum) return cmd_verify_spectrum(config_path, dump_path);
    if (*mlf) return cmd_mlf_eval(alpha, beta, z, z_imag);
    if (*asym) return cmd_asymptotics(config_path, out);
  } catch (const fracorder::Error& e) {
    std::cerr << "error (" << fracorder::module_of(e.kind()) << "): " << e.what() << "\n";
    return fracorder::exit_code_of(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
