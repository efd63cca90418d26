#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const std::string kBinary = FRACORDER_CLI_PATH;
const fs::path kConfigs = FRACORDER_CONFIG_DIR;

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

fs::path workdir() {
  static const fs::path d = [] {
    const fs::path p = fs::temp_directory_path() / ("fracorder_cli_" + std::to_string(::getpid()));
    fs::create_directories(p);
    return p;
  }();
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CliRun run(const std::string& args) {
  const fs::path out = workdir() / "stdout.txt";
  const fs::path err = workdir() / "stderr.txt";
  const std::string cmd = "cd '" + workdir().string() + "' && '" + kBinary + "' " + args + " > '" + out.string() +
                          "' 2> '" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::string config(const std::string& name) { return "'" + (kConfigs / name).string() + "'"; }

void write(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

}  // namespace

TEST(Cli, SolveWritesCsvWithLogTimes) {
  const fs::path dir = workdir() / "solve_a";
  const CliRun r = run("solve " + config("single_mode.conf") + " --out '" + dir.string() + "'");
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream csv(slurp(dir / "solution.csv"));
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header.substr(0, 10), "t,u_1,u_2,");
  EXPECT_NE(header.find(",u_31\r"), std::string::npos);
  int rows = 0;
  for (std::string line; std::getline(csv, line);) rows += !line.empty();
  EXPECT_EQ(rows, 64);
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(manifest["config_hash"].get<std::string>().size(), 16u);
  EXPECT_TRUE(fs::exists(dir / "observation.csv"));
  EXPECT_TRUE(fs::exists(dir / "solution.json"));
}

TEST(Cli, SolveIsDeterministic) {
  const fs::path a = workdir() / "det_a";
  const fs::path b = workdir() / "det_b";
  ASSERT_EQ(run("solve " + config("nonsymmetric_2d.conf") + " --out '" + a.string() + "'").code, 0);
  ASSERT_EQ(run("solve " + config("nonsymmetric_2d.conf") + " --out '" + b.string() + "'").code, 0);
  for (const char* f : {"solution.csv", "observation.csv", "solution.json", "observation.json"})
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
}

TEST(Cli, PositiveReactionIsAConfigError) {
  const CliRun r = run("solve " + config("positive_c.conf"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("c(x) <= 0"), std::string::npos) << r.err;
}

TEST(Cli, UnknownKeyAndMissingFile) {
  write(workdir() / "bad.conf", "problem.alpha = 0.5\nproblem.gamma = 1\n");
  CliRun r = run("solve bad.conf");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("problem.gamma"), std::string::npos);
  r = run("solve does_not_exist.conf");
  EXPECT_EQ(r.code, 2);
  r = run("frobnicate");
  EXPECT_EQ(r.code, 2);
}

TEST(Cli, RecoverPipeline) {
  const CliRun r = run("recover " + config("recover_single_mode.conf") + " --out rec.json");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_GE(j["alpha_hat"].get<double>(), 0.49);
  EXPECT_LE(j["alpha_hat"].get<double>(), 0.51);
  EXPECT_EQ(slurp(workdir() / "rec.json"), r.out);
}

TEST(Cli, RecoverPowerLawCsv) {
  std::ostringstream csv;
  csv.precision(17);
  csv << "t,value\n";
  for (int k = 0; k <= 128; ++k) {
    const double t = std::pow(10.0, k / 32.0);
    csv << t << "," << std::pow(t, -0.3) << "\n";
  }
  write(workdir() / "power.csv", csv.str());
  CliRun r = run("recover power.csv");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(nlohmann::json::parse(r.out)["alpha_hat"].get<double>(), 0.3, 1e-6);
  r = run("recover power.csv --fit loglog --window 10 1000");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(nlohmann::json::parse(r.out)["alpha_hat"].get<double>(), 0.3, 1e-6);
}

TEST(Cli, RecoverEmptyCsv) {
  write(workdir() / "empty.csv", "");
  EXPECT_EQ(run("recover empty.csv").code, 2);
}

TEST(Cli, RecoverZeroDataIsInconclusive) {
  std::string csv = "t,value\n";
  for (int k = 1; k <= 40; ++k) csv += std::to_string(k) + ",0\n";
  write(workdir() / "zero.csv", csv);
  const CliRun r = run("recover zero.csv");
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("UniquenessInconclusive"), std::string::npos);
}

TEST(Cli, VerifySpectrum) {
  CliRun r = run("verify-spectrum " + config("single_mode.conf") + " --dump spec.json");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(slurp(workdir() / "spec.json"));
  const double m = j["min_re_lambda"].get<double>();
  EXPECT_GT(m, 0.0);
  EXPECT_NEAR(m, M_PI * M_PI, 0.01 * M_PI * M_PI);
  EXPECT_EQ(j["decomposition"]["clusters"].size(), 31u);

  r = run("verify-spectrum " + config("advection_violated.conf"));
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.err.find("ConditionViolated"), std::string::npos);
  EXPECT_NE(r.out.find("ConditionViolated"), std::string::npos);
}

TEST(Cli, MlfEval) {
  CliRun r = run("mlf-eval --alpha 0.5 --z -100");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(std::stod(r.out), 0.0056416137829894329, 1e-17);
  r = run("mlf-eval --alpha 1 --z 1");
  EXPECT_NEAR(std::stod(r.out), M_E, 1e-15);
  r = run("mlf-eval --alpha 0.5 --z 0");
  EXPECT_EQ(std::stod(r.out), 1.0);
  EXPECT_EQ(run("mlf-eval --alpha 0 --z 1").code, 2);
}

TEST(Cli, Asymptotics) {
  const CliRun r = run("asymptotics " + config("recover_single_mode.conf") + " --out asym.json");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_LE(j["relative_disagreement"].get<double>(), 1e-8);
  EXPECT_LE(j["remainder_slope"].get<double>(), -1.0 + 0.1);
}

TEST(Cli, L1Method) {
  const fs::path dir = workdir() / "l1";
  const CliRun r = run("solve " + config("l1_advection.conf") + " --out '" + dir.string() + "'");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "solution.csv"));
  EXPECT_FALSE(fs::exists(dir / "solution.json"));
}
