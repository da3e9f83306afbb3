#include <sys/wait.h>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "infoflow/harness.hpp"

using namespace infoflow;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
  static std::mt19937_64 rng(std::random_device{}());
  fs::path p = fs::temp_directory_path() / ("infoflow-test-" + tag + "-" + std::to_string(rng()));
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

int run_config(const std::string& text, const fs::path& out, std::optional<std::string> format = std::nullopt) {
  RunRequest req;
  req.config = Config::parse(text);
  req.out_dir = out.string();
  req.format = std::move(format);
  std::ostringstream log;
  return run_and_write(req, log);
}

int shell(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const std::string kCli = INFOFLOW_CLI_PATH;
const std::string kConfigs = INFOFLOW_CONFIG_DIR;

const char* kSmallMagnetization =
    "experiment = cw-magnetization\nmodel.n = 50\nsweep.beta_min = 0.5\nsweep.beta_max = 2\nsweep.points = 4\n";

}  // namespace

TEST(Config, ParsesCommentsAndWhitespace) {
  const auto c = Config::parse("# header\n  a = 1.5  # trailing\n\nb.c=x y\n");
  EXPECT_EQ(c.entries().size(), 2u);
  EXPECT_EQ(c.get_double("a", 0.0), 1.5);
  EXPECT_EQ(c.get_string("b.c", ""), "x y");
  EXPECT_EQ(c.get_double("missing", 7.0), 7.0);
}

TEST(Config, Errors) {
  EXPECT_THROW(Config::parse("a = 1\na = 2\n"), ConfigError);
  EXPECT_THROW(Config::parse("just words\n"), ConfigError);
  EXPECT_THROW(Config::parse("a =\n"), ConfigError);
  EXPECT_THROW(Config::parse("a.b.c = 1\n"), ConfigError);
  EXPECT_THROW((void)Config::parse("a = x\n").get_double("a", 0), ConfigError);
  EXPECT_THROW((void)Config::parse("a = -3\n").get_size("a", 0), ConfigError);
  EXPECT_THROW(Config::parse("a = 1,2;3\n").get_points("a", 2, {}), ConfigError);
  EXPECT_THROW(Config::parse("a = 1\n").require_string("b"), ConfigError);
  EXPECT_THROW(Config::parse("zz = 1\n").require_known({"a"}), ConfigError);
  EXPECT_THROW(Config::load("/nonexistent/file.cfg"), ConfigError);
}

TEST(Config, Lists) {
  const auto c = Config::parse("v = 1, 2.5,-3\np = 1,2;3,4\ns = 10,20\n");
  EXPECT_EQ(c.get_doubles("v", {}), (std::vector<double>{1, 2.5, -3}));
  EXPECT_EQ(c.get_points("p", 2, {}), (std::vector<std::vector<double>>{{1, 2}, {3, 4}}));
  EXPECT_EQ(c.get_sizes("s", {}), (std::vector<std::size_t>{10, 20}));
}

TEST(Config, HashIgnoresOrderAndFormatting) {
  const auto a = Config::parse("x = 1\ny = 2\n");
  const auto b = Config::parse("# c\ny=2\n   x  = 1\n");
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_NE(a.hash(), Config::parse("x = 1\ny = 3\n").hash());
  EXPECT_EQ(a.hash_hex().size(), 16u);
}

TEST(Table, FormatDoubleRoundTrips) {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) {
    const std::string s = format_double(x);
    double back = 0;
    std::from_chars(s.data(), s.data() + s.size(), back);
    EXPECT_EQ(back, x) << s;
  }
  EXPECT_EQ(format_double(NAN), "nan");
  EXPECT_EQ(format_double(-INFINITY), "-inf");
}

TEST(Table, CsvAndJson) {
  ResultTable t("cw-magnetization");
  t.add_row({0.5, 0.25});
  t.add_row({1.0, Cell()});
  EXPECT_THROW(t.add_row({1.0}), Error);
  EXPECT_EQ(t.to_csv(), "beta,m_abs\n0.5,0.25\n1,\n");
  EXPECT_TRUE(csv_header_matches(t.to_csv(), "cw-magnetization"));
  EXPECT_FALSE(csv_header_matches("beta,m\n", "cw-magnetization"));
  const auto j = t.to_json();
  EXPECT_EQ(j["schema"], "cw-magnetization");
  EXPECT_TRUE(j["rows"][1]["m_abs"].is_null());
  EXPECT_THROW(ResultTable("no-such-schema"), Error);
}

TEST(Table, SchemasAreExact) {
  EXPECT_EQ(schema_columns("n3-sweep"), (std::vector<std::string>{"beta", "norm_S", "norm_A", "ratio"}));
  EXPECT_EQ(schema_columns("cw-scaling"),
            (std::vector<std::string>{"n", "beta_over_betac", "dI_dm", "dH_dm", "dSum_dm"}));
  EXPECT_EQ(schema_columns("n3-trajectories").size(), 12u);
}

TEST(Run, ExitCodeConfigErrors) {
  const fs::path out = fresh_dir("cfg");
  EXPECT_EQ(run_config("experiment = nope\n", out), kExitConfig);
  EXPECT_EQ(run_config("model.n = 4\n", out), kExitConfig);
  EXPECT_EQ(run_config(std::string(kSmallMagnetization) + "unknown.key = 1\n", out), kExitConfig);
  EXPECT_EQ(run_config(kSmallMagnetization, out, "xml"), kExitConfig);
  EXPECT_EQ(run_config("experiment = cw-magnetization\nsweep.points = x\n", out), kExitConfig);
  EXPECT_EQ(run_config("experiment = cw-magnetization\nmodel.J = -1\n", out), kExitConfig);
}

TEST(Run, FlatConventionFailsWithDiagnostic) {
  const fs::path out = fresh_dir("flat");
  EXPECT_EQ(run_config("experiment = n3-decomposition\nmodel.convention = plus_minus\n", out), kExitFailure);
  ASSERT_TRUE(fs::exists(out / "n3-decomposition.meta.json"));
  const auto meta = read_json(out / "n3-decomposition.meta.json");
  EXPECT_EQ(meta["status"], "failed");
}

TEST(Run, DecompositionBothConventions) {
  const fs::path out = fresh_dir("dec");
  EXPECT_EQ(run_config("experiment = n3-decomposition\n", out), kExitOk);
  const std::string csv = slurp(out / "n3-decomposition.csv");
  EXPECT_TRUE(csv_header_matches(csv, "n3-decomposition"));
  EXPECT_NE(csv.find("zero_one"), std::string::npos);
  EXPECT_NE(csv.find("plus_minus"), std::string::npos);
  const auto meta = read_json(out / "n3-decomposition.meta.json");
  EXPECT_EQ(meta["matched_convention"], "zero_one");
  EXPECT_EQ(meta["experiment"], "n3-decomposition");
  EXPECT_EQ(meta["tool_version"], std::string(kToolVersion));
  EXPECT_EQ(meta["config_hash"], "fnv1a64:" + Config::parse("experiment = n3-decomposition\n").hash_hex());
}

TEST(Run, ByteStableExceptTimestamp) {
  const fs::path a = fresh_dir("a");
  const fs::path b = fresh_dir("b");
  ASSERT_EQ(run_config(kSmallMagnetization, a), kExitOk);
  ASSERT_EQ(run_config(kSmallMagnetization, b), kExitOk);
  EXPECT_EQ(slurp(a / "cw-magnetization.csv"), slurp(b / "cw-magnetization.csv"));
  auto ma = read_json(a / "cw-magnetization.meta.json");
  auto mb = read_json(b / "cw-magnetization.meta.json");
  EXPECT_TRUE(ma.contains("timestamp"));
  ma.erase("timestamp");
  mb.erase("timestamp");
  EXPECT_EQ(ma, mb);
}

TEST(Run, JsonFormat) {
  const fs::path out = fresh_dir("json");
  ASSERT_EQ(run_config(kSmallMagnetization, out, "json"), kExitOk);
  const auto j = read_json(out / "cw-magnetization.json");
  EXPECT_EQ(j["columns"], nlohmann::json::array({"beta", "m_abs"}));
  EXPECT_EQ(j["rows"].size(), 4u);
  EXPECT_FALSE(fs::exists(out / "cw-magnetization.csv"));
}

TEST(Run, MagnetizationRowsFollowGrid) {
  const fs::path out = fresh_dir("grid");
  ASSERT_EQ(run_config(kSmallMagnetization, out), kExitOk);
  std::istringstream csv(slurp(out / "cw-magnetization.csv"));
  std::string line;
  std::getline(csv, line);
  double prev_beta = 0;
  int rows = 0;
  while (std::getline(csv, line)) {
    const double beta = std::stod(line.substr(0, line.find(',')));
    const double m = std::stod(line.substr(line.find(',') + 1));
    EXPECT_GT(beta, prev_beta);
    EXPECT_GE(m, 0.0);
    EXPECT_LE(m, 1.0);
    prev_beta = beta;
    ++rows;
  }
  EXPECT_EQ(rows, 4);
  EXPECT_NEAR(prev_beta, 2.0, 1e-12);
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(shell(kCli + " >/dev/null 2>&1"), kExitConfig);
  EXPECT_EQ(shell(kCli + " run >/dev/null 2>&1"), kExitConfig);
  EXPECT_EQ(shell(kCli + " run --config /nonexistent.cfg >/dev/null 2>&1"), kExitConfig);
  EXPECT_EQ(shell(kCli + " bogus >/dev/null 2>&1"), kExitConfig);
}

TEST(Cli, RunsShippedConfig) {
  const fs::path out = fresh_dir("cli");
  EXPECT_EQ(shell(kCli + " run --config " + kConfigs + "/oscillator-jacobi.cfg --out " + out.string() +
                  " >/dev/null 2>&1"),
            kExitOk);
  EXPECT_TRUE(csv_header_matches(slurp(out / "oscillator-jacobi.csv"), "oscillator-jacobi"));
  EXPECT_TRUE(fs::exists(out / "oscillator-jacobi.meta.json"));
  EXPECT_EQ(shell(kCli + " run --config " + kConfigs + "/oscillator-jacobi.cfg --out " + out.string() +
                  " --format yaml >/dev/null 2>&1"),
            kExitConfig);
}

TEST(Cli, VerifyExitMatchesItsReport) {
  const fs::path out = fresh_dir("verify");
  fs::create_directories(out);
  const fs::path log = out / "stdout.txt";
  const int code = shell(kCli + " verify --out " + out.string() + " > " + log.string() + " 2>&1");
  const std::string text = slurp(log);
  const bool any_fail = text.find("FAIL ") != std::string::npos;
  EXPECT_EQ(code, any_fail ? kExitFailure : kExitOk);
  EXPECT_TRUE(csv_header_matches(slurp(out / "verify.csv"), "verify"));
}
