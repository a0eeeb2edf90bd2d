#include "hardylab/cli/commands.hpp"
#include "hardylab/cli/config.hpp"
#include "hardylab/cli/report.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace hardylab;
using namespace hardylab::cli;
namespace fs = std::filesystem;

namespace {

const std::string kConfigs = std::string(HARDYLAB_SOURCE_DIR) + "/configs/";

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "hardylab");
  std::vector<char*> argv;
  for (std::string& a : args) argv.push_back(a.data());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hardylab-test-" + name);
  fs::remove_all(p);
  return p;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string csv_body(const fs::path& p) {
  const std::string all = read_file(p);
  return all.substr(all.find('\n') + 1);
}

std::string write_temp(const std::string& name, const std::string& text) {
  const fs::path p = fs::temp_directory_path() / name;
  std::ofstream(p) << text;
  return p.string();
}

ErrorCode parse_code(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

const char* kMinimal = R"({"problem": {"dim": 3, "poles": [[0,0,0],[2,0,0]]}})";

}  // namespace

TEST(Config, MinimalDefaults) {
  const RunConfig c = parse_config(kMinimal);
  EXPECT_EQ(c.poles.dim, 3);
  EXPECT_EQ(c.poles.size(), 2u);
  EXPECT_TRUE(c.weight.is_unit());
  ASSERT_TRUE(c.k_mu.has_value());
  EXPECT_EQ(*c.k_mu, 0.0);
}

TEST(Config, ParsesEverySection) {
  const RunConfig c = parse_config(R"({
    "problem": {"dim": 3, "poles": [[0,0,0],[2,0,0]],
                "weight": {"kind": "poly_exp", "gamma": 0.5, "delta": 0, "m": 2},
                "k_mu": "auto"},
    "quadrature": {"radial_levels": 30, "mc_samples": 1000},
    "experiments": {"spectral": {"enrich_eps": [0.1]}, "certify": {"samples": 500}},
    "output": {"directory": "x", "formats": ["csv"]},
    "seed": 9})");
  EXPECT_FALSE(c.k_mu.has_value());
  EXPECT_EQ(c.weight.gamma, 0.5);
  EXPECT_EQ(c.quadrature.radial_levels, 30);
  EXPECT_EQ(c.quadrature.seed, 9u);
  EXPECT_EQ(c.certify.sample.seed, 9u);
  EXPECT_EQ(c.certify.sample.samples, 500);
  EXPECT_EQ(c.spectral.enrich_eps, std::vector<double>{0.1});
  EXPECT_TRUE(c.write_csv);
  EXPECT_FALSE(c.write_json);
  EXPECT_EQ(c.output_directory, "x");
}

TEST(Config, Rejections) {
  EXPECT_EQ(parse_code("{not json"), ErrorCode::ConfigError);
  EXPECT_EQ(parse_code(R"({"problem": {"dim": 3, "poles": [[0,0,0]]}, "bogus": 1})"),
            ErrorCode::ConfigError);
  EXPECT_EQ(parse_code(R"({"problem": {"dim": 3, "poles": [[0,0]]}})"), ErrorCode::ConfigError);
  EXPECT_EQ(parse_code(R"({"problem": {"dim": 3, "poles": [[0,0,0],[0,0,0]]}})"),
            ErrorCode::ConfigError);
  EXPECT_EQ(parse_code(R"({"problem": {"dim": 3, "poles": [[0,0,0]],
                                       "weight": {"kind": "cubic"}}})"),
            ErrorCode::ConfigError);
}

TEST(Config, ErrorNamesKeyPath) {
  try {
    parse_config(R"({"problem": {"dim": 3, "poles": [[0,0,0]]},
                     "experiments": {"verify": {"corpus": 3}}})");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("experiments.verify"), std::string::npos) << e.what();
  }
}

TEST(Report, NumberFormatAndCsv) {
  EXPECT_EQ(format_number(0.1), "0.10000000000000001");
  EXPECT_EQ(format_number(std::nan("")), "nan");
  EXPECT_EQ(format_number(-INFINITY), "-inf");
  Report r("demo");
  r.add("c,1", "p", "q", 1.5, std::nullopt, "info");
  r.check("c2", "", "q", 2.0, 0.25, false);
  EXPECT_FALSE(r.all_pass());
  EXPECT_EQ(r.failures().size(), 1u);
  EXPECT_EQ(r.csv_body(),
            "experiment,case,parameter,quantity,value,error,status\n"
            "demo,\"c,1\",p,q,1.5,exact,info\n"
            "demo,c2,,q,2,0.25,fail\n");
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}), kExitConfig);
  EXPECT_EQ(run({"frobnicate"}), kExitConfig);
  EXPECT_EQ(run({"verify"}), kExitConfig);  // --config is required
  EXPECT_EQ(run({"verify", "--config", "/nonexistent/config.json"}), kExitConfig);
}

TEST(Cli, MalformedConfigExitsTwo) {
  const std::string path = write_temp("hardylab-malformed.json", "{\"problem\": {\"dim\": 3,");
  EXPECT_EQ(run({"verify", "--config", path, "--quiet"}), kExitConfig);
  const std::string unknown = write_temp(
      "hardylab-unknown.json", R"({"problem": {"dim": 3, "poles": [[0,0,0]]}, "extra": true})");
  EXPECT_EQ(run({"certify", "--config", unknown, "--quiet"}), kExitConfig);
}

TEST(Cli, SelftestFilter) {
  const fs::path out = fresh_dir("filter");
  EXPECT_EQ(run({"selftest", "--filter", "gaussian", "--out", out.string(), "--quiet"}),
            kExitPass);
  const std::string body = csv_body(out / "selftest.csv");
  EXPECT_NE(body.find("gaussian"), std::string::npos);
  EXPECT_EQ(body.find("ball_inverse_square"), std::string::npos);
  EXPECT_EQ(run({"selftest", "--filter", "no-such-case", "--quiet"}), kExitConfig);
}

TEST(Cli, CorruptedToleranceFails) {
  EXPECT_EQ(run({"selftest", "--filter", "gaussian", "--tolerance-scale", "1e-12", "--quiet"}),
            kExitNumerical);
}

TEST(Cli, VerifyWritesReports) {
  const fs::path out = fresh_dir("verify");
  EXPECT_EQ(run({"verify", "--config", kConfigs + "verify_unit_n2.json", "--out", out.string(),
                 "--quiet"}),
            kExitPass);
  const std::string csv = read_file(out / "verify.csv");
  EXPECT_EQ(csv.rfind("# hardylab verify generated ", 0), 0u);
  EXPECT_NE(csv.find("experiment,case,parameter,quantity,value,error,status\n"),
            std::string::npos);
  // every ratio row is at least c = 1/4
  std::istringstream lines(csv_body(out / "verify.csv"));
  std::string line;
  int ratios = 0;
  while (std::getline(lines, line)) {
    if (line.find(",hardy_ratio,") == std::string::npos) continue;
    const auto q = line.find(",hardy_ratio,") + 13;
    EXPECT_GE(std::stod(line.substr(q)), 0.25) << line;
    ++ratios;
  }
  EXPECT_EQ(ratios, 10);
  EXPECT_TRUE(fs::exists(out / "verify.json"));
}

TEST(Cli, SinglePoleSkipsRatios) {
  const fs::path out = fresh_dir("n1");
  EXPECT_EQ(run({"verify", "--config", kConfigs + "verify_unit_n1.json", "--out", out.string(),
                 "--quiet"}),
            kExitPass);
  const std::string body = csv_body(out / "verify.csv");
  EXPECT_NE(body.find(",hardy_ratio,nan,exact,skipped"), std::string::npos);
  EXPECT_NE(read_file(out / "verify.json").find("V = 0"), std::string::npos);
}

TEST(Cli, WrongKFailsCertification) {
  const fs::path out = fresh_dir("wrongk");
  EXPECT_EQ(run({"certify", "--config", kConfigs + "certify_wrong_k.json", "--out", out.string(),
                 "--quiet"}),
            kExitNumerical);
  EXPECT_NE(csv_body(out / "certify.csv").find("status_unbounded_suspected"), std::string::npos);
}

TEST(Cli, SeedOverrideChangesMonteCarlo) {
  const fs::path a = fresh_dir("seed-a"), b = fresh_dir("seed-b");
  const std::string cfg = kConfigs + "verify_unit_n1.json";
  ASSERT_EQ(run({"verify", "--config", cfg, "--out", a.string(), "--seed", "1", "--quiet"}), 0);
  ASSERT_EQ(run({"verify", "--config", cfg, "--out", b.string(), "--seed", "2", "--quiet"}), 0);
  EXPECT_NE(csv_body(a / "verify.csv"), csv_body(b / "verify.csv"));
}
