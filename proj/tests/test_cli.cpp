#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "test_util.hpp"

using namespace fctest;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("fusioncausal_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  CliResult run(const std::string& args, const std::string& env = "") const {
    std::string out = path("stdout.txt"), err = path("stderr.txt");
    std::string cmd = env + (env.empty() ? "" : " ") + "\"" FUSIONCAUSAL_CLI "\" " + args + " > \"" + out + "\" 2> \"" + err + "\"";
    int status = std::system(cmd.c_str());
    int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return {code, slurp(out), slurp(err)};
  }

  fs::path dir_;
};

}  // namespace

TEST(Config, NestedAndDottedKeysAgree) {
  RunConfig a, b;
  apply_config(a, parse_config_text(R"({"nuisance": {"family": "kernel", "trim": 0.02, "kernel": {"landmarks": 50}}, "proximal": {"lambda_h": 0.1}})"));
  apply_config(b, parse_config_text(R"({"nuisance.family": "kernel", "nuisance.trim": 0.02, "nuisance.kernel.landmarks": 50, "proximal.lambda_h": 0.1})"));
  EXPECT_EQ(a.nuisance.family, Family::Kernel);
  EXPECT_EQ(a.nuisance.trim, b.nuisance.trim);
  EXPECT_EQ(a.nuisance.landmarks, 50);
  EXPECT_EQ(b.nuisance.landmarks, 50);
  EXPECT_EQ(a.proximal.lambda_h, 0.1);
}

TEST(Config, RejectsUnknownAndInvalid) {
  RunConfig rc;
  for (const char* doc : {R"({"nuisance": {"famliy": "linear"}})", R"({"nuisance.trim": 0.7})", R"({"nuisance.crossfit_folds": 1})",
                          R"({"nuisance.family": "forest"})", R"({"nuisance.trim": "big"})", "{not json"}) {
    try {
      apply_config(rc, parse_config_text(doc));
      FAIL() << doc;
    } catch (const FusionError& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidConfig) << doc;
      EXPECT_EQ(exit_code_for(e.code()), 2);
    }
  }
}

TEST(Strategy, EstimandSupport) {
  EXPECT_NO_THROW(validate_strategy("equiconf-qq", Estimand::Ett));
  EXPECT_NO_THROW(validate_strategy("proximal-s3", Estimand::Ate));
  try {
    validate_strategy("equiconf-qq", Estimand::Ate);
    FAIL();
  } catch (const FusionError& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnsupportedEstimand);
    EXPECT_NE(std::string(e.what()).find("unsupported estimand"), std::string::npos);
  }
  EXPECT_THROW(validate_strategy("nope", Estimand::Ate), FusionError);
}

TEST(Strategy, NaiveIsBiasedOnConfoundedWorld) {
  auto w = worlds::toy_equiconf();
  auto d = w.population();
  RunConfig rc;
  rc.nuisance.crossfit_folds = 0;
  double naive = run_strategy(d, "naive", Estimand::Ate, rc).estimate;
  EXPECT_GE(std::abs(naive - w.truth_ate()), 0.3);
  for (const char* tag : {"equiconf-marg", "equiconf-cond", "equiconf-if"})
    EXPECT_NEAR(run_strategy(d, tag, Estimand::Ate, rc).estimate, w.truth_ate(), 1e-12) << tag;
}

TEST(Report, RoundTrip) {
  auto r = if_ett_equiconf(generate(dgp(DgpTag::EquiConfCond, 3000, 3)), {});
  r.warnings.push_back("example warning");
  auto text = serialize(r);
  auto back = parse_report(text);
  EXPECT_EQ(serialize(back), text);
  EXPECT_EQ(back.estimate, r.estimate);
  EXPECT_EQ(*back.se, *r.se);
}

TEST_F(Cli, EstimateHappyPathMatchesLibrary) {
  ASSERT_EQ(run("simulate --dgp equiconf-cond --n 4000 --seed 3 --out \"" + path("d.csv") + "\"").code, 0);
  auto r = run("estimate --data \"" + path("d.csv") + "\" --strategy equiconf-cond --estimand ate");
  ASSERT_EQ(r.code, 0) << r.err;
  auto d = load_csv(path("d.csv"));
  EXPECT_EQ(r.out, serialize(run_strategy(d, "equiconf-cond", Estimand::Ate, RunConfig{})));
  EXPECT_TRUE(std::isfinite(parse_report(r.out).estimate));
}

TEST_F(Cli, UnsupportedEstimandExitsTwo) {
  ASSERT_EQ(run("simulate --dgp qq --n 2000 --seed 3 --out \"" + path("d.csv") + "\"").code, 0);
  auto r = run("estimate --data \"" + path("d.csv") + "\" --strategy equiconf-qq --estimand ate");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("unsupported estimand"), std::string::npos);
}

TEST_F(Cli, ValidationAndEstimationFailures) {
  std::ofstream(path("bad.csv")) << "g,a,x0,m,y\nE,0,0,1,3.2\nE,1,0,1,\nO,0,0,1,1\nO,1,0,1,2\n";
  EXPECT_EQ(run("estimate --data \"" + path("bad.csv") + "\" --strategy naive").code, 2);
  EXPECT_EQ(run("estimate --data \"" + path("missing.csv") + "\" --strategy naive").code, 2);
  EXPECT_EQ(run("estimate --strategy naive").code, 2);
  ASSERT_EQ(run("simulate --dgp proximal --n 3000 --seed 3 --out \"" + path("p.csv") + "\"").code, 0);
  EXPECT_EQ(run("estimate --data \"" + path("p.csv") + "\" --strategy proximal-s1 --z-role none").code, 2);
  auto p = load_csv(path("p.csv"), ColumnSchema{ZRole::Proxy});
  for (Index i = 0; i < p.size(); ++i)
    if (!std::isnan(p.z[i])) p.z[i] = 0;
  {
    std::ofstream out(path("flat.csv"));
    write_csv(out, p);
  }
  auto r = run("estimate --data \"" + path("flat.csv") + "\" --strategy proximal-s1");
  EXPECT_EQ(r.code, 3) << r.err;
}

TEST_F(Cli, TruthFileMatchesLibrary) {
  ASSERT_EQ(run("simulate --dgp latent-unconf --n 100 --seed 4 --out \"" + path("d.csv") + "\" --truth \"" + path("t.txt") + "\"").code, 0);
  auto truth = ground_truth(dgp(DgpTag::LatentUnconf, 100, 4), TruthMethod::ClosedForm);
  EXPECT_NE(slurp(path("t.txt")).find("ate=" + fmt(truth.ate) + "\n"), std::string::npos);
}

TEST_F(Cli, SeedEnvironmentOverridesFlag) {
  auto a = run("simulate --dgp bsiv --n 50 --seed 1");
  auto b = run("simulate --dgp bsiv --n 50 --seed 2");
  auto c = run("simulate --dgp bsiv --n 50 --seed 1", "FUSIONCAUSAL_SEED=2");
  EXPECT_NE(a.out, b.out);
  EXPECT_EQ(b.out, c.out);
  EXPECT_EQ(run("simulate --dgp bsiv --n 50", "FUSIONCAUSAL_SEED=abc").code, 2);
}

TEST_F(Cli, AuditRowCount) {
  auto r = run("audit --proposition 1 --n 3000 --reps 3 --seed 5");
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  std::string line;
  int rows = 0, header = 0;
  while (std::getline(in, line)) rows += line.rfind("row ", 0) == 0, header += line.rfind("audit ", 0) == 0;
  EXPECT_EQ(header, 1);
  EXPECT_EQ(rows, 6);
}

TEST_F(Cli, DiscreteWorldDescription) {
  auto r = run("simulate --dgp discrete --world toy_instrument --n 2000 --seed 1 --out \"" + path("d.csv") + "\" --describe \"" + path("w.txt") + "\"");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(path("w.txt")), describe(worlds::toy_instrument()));
}
