#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fusioncausal/fusioncausal.hpp"

namespace fc = fusioncausal;

namespace {

constexpr int kOk = 0, kValidation = 2, kEstimation = 3;

// FUSIONCAUSAL_SEED, when set, wins over --seed.
std::uint64_t effective_seed(std::uint64_t flag) {
  const char* env = std::getenv("FUSIONCAUSAL_SEED");
  if (env == nullptr || *env == '\0') return flag;
  char* end = nullptr;
  auto v = std::strtoull(env, &end, 10);
  if (end == env || *end != '\0') fc::fail(fc::ErrorCode::InvalidConfig, std::string("FUSIONCAUSAL_SEED is not an integer: '") + env + "'");
  return v;
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fc::fail(fc::ErrorCode::InvalidConfig, "cannot write " + path);
  out << text;
}

fc::ZRole parse_z_role(const std::string& s) {
  if (s == "none") return fc::ZRole::None;
  if (s == "bsiv") return fc::ZRole::Bsiv;
  if (s == "proxy") return fc::ZRole::Proxy;
  fc::fail(fc::ErrorCode::InvalidConfig, "z role must be none, bsiv or proxy");
}

fc::ZRole default_z_role(const std::string& strategy) {
  if (strategy.rfind("bsiv", 0) == 0) return fc::ZRole::Bsiv;
  if (strategy.rfind("proximal", 0) == 0) return fc::ZRole::Proxy;
  return fc::ZRole::None;
}

fc::TruthMethod parse_truth_method(const std::string& s) {
  if (s == "closed-form") return fc::TruthMethod::ClosedForm;
  if (s == "counterfactual") return fc::TruthMethod::CounterfactualMc;
  if (s == "enumeration") return fc::TruthMethod::Enumeration;
  fc::fail(fc::ErrorCode::InvalidConfig, "truth method must be closed-form, counterfactual or enumeration");
}

struct EstimateArgs {
  std::string data, strategy, estimand = "ate", config, out, z_role, homogeneity;
  bool m_missing_in_o = false;
  std::uint64_t seed = 0;
};

struct SimulateArgs {
  std::string dgp, world, out, truth_out, truth_method, violate, describe;
  fc::Index n = 1000;
  std::uint64_t seed = 0;
  double delta = 0;
};

struct AuditArgs {
  int proposition = 1, reps = 200;
  std::string dgp, estimand = "ett", config, out;
  fc::Index n = 50000;
  std::uint64_t seed = 0;
};

struct BenchArgs {
  fc::Index n = 20000;
  std::uint64_t seed = 0;
  std::string out;
};

fc::RunConfig run_config(const std::string& path) { return path.empty() ? fc::RunConfig{} : fc::load_config(path); }

int cmd_estimate(const EstimateArgs& a) {
  auto e = fc::parse_estimand(a.estimand);
  fc::validate_strategy(a.strategy, e);
  auto rc = run_config(a.config);
  if (!a.homogeneity.empty()) rc.bsiv.homogeneity = fc::parse_homogeneity(a.homogeneity);
  rc.nuisance.seed = effective_seed(a.seed);
  fc::ColumnSchema schema;
  schema.z_role = a.z_role.empty() ? default_z_role(a.strategy) : parse_z_role(a.z_role);
  schema.m_observed_in_o = !a.m_missing_in_o;
  auto d = fc::load_csv(a.data, schema);
  emit(fc::serialize(fc::run_strategy(d, a.strategy, e, rc)), a.out);
  return kOk;
}

std::string truth_text(const fc::DgpSpec& s, const fc::GroundTruth& t) {
  std::string out = "dgp=" + std::string(fc::to_string(s.tag)) + "\n";
  if (!s.world.empty()) out += "world=" + s.world + "\n";
  out += "method=" + std::string(fc::to_string(t.method)) + "\n";
  out += "ate=" + fc::fmt(t.ate) + "\nett=" + fc::fmt(t.ett) + "\n";
  if (t.ate_se) out += "ate_se=" + fc::fmt(*t.ate_se) + "\n";
  if (t.ett_se) out += "ett_se=" + fc::fmt(*t.ett_se) + "\n";
  return out;
}

int cmd_simulate(const SimulateArgs& a) {
  fc::DgpSpec s;
  s.tag = fc::parse_dgp_tag(a.dgp);
  s.world = a.world;
  s.n = a.n;
  s.seed = effective_seed(a.seed);
  if (s.tag == fc::DgpTag::DiscreteToy && s.world.empty()) fc::fail(fc::ErrorCode::InvalidSpec, "discrete dgp needs --world");
  if (!a.violate.empty()) s = fc::violate(s, a.violate, a.delta);
  if (!a.describe.empty()) emit(fc::describe(fc::worlds::by_name(s.world)), a.describe);
  auto d = fc::generate(s);
  if (a.out.empty() || a.out == "-") {
    fc::write_csv(std::cout, d);
  } else {
    fc::write_csv(a.out, d);
  }
  if (!a.truth_out.empty()) {
    auto method = a.truth_method.empty() ? (s.tag == fc::DgpTag::DiscreteToy ? fc::TruthMethod::Enumeration : fc::TruthMethod::ClosedForm)
                                         : parse_truth_method(a.truth_method);
    emit(truth_text(s, fc::ground_truth(s, method)), a.truth_out);
  }
  return kOk;
}

int cmd_audit(const AuditArgs& a) {
  if (a.proposition != 1 && a.proposition != 2) fc::fail(fc::ErrorCode::InvalidConfig, "--proposition must be 1 or 2");
  fc::AuditSpec spec;
  spec.family = a.proposition == 1 ? fc::AuditFamily::Equiconf : fc::AuditFamily::Proximal;
  spec.estimand = fc::parse_estimand(a.estimand);
  spec.reps = a.reps;
  spec.dgp.tag = a.dgp.empty() ? (a.proposition == 1 ? fc::DgpTag::EquiConfCond : fc::DgpTag::Proximal) : fc::parse_dgp_tag(a.dgp);
  spec.dgp.n = a.n;
  spec.dgp.seed = effective_seed(a.seed);
  auto rc = run_config(a.config);
  emit(fc::serialize(fc::audit_multiple_robustness(spec, rc.nuisance, rc.proximal)), a.out);
  return kOk;
}

// Wall-clock time of every strategy on its matching DGP.
int cmd_bench(const BenchArgs& a) {
  struct Case {
    const char* strategy;
    fc::DgpTag tag;
    fc::Estimand e;
  };
  const Case cases[] = {
      {"latent-unconf", fc::DgpTag::LatentUnconf, fc::Estimand::Ate}, {"equiconf-marg", fc::DgpTag::EquiConfMarg, fc::Estimand::Ett},
      {"equiconf-cond", fc::DgpTag::EquiConfCond, fc::Estimand::Ett}, {"equiconf-if", fc::DgpTag::EquiConfCond, fc::Estimand::Ett},
      {"equiconf-qq", fc::DgpTag::Qq, fc::Estimand::Ett},             {"bsiv", fc::DgpTag::Bsiv, fc::Estimand::Ate},
      {"proximal-s1", fc::DgpTag::Proximal, fc::Estimand::Ate},       {"proximal-s4", fc::DgpTag::Proximal, fc::Estimand::Ate},
  };
  std::string out;
  fc::RunConfig rc;
  rc.nuisance.seed = effective_seed(a.seed);
  for (const auto& c : cases) {
    fc::DgpSpec s;
    s.tag = c.tag;
    s.n = a.n;
    s.seed = rc.nuisance.seed;
    auto d = fc::generate(s);
    auto t0 = std::chrono::steady_clock::now();
    auto r = fc::run_strategy(d, c.strategy, c.e, rc);
    double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    out += "bench strategy=" + std::string(c.strategy) + " estimand=" + r.estimand + " n=" + std::to_string(a.n) + " estimate=" + fc::fmt(r.estimate) +
           " ms=" + fc::fmt(std::round(ms * 10) / 10) + "\n";
  }
  emit(out, a.out);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Causal effect estimation by fusing experimental and observational data"};
  app.require_subcommand(1);

  EstimateArgs ea;
  auto* est = app.add_subcommand("estimate", "Estimate ATE or ETT from a fused CSV file");
  est->add_option("--data", ea.data, "CSV with columns g,a,x0..,m,y[,z]")->required();
  est->add_option("--strategy", ea.strategy, "Strategy tag")->required();
  est->add_option("--estimand", ea.estimand, "ate or ett");
  est->add_option("--config", ea.config, "JSON config file");
  est->add_option("--homogeneity", ea.homogeneity, "effect or bias (bespoke instrument)");
  est->add_option("--z-role", ea.z_role, "none, bsiv or proxy (default from strategy)");
  est->add_flag("--m-missing-in-o", ea.m_missing_in_o, "M is not recorded in the observational domain");
  est->add_option("--seed", ea.seed, "Cross-fitting seed");
  est->add_option("--out", ea.out, "Report path (default stdout)");

  SimulateArgs sa;
  auto* sim = app.add_subcommand("simulate", "Generate a fused dataset from a DGP");
  sim->add_option("--dgp", sa.dgp, "DGP tag")->required();
  sim->add_option("--world", sa.world, "Discrete world name (dgp discrete)");
  sim->add_option("--n", sa.n, "Sample size");
  sim->add_option("--seed", sa.seed, "Seed");
  sim->add_option("--out", sa.out, "CSV path (default stdout)");
  sim->add_option("--truth", sa.truth_out, "Write the ground truth to this path");
  sim->add_option("--truth-method", sa.truth_method, "closed-form, counterfactual or enumeration");
  sim->add_option("--violate", sa.violate, "equiconf-slippage, bsiv-slippage or proxy-leak");
  sim->add_option("--delta", sa.delta, "Violation magnitude");
  sim->add_option("--describe", sa.describe, "Write the discrete world's joint table to this path");

  AuditArgs aa;
  auto* aud = app.add_subcommand("audit", "Multiple-robustness audit under deliberate nuisance corruption");
  aud->add_option("--proposition", aa.proposition, "1: equi-confounding, 2: proximal")->required();
  aud->add_option("--dgp", aa.dgp, "DGP tag (default per proposition)");
  aud->add_option("--estimand", aa.estimand, "ate or ett");
  aud->add_option("--n", aa.n, "Sample size per replication");
  aud->add_option("--reps", aa.reps, "Replications");
  aud->add_option("--seed", aa.seed, "Base seed");
  aud->add_option("--config", aa.config, "JSON config file");
  aud->add_option("--out", aa.out, "Report path (default stdout)");

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "Time every strategy on its matching DGP");
  bench->add_option("--n", ba.n, "Sample size");
  bench->add_option("--seed", ba.seed, "Seed");
  bench->add_option("--out", ba.out, "Report path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kValidation;
  }

  try {
    if (*est) return cmd_estimate(ea);
    if (*sim) return cmd_simulate(sa);
    if (*aud) return cmd_audit(aa);
    if (*bench) return cmd_bench(ba);
  } catch (const fc::FusionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return fc::exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kEstimation;
  }
  return kOk;
}
